//! Flag bases, subcube densities `p(H; G)` and the pair-density
//! coefficients `E_θ[p(F_a, F_b, θ; H)]` that turn a positive semidefinite
//! matrix into a linear combination of the `p(H; G)`.
//!
//! Flags are stored with their labelling normalised to the standard one:
//! base vertex 0 and label directions `0..s`. Two such flags are isomorphic
//! exactly when a permutation of the unlabelled directions `s..m` (no flips)
//! maps one onto the other.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;

use crate::canon::{self, Canonizer, GroupKind};
use crate::colour::{self, Colour, CubeColouring, ForbiddenFamily, Mode};
use crate::cube::{self, LabelledEmbedding};
use crate::error::{Error, Result};
use crate::problem::DensityProblem;
use crate::rational::Rational;

/// Words longer than this are not enumerated.
pub const MAX_ENUMERATION_POSITIONS: usize = 32;

/// Fast F-freeness test on packed keys of one `(mode, dim)`.
///
/// Each mask is the key-bit set hit by the Blue elements of one forbidden
/// cube under one labelled embedding; a word contains the forbidden cube iff
/// its Blue set covers one of the masks.
pub struct FreenessIndex {
    free: u64,
    masks: Vec<u64>,
}

impl FreenessIndex {
    pub fn new(mode: Mode, dim: usize, fam: &ForbiddenFamily) -> Result<Self> {
        fam.check_compatible(mode)?;
        let len = mode.word_len(dim);
        if len > 64 {
            return Err(Error::Capacity(format!("{mode} words of dimension {dim}")));
        }
        let free = canon::free_mask(mode, dim);
        let mut masks = Vec::new();
        for member in fam.members() {
            if member.dim() > dim {
                continue;
            }
            let blues = colour::blue_elements(member);
            for emb in cube::enumerate_embeddings(dim, member.dim(), 0)? {
                let mask = blues.iter().fold(0u64, |k, &(i, j)| {
                    let p = match mode {
                        Mode::Vertex => emb.map(i) as usize,
                        _ => {
                            let (u, d) = emb.map_edge(i, j);
                            cube::edge_index(dim, u, d)
                        }
                    };
                    k | 1 << (len - 1 - p)
                });
                if mask & !free == 0 {
                    masks.push(mask);
                }
            }
        }
        masks.sort_unstable();
        masks.dedup();
        // drop masks that contain another mask
        let minimal: Vec<u64> = masks
            .iter()
            .copied()
            .filter(|&m| !masks.iter().any(|&o| o != m && o & m == o))
            .collect();
        Ok(FreenessIndex {
            free,
            masks: minimal,
        })
    }

    #[inline]
    pub fn is_free(&self, key: u64) -> bool {
        let blue = self.free & !key;
        !self.masks.iter().any(|&m| m & blue == m)
    }

    pub fn free_mask(&self) -> u64 {
        self.free
    }
}

fn check_enumerable(mode: Mode, dim: usize) -> Result<()> {
    let len = mode.word_len(dim);
    if len > MAX_ENUMERATION_POSITIONS {
        return Err(Error::Capacity(format!(
            "{mode} cubes of dimension {dim} have {len} positions (limit {MAX_ENUMERATION_POSITIONS})"
        )));
    }
    Ok(())
}

/// Canonical keys of every F-free class, sorted ascending.
///
/// Generated level by level in the number of Blue positions: every F-free
/// word with `k + 1` Blue positions arises from one with `k` by recolouring
/// a single Red position Blue, because F-freeness survives Blue → Red.
pub fn enumerate_class_keys(canon: &Canonizer, index: &FreenessIndex) -> Vec<u64> {
    let start = index.free_mask();
    if !index.is_free(start) {
        return Vec::new();
    }
    let mut all = vec![start];
    let mut level = vec![start];
    while !level.is_empty() {
        let mut next: Vec<u64> = level
            .par_iter()
            .flat_map_iter(|&key| {
                let mut out = Vec::new();
                let mut reds = key;
                while reds != 0 {
                    let bit = reds & reds.wrapping_neg();
                    reds ^= bit;
                    let child = key ^ bit;
                    if index.is_free(child) {
                        out.push(canon.canon_key(child));
                    }
                }
                out
            })
            .collect();
        next.par_sort_unstable();
        next.dedup();
        all.extend_from_slice(&next);
        level = next;
    }
    all.sort_unstable();
    all
}

/// One representative (the canonical form) per isomorphism class of F-free
/// `mode` cubes of dimension `l`, sorted by word.
pub fn enumerate_h(mode: Mode, l: usize, fam: &ForbiddenFamily) -> Result<Vec<CubeColouring>> {
    match mode {
        Mode::Partial if l < 2 => {
            return Err(Error::Dimension("partial cubes need l >= 2".into()))
        }
        Mode::TriEdge if l < 2 => return Err(Error::Dimension("tri-edge cubes need l >= 2".into())),
        _ if l < 1 => return Err(Error::Dimension("l must be at least 1".into())),
        _ => {}
    }
    check_enumerable(mode, l)?;
    let canon = Canonizer::cached(mode, l, GroupKind::Mode)?;
    let index = FreenessIndex::new(mode, l, fam)?;
    let template = CubeColouring::uniform(mode, l, Colour::Red);
    Ok(enumerate_class_keys(&canon, &index)
        .into_iter()
        .map(|k| CubeColouring::from_parts_unchecked(mode, l, canon::unpack(k, template.word())))
        .collect())
}

/// Every F-free fully labelled colouring of `Q_s`, sorted by word.
pub fn enumerate_types(mode: Mode, s: usize, fam: &ForbiddenFamily) -> Result<Vec<CubeColouring>> {
    if mode == Mode::Partial && s < 1 {
        return Err(Error::Dimension("partial types need s >= 1".into()));
    }
    check_enumerable(mode, s)?;
    let index = FreenessIndex::new(mode, s, fam)?;
    let template = CubeColouring::uniform(mode, s, Colour::Red);
    let free = index.free_mask();
    let mut out: Vec<u64> = subsets_of(free).filter(|&k| index.is_free(k)).collect();
    out.sort_unstable();
    Ok(out
        .into_iter()
        .map(|k| CubeColouring::from_parts_unchecked(mode, s, canon::unpack(k, template.word())))
        .collect())
}

fn subsets_of(mask: u64) -> impl Iterator<Item = u64> {
    // Gosper-free subset walk: all submasks of `mask`, ascending.
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some((cur.wrapping_sub(mask)) & mask)
        };
        Some(cur)
    })
}

/// The standard labelling of `Q_s` inside `Q_m`: base 0, directions `0..s`.
pub fn standard_theta(s: usize) -> LabelledEmbedding {
    LabelledEmbedding {
        base: 0,
        dirs: (0..s as u8).collect(),
    }
}

/// A σ-flag in standard form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flag {
    pub cube: CubeColouring,
    pub theta: LabelledEmbedding,
}

/// A type together with all F-free σ-flags of dimension `m`, up to
/// label-preserving isomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagBasis {
    pub sigma: CubeColouring,
    pub m: usize,
    pub flags: Vec<Flag>,
}

impl FlagBasis {
    pub fn s(&self) -> usize {
        self.sigma.dim()
    }

    pub fn mode(&self) -> Mode {
        self.sigma.mode()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

fn check_m_bound(s: usize, m: usize, l: usize) -> Result<()> {
    if m < s || 2 * m > l + s {
        return Err(Error::Dimension(format!(
            "flag dimension {m} outside [{s}, ({l}+{s})/2]"
        )));
    }
    Ok(())
}

pub fn enumerate_flags(
    sigma: &CubeColouring,
    m: usize,
    fam: &ForbiddenFamily,
    l: usize,
) -> Result<FlagBasis> {
    let mode = sigma.mode();
    let s = sigma.dim();
    check_m_bound(s, m, l)?;
    check_enumerable(mode, m)?;
    if !colour::is_f_free(sigma, fam)? {
        return Err(Error::ModeMismatch(format!("type {sigma} is not F-free")));
    }
    let len = mode.word_len(m);
    let theta = standard_theta(s);
    let template = CubeColouring::uniform(mode, m, Colour::Red);
    // host key bits pinned by the type
    let sigma_positions = labelled_positions(mode, m, &theta);
    let mut pinned = 0u64;
    let mut pinned_red = 0u64;
    for (lp, &hp) in sigma_positions.iter().enumerate() {
        let c = sigma.word()[lp];
        if c == Colour::Grey {
            continue;
        }
        let bit = 1u64 << (len - 1 - hp);
        pinned |= bit;
        if c == Colour::Red {
            pinned_red |= bit;
        }
    }
    let index = FreenessIndex::new(mode, m, fam)?;
    let canon = Canonizer::cached(mode, m, GroupKind::LabelFixing(s))?;
    let mut keys: Vec<u64> = subsets_of(index.free_mask() & !pinned)
        .map(|k| k | pinned_red)
        .filter(|&k| index.is_free(k))
        .map(|k| canon.canon_key(k))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let flags = keys
        .into_iter()
        .map(|k| Flag {
            cube: CubeColouring::from_parts_unchecked(mode, m, canon::unpack(k, template.word())),
            theta: theta.clone(),
        })
        .collect();
    Ok(FlagBasis {
        sigma: sigma.clone(),
        m,
        flags,
    })
}

/// Host word positions read by a labelled embedding, in label order.
pub fn labelled_positions(mode: Mode, host_dim: usize, emb: &LabelledEmbedding) -> Vec<usize> {
    let s = emb.dim();
    match mode {
        Mode::Vertex => (0..1u64 << s).map(|i| emb.map(i) as usize).collect(),
        _ => (0..cube::num_edges(s))
            .map(|idx| {
                let (i, j) = cube::edge_at(s, idx);
                let (u, d) = emb.map_edge(i, j);
                cube::edge_index(host_dim, u, d)
            })
            .collect(),
    }
}

/// The labelled colouring read through `emb` from `host`. When `project` is
/// set the label-direction-0 edges are greyed, producing a partial word.
fn read_key(host: &[Colour], positions: &[usize], grey: usize) -> u64 {
    let len = positions.len();
    let mut key = 0u64;
    for (lp, &hp) in positions.iter().enumerate().skip(grey) {
        if host[hp] != Colour::Blue {
            key |= 1 << (len - 1 - lp);
        }
    }
    key
}

/// Lookup from canonical flag key to basis index.
struct FlagIndex {
    canon: Arc<Canonizer>,
    index: HashMap<u64, usize>,
}

impl FlagIndex {
    fn new(basis: &FlagBasis) -> Result<Self> {
        let canon = Canonizer::cached(basis.mode(), basis.m, GroupKind::LabelFixing(basis.s()))?;
        let index = basis
            .flags
            .iter()
            .enumerate()
            .map(|(i, f)| (canon::pack(f.cube.word()), i))
            .collect();
        Ok(FlagIndex { canon, index })
    }

    fn identify(&self, key: u64) -> Option<usize> {
        self.index.get(&self.canon.canon_key(key)).copied()
    }
}

/// Read plan for one θ: where the type sits, and where each extension by a
/// set of `m - s` further directions sits.
struct ThetaPlan {
    sigma_positions: Vec<usize>,
    extensions: Vec<Vec<usize>>,
}

/// Ordered pairs of disjoint extension sets, by index into the extension list.
struct PairPlan {
    thetas: Vec<ThetaPlan>,
    pairs: Vec<(usize, usize)>,
}

impl PairPlan {
    fn new(mode: Mode, host_dim: usize, s: usize, m: usize, all_thetas: bool) -> Result<Self> {
        let fixed = if mode == Mode::Partial && !all_thetas {
            1
        } else {
            0
        };
        let thetas = cube::enumerate_embeddings(host_dim, s, fixed.min(s))?;
        // Direction subsets are chosen among the directions θ leaves free; all
        // θ share the same count, so index pairs by subset rank.
        let mut plans = Vec::with_capacity(thetas.len());
        let mut pairs = Vec::new();
        for (t, theta) in thetas.iter().enumerate() {
            let rest: Vec<u8> = (0..host_dim as u8).filter(|d| !theta.dirs.contains(d)).collect();
            let subsets: Vec<Vec<u8>> = rest.iter().copied().combinations(m - s).collect();
            if t == 0 {
                for (a, da) in subsets.iter().enumerate() {
                    for (b, db) in subsets.iter().enumerate() {
                        if da.iter().all(|d| !db.contains(d)) {
                            pairs.push((a, b));
                        }
                    }
                }
            }
            let extensions = subsets
                .iter()
                .map(|extra| {
                    let psi = LabelledEmbedding {
                        base: theta.base,
                        dirs: theta.dirs.iter().chain(extra).copied().collect(),
                    };
                    labelled_positions(mode, host_dim, &psi)
                })
                .collect();
            plans.push(ThetaPlan {
                sigma_positions: labelled_positions(mode, host_dim, theta),
                extensions,
            });
        }
        Ok(PairPlan {
            thetas: plans,
            pairs,
        })
    }

    fn denominator(&self) -> u64 {
        (self.thetas.len() * self.pairs.len()) as u64
    }
}

/// Pair counts for one basis over every host: `A_H[a][b] = count / denom`.
/// Entries are stored for `a <= b` only; the matrix is symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTensor {
    pub denom: u64,
    pub entries: Vec<Vec<(u32, u32, u64)>>,
}

impl PairTensor {
    pub fn coefficient(&self, h: usize, a: usize, b: usize) -> Rational {
        let (a, b) = (a.min(b) as u32, a.max(b) as u32);
        let count = self.entries[h]
            .iter()
            .find(|e| e.0 == a && e.1 == b)
            .map_or(0, |e| e.2);
        Rational::new(BigInt::from(count), BigInt::from(self.denom))
    }
}

struct PairCounter {
    mode: Mode,
    grey: usize,
    sigma_key: u64,
    flag_index: FlagIndex,
    plan: PairPlan,
}

impl PairCounter {
    fn new(basis: &FlagBasis, host_dim: usize, host_is_partial: bool) -> Result<Self> {
        let mode = basis.mode();
        // partial hosts restrict θ to start on direction 0; red-blue hosts
        // (used for partial flags through P) average over every θ
        let all_thetas = !host_is_partial;
        let plan = PairPlan::new(mode, host_dim, basis.s(), basis.m, all_thetas)?;
        Ok(PairCounter {
            mode,
            grey: mode.grey_positions(basis.s()),
            sigma_key: canon::pack(basis.sigma.word()),
            flag_index: FlagIndex::new(basis)?,
            plan,
        })
    }

    /// Ordered-pair counts `(a, b) -> count` on one host word.
    fn count(&self, host: &[Colour], m: usize) -> Result<HashMap<(u32, u32), u64>> {
        let sigma_grey = self.grey;
        let flag_grey = self.mode.grey_positions(m);
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        let mut ids = Vec::new();
        for t in &self.plan.thetas {
            if read_key(host, &t.sigma_positions, sigma_grey) != self.sigma_key {
                continue;
            }
            ids.clear();
            for ext in &t.extensions {
                let key = read_key(host, ext, flag_grey);
                let id = self.flag_index.identify(key).ok_or_else(|| {
                    Error::Shape("host contains a flag outside the basis (is it F-free?)".into())
                })?;
                ids.push(id as u32);
            }
            for &(a, b) in &self.plan.pairs {
                *counts.entry((ids[a], ids[b])).or_default() += 1;
            }
        }
        Ok(counts)
    }
}

fn check_host_mode(basis_mode: Mode, host: &CubeColouring) -> Result<bool> {
    match (basis_mode, host.mode()) {
        (a, b) if a == b => Ok(b == Mode::Partial),
        (Mode::Partial, Mode::Edge) => Ok(false),
        (a, b) => Err(Error::ModeMismatch(format!("{a} basis on a {b} host"))),
    }
}

fn pair_tensor_for(basis: &FlagBasis, h_list: &[CubeColouring], l: usize) -> Result<PairTensor> {
    check_m_bound(basis.s(), basis.m, l)?;
    let counter = PairCounter::new(basis, l, basis.mode() == Mode::Partial)?;
    let denom = counter.plan.denominator();
    let entries = h_list
        .par_iter()
        .map(|h| -> Result<Vec<(u32, u32, u64)>> {
            let counts = counter.count(h.word(), basis.m)?;
            let mut upper: Vec<(u32, u32, u64)> = counts
                .into_iter()
                .filter(|&((a, b), _)| a <= b)
                .map(|((a, b), c)| (a, b, c))
                .collect();
            upper.sort_unstable();
            Ok(upper)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairTensor { denom, entries })
}

/// `E_{θ ∈ Θ_H}[p(F_a, F_b, θ; H)]` for a single host class `h`.
pub fn pair_coefficient(basis: &FlagBasis, a: usize, b: usize, h: &CubeColouring) -> Result<Rational> {
    if a >= basis.len() || b >= basis.len() {
        return Err(Error::Index(format!(
            "flag pair ({a}, {b}) in a basis of {}",
            basis.len()
        )));
    }
    if h.mode() != basis.mode() {
        return Err(Error::ModeMismatch(format!("{} basis on {} host", basis.mode(), h.mode())));
    }
    let t = pair_tensor_for(basis, std::slice::from_ref(h), h.dim())?;
    Ok(t.coefficient(0, a, b))
}

/// Distribution of the classes of `l`-subcubes of `g` (with a random
/// labelling, projected through P for partial classes), as counts over
/// canonical keys plus the total.
pub fn subcube_distribution(
    mode: Mode,
    l: usize,
    g: &CubeColouring,
) -> Result<(HashMap<u64, u64>, u64)> {
    let project = match (mode, g.mode()) {
        (Mode::Partial, Mode::Edge) => true,
        (a, b) if a == b && a != Mode::Partial => false,
        (a, b) => {
            return Err(Error::ModeMismatch(format!(
                "{a} densities need a {} host, got {b}",
                if a == Mode::Partial { Mode::Edge } else { a }
            )))
        }
    };
    if l > g.dim() {
        return Err(Error::Dimension(format!("subcube dimension {l} > host dimension {}", g.dim())));
    }
    check_enumerable(mode, l)?;
    let canon = Canonizer::cached(mode, l, GroupKind::Mode)?;
    let grey = mode.grey_positions(l);
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut total = 0u64;
    for sc in cube::enumerate_subcubes(g.dim(), l)? {
        if project {
            // label direction 0 ranges over the subcube's directions; the
            // rest of the labelling does not change the partial class
            for first in 0..l {
                let mut dirs = vec![sc.dirs[first]];
                dirs.extend(sc.dirs.iter().enumerate().filter(|&(i, _)| i != first).map(|(_, &d)| d));
                let emb = LabelledEmbedding { base: sc.base, dirs };
                let pos = labelled_positions(Mode::Edge, g.dim(), &emb);
                *counts.entry(canon.canon_key(read_key(g.word(), &pos, grey))).or_default() += 1;
                total += 1;
            }
        } else {
            let pos = labelled_positions(mode, g.dim(), &sc.embedding());
            *counts.entry(canon.canon_key(read_key(g.word(), &pos, 0))).or_default() += 1;
            total += 1;
        }
    }
    Ok((counts, total))
}

/// `p(H; G)`.
pub fn p_density(h: &CubeColouring, g: &CubeColouring) -> Result<Rational> {
    let (counts, total) = subcube_distribution(h.mode(), h.dim(), g)?;
    let key = canon::pack(colour::canonical_form(h)?.word());
    let hits = counts.get(&key).copied().unwrap_or(0);
    Ok(Rational::new(BigInt::from(hits), BigInt::from(total)))
}

/// `p(H; G)` for every `H` in a problem's list, in list order.
pub fn p_vector(problem: &DensityProblem, g: &CubeColouring) -> Result<Vec<Rational>> {
    let (counts, total) = subcube_distribution(problem.mode, problem.l, g)?;
    let total = BigInt::from(total);
    Ok(problem
        .h_list
        .iter()
        .map(|h| {
            let hits = counts.get(&canon::pack(h.word())).copied().unwrap_or(0);
            Rational::new(BigInt::from(hits), total.clone())
        })
        .collect())
}

/// Type and flag dimensions used when none are given: the largest flag
/// dimension the overlap bound allows, for every type dimension where that
/// flag dimension exceeds the type's (edge problems use `s = 1` only).
pub fn default_basis_dims(mode: Mode, l: usize) -> Vec<(usize, usize)> {
    let ss: Vec<usize> = match mode {
        Mode::Edge => vec![1],
        Mode::Partial => (1..=l).collect(),
        _ => (0..=l).collect(),
    };
    ss.into_iter()
        .map(|s| (s, (l + s) / 2))
        .filter(|&(s, m)| m > s)
        .collect()
}

/// One basis per F-free type of each requested `(s, m)`; bases without
/// flags are skipped.
pub fn build_bases(
    mode: Mode,
    l: usize,
    fam: &ForbiddenFamily,
    dims: &[(usize, usize)],
) -> Result<Vec<FlagBasis>> {
    let mut out = Vec::new();
    for &(s, m) in dims {
        check_m_bound(s, m, l)?;
        for sigma in enumerate_types(mode, s, fam)? {
            let basis = enumerate_flags(&sigma, m, fam, l)?;
            if !basis.is_empty() {
                out.push(basis);
            }
        }
    }
    Ok(out)
}

/// Exact densities `d(H)` of the averaging identity.
pub fn class_density(h: &CubeColouring) -> Result<Rational> {
    colour::density(h)
}

pub fn assemble_problem(
    mode: Mode,
    l: usize,
    fam: &ForbiddenFamily,
    bases: Vec<FlagBasis>,
) -> Result<DensityProblem> {
    if mode == Mode::Partial && l < 2 {
        return Err(Error::Dimension("partial problems need l >= 2".into()));
    }
    if !matches!(mode, Mode::Vertex | Mode::Edge | Mode::Partial) {
        return Err(Error::ModeMismatch(format!("no density problem for {mode} cubes")));
    }
    for b in &bases {
        if b.mode() != mode {
            return Err(Error::ModeMismatch(format!("{} basis in a {mode} problem", b.mode())));
        }
        if b.is_empty() {
            return Err(Error::Shape(format!("basis for type {} has no flags", b.sigma)));
        }
        check_m_bound(b.s(), b.m, l)?;
    }
    let h_list = enumerate_h(mode, l, fam)?;
    let densities = h_list.iter().map(class_density).collect::<Result<Vec<_>>>()?;
    let tensors = bases
        .iter()
        .map(|b| pair_tensor_for(b, &h_list, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProblem {
        mode,
        l,
        family: fam.clone(),
        h_list,
        densities,
        bases,
        tensors,
        constraints: Vec::new(),
    })
}

/// `E_{θ ∈ Θ_G}[p(F_a, F_b, θ; G)]` computed directly on a host `G`.
pub fn direct_pair_density(basis: &FlagBasis, a: usize, b: usize, g: &CubeColouring) -> Result<Rational> {
    let host_is_partial = check_host_mode(basis.mode(), g)?;
    let counter = PairCounter::new(basis, g.dim(), host_is_partial)?;
    let counts = counter.count(g.word(), basis.m)?;
    let hits = counts.get(&(a as u32, b as u32)).copied().unwrap_or(0);
    Ok(Rational::new(BigInt::from(hits), BigInt::from(counter.plan.denominator())))
}

/// Whether `E_{θ∈Θ_G}[p(F_a,F_b,θ;G)] = Σ_H A_{i,H}[a][b] p(H;G)` holds
/// exactly on the host `G`.
pub fn check_averaging_identity(
    problem: &DensityProblem,
    basis: usize,
    a: usize,
    b: usize,
    g: &CubeColouring,
) -> Result<bool> {
    let bs = problem
        .bases
        .get(basis)
        .ok_or_else(|| Error::Index(format!("basis {basis}")))?;
    if g.dim() < problem.l {
        return Err(Error::Dimension(format!("host dimension {} < l = {}", g.dim(), problem.l)));
    }
    let lhs = direct_pair_density(bs, a, b, g)?;
    let p = p_vector(problem, g)?;
    let tensor = &problem.tensors[basis];
    let mut rhs = Rational::from_integer(BigInt::from(0));
    for (h, ph) in p.iter().enumerate() {
        let c = tensor.coefficient(h, a, b);
        if c != Rational::from_integer(BigInt::from(0)) {
            rhs += c * ph;
        }
    }
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::colour::named_family;
    use crate::rational::{from_int, ratio};

    fn brute_force_classes(mode: Mode, l: usize, fam: &ForbiddenFamily) -> usize {
        let len = mode.word_len(l);
        let grey = mode.grey_positions(l);
        let mut seen = HashSet::new();
        for bits in 0..1u64 << (len - grey) {
            let word = (0..len)
                .map(|p| {
                    if p < grey {
                        Colour::Grey
                    } else if bits >> (p - grey) & 1 == 1 {
                        Colour::Red
                    } else {
                        Colour::Blue
                    }
                })
                .collect();
            let c = CubeColouring::new(mode, l, word).unwrap();
            if colour::is_f_free(&c, fam).unwrap() {
                seen.insert(colour::canonical_form(&c).unwrap());
            }
        }
        seen.len()
    }

    #[test]
    fn subset_walk() {
        let all: Vec<u64> = subsets_of(0b1010).collect();
        assert_eq!(all, vec![0, 0b10, 0b1000, 0b1010]);
        assert_eq!(subsets_of(0).count(), 1);
    }

    #[test]
    fn freeness_index_agrees_with_search() {
        for (mode, dim, fam) in [
            (Mode::Edge, 3, named_family("B").unwrap()),
            (Mode::Edge, 3, named_family("B1B2").unwrap()),
            (Mode::Partial, 3, named_family("B").unwrap()),
            (Mode::Vertex, 3, named_family("B3-").unwrap()),
            (Mode::Vertex, 4, named_family("B4B5").unwrap()),
        ] {
            let idx = FreenessIndex::new(mode, dim, &fam).unwrap();
            let template = CubeColouring::uniform(mode, dim, Colour::Red);
            for key in subsets_of(idx.free_mask()).step_by(7) {
                let c = CubeColouring::new(mode, dim, canon::unpack(key, template.word())).unwrap();
                assert_eq!(idx.is_free(key), colour::is_f_free(&c, &fam).unwrap(), "{c}");
            }
        }
    }

    #[test]
    fn h_counts_small() {
        assert_eq!(enumerate_h(Mode::Vertex, 1, &ForbiddenFamily::empty()).unwrap().len(), 3);
        assert_eq!(enumerate_h(Mode::Edge, 3, &named_family("B").unwrap()).unwrap().len(), 99);
        for (mode, l, fam) in [
            (Mode::Vertex, 2, ForbiddenFamily::empty()),
            (Mode::Vertex, 3, named_family("B3-").unwrap()),
            (Mode::Vertex, 3, named_family("B4B5").unwrap()),
            (Mode::Edge, 3, named_family("B1B2").unwrap()),
            (Mode::Partial, 3, named_family("B").unwrap()),
            (Mode::Partial, 3, ForbiddenFamily::empty()),
        ] {
            assert_eq!(
                enumerate_h(mode, l, &fam).unwrap().len(),
                brute_force_classes(mode, l, &fam),
                "{mode} {l}"
            );
        }
    }

    #[test]
    fn h_list_sorted_and_canonical() {
        let h = enumerate_h(Mode::Partial, 3, &named_family("B").unwrap()).unwrap();
        for w in h.windows(2) {
            assert!(w[0].word() < w[1].word());
        }
        for c in &h {
            assert_eq!(&colour::canonical_form(c).unwrap(), c);
        }
    }

    #[test]
    fn h_rejects_bad_sizes() {
        assert!(matches!(
            enumerate_h(Mode::Edge, 5, &ForbiddenFamily::empty()),
            Err(Error::Capacity(_))
        ));
        assert!(enumerate_h(Mode::Partial, 1, &ForbiddenFamily::empty()).is_err());
    }

    #[test]
    fn default_dims() {
        assert_eq!(default_basis_dims(Mode::Vertex, 3), vec![(0, 1), (1, 2)]);
        assert_eq!(default_basis_dims(Mode::Vertex, 4), vec![(0, 2), (1, 2), (2, 3)]);
        assert_eq!(default_basis_dims(Mode::Edge, 3), vec![(1, 2)]);
        assert_eq!(default_basis_dims(Mode::Partial, 4), vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn type_counts() {
        let empty = ForbiddenFamily::empty();
        let b = named_family("B").unwrap();
        assert_eq!(enumerate_types(Mode::Vertex, 0, &empty).unwrap().len(), 2);
        assert_eq!(enumerate_types(Mode::Edge, 1, &b).unwrap().len(), 2);
        assert_eq!(enumerate_types(Mode::Edge, 2, &b).unwrap().len(), 15);
        assert_eq!(enumerate_types(Mode::Edge, 0, &b).unwrap().len(), 1);
        assert_eq!(enumerate_types(Mode::Partial, 1, &b).unwrap().len(), 1);
        assert!(enumerate_types(Mode::Partial, 0, &b).is_err());
    }

    #[test]
    fn flag_examples() {
        let empty = ForbiddenFamily::empty();
        let blue: CubeColouring = "vertex 0 B".parse().unwrap();
        let red: CubeColouring = "vertex 0 R".parse().unwrap();
        assert_eq!(enumerate_flags(&blue, 1, &empty, 3).unwrap().len(), 2);
        let only = enumerate_flags(&red, 0, &empty, 3).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!(only.flags[0].cube, red);
        assert!(enumerate_flags(&blue, 2, &empty, 3).is_err());
    }

    #[test]
    fn flag_count_blue_edge_oracle() {
        // brute force: Q_2 words with edge (0,1) blue, orbits under maps that
        // fix vertices 0 and 1 (only the identity), dropping the all-blue one
        let b = named_family("B").unwrap();
        let sigma: CubeColouring = "edge 1 B".parse().unwrap();
        let fixing: Vec<_> = cube::symmetry_group(2, 0)
            .unwrap()
            .into_iter()
            .filter(|g| g.apply(0) == 0 && g.apply(1) == 1)
            .collect();
        let mut orbits = HashSet::new();
        for bits in 0..16u32 {
            let word: Vec<Colour> = (0..4)
                .map(|p| if bits >> p & 1 == 1 { Colour::Red } else { Colour::Blue })
                .collect();
            if word[0] != Colour::Blue {
                continue;
            }
            let c = CubeColouring::new(Mode::Edge, 2, word).unwrap();
            if !colour::is_f_free(&c, &b).unwrap() {
                continue;
            }
            let orbit_min = fixing
                .iter()
                .map(|g| colour::apply_map(&c, g).unwrap().word().to_vec())
                .min()
                .unwrap();
            orbits.insert(orbit_min);
        }
        assert_eq!(orbits.len(), 7);
        assert_eq!(enumerate_flags(&sigma, 2, &b, 3).unwrap().len(), orbits.len());
    }

    #[test]
    fn flags_quotient_by_free_directions() {
        // s = 0, m = 2 vertex flags: vertex 0 labelled; swapping the two
        // directions identifies BRBB... with BBRB...
        let blue: CubeColouring = "vertex 0 B".parse().unwrap();
        let basis = enumerate_flags(&blue, 2, &ForbiddenFamily::empty(), 4).unwrap();
        // vertices 1,2 (swappable), 3 fixed: 3 * 2 = 6 classes
        assert_eq!(basis.len(), 6);
    }

    #[test]
    fn p_density_examples() {
        let all_blue_q2: CubeColouring = "vertex 2 BBBB".parse().unwrap();
        let h: CubeColouring = "vertex 1 BB".parse().unwrap();
        assert_eq!(p_density(&h, &all_blue_q2).unwrap(), from_int(1));
        let one_red: CubeColouring = "vertex 2 RBBB".parse().unwrap();
        assert_eq!(p_density(&h, &one_red).unwrap(), ratio(1, 2));
        let e: CubeColouring = "edge 1 B".parse().unwrap();
        assert_eq!(p_density(&e, &"edge 2 BBBB".parse().unwrap()).unwrap(), from_int(1));
        assert!(p_density(&"vertex 3 BBBBBBBB".parse().unwrap(), &all_blue_q2).is_err());
    }

    #[test]
    fn pair_coefficient_examples() {
        let blue: CubeColouring = "vertex 0 B".parse().unwrap();
        let basis = enumerate_flags(&blue, 1, &ForbiddenFamily::empty(), 2).unwrap();
        // flags: other endpoint B (index 0) or R (index 1)
        assert_eq!(basis.flags[0].cube.to_string(), "vertex 1 BB");
        let host: CubeColouring = "vertex 2 BBBB".parse().unwrap();
        assert_eq!(pair_coefficient(&basis, 0, 0, &host).unwrap(), from_int(1));
        let red0: CubeColouring = "vertex 2 RBBB".parse().unwrap();
        assert_eq!(pair_coefficient(&basis, 0, 0, &red0).unwrap(), ratio(1, 4));
        assert!(pair_coefficient(&basis, 0, 2, &host).is_err());
    }

    #[test]
    fn pair_coefficient_oracle_red_vertex() {
        // direct oracle: θ is a single vertex, R_a and R_b are the two edges
        // at θ (ordered), both must be blue-blue flags
        let host: CubeColouring = "vertex 2 RBBB".parse().unwrap();
        let mut hits = 0;
        let mut total = 0;
        for v in 0..4u64 {
            for da in 0..2 {
                for db in 0..2 {
                    if da == db {
                        continue;
                    }
                    total += 1;
                    let ok = |x: u64| host.vertex_colour(x) == Colour::Blue;
                    if ok(v) && ok(v ^ 1 << da) && ok(v ^ 1 << db) {
                        hits += 1;
                    }
                }
            }
        }
        assert_eq!(ratio(hits, total), ratio(1, 4));
    }

    #[test]
    fn averaging_only_problems() {
        let p = assemble_problem(Mode::Vertex, 1, &ForbiddenFamily::empty(), vec![]).unwrap();
        assert_eq!(p.densities, vec![from_int(1), ratio(1, 2), from_int(0)]);
        let p = assemble_problem(Mode::Vertex, 3, &named_family("B3-").unwrap(), vec![]).unwrap();
        assert_eq!(p.densities.iter().max().unwrap(), &ratio(3, 4));
        assert!(assemble_problem(Mode::Partial, 1, &ForbiddenFamily::empty(), vec![]).is_err());
    }

    #[test]
    fn b3_minus_averaging_oracle() {
        // every 7-blue Q_3 contains B3-, some 6-blue one avoids it
        let fam = named_family("B3-").unwrap();
        for v in 0..8 {
            assert!(!colour::is_f_free(&CubeColouring::vertex_with_red(3, &[v]), &fam).unwrap());
        }
        let free6 = (0..8u64)
            .flat_map(|a| (a + 1..8).map(move |b| (a, b)))
            .any(|(a, b)| colour::is_f_free(&CubeColouring::vertex_with_red(3, &[a, b]), &fam).unwrap());
        assert!(free6);
    }

    #[test]
    fn tensors_symmetric_and_bounded() {
        let fam = named_family("B").unwrap();
        let bases = build_bases(Mode::Edge, 3, &fam, &default_basis_dims(Mode::Edge, 3)).unwrap();
        let p = assemble_problem(Mode::Edge, 3, &fam, bases).unwrap();
        for (bi, t) in p.tensors.iter().enumerate() {
            let n = p.bases[bi].len();
            for h in 0..p.h_list.len() {
                let mut sum = from_int(0);
                for a in 0..n {
                    for b in 0..n {
                        let c = t.coefficient(h, a, b);
                        assert_eq!(c, t.coefficient(h, b, a));
                        assert!(c >= from_int(0) && c <= from_int(1));
                        sum += c;
                    }
                }
                assert!(sum <= from_int(1));
            }
        }
        // single-host entry point agrees with the bulk tensor
        let h = &p.h_list[17];
        for a in 0..p.bases[0].len() {
            assert_eq!(pair_coefficient(&p.bases[0], a, 0, h).unwrap(), p.tensors[0].coefficient(17, a, 0));
        }
    }
}
