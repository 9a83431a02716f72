//! Linear constraints for partial-cube problems.
//!
//! A tri-edge class `S` (directions 0 and 1 grey) arises from a random
//! labelled red-blue subcube in two ways that must be equally likely: as
//! `S` and as its image under the swap of directions 0 and 1. Writing both
//! probabilities in terms of the partial classes `H` gives a row `a` with
//! `Σ_H a_H p(H; G) = 0` for every red-blue host `G`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use crate::canon::{self, Canonizer, GroupKind};
use crate::colour::{Colour, CubeColouring, ForbiddenFamily, Mode};
use crate::cube::SignedPermutation;
use crate::error::{Error, Result};
use crate::flags;
use crate::problem::DensityProblem;
use crate::rational::{format_rational, parse_rational, Rational};

/// One constraint: sparse entries `(h index, a_H)`, sorted by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintRow {
    pub s_class: CubeColouring,
    pub entries: Vec<(usize, Rational)>,
}

impl ConstraintRow {
    pub fn value(&self, p: &[Rational]) -> Rational {
        self.entries
            .iter()
            .fold(Rational::zero(), |acc, (h, a)| acc + a * &p[*h])
    }

    pub fn to_line(&self) -> String {
        let mut out = format!("{} :", self.s_class.word_string());
        for (h, a) in &self.entries {
            let _ = write!(out, " {h}:{}", format_rational(a));
        }
        out
    }

    pub fn parse_line(line: &str, h_count: usize) -> Result<Self> {
        let (word, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("bad constraint line `{line}`")))?;
        let word: Vec<Colour> = word
            .trim()
            .chars()
            .map(Colour::from_char)
            .collect::<Result<_>>()?;
        let dim = (2..=16)
            .find(|&d| Mode::TriEdge.word_len(d) == word.len())
            .ok_or_else(|| Error::Shape(format!("constraint word of length {}", word.len())))?;
        let s_class = CubeColouring::new(Mode::TriEdge, dim, word)?;
        let mut entries = Vec::new();
        for tok in rest.split_whitespace() {
            let (h, a) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("bad constraint entry `{tok}`")))?;
            let h: usize = crate::problem::parse_num(h)?;
            if h >= h_count || entries.last().is_some_and(|&(p, _)| p >= h) {
                return Err(Error::Shape(format!("constraint index {h} out of order or range")));
            }
            entries.push((h, parse_rational(a)?));
        }
        Ok(ConstraintRow { s_class, entries })
    }
}

/// The map exchanging directions `a` and `b` of `Q_n`.
pub fn phi_swap(a: usize, b: usize, n: usize) -> Result<SignedPermutation> {
    if a >= n || b >= n {
        return Err(Error::Dimension(format!("directions {a}, {b} in Q_{n}")));
    }
    let mut perm: Vec<u8> = (0..n as u8).collect();
    perm.swap(a, b);
    SignedPermutation::new(perm, 0)
}

/// One representative per class of F-free tri-edge cubes of dimension `l`.
pub fn enumerate_s(l: usize, fam: &ForbiddenFamily) -> Result<Vec<CubeColouring>> {
    flags::enumerate_h(Mode::TriEdge, l, fam)
}

/// Key-level helpers shared by [`p_phi`] and [`constraint_vectors`].
struct SwapPlan {
    tri: std::sync::Arc<Canonizer>,
    /// Position maps of the swaps of direction 1 with `1..l`.
    swaps: Vec<Vec<u16>>,
    swap01: Vec<u16>,
    len: usize,
    tri_free: u64,
}

impl SwapPlan {
    fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Dimension("constraints need l >= 2".into()));
        }
        let swaps = (1..l)
            .map(|n| Ok(canon::position_map(Mode::Edge, l, &phi_swap(1, n, l)?)))
            .collect::<Result<_>>()?;
        Ok(SwapPlan {
            tri: Canonizer::cached(Mode::TriEdge, l, GroupKind::Mode)?,
            swaps,
            swap01: canon::position_map(Mode::Edge, l, &phi_swap(0, 1, l)?),
            len: Mode::Edge.word_len(l),
            tri_free: canon::free_mask(Mode::TriEdge, l),
        })
    }

    fn permute(&self, key: u64, perm: &[u16]) -> u64 {
        let mut out = 0u64;
        let mut w = key;
        while w != 0 {
            let k = w.trailing_zeros() as usize;
            let p = self.len - 1 - k;
            out |= 1 << (self.len - 1 - perm[p] as usize);
            w &= w - 1;
        }
        out
    }

    /// Canonical tri-edge keys reached from a partial key, one per choice of
    /// the second grey direction.
    fn outcomes(&self, h_key: u64) -> Vec<u64> {
        self.swaps
            .iter()
            .map(|perm| self.tri.canon_key(self.permute(h_key, perm) & self.tri_free))
            .collect()
    }

    fn swapped(&self, s_key: u64) -> u64 {
        self.tri.canon_key(self.permute(s_key, &self.swap01))
    }
}

/// Probability that `S` is reached from `H` when the second grey direction
/// is chosen uniformly among `1..l`.
pub fn p_phi(s: &CubeColouring, h: &CubeColouring) -> Result<Rational> {
    if s.mode() != Mode::TriEdge || h.mode() != Mode::Partial {
        return Err(Error::ModeMismatch(format!("p_phi({}, {})", s.mode(), h.mode())));
    }
    if s.dim() != h.dim() {
        return Err(Error::Dimension(format!("dimensions {} and {}", s.dim(), h.dim())));
    }
    let plan = SwapPlan::new(h.dim())?;
    let target = plan.tri.canon_key(canon::pack(s.word()));
    let hits = plan
        .outcomes(canon::pack(h.word()))
        .into_iter()
        .filter(|&k| k == target)
        .count();
    Ok(Rational::new(BigInt::from(hits), BigInt::from(h.dim() - 1)))
}

/// The non-zero rows, one per pair `{S, swap(S)}`, normalised so the first
/// entry is positive, deduplicated up to scaling and reduced to a linearly
/// independent subset.
pub fn constraint_vectors(
    l: usize,
    fam: &ForbiddenFamily,
    h_list: &[CubeColouring],
) -> Result<Vec<ConstraintRow>> {
    let plan = SwapPlan::new(l)?;
    if let Some(h) = h_list.iter().find(|h| h.mode() != Mode::Partial || h.dim() != l) {
        return Err(Error::ModeMismatch(format!("constraint host `{h}`")));
    }
    let s_list = enumerate_s(l, fam)?;
    let s_index: HashMap<u64, usize> = s_list
        .iter()
        .enumerate()
        .map(|(i, s)| (canon::pack(s.word()), i))
        .collect();
    let partner: Vec<usize> = s_list
        .iter()
        .map(|s| {
            s_index
                .get(&plan.swapped(canon::pack(s.word())))
                .copied()
                .ok_or_else(|| Error::Shape("swap leaves the tri-edge class list".into()))
        })
        .collect::<Result<_>>()?;
    let per_h: Vec<Vec<(usize, i64)>> = h_list
        .par_iter()
        .map(|h| {
            let mut c: Vec<(usize, i64)> = Vec::new();
            for k in plan.outcomes(canon::pack(h.word())) {
                let s = *s_index
                    .get(&k)
                    .ok_or_else(|| Error::Shape(format!("`{h}` is not F-free")))?;
                match c.iter_mut().find(|e| e.0 == s) {
                    Some(e) => e.1 += 1,
                    None => c.push((s, 1)),
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let mut by_s: Vec<Vec<(usize, i64)>> = vec![Vec::new(); s_list.len()];
    for (h, cs) in per_h.iter().enumerate() {
        for &(s, n) in cs {
            by_s[s].push((h, n));
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut rows: Vec<(usize, Vec<(usize, i64)>)> = Vec::new();
    for s in 0..s_list.len() {
        let t = partner[s];
        if t == s {
            continue;
        }
        let row = sparse_diff(&by_s[s], &by_s[t]);
        let Some(&(_, lead)) = row.first() else {
            continue;
        };
        let row = normalise(row, lead);
        if seen.insert(row.clone()) {
            rows.push((s, row));
        }
    }
    let keep = independent_subset(rows.iter().map(|r| &r.1));
    let denom = BigInt::from(l as i64 - 1);
    Ok(keep
        .into_iter()
        .map(|i| {
            let (s, row) = &rows[i];
            ConstraintRow {
                s_class: s_list[*s].clone(),
                entries: row
                    .iter()
                    .map(|&(h, v)| (h, Rational::new(BigInt::from(v), denom.clone())))
                    .collect(),
            }
        })
        .collect())
}

fn sparse_diff(a: &[(usize, i64)], b: &[(usize, i64)]) -> Vec<(usize, i64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (h, v) = match (a.get(i), b.get(j)) {
            (Some(&(ha, va)), Some(&(hb, _))) if ha < hb => {
                i += 1;
                (ha, va)
            }
            (Some(&(ha, _)), Some(&(hb, vb))) if hb < ha => {
                j += 1;
                (hb, -vb)
            }
            (Some(&(ha, va)), Some(&(_, vb))) => {
                i += 1;
                j += 1;
                (ha, va - vb)
            }
            (Some(&(ha, va)), None) => {
                i += 1;
                (ha, va)
            }
            (None, Some(&(hb, vb))) => {
                j += 1;
                (hb, -vb)
            }
            (None, None) => unreachable!(),
        };
        if v != 0 {
            out.push((h, v));
        }
    }
    out
}

/// Integer row scaled to a positive leading entry with content 1.
fn normalise(row: Vec<(usize, i64)>, lead: i64) -> Vec<(usize, i64)> {
    let g = row
        .iter()
        .fold(0i64, |g, &(_, v)| num_integer::gcd(g, v.abs()));
    let sign = if lead < 0 { -1 } else { 1 };
    row.into_iter().map(|(h, v)| (h, sign * v / g)).collect()
}

const PRIME: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn to_mod(v: i64) -> u64 {
    (v.rem_euclid(PRIME as i64)) as u64
}

/// Indices of a maximal subset of rows that stay independent modulo a
/// prime; independence mod p implies independence over the rationals.
fn independent_subset<'a>(rows: impl Iterator<Item = &'a Vec<(usize, i64)>>) -> Vec<usize> {
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    let mut keep = Vec::new();
    for (i, row) in rows.enumerate() {
        let mut r: Vec<(usize, u64)> = row.iter().map(|&(h, v)| (h, to_mod(v))).collect();
        while let Some(&(lead, lv)) = r.first() {
            match pivots.get(&lead) {
                Some(p) => {
                    // r -= lv * p  (p has leading coefficient 1)
                    r = axpy(&r, p, PRIME - lv);
                }
                None => {
                    let inv = powmod(lv, PRIME - 2);
                    let scaled = r.iter().map(|&(h, v)| (h, mulmod(v, inv))).collect();
                    pivots.insert(lead, scaled);
                    keep.push(i);
                    break;
                }
            }
        }
    }
    keep
}

/// `a + c * b` over sparse rows mod the prime.
fn axpy(a: &[(usize, u64)], b: &[(usize, u64)], c: u64) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
        let (h, v) = if take_a {
            i += 1;
            a[i - 1]
        } else if take_b {
            j += 1;
            (b[j - 1].0, mulmod(b[j - 1].1, c))
        } else {
            i += 1;
            j += 1;
            (a[i - 1].0, (a[i - 1].1 + mulmod(b[j - 1].1, c)) % PRIME)
        };
        if v != 0 {
            out.push((h, v));
        }
    }
    out
}

/// Fills `problem.constraints` for a partial problem.
pub fn attach_constraints(problem: &mut DensityProblem) -> Result<()> {
    if problem.mode != Mode::Partial {
        return Err(Error::ModeMismatch(format!(
            "constraints apply to partial problems, not {}",
            problem.mode
        )));
    }
    problem.constraints = constraint_vectors(problem.l, &problem.family, &problem.h_list)?;
    Ok(())
}

/// Exact rank of a list of rows (dense Gaussian elimination over Q).
pub fn rational_rank(rows: &[ConstraintRow], width: usize) -> usize {
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![Rational::zero(); width];
            for (h, a) in &r.entries {
                v[*h] = a.clone();
            }
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for i in rank + 1..m.len() {
            if m[i][col].is_zero() {
                continue;
            }
            let f = &m[i][col] / &pivot;
            for c in col..width {
                let d = &f * &m[rank][c];
                m[i][c] -= d;
            }
        }
        rank += 1;
    }
    rank
}
