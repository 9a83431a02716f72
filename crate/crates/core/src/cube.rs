//! Bit-level combinatorics of the hypercube `Q_n`.
//!
//! Vertices are the integers `0..2^n`; two vertices are adjacent when they
//! differ in exactly one bit. The edge across direction `d` at lower endpoint
//! `u` (bit `d` of `u` clear) joins `u` and `u + 2^d`.

use itertools::Itertools;

use crate::error::{Error, Result};

pub type Vertex = u64;

/// Largest dimension for which group elements are enumerated eagerly.
pub const MAX_GROUP_DIM: usize = 8;

fn check_vertex(v: Vertex, n: usize) -> Result<()> {
    if n < 64 && v >> n != 0 {
        return Err(Error::VertexOutOfRange { vertex: v, dim: n });
    }
    Ok(())
}

pub fn is_edge(u: Vertex, v: Vertex, n: usize) -> Result<bool> {
    check_vertex(u, n)?;
    check_vertex(v, n)?;
    Ok((u ^ v).count_ones() == 1)
}

pub fn layer(v: Vertex) -> u32 {
    v.count_ones()
}

pub fn num_edges(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n << (n - 1)
    }
}

/// Removes bit `d` from `v`, shifting the higher bits down.
#[inline]
pub fn compress(v: Vertex, d: usize) -> Vertex {
    (v & ((1 << d) - 1)) | ((v >> (d + 1)) << d)
}

/// Inverse of [`compress`]: inserts a zero at bit `d`.
#[inline]
pub fn expand(v: Vertex, d: usize) -> Vertex {
    (v & ((1 << d) - 1)) | ((v >> d) << (d + 1))
}

/// Position of the edge `{u, u ^ 2^d}` in the canonical edge order.
#[inline]
pub fn edge_index(n: usize, u: Vertex, d: usize) -> usize {
    let lower = u & !(1 << d);
    (d << (n - 1)) + compress(lower, d) as usize
}

/// Lower endpoint and direction of the edge at position `idx`.
#[inline]
pub fn edge_at(n: usize, idx: usize) -> (Vertex, usize) {
    let half = 1usize << (n - 1);
    let d = idx / half;
    (expand((idx % half) as Vertex, d), d)
}

/// An automorphism of `Q_n`: `v ↦ perm(v XOR flips)`, where `perm` moves
/// bit `d` to bit `perm[d]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPermutation {
    pub perm: Vec<u8>,
    pub flips: Vertex,
}

impl SignedPermutation {
    pub fn identity(n: usize) -> Self {
        SignedPermutation {
            perm: (0..n as u8).collect(),
            flips: 0,
        }
    }

    pub fn new(perm: Vec<u8>, flips: Vertex) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            let p = p as usize;
            if p >= n || seen[p] {
                return Err(Error::Dimension(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        check_vertex(flips, n)?;
        Ok(SignedPermutation { perm, flips })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    #[inline]
    fn permute_bits(&self, v: Vertex) -> Vertex {
        let mut out = 0;
        let mut w = v;
        while w != 0 {
            let d = w.trailing_zeros() as usize;
            out |= 1 << self.perm[d];
            w &= w - 1;
        }
        out
    }

    #[inline]
    pub fn apply(&self, v: Vertex) -> Vertex {
        self.permute_bits(v ^ self.flips)
    }

    /// Image of the edge at `u` across direction `d`, as (endpoint, direction).
    #[inline]
    pub fn apply_edge(&self, u: Vertex, d: usize) -> (Vertex, usize) {
        (self.apply(u), self.perm[d] as usize)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SignedPermutation) -> SignedPermutation {
        let mut pulled = 0;
        for (e, &pe) in other.perm.iter().enumerate() {
            if self.flips >> pe & 1 == 1 {
                pulled |= 1 << e;
            }
        }
        SignedPermutation {
            perm: other.perm.iter().map(|&d| self.perm[d as usize]).collect(),
            flips: other.flips ^ pulled,
        }
    }

    fn inverse_perm(&self) -> Vec<u8> {
        let mut inv = vec![0u8; self.perm.len()];
        for (d, &p) in self.perm.iter().enumerate() {
            inv[p as usize] = d as u8;
        }
        inv
    }

    pub fn inverse(&self) -> SignedPermutation {
        SignedPermutation {
            flips: self.permute_bits(self.flips),
            perm: self.inverse_perm(),
        }
    }

    /// Whether the map fixes each of directions `0..k`.
    pub fn fixes_dirs(&self, k: usize) -> bool {
        self.perm.iter().take(k).enumerate().all(|(d, &p)| p as usize == d)
    }
}

/// An injection of a canonically labelled `Q_s` into a host cube:
/// `i ↦ base XOR (XOR over set bits j of i of 2^dirs[j])`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelledEmbedding {
    pub base: Vertex,
    pub dirs: Vec<u8>,
}

impl LabelledEmbedding {
    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    #[inline]
    pub fn map(&self, i: Vertex) -> Vertex {
        let mut v = self.base;
        let mut w = i;
        while w != 0 {
            let j = w.trailing_zeros() as usize;
            v ^= 1 << self.dirs[j];
            w &= w - 1;
        }
        v
    }

    /// Host image of the labelled edge at `i` across label direction `j`.
    #[inline]
    pub fn map_edge(&self, i: Vertex, j: usize) -> (Vertex, usize) {
        (self.map(i), self.dirs[j] as usize)
    }

    pub fn image(&self) -> Vec<Vertex> {
        (0..1u64 << self.dim()).map(|i| self.map(i)).collect()
    }

    /// Bitmask of host directions used.
    pub fn dir_mask(&self) -> Vertex {
        self.dirs.iter().fold(0, |m, &d| m | 1 << d)
    }
}

/// An `m`-subcube: a direction set plus a base vertex that is zero on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subcube {
    pub dirs: Vec<u8>,
    pub base: Vertex,
}

impl Subcube {
    pub fn embedding(&self) -> LabelledEmbedding {
        LabelledEmbedding {
            base: self.base,
            dirs: self.dirs.clone(),
        }
    }
}

pub fn enumerate_subcubes(n: usize, m: usize) -> Result<Vec<Subcube>> {
    if m > n {
        return Err(Error::Dimension(format!("subcube dimension {m} > {n}")));
    }
    let mut out = Vec::new();
    for dirs in (0..n as u8).combinations(m) {
        let mask: Vertex = dirs.iter().fold(0, |a, &d| a | 1 << d);
        for base in 0..1u64 << n {
            if base & mask == 0 {
                out.push(Subcube {
                    dirs: dirs.clone(),
                    base,
                });
            }
        }
    }
    Ok(out)
}

/// Ordered direction lists of length `s` whose first `fixed` entries are
/// `0..fixed`, in lexicographic order.
pub fn direction_sequences(n: usize, s: usize, fixed: usize) -> Vec<Vec<u8>> {
    if fixed > s || s > n {
        return Vec::new();
    }
    let prefix: Vec<u8> = (0..fixed as u8).collect();
    (fixed as u8..n as u8)
        .permutations(s - fixed)
        .map(|tail| prefix.iter().copied().chain(tail).collect())
        .collect()
}

pub fn enumerate_embeddings(n: usize, s: usize, fixed_dirs: usize) -> Result<Vec<LabelledEmbedding>> {
    if s > n {
        return Err(Error::Dimension(format!("embedding dimension {s} > {n}")));
    }
    if fixed_dirs > s {
        return Err(Error::Dimension(format!("fixed_dirs {fixed_dirs} > {s}")));
    }
    let seqs = direction_sequences(n, s, fixed_dirs);
    let mut out = Vec::with_capacity(seqs.len() << n);
    for base in 0..1u64 << n {
        for dirs in &seqs {
            out.push(LabelledEmbedding {
                base,
                dirs: dirs.clone(),
            });
        }
    }
    Ok(out)
}

/// Signed permutations of `Q_n` fixing directions `0..fixed_dirs`.
pub fn symmetry_group(n: usize, fixed_dirs: usize) -> Result<Vec<SignedPermutation>> {
    if fixed_dirs > n {
        return Err(Error::Dimension(format!("fixed_dirs {fixed_dirs} > {n}")));
    }
    if n > MAX_GROUP_DIM {
        return Err(Error::Capacity(format!("symmetry group of Q_{n}")));
    }
    let mut out = Vec::new();
    for perm in direction_sequences(n, n, fixed_dirs) {
        for flips in 0..1u64 << n {
            out.push(SignedPermutation {
                perm: perm.clone(),
                flips,
            });
        }
    }
    Ok(out)
}

/// Direction permutations (no flips) fixing `0..fixed`: the maps that fix
/// every vertex of the standard sub-`Q_fixed` at the origin.
pub fn label_fixing_group(n: usize, fixed: usize) -> Vec<SignedPermutation> {
    direction_sequences(n, n, fixed)
        .into_iter()
        .map(|perm| SignedPermutation { perm, flips: 0 })
        .collect()
}
