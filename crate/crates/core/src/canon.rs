//! Canonical forms by explicit minimisation over a finite group of position
//! permutations.
//!
//! Words of at most 64 positions are packed into a `u64` key: position `p`
//! occupies bit `len - 1 - p` and the bit is set when the position is Red.
//! Grey positions are fixed setwise by every group used here, so comparing
//! keys numerically agrees with comparing words lexicographically under
//! `Blue < Red < Grey`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::colour::{Colour, Mode};
use crate::cube::{self, SignedPermutation};
use crate::error::Result;

/// Upper bound on the number of 256-entry lookup tables built per canonizer.
const MAX_TABLES: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// The isomorphism group of the mode (fixes the grey directions).
    Mode,
    /// Direction permutations without flips that fix directions `0..s`.
    LabelFixing(usize),
}

pub struct Canonizer {
    len: usize,
    perms: Vec<Vec<u16>>,
    tables: Option<Vec<[u64; 256]>>,
    chunks: usize,
}

/// Image position of every word position under `g`.
pub fn position_map(mode: Mode, dim: usize, g: &SignedPermutation) -> Vec<u16> {
    match mode {
        Mode::Vertex => (0..1u64 << dim).map(|v| g.apply(v) as u16).collect(),
        _ => (0..cube::num_edges(dim))
            .map(|idx| {
                let (u, d) = cube::edge_at(dim, idx);
                let (gu, gd) = g.apply_edge(u, d);
                cube::edge_index(dim, gu, gd) as u16
            })
            .collect(),
    }
}

impl Canonizer {
    pub fn new(len: usize, perms: Vec<Vec<u16>>) -> Self {
        let chunks = len.div_ceil(8);
        let tables = (len <= 64 && perms.len() * chunks <= MAX_TABLES).then(|| {
            let mut tables = Vec::with_capacity(perms.len() * chunks);
            for perm in &perms {
                for c in 0..chunks {
                    let mut t = [0u64; 256];
                    for (b, slot) in t.iter_mut().enumerate() {
                        let mut out = 0u64;
                        for bit in 0..8 {
                            let k = c * 8 + bit;
                            if k < len && b >> bit & 1 == 1 {
                                let p = len - 1 - k;
                                out |= 1 << (len - 1 - perm[p] as usize);
                            }
                        }
                        *slot = out;
                    }
                    tables.push(t);
                }
            }
            tables
        });
        Canonizer {
            len,
            perms,
            tables,
            chunks,
        }
    }

    pub fn for_group(mode: Mode, dim: usize, group: &[SignedPermutation]) -> Self {
        let perms = group.iter().map(|g| position_map(mode, dim, g)).collect();
        Canonizer::new(mode.word_len(dim), perms)
    }

    /// Shared, lazily built canonizer for `(mode, dim, kind)`.
    pub fn cached(mode: Mode, dim: usize, kind: GroupKind) -> Result<Arc<Canonizer>> {
        type Cache = Mutex<HashMap<(Mode, usize, GroupKind), Arc<Canonizer>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(c) = cache.lock().unwrap().get(&(mode, dim, kind)) {
            return Ok(c.clone());
        }
        let group = match kind {
            GroupKind::Mode => cube::symmetry_group(dim, mode.fixed_dirs().min(dim))?,
            GroupKind::LabelFixing(s) => cube::label_fixing_group(dim, s.min(dim)),
        };
        let built = Arc::new(Canonizer::for_group(mode, dim, &group));
        cache
            .lock()
            .unwrap()
            .entry((mode, dim, kind))
            .or_insert(built.clone());
        Ok(built)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn group_size(&self) -> usize {
        self.perms.len()
    }

    #[inline]
    pub fn apply_key(&self, g: usize, key: u64) -> u64 {
        match &self.tables {
            Some(tables) => {
                let base = g * self.chunks;
                let mut out = 0;
                for c in 0..self.chunks {
                    out |= tables[base + c][(key >> (8 * c)) as usize & 0xff];
                }
                out
            }
            None => {
                let perm = &self.perms[g];
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
        }
    }

    #[inline]
    pub fn canon_key(&self, key: u64) -> u64 {
        let mut best = key;
        for g in 0..self.perms.len() {
            let k = self.apply_key(g, key);
            if k < best {
                best = k;
            }
        }
        best
    }

    /// Whether `key` is already the minimum of its orbit.
    #[inline]
    pub fn is_canonical(&self, key: u64) -> bool {
        (0..self.perms.len()).all(|g| self.apply_key(g, key) >= key)
    }

    pub fn apply_word(&self, g: usize, word: &[Colour]) -> Vec<Colour> {
        let mut out = vec![Colour::Blue; word.len()];
        for (p, &c) in word.iter().enumerate() {
            out[self.perms[g][p] as usize] = c;
        }
        out
    }

    pub fn canon_word(&self, word: &[Colour]) -> Vec<Colour> {
        if self.len <= 64 {
            return unpack(self.canon_key(pack(word)), word);
        }
        (0..self.perms.len())
            .map(|g| self.apply_word(g, word))
            .min()
            .unwrap_or_else(|| word.to_vec())
    }
}

/// Packs the Red positions of `word` (at most 64 positions).
pub fn pack(word: &[Colour]) -> u64 {
    let len = word.len();
    debug_assert!(len <= 64);
    word.iter()
        .enumerate()
        .filter(|(_, &c)| c == Colour::Red)
        .fold(0, |k, (p, _)| k | 1 << (len - 1 - p))
}

/// Rebuilds a word from a key, taking grey positions from `template`.
pub fn unpack(key: u64, template: &[Colour]) -> Vec<Colour> {
    let len = template.len();
    template
        .iter()
        .enumerate()
        .map(|(p, &c)| match c {
            Colour::Grey => Colour::Grey,
            _ if key >> (len - 1 - p) & 1 == 1 => Colour::Red,
            _ => Colour::Blue,
        })
        .collect()
}

/// Key bits of the non-grey positions of a `(mode, dim)` word.
pub fn free_mask(mode: Mode, dim: usize) -> u64 {
    let len = mode.word_len(dim);
    let grey = mode.grey_positions(dim);
    let all = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
    let grey_bits = (0..grey).fold(0u64, |k, p| k | 1 << (len - 1 - p));
    all & !grey_bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_agree_with_loop() {
        let group = cube::symmetry_group(3, 0).unwrap();
        let fast = Canonizer::for_group(Mode::Edge, 3, &group);
        let perms = group.iter().map(|g| position_map(Mode::Edge, 3, g)).collect();
        let mut slow = Canonizer::new(12, perms);
        slow.tables = None;
        for key in 0..1u64 << 12 {
            assert_eq!(fast.canon_key(key), slow.canon_key(key));
        }
    }

    #[test]
    fn pack_round_trip() {
        use Colour::*;
        let w = vec![Grey, Grey, Red, Blue, Red];
        let k = pack(&w);
        assert_eq!(k, 0b00101);
        assert_eq!(unpack(k, &w), w);
        assert_eq!(free_mask(Mode::Partial, 2), 0b0011);
        assert_eq!(free_mask(Mode::TriEdge, 3), 0b0000_0000_1111);
    }
}
