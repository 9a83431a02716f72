//! Layered lower-bound constructions and the two-halves family.

use crate::colour::{self, Colour, CubeColouring, ForbiddenFamily, Mode};
use crate::cube::{self, SignedPermutation};
use crate::error::{Error, Result};
use crate::rational::Rational;

const MAX_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstructionSpec {
    /// Vertex `v` Red iff `layer(v) ≡ residue (mod period)`.
    VertexLayered { n: usize, period: u32, residue: u32 },
    /// Edge with lower endpoint `u` Red iff `layer(u) ≡ residue (mod period)`.
    EdgeLayered { n: usize, period: u32, residue: u32 },
    /// Halves `split = 0` and `split = 1`, each relabelled by its own map of
    /// the remaining `n - 1` directions and coloured by layer mod 3.
    TwoHalves {
        n: usize,
        split: usize,
        residues: [u32; 2],
        relabel: [SignedPermutation; 2],
    },
}

impl ConstructionSpec {
    pub fn two_halves(n: usize, split: usize, z1: u32, z2: u32) -> Self {
        let id = SignedPermutation::identity(n.saturating_sub(1));
        ConstructionSpec::TwoHalves {
            n,
            split,
            residues: [z1, z2],
            relabel: [id.clone(), id],
        }
    }

    /// Named presets: `c6` (vertex, period 2), `b3-` (vertex, period 3),
    /// `b3` (vertex, period 4), `square` (edge, period 2, odd layers).
    pub fn preset(name: &str, n: usize) -> Result<Self> {
        let (vertex, period, residue) = match name {
            "c6" => (true, 2, 0),
            "b3-" => (true, 3, 0),
            "b3" => (true, 4, 0),
            "square" => (false, 2, 1),
            _ => return Err(Error::Construction(format!("unknown preset `{name}`"))),
        };
        Ok(if vertex {
            ConstructionSpec::VertexLayered { n, period, residue }
        } else {
            ConstructionSpec::EdgeLayered { n, period, residue }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        match self {
            ConstructionSpec::VertexLayered { n, period, residue }
            | ConstructionSpec::EdgeLayered { n, period, residue } => {
                if *n > MAX_DIM {
                    return bad(format!("dimension {n} > {MAX_DIM}"));
                }
                if *period < 2 {
                    return bad(format!("period {period} < 2"));
                }
                if residue >= period {
                    return bad(format!("residue {residue} >= period {period}"));
                }
                if matches!(self, ConstructionSpec::EdgeLayered { .. }) && *n == 0 {
                    return bad("edge colouring of Q_0".into());
                }
            }
            ConstructionSpec::TwoHalves {
                n,
                split,
                residues,
                relabel,
            } => {
                if *n == 0 || *n > MAX_DIM {
                    return bad(format!("dimension {n} outside 1..={MAX_DIM}"));
                }
                if split >= n {
                    return bad(format!("split direction {split} >= {n}"));
                }
                if residues.iter().any(|&z| z > 2) {
                    return bad(format!("residues {residues:?} must lie in 0..=2"));
                }
                if relabel.iter().any(|g| g.dim() != n - 1) {
                    return bad(format!("relabelling maps must act on {} directions", n - 1));
                }
            }
        }
        Ok(())
    }
}

pub fn build(spec: &ConstructionSpec) -> Result<CubeColouring> {
    spec.validate()?;
    let red_if = |b: bool| if b { Colour::Red } else { Colour::Blue };
    let (mode, n, word): (Mode, usize, Vec<Colour>) = match spec {
        ConstructionSpec::VertexLayered { n, period, residue } => (
            Mode::Vertex,
            *n,
            (0..1u64 << n)
                .map(|v| red_if(cube::layer(v) % period == *residue))
                .collect(),
        ),
        ConstructionSpec::EdgeLayered { n, period, residue } => (
            Mode::Edge,
            *n,
            (0..cube::num_edges(*n))
                .map(|i| {
                    let (u, _) = cube::edge_at(*n, i);
                    red_if(cube::layer(u) % period == *residue)
                })
                .collect(),
        ),
        ConstructionSpec::TwoHalves {
            n,
            split,
            residues,
            relabel,
        } => (
            Mode::Vertex,
            *n,
            (0..1u64 << n)
                .map(|v| {
                    let half = (v >> split & 1) as usize;
                    let rest = relabel[half].apply(cube::compress(v, *split));
                    red_if(cube::layer(rest) % 3 == residues[half])
                })
                .collect(),
        ),
    };
    CubeColouring::new(mode, n, word)
}

/// Exact blue density and F-freeness.
pub fn evaluate(c: &CubeColouring, fam: &ForbiddenFamily) -> Result<(Rational, bool)> {
    Ok((colour::density(c)?, colour::is_f_free(c, fam)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colour::named_family;
    use crate::rational::{from_int, ratio};

    fn layered(n: usize, period: u32, residue: u32) -> CubeColouring {
        build(&ConstructionSpec::VertexLayered { n, period, residue }).unwrap()
    }

    #[test]
    fn examples() {
        let c = layered(3, 3, 0);
        assert_eq!(c.count(Colour::Blue), 6);
        assert_eq!(colour::density(&c).unwrap(), ratio(3, 4));
        let e = build(&ConstructionSpec::EdgeLayered { n: 2, period: 2, residue: 1 }).unwrap();
        assert_eq!(colour::density(&e).unwrap(), ratio(1, 2));
        let (d, free) = evaluate(&layered(6, 3, 0), &named_family("B3-").unwrap()).unwrap();
        assert_eq!((d, free), (ratio(42, 64), true));
        let (d, free) = evaluate(&layered(6, 4, 0), &named_family("B3").unwrap()).unwrap();
        assert_eq!((d, free), (ratio(48, 64), true));
    }

    #[test]
    fn binomial_oracle() {
        // blue count = sum of C(n, j) over layers j not ≡ z
        for n in 1..=8 {
            for period in 2..=4 {
                for residue in 0..period {
                    let blue: u64 = (0..=n as u64)
                        .filter(|j| j % period as u64 != residue as u64)
                        .map(|j| num_integer::binomial(n as u64, j))
                        .sum();
                    assert_eq!(layered(n, period, residue).count(Colour::Blue) as u64, blue);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            ConstructionSpec::VertexLayered { n: 3, period: 1, residue: 0 },
            ConstructionSpec::VertexLayered { n: 3, period: 3, residue: 3 },
            ConstructionSpec::EdgeLayered { n: 0, period: 2, residue: 0 },
            ConstructionSpec::two_halves(4, 4, 0, 0),
            ConstructionSpec::two_halves(4, 0, 3, 0),
            ConstructionSpec::TwoHalves {
                n: 4,
                split: 0,
                residues: [0, 0],
                relabel: [SignedPermutation::identity(4), SignedPermutation::identity(3)],
            },
        ] {
            assert!(matches!(build(&spec), Err(Error::Construction(_))), "{spec:?}");
        }
        assert!(ConstructionSpec::preset("nope", 3).is_err());
    }

    #[test]
    fn two_halves_free_at_n4() {
        let fam = named_family("B3-").unwrap();
        for split in 0..4 {
            for z1 in 0..3 {
                for z2 in 0..3 {
                    let c = build(&ConstructionSpec::two_halves(4, split, z1, z2)).unwrap();
                    assert!(evaluate(&c, &fam).unwrap().1, "split {split} z {z1} {z2}");
                }
            }
        }
    }

    #[test]
    fn two_halves_respects_relabelling() {
        let g = SignedPermutation::new(vec![1, 0, 2], 0b101).unwrap();
        let spec = ConstructionSpec::TwoHalves {
            n: 4,
            split: 3,
            residues: [0, 1],
            relabel: [g.clone(), SignedPermutation::identity(3)],
        };
        let c = build(&spec).unwrap();
        for v in 0..8u64 {
            let expect = cube::layer(g.apply(v)).is_multiple_of(3);
            assert_eq!(c.vertex_colour(v) == Colour::Red, expect);
        }
        assert!(evaluate(&c, &named_family("B3-").unwrap()).unwrap().1);
    }

    #[test]
    fn layered_density_tends_to_two_thirds() {
        let d = colour::density(&layered(12, 3, 0)).unwrap();
        let diff = d - ratio(2, 3);
        assert!(diff.clone() < ratio(1, 50) && -diff < ratio(1, 50));
        assert_eq!(colour::density(&layered(0, 2, 1)).unwrap(), from_int(1));
    }
}
