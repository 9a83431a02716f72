//! The assembled density problem and its text formats.
//!
//! H-list file:
//! ```text
//! edge 3 1a2b3c4d5e6f7081 99
//! edge 3 BBBBBRRRRRRR
//! ...
//! ```
//!
//! Problem file: a `cubeflag-problem v1` header followed by keyword
//! sections (`family`, `h`, `basis`, `tensor`, `constraints`), every number
//! an exact rational or integer.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::colour::{CubeColouring, ForbiddenFamily, Mode};
use crate::constraints::ConstraintRow;
use crate::error::{Error, Result};
use crate::flags::{self, Flag, FlagBasis, PairTensor};
use crate::rational::{format_rational, parse_rational, Rational};

const PROBLEM_MAGIC: &str = "cubeflag-problem v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityProblem {
    pub mode: Mode,
    pub l: usize,
    pub family: ForbiddenFamily,
    pub h_list: Vec<CubeColouring>,
    pub densities: Vec<Rational>,
    pub bases: Vec<FlagBasis>,
    pub tensors: Vec<PairTensor>,
    pub constraints: Vec<ConstraintRow>,
}

impl DensityProblem {
    /// `Σ_i ⟨A_{i,H}, Q_i⟩` for one H with exact matrices `q[i]`.
    pub fn pair_term(&self, h: usize, q: &[Vec<Vec<Rational>>]) -> Rational {
        let mut total = Rational::zero();
        for (t, qi) in self.tensors.iter().zip(q) {
            let mut acc = Rational::zero();
            for &(a, b, count) in &t.entries[h] {
                let weight = if a == b { count } else { 2 * count };
                acc += &qi[a as usize][b as usize] * BigInt::from(weight);
            }
            total += acc / BigInt::from(t.denom);
        }
        total
    }

    /// Type words and flag dimensions, the part of a basis a checker needs.
    pub fn basis_descriptors(&self) -> Vec<(CubeColouring, usize)> {
        self.bases.iter().map(|b| (b.sigma.clone(), b.m)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{PROBLEM_MAGIC}");
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "l {}", self.l);
        let _ = writeln!(out, "family {}", self.family.members().len());
        for m in self.family.members() {
            let _ = writeln!(out, "{m}");
        }
        let _ = writeln!(out, "h {}", self.h_list.len());
        for (h, d) in self.h_list.iter().zip(&self.densities) {
            let _ = writeln!(out, "{h} {}", format_rational(d));
        }
        let _ = writeln!(out, "bases {}", self.bases.len());
        for (b, t) in self.bases.iter().zip(&self.tensors) {
            let _ = writeln!(out, "basis {} m {} flags {}", b.sigma, b.m, b.len());
            for f in &b.flags {
                let _ = writeln!(out, "{}", f.cube);
            }
            let nnz: usize = t.entries.iter().map(Vec::len).sum();
            let _ = writeln!(out, "tensor {} {}", t.denom, nnz);
            for (h, row) in t.entries.iter().enumerate() {
                for &(a, b, c) in row {
                    let _ = writeln!(out, "{h} {a} {b} {c}");
                }
            }
        }
        let _ = writeln!(out, "constraints {}", self.constraints.len());
        for row in &self.constraints {
            let _ = writeln!(out, "{}", row.to_line());
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        if lines.next()? != PROBLEM_MAGIC {
            return Err(Error::parse("not a cubeflag problem file"));
        }
        let mode: Mode = lines.keyword("mode")?.parse()?;
        let l: usize = parse_num(lines.keyword("l")?)?;
        let fam_count: usize = parse_num(lines.keyword("family")?)?;
        let members = (0..fam_count)
            .map(|_| lines.next()?.parse())
            .collect::<Result<Vec<CubeColouring>>>()?;
        let family = ForbiddenFamily::new(members)?;
        let h_count: usize = parse_num(lines.keyword("h")?)?;
        let mut h_list = Vec::with_capacity(h_count);
        let mut densities = Vec::with_capacity(h_count);
        for _ in 0..h_count {
            let line = lines.next()?;
            let (cube, d) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::parse(format!("bad h line `{line}`")))?;
            let cube: CubeColouring = cube.parse()?;
            if cube.mode() != mode || cube.dim() != l {
                return Err(Error::Shape(format!("h entry `{cube}` in a {mode} l={l} problem")));
            }
            h_list.push(cube);
            densities.push(parse_rational(d)?);
        }
        let basis_count: usize = parse_num(lines.keyword("bases")?)?;
        let mut bases = Vec::with_capacity(basis_count);
        let mut tensors = Vec::with_capacity(basis_count);
        for _ in 0..basis_count {
            let header = lines.keyword("basis")?;
            let toks: Vec<&str> = header.split_whitespace().collect();
            if toks.len() != 7 || toks[3] != "m" || toks[5] != "flags" {
                return Err(Error::parse(format!("bad basis line `basis {header}`")));
            }
            let sigma: CubeColouring = toks[..3].join(" ").parse()?;
            let m: usize = parse_num(toks[4])?;
            let n: usize = parse_num(toks[6])?;
            let theta = flags::standard_theta(sigma.dim());
            let flag_list = (0..n)
                .map(|_| {
                    Ok(Flag {
                        cube: lines.next()?.parse()?,
                        theta: theta.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let tline = lines.keyword("tensor")?;
            let (denom, nnz) = tline
                .split_once(' ')
                .ok_or_else(|| Error::parse(format!("bad tensor line `{tline}`")))?;
            let denom: u64 = parse_num(denom)?;
            let nnz: usize = parse_num(nnz)?;
            let mut entries = vec![Vec::new(); h_count];
            for _ in 0..nnz {
                let line = lines.next()?;
                let v: Vec<u64> = line
                    .split_whitespace()
                    .map(parse_num)
                    .collect::<Result<_>>()?;
                let [h, a, b, c] = v[..] else {
                    return Err(Error::parse(format!("bad tensor entry `{line}`")));
                };
                if h as usize >= h_count || a >= n as u64 || b >= n as u64 || a > b {
                    return Err(Error::Shape(format!("tensor entry `{line}` out of range")));
                }
                entries[h as usize].push((a as u32, b as u32, c));
            }
            bases.push(FlagBasis {
                sigma,
                m,
                flags: flag_list,
            });
            tensors.push(PairTensor { denom, entries });
        }
        let c_count: usize = parse_num(lines.keyword("constraints")?)?;
        let constraints = (0..c_count)
            .map(|_| ConstraintRow::parse_line(lines.next()?, h_count))
            .collect::<Result<Vec<_>>>()?;
        if lines.next()? != "end" {
            return Err(Error::parse("missing `end`"));
        }
        Ok(DensityProblem {
            mode,
            l,
            family,
            h_list,
            densities,
            bases,
            tensors,
            constraints,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DensityProblem::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn h_list_text(mode: Mode, l: usize, fam: &ForbiddenFamily, h_list: &[CubeColouring]) -> String {
    let mut out = format!("{mode} {l} {} {}\n", fam.digest(), h_list.len());
    for h in h_list {
        let _ = writeln!(out, "{h}");
    }
    out
}

/// Parses an H-list file into its header fields and cubes.
pub fn parse_h_list(text: &str) -> Result<(Mode, usize, String, Vec<CubeColouring>)> {
    let mut lines = Lines::new(text);
    let header = lines.next()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let [mode, l, hash, count] = toks[..] else {
        return Err(Error::parse(format!("bad H-list header `{header}`")));
    };
    let mode: Mode = mode.parse()?;
    let l: usize = parse_num(l)?;
    let count: usize = parse_num(count)?;
    let cubes = (0..count)
        .map(|_| lines.next()?.parse())
        .collect::<Result<Vec<CubeColouring>>>()?;
    Ok((mode, l, hash.to_string(), cubes))
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(format!("expected a number, got `{s}`")))
}

/// Non-empty, non-comment lines with line-numbered errors.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    pub(crate) fn next(&mut self) -> Result<&'a str> {
        for (_, line) in self.inner.by_ref() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok(line);
            }
        }
        Err(Error::parse("unexpected end of file"))
    }

    /// Next line, which must start with `key`; returns the rest.
    pub(crate) fn keyword(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim()),
            _ => Err(Error::parse(format!("expected `{key}`, got `{line}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colour::named_family;
    use crate::flags::{assemble_problem, build_bases, enumerate_h};

    #[test]
    fn problem_round_trip() {
        let fam = named_family("B3-").unwrap();
        let bases = build_bases(Mode::Vertex, 3, &fam, &[(0, 1), (1, 2)]).unwrap();
        let p = assemble_problem(Mode::Vertex, 3, &fam, bases).unwrap();
        let text = p.to_text();
        let back = DensityProblem::parse(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn h_list_round_trip() {
        let fam = named_family("B").unwrap();
        let h = enumerate_h(Mode::Edge, 2, &fam).unwrap();
        let text = h_list_text(Mode::Edge, 2, &fam, &h);
        let (mode, l, hash, back) = parse_h_list(&text).unwrap();
        assert_eq!((mode, l, hash.as_str()), (Mode::Edge, 2, fam.digest().as_str()));
        assert_eq!(back, h);
    }

    #[test]
    fn rejects_malformed() {
        assert!(DensityProblem::parse("nonsense").is_err());
        let fam = named_family("B3-").unwrap();
        let p = assemble_problem(Mode::Vertex, 2, &fam, vec![]).unwrap();
        let text = p.to_text().replace("end\n", "");
        assert!(DensityProblem::parse(&text).is_err());
    }
}
