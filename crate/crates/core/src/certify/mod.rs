//! Exact certificates: rational PSD factors and multipliers, and their
//! independent verification.
//!
//! Certificate file:
//! ```text
//! cubeflag-cert v1
//! mode edge
//! l 3
//! family 1
//! edge 2 BBBB
//! bases 2
//! basis edge 1 B m 2
//! basis edge 1 R m 2
//! R 0 7
//! <7 rationals: row 0, columns 0..7>
//! <6 rationals: row 1, columns 1..7>
//! ...
//! mu 0
//! bound 1517/2500
//! ```
//! A block may instead be given as `Q i n` with the upper triangle of the
//! matrix itself; it is then checked by an exact LDLᵀ factorisation.

pub mod round;
pub mod verify;

use std::fmt::Write as _;
use std::path::Path;

use crate::colour::{CubeColouring, ForbiddenFamily, Mode};
use crate::error::{Error, Result};
use crate::problem::{parse_num, DensityProblem, Lines};
use crate::rational::{format_rational, parse_rational, Rational};

pub use round::{certificate_from_solution, round_dyadic, round_psd, DEFAULT_ROUND_K};
pub use verify::{exact_bound, ldl_is_psd, verify, verify_files, BoundReport, Verdict, VerifyReport};

const CERT_MAGIC: &str = "cubeflag-cert v1";

/// One PSD block: an upper-triangular factor `R` (the block is `RᵀR`) or
/// the symmetric matrix itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Upper(Vec<Vec<Rational>>),
    Gram(Vec<Vec<Rational>>),
}

impl Factor {
    pub fn size(&self) -> usize {
        match self {
            Factor::Upper(m) | Factor::Gram(m) => m.len(),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Factor::Upper(_) => "R",
            Factor::Gram(_) => "Q",
        }
    }

    fn rows(&self) -> &[Vec<Rational>] {
        match self {
            Factor::Upper(m) | Factor::Gram(m) => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub mode: Mode,
    pub l: usize,
    pub family: ForbiddenFamily,
    pub bases: Vec<(CubeColouring, usize)>,
    pub factors: Vec<Factor>,
    pub multipliers: Vec<Rational>,
    pub claimed_bound: Rational,
}

impl Certificate {
    /// The all-zero certificate for a problem (the pure averaging bound).
    pub fn zero(problem: &DensityProblem) -> Self {
        let zero = Rational::from_integer(0.into());
        Certificate {
            mode: problem.mode,
            l: problem.l,
            family: problem.family.clone(),
            bases: problem.basis_descriptors(),
            factors: problem
                .bases
                .iter()
                .map(|b| Factor::Upper(vec![vec![zero.clone(); b.len()]; b.len()]))
                .collect(),
            multipliers: vec![zero.clone(); problem.constraints.len()],
            claimed_bound: zero,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CERT_MAGIC}");
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "l {}", self.l);
        let _ = writeln!(out, "family {}", self.family.members().len());
        for m in self.family.members() {
            let _ = writeln!(out, "{m}");
        }
        let _ = writeln!(out, "bases {}", self.bases.len());
        for (sigma, m) in &self.bases {
            let _ = writeln!(out, "basis {sigma} m {m}");
        }
        for (i, f) in self.factors.iter().enumerate() {
            let _ = writeln!(out, "{} {i} {}", f.tag(), f.size());
            for (r, row) in f.rows().iter().enumerate() {
                let line: Vec<String> = row[r..].iter().map(format_rational).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        let mu: Vec<String> = self.multipliers.iter().map(format_rational).collect();
        let _ = writeln!(out, "mu {}{}{}", mu.len(), if mu.is_empty() { "" } else { " " }, mu.join(" "));
        let _ = writeln!(out, "bound {}", format_rational(&self.claimed_bound));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        if lines.next()? != CERT_MAGIC {
            return Err(Error::parse("not a cubeflag certificate"));
        }
        let mode: Mode = lines.keyword("mode")?.parse()?;
        let l: usize = parse_num(lines.keyword("l")?)?;
        let fam_count: usize = parse_num(lines.keyword("family")?)?;
        let members = (0..fam_count)
            .map(|_| lines.next()?.parse())
            .collect::<Result<Vec<CubeColouring>>>()?;
        let family = ForbiddenFamily::new(members)?;
        let basis_count: usize = parse_num(lines.keyword("bases")?)?;
        let mut bases = Vec::with_capacity(basis_count);
        for _ in 0..basis_count {
            let rest = lines.keyword("basis")?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 5 || toks[3] != "m" {
                return Err(Error::parse(format!("bad basis line `basis {rest}`")));
            }
            bases.push((toks[..3].join(" ").parse()?, parse_num(toks[4])?));
        }
        let mut factors = Vec::with_capacity(basis_count);
        for i in 0..basis_count {
            let header = lines.next()?;
            let toks: Vec<&str> = header.split_whitespace().collect();
            if toks.len() != 3 || parse_num::<usize>(toks[1])? != i {
                return Err(Error::parse(format!("bad block header `{header}`")));
            }
            let n: usize = parse_num(toks[2])?;
            let zero = Rational::from_integer(0.into());
            let mut m = vec![vec![zero; n]; n];
            for r in 0..n {
                let line = lines.next()?;
                let vals = line
                    .split_whitespace()
                    .map(parse_rational)
                    .collect::<Result<Vec<_>>>()?;
                if vals.len() != n - r {
                    return Err(Error::Shape(format!(
                        "block {i} row {r}: expected {} entries, got {}",
                        n - r,
                        vals.len()
                    )));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    m[r][r + c] = v;
                }
            }
            factors.push(match toks[0] {
                "R" => Factor::Upper(m),
                "Q" => {
                    for r in 0..n {
                        for c in 0..r {
                            m[r][c] = m[c][r].clone();
                        }
                    }
                    Factor::Gram(m)
                }
                t => return Err(Error::parse(format!("unknown block tag `{t}`"))),
            });
        }
        let mu_line = lines.keyword("mu")?;
        let mut toks = mu_line.split_whitespace();
        let count: usize = parse_num(toks.next().unwrap_or(""))?;
        let multipliers = toks.map(parse_rational).collect::<Result<Vec<_>>>()?;
        if multipliers.len() != count {
            return Err(Error::Shape(format!("mu declares {count} values, has {}", multipliers.len())));
        }
        let claimed_bound = parse_rational(lines.keyword("bound")?)?;
        if !lines_exhausted(&mut lines) {
            return Err(Error::parse("trailing content after `bound`"));
        }
        Ok(Certificate {
            mode,
            l,
            family,
            bases,
            factors,
            multipliers,
            claimed_bound,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Certificate::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn lines_exhausted(lines: &mut Lines<'_>) -> bool {
    lines.next().is_err()
}
