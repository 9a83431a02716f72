//! The checker. Everything here is exact: cube enumeration, flag bases,
//! pair coefficients and constraint rows are rebuilt from the problem's
//! descriptor, and the bound is evaluated over the rationals.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{Certificate, Factor};
use crate::colour::{CubeColouring, ForbiddenFamily};
use crate::constraints::constraint_vectors;
use crate::error::{Error, Result};
use crate::flags::{assemble_problem, enumerate_flags, enumerate_h};
use crate::problem::DensityProblem;
use crate::rational::{format_rational, to_decimal_string, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub bound: Rational,
    pub argmax: usize,
    pub values: Vec<Rational>,
}

/// Exact `Q = RᵀR` (or the given matrix for a `Q` block, after an LDLᵀ
/// check).
fn block_matrix(f: &Factor) -> Result<Vec<Vec<Rational>>> {
    match f {
        Factor::Upper(r) => {
            let n = r.len();
            let mut q = vec![vec![Rational::zero(); n]; n];
            for i in 0..n {
                for j in i..n {
                    let mut s = Rational::zero();
                    for row in r.iter().take(i.min(j) + 1) {
                        if !row[i].is_zero() && !row[j].is_zero() {
                            s += &row[i] * &row[j];
                        }
                    }
                    q[j][i] = s.clone();
                    q[i][j] = s;
                }
            }
            Ok(q)
        }
        Factor::Gram(q) => {
            let n = q.len();
            for i in 0..n {
                for j in 0..i {
                    if q[i][j] != q[j][i] {
                        return Err(Error::Shape("Q block is not symmetric".into()));
                    }
                }
            }
            if !ldl_is_psd(q) {
                return Err(Error::Factorization("Q block is not positive semidefinite".into()));
            }
            Ok(q.clone())
        }
    }
}

/// Exact LDLᵀ test with symmetric pivoting on the first non-zero diagonal.
pub fn ldl_is_psd(m: &[Vec<Rational>]) -> bool {
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut live: Vec<usize> = (0..a.len()).collect();
    loop {
        let Some(pos) = live.iter().position(|&i| !a[i][i].is_zero()) else {
            // every remaining diagonal is zero: PSD iff the rest vanishes
            return live.iter().all(|&i| live.iter().all(|&j| a[i][j].is_zero()));
        };
        let p = live.remove(pos);
        let pivot = a[p][p].clone();
        if pivot.is_negative() {
            return false;
        }
        for &i in &live {
            if a[i][p].is_zero() {
                continue;
            }
            let f = &a[i][p] / &pivot;
            for &j in &live {
                if !a[p][j].is_zero() {
                    let d = &f * &a[p][j];
                    a[i][j] -= d;
                }
            }
        }
    }
}

/// Common-denominator form: `entries = numerators / denom`.
struct Scaled {
    numerators: Vec<Vec<BigInt>>,
    denom: BigInt,
}

fn scale_matrix(q: &[Vec<Rational>]) -> Scaled {
    let denom = q
        .iter()
        .flatten()
        .fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let numerators = q
        .iter()
        .map(|row| row.iter().map(|v| v.numer() * (&denom / v.denom())).collect())
        .collect();
    Scaled { numerators, denom }
}

/// `max_H d(H) + Σ_i ⟨A_{i,H}, Q_i⟩ + Σ_j μ_j a_{j,H}` using the tensors,
/// densities and constraint rows held by `problem`.
pub fn exact_bound(problem: &DensityProblem, cert: &Certificate) -> Result<BoundReport> {
    if cert.factors.len() != problem.bases.len() {
        return Err(Error::Shape(format!(
            "certificate has {} blocks, problem has {} bases",
            cert.factors.len(),
            problem.bases.len()
        )));
    }
    for (i, (f, b)) in cert.factors.iter().zip(&problem.bases).enumerate() {
        if f.size() != b.len() {
            return Err(Error::Shape(format!("block {i} has size {}, basis has {} flags", f.size(), b.len())));
        }
    }
    if cert.multipliers.len() != problem.constraints.len() {
        return Err(Error::Shape(format!(
            "certificate has {} multipliers, problem has {} constraint rows",
            cert.multipliers.len(),
            problem.constraints.len()
        )));
    }
    if problem.h_list.is_empty() {
        return Err(Error::Shape("problem has no host classes".into()));
    }
    let blocks = cert
        .factors
        .iter()
        .map(|f| block_matrix(f).map(|q| scale_matrix(&q)))
        .collect::<Result<Vec<_>>>()?;
    let mut values = problem.densities.clone();
    for (h, v) in values.iter_mut().enumerate() {
        for (t, q) in problem.tensors.iter().zip(&blocks) {
            let mut acc = BigInt::zero();
            for &(a, b, count) in &t.entries[h] {
                let w = if a == b { count } else { 2 * count };
                acc += &q.numerators[a as usize][b as usize] * BigInt::from(w);
            }
            if !acc.is_zero() {
                *v += Rational::new(acc, &q.denom * BigInt::from(t.denom));
            }
        }
    }
    for (row, mu) in problem.constraints.iter().zip(&cert.multipliers) {
        if mu.is_zero() {
            continue;
        }
        for (h, a) in &row.entries {
            values[*h] += mu * a;
        }
    }
    let mut argmax = 0;
    for (h, v) in values.iter().enumerate() {
        if *v > values[argmax] {
            argmax = h;
        }
    }
    Ok(BoundReport {
        bound: values[argmax].clone(),
        argmax,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Unreadable or inconsistent input; reported as a failure.
    Invalid,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Invalid => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub reason: String,
    pub target: Rational,
    pub bound: Option<Rational>,
    pub argmax: Option<CubeColouring>,
    pub claimed_bound: Option<Rational>,
    pub psd: Vec<String>,
    pub host_count: usize,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = match self.verdict {
            Verdict::Pass => "PASS",
            _ => "FAIL",
        };
        writeln!(f, "{word}: {}", self.reason)?;
        writeln!(f, "target {}", format_rational(&self.target))?;
        if let Some(b) = &self.bound {
            writeln!(f, "bound {} (~{})", format_rational(b), to_decimal_string(b, 8))?;
        }
        if let Some(h) = &self.argmax {
            writeln!(f, "argmax {h}")?;
        }
        if let Some(c) = &self.claimed_bound {
            writeln!(f, "claimed {} (not trusted)", format_rational(c))?;
        }
        if self.host_count > 0 {
            writeln!(f, "hosts {}", self.host_count)?;
        }
        for line in &self.psd {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn same_family(a: &ForbiddenFamily, b: &ForbiddenFamily) -> bool {
    a.digest() == b.digest()
}

enum Stop {
    Stale(String),
    Invalid(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        match e {
            Error::StaleProblem(s) => Stop::Stale(s),
            e => Stop::Invalid(e),
        }
    }
}

/// Rebuilds the problem described by `file` from scratch. The file's cached
/// densities, tensors and rows are never read; its host list, flag lists
/// and constraint classes are only compared against the fresh ones.
pub fn rebuild_problem(file: &DensityProblem) -> Result<DensityProblem> {
    let h_list = enumerate_h(file.mode, file.l, &file.family)?;
    if h_list != file.h_list {
        return Err(Error::StaleProblem(format!(
            "fresh enumeration gives {} classes, the file lists {}",
            h_list.len(),
            file.h_list.len()
        )));
    }
    let mut bases = Vec::with_capacity(file.bases.len());
    for b in &file.bases {
        let fresh = enumerate_flags(&b.sigma, b.m, &file.family, file.l)?;
        if fresh.flags.iter().map(|f| &f.cube).ne(b.flags.iter().map(|f| &f.cube)) {
            return Err(Error::StaleProblem(format!("flag list for type {} differs", b.sigma)));
        }
        bases.push(fresh);
    }
    let mut fresh = assemble_problem(file.mode, file.l, &file.family, bases)?;
    if !file.constraints.is_empty() {
        let rows = constraint_vectors(file.l, &file.family, &fresh.h_list)?;
        if rows.iter().map(|r| &r.s_class).ne(file.constraints.iter().map(|r| &r.s_class)) {
            return Err(Error::StaleProblem("constraint classes differ".into()));
        }
        fresh.constraints = rows;
    }
    Ok(fresh)
}

fn check_descriptor(file: &DensityProblem, cert: &Certificate) -> Result<()> {
    if cert.mode != file.mode || cert.l != file.l {
        return Err(Error::Shape(format!(
            "certificate is for {} l={}, problem is {} l={}",
            cert.mode, cert.l, file.mode, file.l
        )));
    }
    if !same_family(&cert.family, &file.family) {
        return Err(Error::Shape("certificate and problem forbid different families".into()));
    }
    if cert.bases != file.basis_descriptors() {
        return Err(Error::Shape("certificate and problem use different bases".into()));
    }
    Ok(())
}

fn psd_lines(cert: &Certificate) -> Vec<String> {
    cert.factors
        .iter()
        .enumerate()
        .map(|(i, f)| match f {
            Factor::Upper(_) => format!("block {i}: Q = RᵀR, size {}, psd by construction", f.size()),
            Factor::Gram(_) => format!("block {i}: Q given directly, size {}, exact LDLᵀ pivots >= 0", f.size()),
        })
        .collect()
}

/// Parses both files, rebuilds the problem and compares the exact bound
/// with `target`.
pub fn verify(problem_text: &str, cert_text: &str, target: &Rational) -> VerifyReport {
    let mut report = VerifyReport {
        verdict: Verdict::Invalid,
        reason: String::new(),
        target: target.clone(),
        bound: None,
        argmax: None,
        claimed_bound: None,
        psd: Vec::new(),
        host_count: 0,
    };
    let outcome = (|| -> std::result::Result<(), Stop> {
        let file = DensityProblem::parse(problem_text)?;
        let cert = Certificate::parse(cert_text)?;
        report.claimed_bound = Some(cert.claimed_bound.clone());
        check_descriptor(&file, &cert)?;
        let fresh = rebuild_problem(&file)?;
        report.host_count = fresh.h_list.len();
        let result = exact_bound(&fresh, &cert)?;
        report.psd = psd_lines(&cert);
        report.argmax = Some(fresh.h_list[result.argmax].clone());
        report.bound = Some(result.bound);
        Ok(())
    })();
    match outcome {
        Ok(()) => {
            let bound = report.bound.as_ref().expect("bound set on success");
            if bound <= target {
                report.verdict = Verdict::Pass;
                report.reason = "exact bound <= target".into();
            } else {
                report.verdict = Verdict::Fail;
                report.reason = "exact bound > target".into();
            }
        }
        Err(Stop::Stale(msg)) => {
            report.verdict = Verdict::Fail;
            report.reason = format!("stale problem: {msg}");
        }
        Err(Stop::Invalid(e)) => {
            report.verdict = Verdict::Invalid;
            report.reason = e.to_string();
        }
    }
    report
}

pub fn verify_files(problem: &Path, cert: &Path, target: &Rational) -> VerifyReport {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    match (read(problem), read(cert)) {
        (Ok(p), Ok(c)) => verify(&p, &c, target),
        (Err(e), _) | (_, Err(e)) => VerifyReport {
            verdict: Verdict::Invalid,
            reason: e.to_string(),
            target: target.clone(),
            bound: None,
            argmax: None,
            claimed_bound: None,
            psd: Vec::new(),
            host_count: 0,
        },
    }
}
