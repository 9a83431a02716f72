//! Floating solver output to exact certificate. This is the only floating
//! point code in the certifier; the checker never calls it.

use num_bigint::BigInt;
use num_traits::FromPrimitive;

use super::{exact_bound, Certificate, Factor};
use crate::error::{Error, Result};
use crate::problem::DensityProblem;
use crate::rational::Rational;
use crate::sdp::{SdpLayout, SolverSolution};

pub const DEFAULT_ROUND_K: u32 = 20;
const EPS_START: f64 = 1.0 / (1u64 << 30) as f64;
const EPS_LIMIT: f64 = 1.0 / (1u64 << 10) as f64;

/// Nearest multiple of `2^-k`.
pub fn round_dyadic(x: f64, k: u32) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Factorization(format!("non-finite value {x}")));
    }
    let scale = (k as f64).exp2();
    let n = BigInt::from_f64((x * scale).round())
        .ok_or_else(|| Error::Factorization(format!("cannot round {x}")))?;
    Ok(Rational::new(n, BigInt::from(1) << k))
}

/// Upper-triangular `R` with `RᵀR ≈ Q`: Cholesky of `Q + εI`, `ε` doubling
/// from `2^-30` to `2^-10` until it succeeds, entries rounded to `2^-k`.
pub fn round_psd(q: &[Vec<f64>], k: u32) -> Result<Vec<Vec<Rational>>> {
    let n = q.len();
    if n == 0 || q.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("round_psd needs a non-empty square matrix".into()));
    }
    let mut eps = EPS_START;
    loop {
        if let Some(l) = cholesky(q, eps) {
            let mut r = vec![vec![Rational::from_integer(0.into()); n]; n];
            for i in 0..n {
                for j in i..n {
                    r[i][j] = round_dyadic(l[j][i], k)?;
                }
            }
            return Ok(r);
        }
        eps *= 2.0;
        if eps > EPS_LIMIT {
            return Err(Error::Factorization(format!(
                "matrix of size {n} is not positive definite even after a 2^-10 shift"
            )));
        }
    }
}

/// Lower `L` with `L Lᵀ = sym(Q) + εI`, or `None` on a non-positive pivot.
fn cholesky(q: &[Vec<f64>], eps: f64) -> Option<Vec<Vec<f64>>> {
    let n = q.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = q[j][j] + eps;
        for p in 0..j {
            d -= l[j][p] * l[j][p];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..n {
            let mut s = 0.5 * (q[i][j] + q[j][i]);
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Rounds a solver solution into a certificate; the claimed bound is the
/// exact bound of the rounded data on `problem`.
pub fn certificate_from_solution(
    problem: &DensityProblem,
    sol: &SolverSolution,
    k: u32,
) -> Result<Certificate> {
    let layout = SdpLayout::of(problem);
    let factors = sol
        .q_matrices(&layout)
        .iter()
        .map(|q| round_psd(q, k).map(Factor::Upper))
        .collect::<Result<Vec<_>>>()?;
    let multipliers = sol
        .multipliers(&layout)
        .into_iter()
        .map(|m| round_dyadic(m, k))
        .collect::<Result<Vec<_>>>()?;
    let mut cert = Certificate {
        mode: problem.mode,
        l: problem.l,
        family: problem.family.clone(),
        bases: problem.basis_descriptors(),
        factors,
        multipliers,
        claimed_bound: Rational::from_integer(0.into()),
    };
    cert.claimed_bound = exact_bound(problem, &cert)?.bound;
    Ok(cert)
}
