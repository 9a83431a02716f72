//! Sparse SDPA-format emission, solver subprocess control and solution
//! parsing.
//!
//! Block layout: one dense block per flag basis, then a diagonal slack
//! block with one entry per host class, then a diagonal block holding
//! `t⁺, t⁻, μ₁⁺, μ₁⁻, …`. Row `H` reads
//! `Σ_i ⟨A_{i,H}, Q_i⟩ + s_H + Σ_j a_{j,H}(μ_j⁺ − μ_j⁻) − t⁺ + t⁻ = −d(H)`
//! and the objective is `t⁻ − t⁺`, so the optimum is `−min t`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::problem::{parse_num, DensityProblem, Lines};
use crate::rational::Rational;

pub const DEFAULT_TIMEOUT_SECS: u64 = 3600;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpLayout {
    pub q_sizes: Vec<usize>,
    pub host_count: usize,
    pub multiplier_count: usize,
}

impl SdpLayout {
    pub fn of(problem: &DensityProblem) -> Self {
        SdpLayout {
            q_sizes: problem.bases.iter().map(|b| b.len()).collect(),
            host_count: problem.h_list.len(),
            multiplier_count: problem.constraints.len(),
        }
    }

    pub fn slack_block(&self) -> usize {
        self.q_sizes.len() + 1
    }

    pub fn scalar_block(&self) -> usize {
        self.q_sizes.len() + 2
    }

    pub fn scalar_size(&self) -> usize {
        2 + 2 * self.multiplier_count
    }

    /// Signed SDPA block sizes (negative = diagonal).
    pub fn block_sizes(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self.q_sizes.iter().map(|&n| n as i64).collect();
        out.push(-(self.host_count as i64));
        out.push(-(self.scalar_size() as i64));
        out
    }
}

/// An SDPA sparse problem with `f64` data, as written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub block_sizes: Vec<i64>,
    pub rhs: Vec<f64>,
    /// `(matrix, block, i, j, value)`, 1-based, `i <= j`; matrix 0 is the
    /// objective.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn rational_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl SdpaProblem {
    pub fn from_problem(problem: &DensityProblem) -> Result<Self> {
        if problem.bases.is_empty() {
            return Err(Error::Shape("an SDP needs at least one flag basis".into()));
        }
        let layout = SdpLayout::of(problem);
        let k = layout.scalar_block();
        let s = layout.slack_block();
        let mut entries = vec![(0, k, 1, 1, -1.0), (0, k, 2, 2, 1.0)];
        // constraint coefficients grouped by host
        let mut by_host: Vec<Vec<(usize, f64)>> = vec![Vec::new(); layout.host_count];
        for (j, row) in problem.constraints.iter().enumerate() {
            for (h, a) in &row.entries {
                by_host[*h].push((j, rational_f64(a)));
            }
        }
        for h in 0..layout.host_count {
            let row = h + 1;
            for (bi, t) in problem.tensors.iter().enumerate() {
                for &(a, b, count) in &t.entries[h] {
                    let v = count as f64 / t.denom as f64;
                    entries.push((row, bi + 1, a as usize + 1, b as usize + 1, v));
                }
            }
            entries.push((row, s, row, row, 1.0));
            entries.push((row, k, 1, 1, -1.0));
            entries.push((row, k, 2, 2, 1.0));
            for &(j, v) in &by_host[h] {
                entries.push((row, k, 3 + 2 * j, 3 + 2 * j, v));
                entries.push((row, k, 4 + 2 * j, 4 + 2 * j, -v));
            }
        }
        Ok(SdpaProblem {
            block_sizes: layout.block_sizes(),
            rhs: problem.densities.iter().map(|d| -rational_f64(d)).collect(),
            entries,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.rhs.len());
        let _ = writeln!(out, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(i64::to_string).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let rhs: Vec<String> = self.rhs.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", rhs.join(" "));
        for &(m, b, i, j, v) in &self.entries {
            let _ = writeln!(out, "{m} {b} {i} {j} {}", fmt_f64(v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let m: usize = parse_num(lines.next()?)?;
        let nblocks: usize = parse_num(lines.next()?)?;
        let block_sizes: Vec<i64> = lines
            .next()?
            .split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
            .filter(|t| !t.is_empty())
            .map(parse_num)
            .collect::<Result<_>>()?;
        if block_sizes.len() != nblocks || block_sizes.contains(&0) {
            return Err(Error::Shape(format!("expected {nblocks} non-zero block sizes")));
        }
        let rhs: Vec<f64> = lines
            .next()?
            .split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}')
            .filter(|t| !t.is_empty())
            .map(parse_f64)
            .collect::<Result<_>>()?;
        if rhs.len() != m {
            return Err(Error::Shape(format!("expected {m} right-hand sides, got {}", rhs.len())));
        }
        let mut entries = Vec::new();
        while let Ok(line) = lines.next() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(Error::parse(format!("bad entry `{line}`")));
            }
            let (mat, blk, i, j): (usize, usize, usize, usize) =
                (parse_num(toks[0])?, parse_num(toks[1])?, parse_num(toks[2])?, parse_num(toks[3])?);
            let v = parse_f64(toks[4])?;
            check_entry(&block_sizes, blk, i, j)?;
            if mat > m {
                return Err(Error::Shape(format!("matrix {mat} > {m}")));
            }
            entries.push((mat, blk, i, j, v));
        }
        Ok(SdpaProblem {
            block_sizes,
            rhs,
            entries,
        })
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(format!("not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(format!("non-finite value `{s}`")));
    }
    Ok(v)
}

fn check_entry(sizes: &[i64], blk: usize, i: usize, j: usize) -> Result<()> {
    let size = *sizes
        .get(blk.wrapping_sub(1))
        .ok_or_else(|| Error::Shape(format!("block {blk} out of range")))?;
    let n = size.unsigned_abs() as usize;
    if i == 0 || j == 0 || i > n || j > n || (size < 0 && i != j) {
        return Err(Error::Shape(format!("entry ({i}, {j}) outside block {blk} of size {size}")));
    }
    Ok(())
}

pub fn emit_sdp(problem: &DensityProblem) -> Result<String> {
    Ok(SdpaProblem::from_problem(problem)?.to_text())
}

/// One primal block of a solution.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Dense(Vec<Vec<f64>>),
    Diagonal(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSolution {
    pub dual: Vec<f64>,
    pub primal: Vec<Block>,
    pub objective: f64,
}

impl SolverSolution {
    /// The dense flag-basis matrices `Q_i`.
    pub fn q_matrices(&self, layout: &SdpLayout) -> Vec<Vec<Vec<f64>>> {
        self.primal[..layout.q_sizes.len()]
            .iter()
            .map(|b| match b {
                Block::Dense(m) => m.clone(),
                Block::Diagonal(d) => diag_to_dense(d),
            })
            .collect()
    }

    fn scalars(&self, layout: &SdpLayout) -> &[f64] {
        match &self.primal[layout.scalar_block() - 1] {
            Block::Diagonal(d) => d,
            Block::Dense(_) => &[],
        }
    }

    pub fn bound_variable(&self, layout: &SdpLayout) -> f64 {
        let s = self.scalars(layout);
        s[0] - s[1]
    }

    pub fn multipliers(&self, layout: &SdpLayout) -> Vec<f64> {
        let s = self.scalars(layout);
        (0..layout.multiplier_count)
            .map(|j| s[2 + 2 * j] - s[3 + 2 * j])
            .collect()
    }
}

fn diag_to_dense(d: &[f64]) -> Vec<Vec<f64>> {
    (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
        .collect()
}

/// Parses a solution file: the dual vector on the first line, then
/// `matrix block i j value` lines with matrix 1 the dual slack and 2 the
/// primal. Unlisted entries are zero.
pub fn parse_solution(text: &str, layout: &SdpLayout) -> Result<SolverSolution> {
    let mut lines = Lines::new(text);
    let dual: Vec<f64> = lines
        .next()?
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<_>>()?;
    if dual.len() != layout.host_count {
        return Err(Error::Shape(format!(
            "dual vector has {} entries, expected {}",
            dual.len(),
            layout.host_count
        )));
    }
    let sizes = layout.block_sizes();
    let mut primal: Vec<Block> = sizes
        .iter()
        .map(|&n| {
            let n_abs = n.unsigned_abs() as usize;
            if n > 0 {
                Block::Dense(vec![vec![0.0; n_abs]; n_abs])
            } else {
                Block::Diagonal(vec![0.0; n_abs])
            }
        })
        .collect();
    while let Ok(line) = lines.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::parse(format!("bad solution entry `{line}`")));
        }
        let mat: usize = parse_num(toks[0])?;
        let (blk, i, j): (usize, usize, usize) = (parse_num(toks[1])?, parse_num(toks[2])?, parse_num(toks[3])?);
        let v = parse_f64(toks[4])?;
        check_entry(&sizes, blk, i, j)?;
        match mat {
            1 => {}
            2 => match &mut primal[blk - 1] {
                Block::Dense(m) => {
                    m[i - 1][j - 1] = v;
                    m[j - 1][i - 1] = v;
                }
                Block::Diagonal(d) => d[i - 1] = v,
            },
            _ => return Err(Error::Shape(format!("matrix tag {mat} in a solution"))),
        }
    }
    let mut sol = SolverSolution {
        dual,
        primal,
        objective: 0.0,
    };
    sol.objective = -sol.bound_variable(layout);
    Ok(sol)
}

/// Largest `d(H) + c_H + α_H − t` over the host classes, in floating point.
pub fn max_violation(problem: &DensityProblem, sol: &SolverSolution) -> f64 {
    let layout = SdpLayout::of(problem);
    let q = sol.q_matrices(&layout);
    let mu = sol.multipliers(&layout);
    let t = sol.bound_variable(&layout);
    host_values(problem, &q, &mu)
        .into_iter()
        .map(|v| v - t)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `d(H) + c_H + α_H` for every host class, in floating point.
pub fn host_values(problem: &DensityProblem, q: &[Vec<Vec<f64>>], mu: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = problem.densities.iter().map(rational_f64).collect();
    for (h, v) in vals.iter_mut().enumerate() {
        for (t, qi) in problem.tensors.iter().zip(q) {
            for &(a, b, count) in &t.entries[h] {
                let w = if a == b { 1.0 } else { 2.0 };
                *v += w * count as f64 / t.denom as f64 * qi[a as usize][b as usize];
            }
        }
    }
    for (row, m) in problem.constraints.iter().zip(mu) {
        for (h, a) in &row.entries {
            vals[*h] += m * rational_f64(a);
        }
    }
    vals
}

/// Runs `template` with `{in}` and `{out}` replaced. Arguments are split on
/// whitespace; standard streams go to `<out>.log`. Exit codes 0 and 3
/// (partial success in the CSDP convention) are accepted.
pub fn run_solver(template: &str, input: &Path, output: &Path, timeout: Duration) -> Result<()> {
    if !template.contains("{in}") || !template.contains("{out}") {
        return Err(Error::parse("solver command needs {in} and {out} placeholders"));
    }
    let args: Vec<String> = template
        .split_whitespace()
        .map(|t| {
            t.replace("{in}", &input.to_string_lossy())
                .replace("{out}", &output.to_string_lossy())
        })
        .collect();
    let log_path = PathBuf::from(format!("{}.log", output.display()));
    let log = std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let log_err = log.try_clone().map_err(|e| Error::io(&log_path, e))?;
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(log_err)
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                Error::SolverNotFound(args[0].clone())
            }
            _ => Error::io(&args[0], e),
        })?;
    let start = Instant::now();
    loop {
        match child.try_wait().map_err(|e| Error::io(&args[0], e))? {
            Some(status) => {
                return match status.code() {
                    Some(0) | Some(3) => Ok(()),
                    Some(c) => Err(Error::SolverFailed(c)),
                    None => Err(Error::SolverFailed(-1)),
                };
            }
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = std::fs::remove_file(output);
                return Err(Error::SolverTimeout {
                    secs: timeout.as_secs(),
                });
            }
            None => std::thread::sleep(Duration::from_millis(20)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colour::named_family;
    use crate::flags::{assemble_problem, build_bases};
    use crate::Mode;

    fn small_problem() -> DensityProblem {
        let fam = named_family("B3-").unwrap();
        let bases = build_bases(Mode::Vertex, 3, &fam, &[(0, 1)]).unwrap();
        assemble_problem(Mode::Vertex, 3, &fam, bases).unwrap()
    }

    #[test]
    fn header_shape() {
        let mut p = small_problem();
        p.bases.truncate(1);
        p.tensors.truncate(1);
        let n = p.bases[0].len();
        p.h_list.truncate(3);
        p.densities.truncate(3);
        p.tensors[0].entries.truncate(3);
        let text = emit_sdp(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("3"));
        assert_eq!(lines.next(), Some("3"));
        assert_eq!(lines.next().unwrap(), format!("{n} -3 -2"));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = emit_sdp(&small_problem()).unwrap();
        let again = SdpaProblem::parse(&text).unwrap().to_text();
        assert_eq!(again, text);
        assert_eq!(emit_sdp(&small_problem()).unwrap(), text);
    }

    #[test]
    fn empty_basis_list_rejected() {
        let fam = named_family("B3-").unwrap();
        let p = assemble_problem(Mode::Vertex, 3, &fam, vec![]).unwrap();
        assert!(emit_sdp(&p).is_err());
    }

    #[test]
    fn solution_parsing() {
        let layout = SdpLayout {
            q_sizes: vec![2],
            host_count: 2,
            multiplier_count: 0,
        };
        let text = "0.5 0.25\n2 1 1 2 0.125\n2 1 1 1 1.0\n1 1 1 1 9.0\n2 3 1 1 0.75\n";
        let sol = parse_solution(text, &layout).unwrap();
        assert_eq!(sol.primal[0], Block::Dense(vec![vec![1.0, 0.125], vec![0.125, 0.0]]));
        assert_eq!(sol.primal[1], Block::Diagonal(vec![0.0, 0.0]));
        assert_eq!(sol.bound_variable(&layout), 0.75);
        assert_eq!(sol.objective, -0.75);
        assert!(parse_solution("0.5 0.25\n2 4 1 1 1.0\n", &layout).is_err());
        assert!(parse_solution("0.5 0.25\n2 2 1 2 1.0\n", &layout).is_err());
        assert!(parse_solution("0.5 x\n", &layout).is_err());
        assert!(parse_solution("0.5\n", &layout).is_err());
    }

    #[test]
    fn objective_is_minus_t_at_a_feasible_point() {
        // Q = 0, μ absent, t = max d, slack = t - d
        let p = small_problem();
        let layout = SdpLayout::of(&p);
        let sdpa = SdpaProblem::from_problem(&p).unwrap();
        let d: Vec<f64> = p.densities.iter().map(rational_f64).collect();
        let t = d.iter().cloned().fold(0.0, f64::max);
        let value = |blk: usize, i: usize| -> f64 {
            if blk == layout.slack_block() {
                t - d[i - 1]
            } else if blk == layout.scalar_block() && i == 1 {
                t
            } else {
                0.0
            }
        };
        let mut lhs = vec![0.0; p.h_list.len()];
        let mut obj = 0.0;
        for &(m, b, i, j, v) in &sdpa.entries {
            if i != j {
                continue;
            }
            if m == 0 {
                obj += v * value(b, i);
            } else {
                lhs[m - 1] += v * value(b, i);
            }
        }
        assert_eq!(obj, -t);
        for (l, r) in lhs.iter().zip(&sdpa.rhs) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_solver() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_solver(
            "/nonexistent/solver {in} {out}",
            &dir.path().join("a"),
            &dir.path().join("b"),
            Duration::from_secs(5),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverNotFound(_)));
        assert!(run_solver("true", &dir.path().join("a"), &dir.path().join("b"), Duration::from_secs(5)).is_err());
    }

    #[test]
    fn solver_timeout_and_failure() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("slow.sh");
        std::fs::write(&script, "#!/bin/sh\nsleep 5\n").unwrap();
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let out = dir.path().join("out");
        std::fs::write(&out, "partial").unwrap();
        let template = format!("{} {{in}} {{out}}", script.display());
        let err = run_solver(&template, &dir.path().join("in"), &out, Duration::from_millis(200));
        assert!(matches!(err, Err(Error::SolverTimeout { .. })));
        assert!(!out.exists());
        let err = run_solver("false {in} {out}", &dir.path().join("in"), &out, Duration::from_secs(5));
        assert!(matches!(err, Err(Error::SolverFailed(1))));
        assert!(run_solver("true {in} {out}", &dir.path().join("in"), &out, Duration::from_secs(5)).is_ok());
    }
}
