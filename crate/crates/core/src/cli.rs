//! Command-line front end. Every subcommand writes a JSON run manifest into
//! `--workdir` recording its parameters and the SHA-256 of each file it read
//! or wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::certify::{self, verify_files, DEFAULT_ROUND_K};
use crate::colour::{named_family, CubeColouring, ForbiddenFamily, Mode};
use crate::constraints::{attach_constraints, constraint_vectors};
use crate::constructions::{build, evaluate, ConstructionSpec};
use crate::error::{Error, Result};
use crate::flags::{assemble_problem, build_bases, default_basis_dims, enumerate_h};
use crate::problem::{h_list_text, DensityProblem};
use crate::rational::{format_rational, parse_rational, to_decimal_string};
use crate::sdp::{self, SdpLayout, DEFAULT_TIMEOUT_SECS};

pub const DEFAULT_SOLVER_CMD: &str = "python3 tools/sdpa_solve.py {in} {out}";

#[derive(Parser, Debug)]
#[command(name = "cubeflag", version, about = "Certified Turán density bounds for coloured hypercubes")]
pub struct Cli {
    /// Worker threads for enumeration and coefficient computation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for run manifests and intermediate files.
    #[arg(long, global = true, default_value = "cubeflag-run")]
    pub workdir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Cube dimension `l` of the host classes.
    #[arg(long)]
    pub dim: usize,
    /// Family file, or one of B, B1B2, B3, B3-, B4B5, empty.
    #[arg(long)]
    pub forbid: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the F-free cubes of one dimension up to isomorphism.
    Enumerate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the flag bases of a problem.
    Flags {
        #[command(flatten)]
        family: FamilyArgs,
        /// Comma-separated `s:m` pairs; defaults per mode.
        #[arg(long)]
        bases: Option<String>,
    },
    /// Build a density problem file.
    Assemble {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        bases: Option<String>,
        /// Attach swap constraint rows (partial mode).
        #[arg(long)]
        constraints: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the swap constraint rows of a partial problem.
    Constraints {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        forbid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the SDPA sparse file of a problem.
    Sdp {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve, round, certify and verify a problem.
    Bound {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = DEFAULT_ROUND_K)]
        round_k: u32,
        #[arg(long)]
        out_cert: PathBuf,
    },
    /// Verify a certificate against a problem and a target.
    Certify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        target: String,
    },
    /// Build a lower-bound construction and test it.
    Construct {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        /// Layer period (layered kinds).
        #[arg(long, default_value_t = 3)]
        k: u32,
        /// Residue (first half for two-halves).
        #[arg(long, default_value_t = 0)]
        z: u32,
        #[arg(long, default_value_t = 0)]
        z2: u32,
        #[arg(long, default_value_t = 0)]
        split: usize,
        #[arg(long)]
        forbid: String,
        /// Print the cube itself.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Solver command with `{in}` and `{out}` placeholders.
    #[arg(long, default_value = DEFAULT_SOLVER_CMD)]
    pub solver_cmd: String,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    pub timeout_secs: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    Vertex,
    Edge,
    Partial,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Vertex => Mode::Vertex,
            ModeArg::Edge => Mode::Edge,
            ModeArg::Partial => Mode::Partial,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum KindArg {
    VertexLayered,
    EdgeLayered,
    TwoHalves,
}

#[derive(Serialize, Debug)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings_ms: BTreeMap<String, u128>,
    pub tool_version: String,
}

impl RunManifest {
    fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest_file(path)?);
        Ok(())
    }

    fn time(&mut self, stage: &str, start: Instant) {
        self.timings_ms.insert(stage.into(), start.elapsed().as_millis());
    }

    fn write(&self, workdir: &Path) -> Result<PathBuf> {
        let path = workdir.join(format!("{}.manifest.json", self.subcommand));
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::parse(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Reads a family file, falling back to the built-in names.
pub fn load_family(spec: &str, manifest: &mut RunManifest) -> Result<ForbiddenFamily> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        manifest.input(path)?;
        return ForbiddenFamily::parse(&text);
    }
    named_family(spec).map_err(|_| Error::io(path, std::io::ErrorKind::NotFound.into()))
}

/// Parses `0:1,1:2` into `(s, m)` pairs.
pub fn parse_bases(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|pair| {
            let (s, m) = pair
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("basis `{pair}` is not `s:m`")))?;
            let num = |t: &str| t.trim().parse().map_err(|_| Error::parse(format!("bad basis `{pair}`")));
            Ok((num(s)?, num(m)?))
        })
        .collect()
}

fn basis_dims(mode: Mode, l: usize, bases: &Option<String>) -> Result<Vec<(usize, usize)>> {
    match bases {
        Some(t) => parse_bases(t),
        None => Ok(default_basis_dims(mode, l)),
    }
}

fn dims_text(dims: &[(usize, usize)]) -> String {
    dims.iter().map(|(s, m)| format!("{s}:{m}")).collect::<Vec<_>>().join(",")
}

/// Exit status of an error: solver and stale-input failures are FAIL (1),
/// everything else is an input error (2).
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::SolverNotFound(_)
        | Error::SolverTimeout { .. }
        | Error::SolverFailed(_)
        | Error::Factorization(_)
        | Error::StaleProblem(_) => 1,
        _ => 2,
    }
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    std::fs::create_dir_all(&cli.workdir).map_err(|e| Error::io(&cli.workdir, e))?;
    let start = Instant::now();
    let (mut manifest, code) = match cli.command {
        Command::Enumerate { family, out } => cmd_enumerate(&family, out.as_deref())?,
        Command::Flags { family, bases } => cmd_flags(&family, &bases)?,
        Command::Assemble {
            family,
            bases,
            constraints,
            out,
        } => cmd_assemble(&family, &bases, constraints, &out)?,
        Command::Constraints { dim, forbid, out } => cmd_constraints(dim, &forbid, out.as_deref())?,
        Command::Sdp { problem, out } => cmd_sdp(&problem, &out)?,
        Command::Bound {
            problem,
            solver,
            target,
            round_k,
            out_cert,
        } => cmd_bound(&problem, &solver, &target, round_k, &out_cert, &cli.workdir)?,
        Command::Certify { problem, cert, target } => cmd_certify(&problem, &cert, &target)?,
        Command::Construct {
            kind,
            n,
            k,
            z,
            z2,
            split,
            forbid,
            dump,
        } => cmd_construct(kind, n, k, z, z2, split, &forbid, dump)?,
    };
    manifest.time("total", start);
    if let Some(n) = cli.threads {
        manifest.param("threads", n);
    }
    manifest.write(&cli.workdir)?;
    Ok(code)
}

fn family_params(m: &mut RunManifest, f: &FamilyArgs) {
    m.param("mode", Mode::from(f.mode));
    m.param("dim", f.dim);
    m.param("forbid", &f.forbid);
}

fn cmd_enumerate(f: &FamilyArgs, out: Option<&Path>) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("enumerate");
    family_params(&mut m, f);
    let fam = load_family(&f.forbid, &mut m)?;
    let mode = Mode::from(f.mode);
    let h = enumerate_h(mode, f.dim, &fam)?;
    println!("{}", h.len());
    if let Some(path) = out {
        std::fs::write(path, h_list_text(mode, f.dim, &fam, &h)).map_err(|e| Error::io(path, e))?;
        m.output(path)?;
    }
    Ok((m, 0))
}

fn cmd_flags(f: &FamilyArgs, bases: &Option<String>) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("flags");
    family_params(&mut m, f);
    let fam = load_family(&f.forbid, &mut m)?;
    let mode = Mode::from(f.mode);
    let dims = basis_dims(mode, f.dim, bases)?;
    m.param("bases", dims_text(&dims));
    for b in build_bases(mode, f.dim, &fam, &dims)? {
        println!("type {} m {} flags {}", b.sigma, b.m, b.len());
    }
    Ok((m, 0))
}

fn cmd_assemble(f: &FamilyArgs, bases: &Option<String>, constraints: bool, out: &Path) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("assemble");
    family_params(&mut m, f);
    m.param("constraints", constraints);
    let fam = load_family(&f.forbid, &mut m)?;
    let mode = Mode::from(f.mode);
    let dims = basis_dims(mode, f.dim, bases)?;
    m.param("bases", dims_text(&dims));
    let mut problem = assemble_problem(mode, f.dim, &fam, build_bases(mode, f.dim, &fam, &dims)?)?;
    if constraints {
        attach_constraints(&mut problem)?;
    }
    problem.write(out)?;
    m.output(out)?;
    let sizes: Vec<String> = problem.bases.iter().map(|b| b.len().to_string()).collect();
    println!(
        "hosts {} bases {} [{}] constraints {}",
        problem.h_list.len(),
        problem.bases.len(),
        sizes.join(" "),
        problem.constraints.len()
    );
    Ok((m, 0))
}

fn cmd_constraints(dim: usize, forbid: &str, out: Option<&Path>) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("constraints");
    m.param("dim", dim);
    m.param("forbid", forbid);
    let fam = load_family(forbid, &mut m)?;
    let h = enumerate_h(Mode::Partial, dim, &fam)?;
    let rows = constraint_vectors(dim, &fam, &h)?;
    println!("{}", rows.len());
    if let Some(path) = out {
        let mut text = h_list_text(Mode::Partial, dim, &fam, &h);
        text.push_str(&format!("constraints {}\n", rows.len()));
        for r in &rows {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        m.output(path)?;
    }
    Ok((m, 0))
}

fn cmd_sdp(problem: &Path, out: &Path) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("sdp");
    let p = DensityProblem::read(problem)?;
    m.input(problem)?;
    std::fs::write(out, sdp::emit_sdp(&p)?).map_err(|e| Error::io(out, e))?;
    m.output(out)?;
    let layout = SdpLayout::of(&p);
    println!("constraints {} blocks {}", layout.host_count, layout.block_sizes().len());
    Ok((m, 0))
}

fn cmd_bound(
    problem: &Path,
    solver: &SolverArgs,
    target: &str,
    round_k: u32,
    out_cert: &Path,
    workdir: &Path,
) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("bound");
    m.param("solver_cmd", &solver.solver_cmd);
    m.param("timeout_secs", solver.timeout_secs);
    m.param("target", target);
    m.param("round_k", round_k);
    let target = parse_rational(target)?;
    let p = DensityProblem::read(problem)?;
    m.input(problem)?;

    let stage = Instant::now();
    let stem = problem.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    let sdpa = workdir.join(format!("{stem}.dat-s"));
    let solution = workdir.join(format!("{stem}.sol"));
    std::fs::write(&sdpa, sdp::emit_sdp(&p)?).map_err(|e| Error::io(&sdpa, e))?;
    m.output(&sdpa)?;
    sdp::run_solver(
        &solver.solver_cmd,
        &sdpa,
        &solution,
        Duration::from_secs(solver.timeout_secs),
    )?;
    m.time("solve", stage);
    let text = std::fs::read_to_string(&solution).map_err(|e| Error::io(&solution, e))?;
    m.output(&solution)?;
    let sol = sdp::parse_solution(&text, &SdpLayout::of(&p))?;
    println!("solver objective {:.8}", sol.objective);

    let stage = Instant::now();
    let cert = certify::certificate_from_solution(&p, &sol, round_k)?;
    cert.write(out_cert)?;
    m.output(out_cert)?;
    m.time("round", stage);

    let stage = Instant::now();
    let report = verify_files(problem, out_cert, &target);
    m.time("verify", stage);
    print!("{report}");
    if let Some(b) = &report.bound {
        m.param("certified_bound", format_rational(b));
    }
    m.param("verdict", format!("{:?}", report.verdict));
    Ok((m, report.verdict.exit_code()))
}

fn cmd_certify(problem: &Path, cert: &Path, target: &str) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("certify");
    m.param("target", target);
    let target = parse_rational(target)?;
    let report = verify_files(problem, cert, &target);
    for path in [problem, cert] {
        if path.is_file() {
            m.input(path)?;
        }
    }
    print!("{report}");
    m.param("verdict", format!("{:?}", report.verdict));
    if let Some(b) = &report.bound {
        m.param("certified_bound", format_rational(b));
    }
    Ok((m, report.verdict.exit_code()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    kind: KindArg,
    n: usize,
    k: u32,
    z: u32,
    z2: u32,
    split: usize,
    forbid: &str,
    dump: bool,
) -> Result<(RunManifest, i32)> {
    let mut m = RunManifest::new("construct");
    m.param("kind", format!("{kind:?}"));
    m.param("n", n);
    m.param("forbid", forbid);
    let spec = match kind {
        KindArg::VertexLayered => ConstructionSpec::VertexLayered { n, period: k, residue: z },
        KindArg::EdgeLayered => ConstructionSpec::EdgeLayered { n, period: k, residue: z },
        KindArg::TwoHalves => ConstructionSpec::two_halves(n, split, z, z2),
    };
    match kind {
        KindArg::TwoHalves => {
            m.param("z", z);
            m.param("z2", z2);
            m.param("split", split);
        }
        _ => {
            m.param("k", k);
            m.param("z", z);
        }
    }
    let fam = load_family(forbid, &mut m)?;
    let cube: CubeColouring = build(&spec)?;
    let (density, free) = evaluate(&cube, &fam)?;
    let total = cube.word().len();
    let blue = density.clone() * crate::rational::from_int(total as i64);
    println!("{}/{total} f-free={free}", blue.to_integer());
    println!("density {} (~{})", format_rational(&density), to_decimal_string(&density, 6));
    if dump {
        println!("{cube}");
    }
    m.param("density", format_rational(&density));
    m.param("f_free", free);
    Ok((m, 0))
}
