//! C ABI over `cubeflag`. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `*_free`; strings returned by the
//! library are released with `cubeflag_string_free`. Every fallible call
//! returns a `CubeflagStatus` and leaves a message for
//! `cubeflag_last_error` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cubeflag::certify::{verify, Verdict};
use cubeflag::colour::{self, named_family};
use cubeflag::constraints::attach_constraints;
use cubeflag::constructions::{build, ConstructionSpec};
use cubeflag::flags::{assemble_problem, build_bases, default_basis_dims, enumerate_h};
use cubeflag::problem::DensityProblem;
use cubeflag::rational::{format_rational, parse_rational};
use cubeflag::{CubeColouring, Error, ForbiddenFamily, Mode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeflagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Shape = 4,
    ModeMismatch = 5,
    Capacity = 6,
    Construction = 7,
    Solver = 8,
    Stale = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeflagMode {
    Vertex = 0,
    Edge = 1,
    Partial = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeflagVerdict {
    Pass = 0,
    Fail = 1,
    Invalid = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeflagConstruction {
    VertexLayered = 0,
    EdgeLayered = 1,
    TwoHalves = 2,
}

/// A coloured cube.
pub struct CubeflagCube(CubeColouring);

/// A forbidden family.
pub struct CubeflagFamily(ForbiddenFamily);

/// An assembled density problem.
pub struct CubeflagProblem(DensityProblem);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CubeflagStatus {
    match e {
        Error::Parse(_) => CubeflagStatus::Parse,
        Error::Shape(_) | Error::Dimension(_) | Error::Index(_) | Error::VertexOutOfRange { .. } => {
            CubeflagStatus::Shape
        }
        Error::ModeMismatch(_) | Error::GreyPattern(_) => CubeflagStatus::ModeMismatch,
        Error::Capacity(_) => CubeflagStatus::Capacity,
        Error::Construction(_) => CubeflagStatus::Construction,
        Error::SolverNotFound(_)
        | Error::SolverTimeout { .. }
        | Error::SolverFailed(_)
        | Error::Factorization(_) => CubeflagStatus::Solver,
        Error::StaleProblem(_) => CubeflagStatus::Stale,
        Error::Io { .. } => CubeflagStatus::Io,
    }
}

enum Fault {
    Status(CubeflagStatus, String),
    Lib(Error),
}

impl From<Error> for Fault {
    fn from(e: Error) -> Self {
        Fault::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fault>) -> CubeflagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CubeflagStatus::Ok,
        Ok(Err(Fault::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fault::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CubeflagStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fault> {
    if p.is_null() {
        return Err(Fault::Status(CubeflagStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fault::Status(CubeflagStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fault> {
    p.as_ref()
        .ok_or_else(|| Fault::Status(CubeflagStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fault> {
    p.as_mut()
        .ok_or_else(|| Fault::Status(CubeflagStatus::NullPointer, format!("{name} is null")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn mode_of(m: CubeflagMode) -> Mode {
    match m {
        CubeflagMode::Vertex => Mode::Vertex,
        CubeflagMode::Edge => Mode::Edge,
        CubeflagMode::Partial => Mode::Partial,
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cubeflag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cubeflag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a cube in text form, e.g. `vertex 3 BBBBBBBR`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_cube_parse(text: *const c_char, out: *mut *mut CubeflagCube) -> CubeflagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cube: CubeColouring = str_arg(text, "text")?.parse()?;
        *out = Box::into_raw(Box::new(CubeflagCube(cube)));
        Ok(())
    })
}

/// # Safety
/// `cube` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_cube_free(cube: *mut CubeflagCube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

/// Text form of a cube; release with `cubeflag_string_free`.
///
/// # Safety
/// `cube` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_cube_to_string(cube: *const CubeflagCube, out: *mut *mut c_char) -> CubeflagStatus {
    guard(|| {
        let cube = ref_arg(cube, "cube")?;
        *out_arg(out, "out")? = owned_string(cube.0.to_string());
        Ok(())
    })
}

/// Exact blue density as `p/q`; release with `cubeflag_string_free`.
///
/// # Safety
/// `cube` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_cube_density(cube: *const CubeflagCube, out: *mut *mut c_char) -> CubeflagStatus {
    guard(|| {
        let cube = ref_arg(cube, "cube")?;
        let d = colour::density(&cube.0)?;
        *out_arg(out, "out")? = owned_string(format_rational(&d));
        Ok(())
    })
}

/// Parses a family: one cube per line, `#` comments allowed.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_family_parse(
    text: *const c_char,
    out: *mut *mut CubeflagFamily,
) -> CubeflagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let fam = ForbiddenFamily::parse(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(CubeflagFamily(fam)));
        Ok(())
    })
}

/// A built-in family: `B`, `B1B2`, `B3`, `B3-`, `B4B5` or `empty`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_family_named(
    name: *const c_char,
    out: *mut *mut CubeflagFamily,
) -> CubeflagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let fam = named_family(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(CubeflagFamily(fam)));
        Ok(())
    })
}

/// # Safety
/// `fam` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_family_free(fam: *mut CubeflagFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Whether `cube` contains no member of `fam` as a subcube.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_is_free(
    cube: *const CubeflagCube,
    fam: *const CubeflagFamily,
    out: *mut bool,
) -> CubeflagStatus {
    guard(|| {
        let (cube, fam) = (ref_arg(cube, "cube")?, ref_arg(fam, "fam")?);
        *out_arg(out, "out")? = colour::is_f_free(&cube.0, &fam.0)?;
        Ok(())
    })
}

/// Number of `fam`-free cubes of dimension `dim` up to isomorphism.
///
/// # Safety
/// `fam` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_enumerate_count(
    mode: CubeflagMode,
    dim: usize,
    fam: *const CubeflagFamily,
    out: *mut u64,
) -> CubeflagStatus {
    guard(|| {
        let fam = ref_arg(fam, "fam")?;
        *out_arg(out, "out")? = enumerate_h(mode_of(mode), dim, &fam.0)?.len() as u64;
        Ok(())
    })
}

/// Builds one of the layered or two-halves constructions. `period` and
/// `residue` apply to the layered kinds; `residue`, `residue2` and `split`
/// to two-halves.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_construct(
    kind: CubeflagConstruction,
    n: usize,
    period: u32,
    residue: u32,
    residue2: u32,
    split: usize,
    out: *mut *mut CubeflagCube,
) -> CubeflagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = match kind {
            CubeflagConstruction::VertexLayered => ConstructionSpec::VertexLayered { n, period, residue },
            CubeflagConstruction::EdgeLayered => ConstructionSpec::EdgeLayered { n, period, residue },
            CubeflagConstruction::TwoHalves => ConstructionSpec::two_halves(n, split, residue, residue2),
        };
        *out = Box::into_raw(Box::new(CubeflagCube(build(&spec)?)));
        Ok(())
    })
}

/// Assembles a problem with the default bases, optionally with the swap
/// constraint rows (partial mode only).
///
/// # Safety
/// `fam` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_problem_assemble(
    mode: CubeflagMode,
    l: usize,
    fam: *const CubeflagFamily,
    with_constraints: bool,
    out: *mut *mut CubeflagProblem,
) -> CubeflagStatus {
    guard(|| {
        let fam = ref_arg(fam, "fam")?;
        let out = out_arg(out, "out")?;
        let mode = mode_of(mode);
        let bases = build_bases(mode, l, &fam.0, &default_basis_dims(mode, l))?;
        let mut problem = assemble_problem(mode, l, &fam.0, bases)?;
        if with_constraints {
            attach_constraints(&mut problem)?;
        }
        *out = Box::into_raw(Box::new(CubeflagProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_problem_free(problem: *mut CubeflagProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of host classes of a problem.
///
/// # Safety
/// `problem` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_problem_host_count(
    problem: *const CubeflagProblem,
    out: *mut usize,
) -> CubeflagStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(problem, "problem")?.0.h_list.len();
        Ok(())
    })
}

/// Problem file text; release with `cubeflag_string_free`.
///
/// # Safety
/// `problem` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_problem_to_string(
    problem: *const CubeflagProblem,
    out: *mut *mut c_char,
) -> CubeflagStatus {
    guard(|| {
        let p = ref_arg(problem, "problem")?;
        *out_arg(out, "out")? = owned_string(p.0.to_text());
        Ok(())
    })
}

/// Verifies a certificate against a problem file and a target bound, all
/// given as text. On `Ok`, `verdict` holds the outcome and `bound` (if not
/// null) receives the recomputed bound as `p/q`, or null when none was
/// computed; release it with `cubeflag_string_free`.
///
/// # Safety
/// Strings must be NUL-terminated; `verdict` must be writable; `bound` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn cubeflag_verify(
    problem_text: *const c_char,
    cert_text: *const c_char,
    target: *const c_char,
    verdict: *mut CubeflagVerdict,
    bound: *mut *mut c_char,
) -> CubeflagStatus {
    guard(|| {
        let problem_text = str_arg(problem_text, "problem_text")?;
        let cert_text = str_arg(cert_text, "cert_text")?;
        let target = parse_rational(str_arg(target, "target")?)?;
        let verdict = out_arg(verdict, "verdict")?;
        let report = verify(problem_text, cert_text, &target);
        *verdict = match report.verdict {
            Verdict::Pass => CubeflagVerdict::Pass,
            Verdict::Fail => CubeflagVerdict::Fail,
            Verdict::Invalid => CubeflagVerdict::Invalid,
        };
        if let Some(slot) = bound.as_mut() {
            *slot = report.bound.as_ref().map_or(ptr::null_mut(), |b| owned_string(format_rational(b)));
        }
        if report.verdict != Verdict::Pass {
            set_error(report.reason.clone());
        }
        Ok(())
    })
}
