//! C ABI over `chdisguise`.
//!
//! Every fallible call returns a [`ChdStatus`] and writes its result through
//! an out-pointer. On failure a message is available from
//! [`chd_last_error_message`] on the same thread. Channels and profiles are
//! opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chdisguise::channels::{bit_flip, phase_flip, published_pair, random_channel, xz_flip};
use chdisguise::disguise::{trace_profile, TradeoffPoint};
use chdisguise::io::{channel_from_json, channel_to_json};
use chdisguise::relations::{
    compose_mixing, containment_min_q, diamond_bracket, qkd_rate_bound, triangle_combine,
    ComposeMode,
};
use chdisguise::sdp_exact::solve_channels;
use chdisguise::{Error, KrausChannel, ProfileCurve, SolverMethod, SolverOptions, WarmStart};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Inconclusive = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChdComposeMode {
    Product = 0,
    Sum = 1,
}

/// A `(p, q)` pair of mixing probabilities.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChdPoint {
    pub p: f64,
    pub q: f64,
}

/// One β of a traced profile.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChdSample {
    pub beta: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub tight: bool,
    pub lower: ChdPoint,
    pub upper: ChdPoint,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChdSolverOptions {
    /// 0 for interior point, 1 for bisection.
    pub method: u32,
    pub tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub warm_start: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChdExactResult {
    pub alpha_hat: f64,
    /// Dual certificate below the optimum.
    pub lower_bound: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub point: ChdPoint,
    pub residual: f64,
    pub iterations: usize,
}

/// Opaque quantum channel.
pub struct ChdChannel(KrausChannel);

/// Opaque profile over a β grid.
pub struct ChdProfile(ProfileCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ChdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Validation(_) | Error::Json(_) => ChdStatus::InvalidArgument,
            Error::Numerical { .. } => ChdStatus::Numerical,
            Error::Inconclusive { .. } => ChdStatus::Inconclusive,
            Error::Io(_) => ChdStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> ChdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            ChdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            ChdStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(ChdStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ChdStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn point(pt: ChdPoint) -> TradeoffPoint {
    TradeoffPoint::new(pt.p, pt.q)
}

fn chd_point(pt: TradeoffPoint) -> ChdPoint {
    ChdPoint { p: pt.p, q: pt.q }
}

/// Boxes `value` into `*out`, checking `out` first so nothing leaks.
unsafe fn handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn chd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn chd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn chd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses channel JSON, checking trace preservation to `tp_tol`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_from_json(
    json: *const c_char,
    tp_tol: f64,
    out: *mut *mut ChdChannel,
) -> ChdStatus {
    run(|| {
        let ch = channel_from_json(c_str(json, "json")?, tp_tol)?;
        handle(out, ChdChannel(ch))
    })
}

/// Built-in channel: `bitflip`, `phaseflip` or `xzflip` with probability
/// `param`, or `appendix-b-e` / `appendix-b-f` (`param` ignored).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_fixture(
    name: *const c_char,
    param: f64,
    out: *mut *mut ChdChannel,
) -> ChdStatus {
    run(|| {
        let ch = match c_str(name, "name")? {
            "bitflip" => bit_flip(param)?,
            "phaseflip" => phase_flip(param)?,
            "xzflip" => xz_flip(param)?,
            "appendix-b-e" => published_pair().0,
            "appendix-b-f" => published_pair().1,
            other => {
                return Err(Failure(
                    ChdStatus::InvalidArgument,
                    format!("unknown fixture '{other}'"),
                ));
            }
        };
        handle(out, ChdChannel(ch))
    })
}

/// Seeded random channel with `kraus` operators on dimension `dim`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_random(
    dim: usize,
    kraus: usize,
    seed: u64,
    out: *mut *mut ChdChannel,
) -> ChdStatus {
    run(|| handle(out, ChdChannel(random_channel(dim, kraus, seed)?)))
}

/// Canonical JSON for a channel; free with [`chd_string_free`].
///
/// # Safety
/// `ch` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_to_json(
    ch: *const ChdChannel,
    out: *mut *mut c_char,
) -> ChdStatus {
    run(|| {
        let text = channel_to_json(&deref(ch, "channel")?.0)?;
        let s = CString::new(text).map_err(|e| Failure(ChdStatus::Panic, e.to_string()))?;
        write(out, "out", s.into_raw())
    })
}

/// Dimension of a channel, or 0 for null.
///
/// # Safety
/// `ch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_dim(ch: *const ChdChannel) -> usize {
    ch.as_ref().map_or(0, |c| c.0.dim())
}

/// # Safety
/// `ch` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chd_channel_free(ch: *mut ChdChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Traces the bound curves of `(e, f)` over `count` β values.
///
/// # Safety
/// `e`, `f` must be live handles; `betas` must point to `count` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_trace(
    e: *const ChdChannel,
    f: *const ChdChannel,
    betas: *const f64,
    count: usize,
    out: *mut *mut ChdProfile,
) -> ChdStatus {
    run(|| {
        let (e, f) = (deref(e, "e")?, deref(f, "f")?);
        if betas.is_null() {
            return Err(null("betas"));
        }
        let grid = std::slice::from_raw_parts(betas, count);
        let prof = trace_profile(&e.0, &f.0, grid)?;
        handle(out, ChdProfile(prof))
    })
}

/// Number of β samples, or 0 for null.
///
/// # Safety
/// `prof` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_len(prof: *const ChdProfile) -> usize {
    prof.as_ref().map_or(0, |p| p.0.samples.len())
}

/// # Safety
/// `prof` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_sample(
    prof: *const ChdProfile,
    index: usize,
    out: *mut ChdSample,
) -> ChdStatus {
    run(|| {
        let prof = deref(prof, "profile")?;
        let s = prof.0.samples.get(index).ok_or_else(|| {
            Failure(
                ChdStatus::InvalidArgument,
                format!("sample {index} out of range"),
            )
        })?;
        write(
            out,
            "out",
            ChdSample {
                beta: s.beta,
                alpha_lower: s.alpha_lower,
                alpha_upper: s.alpha_upper,
                tight: s.tight,
                lower: chd_point(s.lower),
                upper: chd_point(s.upper),
            },
        )
    })
}

/// Number of vertices of the convexified upper curve, or 0 for null.
///
/// # Safety
/// `prof` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_hull_len(prof: *const ChdProfile) -> usize {
    prof.as_ref().map_or(0, |p| p.0.upper_hull_points.len())
}

/// # Safety
/// `prof` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_hull_point(
    prof: *const ChdProfile,
    index: usize,
    out: *mut ChdPoint,
) -> ChdStatus {
    run(|| {
        let prof = deref(prof, "profile")?;
        let pt = prof.0.upper_hull_points.get(index).ok_or_else(|| {
            Failure(
                ChdStatus::InvalidArgument,
                format!("hull point {index} out of range"),
            )
        })?;
        write(out, "out", chd_point(*pt))
    })
}

/// Number of cusps detected on the lower curve, or 0 for null.
///
/// # Safety
/// `prof` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_cusp_count(prof: *const ChdProfile) -> usize {
    prof.as_ref().map_or(0, |p| p.0.cusp_count())
}

/// # Safety
/// `prof` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chd_profile_free(prof: *mut ChdProfile) {
    if !prof.is_null() {
        drop(Box::from_raw(prof));
    }
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn chd_solver_options_default() -> ChdSolverOptions {
    let d = SolverOptions::default();
    ChdSolverOptions {
        method: 0,
        tol: d.tol,
        feas_tol: d.feas_tol,
        max_iter: d.max_iter,
        warm_start: true,
    }
}

fn solver_options(o: &ChdSolverOptions) -> Result<SolverOptions, Failure> {
    let method = match o.method {
        0 => SolverMethod::InteriorPoint,
        1 => SolverMethod::Bisection,
        m => {
            return Err(Failure(
                ChdStatus::InvalidArgument,
                format!("unknown solver method {m}"),
            ))
        }
    };
    Ok(SolverOptions {
        method,
        tol: o.tol,
        feas_tol: o.feas_tol,
        max_iter: o.max_iter,
        warm_start: if o.warm_start {
            WarmStart::Auto
        } else {
            WarmStart::None
        },
        ..SolverOptions::default()
    })
}

/// Exact optimum on the β line. `opts` may be null for defaults.
///
/// # Safety
/// `e`, `f` must be live handles; `opts` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chd_exact_solve(
    e: *const ChdChannel,
    f: *const ChdChannel,
    beta: f64,
    opts: *const ChdSolverOptions,
    out: *mut ChdExactResult,
) -> ChdStatus {
    run(|| {
        let (e, f) = (deref(e, "e")?, deref(f, "f")?);
        let opts = match opts.as_ref() {
            Some(o) => solver_options(o)?,
            None => SolverOptions::default(),
        };
        let sol = solve_channels(&e.0, &f.0, beta, &opts)?;
        write(
            out,
            "out",
            ChdExactResult {
                alpha_hat: sol.alpha_hat,
                lower_bound: sol.lower_bound,
                alpha_lower: sol.bounds.lower,
                alpha_upper: sol.bounds.upper,
                point: chd_point(sol.point()),
                residual: sol.residual,
                iterations: sol.iterations,
            },
        )
    })
}

/// Smallest `q` with `E = (1 - q) F + q F_Δ`.
///
/// # Safety
/// `e`, `f` must be live handles; `q_min` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_containment_min_q(
    e: *const ChdChannel,
    f: *const ChdChannel,
    q_min: *mut f64,
) -> ChdStatus {
    run(|| {
        let res = containment_min_q(&deref(e, "e")?.0, &deref(f, "f")?.0)?;
        write(q_min, "q_min", res.q_min)
    })
}

/// Achievable E-G pair from an E-F pair and a G-F pair (G weight first).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_triangle_combine(
    pq_ef: ChdPoint,
    pq_gf: ChdPoint,
    out: *mut ChdPoint,
) -> ChdStatus {
    run(|| {
        write(
            out,
            "out",
            chd_point(triangle_combine(point(pq_ef), point(pq_gf))?),
        )
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_compose_mixing(
    pq1: ChdPoint,
    pq2: ChdPoint,
    mode: ChdComposeMode,
    out: *mut ChdPoint,
) -> ChdStatus {
    run(|| {
        let mode = match mode {
            ChdComposeMode::Product => ComposeMode::Product,
            ChdComposeMode::Sum => ComposeMode::Sum,
        };
        write(
            out,
            "out",
            chd_point(compose_mixing(point(pq1), point(pq2), mode)?),
        )
    })
}

/// Diamond-distance bracket from the equal mixing probability.
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_diamond_bracket(
    p_eq: f64,
    dim: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> ChdStatus {
    run(|| {
        if lower.is_null() || upper.is_null() {
            return Err(null("lower/upper"));
        }
        let b = diamond_bracket(p_eq, dim)?;
        write(lower, "lower", b.lower)?;
        write(upper, "upper", b.upper)
    })
}

/// Key-rate upper bound in bits per signal.
///
/// # Safety
/// `bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chd_qkd_rate_bound(p: f64, dim: usize, bits: *mut f64) -> ChdStatus {
    run(|| write(bits, "bits", qkd_rate_bound(p, dim)?))
}
