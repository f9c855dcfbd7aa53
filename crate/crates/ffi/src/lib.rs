//! C interface.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! [`AcfidStatus`]; on failure the message is available from
//! [`acfid_last_error`] on the same thread until the next failing call.
//! Strings returned through `char **` are freed with [`acfid_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acfid::fidelity::{self, DetectConfig, Detection, FidelitySweep, SweepConfig, ThresholdRule};
use acfid::hamiltonian::{self, ParametricHamiltonianSpec};
use acfid::matrix::HermitianMatrix;
use acfid::rmt::{sample_goe, GoeSampleConfig};
use acfid::{stats, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcfidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    ResourceCap = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

/// A parametric family H(lambda).
pub struct AcfidSpec(ParametricHamiltonianSpec);

/// S, f and level tracks on a lambda grid.
pub struct AcfidSweep(FidelitySweep);

/// Detected avoided crossings.
pub struct AcfidDetection(Detection);

/// One avoided crossing.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfidEvent {
    pub level_lo: usize,
    pub level_hi: usize,
    pub lambda_star: f64,
    pub s_max: f64,
    pub c_est: f64,
    pub gap: f64,
    /// 1 when both levels of the pair showed the peak.
    pub paired: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AcfidStatus {
    match e {
        Error::ResourceCap { .. } => AcfidStatus::ResourceCap,
        Error::Parse(_) => AcfidStatus::Parse,
        Error::Io(_) => AcfidStatus::Io,
        e if e.is_numerical() => AcfidStatus::Numerical,
        Error::Statistics(_) | Error::AtomAtZero => AcfidStatus::Numerical,
        _ => AcfidStatus::InvalidArgument,
    }
}

/// Run `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), AcfidStatus>) -> AcfidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcfidStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            AcfidStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, AcfidStatus>;
}

impl<T> OrStatus<T> for acfid::Result<T> {
    fn or_status(self) -> Result<T, AcfidStatus> {
        self.map_err(|e| {
            set_error(&e.to_string());
            status_of(&e)
        })
    }
}

fn null(what: &str) -> AcfidStatus {
    set_error(&format!("null pointer: {what}"));
    AcfidStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, AcfidStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), AcfidStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), AcfidStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s).expect("json has no nul").into_raw();
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn acfid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn acfid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn acfid_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_two_level(g: f64, out: *mut *mut AcfidSpec) -> AcfidStatus {
    guard(|| put(out, AcfidSpec(hamiltonian::build_two_level(g).or_status()?)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_triple(a: f64, b: f64, c: f64, out: *mut *mut AcfidSpec) -> AcfidStatus {
    guard(|| put(out, AcfidSpec(hamiltonian::build_triple(a, b, c).or_status()?)))
}

/// cos(l) H1 + sin(l) H2 with H1, H2 drawn from the GOE with the given seeds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_goe_interp(
    dim: usize,
    seed1: u64,
    seed2: u64,
    out: *mut *mut AcfidSpec,
) -> AcfidStatus {
    guard(|| {
        let h1 = sample_goe(&GoeSampleConfig::new(dim, seed1)).or_status()?;
        let h2 = sample_goe(&GoeSampleConfig::new(dim, seed2)).or_status()?;
        put(out, AcfidSpec(hamiltonian::build_goe_interp(h1, h2).or_status()?))
    })
}

/// H1 + lambda H2 from two real symmetric row-major dim x dim arrays.
///
/// # Safety
/// `h1` and `h2` must point to dim*dim doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_linear_pair(
    dim: usize,
    h1: *const f64,
    h2: *const f64,
    out: *mut *mut AcfidSpec,
) -> AcfidStatus {
    guard(|| {
        if h1.is_null() || h2.is_null() {
            return Err(null("matrix"));
        }
        let n = dim.checked_mul(dim).ok_or_else(|| {
            set_error("dimension overflow");
            AcfidStatus::InvalidArgument
        })?;
        let a = HermitianMatrix::from_real_rows(dim, std::slice::from_raw_parts(h1, n)).or_status()?;
        let b = HermitianMatrix::from_real_rows(dim, std::slice::from_raw_parts(h2, n)).or_status()?;
        put(out, AcfidSpec(hamiltonian::build_linear_pair(a, b).or_status()?))
    })
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_from_json(json: *const c_char, out: *mut *mut AcfidSpec) -> AcfidStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| {
            set_error("json is not UTF-8");
            AcfidStatus::Parse
        })?;
        put(out, AcfidSpec(ParametricHamiltonianSpec::from_json(text).or_status()?))
    })
}

/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_to_json(spec: *const AcfidSpec, out: *mut *mut c_char) -> AcfidStatus {
    guard(|| put_string(out, deref(spec, "spec")?.0.to_json()))
}

/// Matrix dimension, 0 for a null handle.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_dim(spec: *const AcfidSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `spec` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn acfid_spec_free(spec: *mut AcfidSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// S_n = (1 - f_n)/dl^2 between lambda and lambda + dl.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_fidelity_change(
    spec: *const AcfidSpec,
    lambda: f64,
    dl: f64,
    level: usize,
    out: *mut f64,
) -> AcfidStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = fidelity::fidelity_change(&spec.0, lambda, dl, level).or_status()?.s;
        Ok(())
    })
}

/// Sweep `points` values over [lo, hi]. `delta_lambda <= 0` picks the
/// default probe step.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep(
    spec: *const AcfidSpec,
    lo: f64,
    hi: f64,
    points: usize,
    delta_lambda: f64,
    out: *mut *mut AcfidSweep,
) -> AcfidStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        let mut cfg = SweepConfig::new(lo, hi, points);
        cfg.delta_lambda = (delta_lambda > 0.0).then_some(delta_lambda);
        put(out, AcfidSweep(fidelity::sweep(&spec.0, &cfg).or_status()?))
    })
}

/// # Safety
/// `sweep` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep_points(sweep: *const AcfidSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.points())
}

/// # Safety
/// `sweep` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep_levels(sweep: *const AcfidSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.levels())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), AcfidStatus> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        set_error(&format!("buffer holds {len} values, need {}", src.len()));
        return Err(AcfidStatus::InvalidArgument);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copy the lambda grid into `buf` (at least `acfid_sweep_points` values).
///
/// # Safety
/// `sweep` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep_lambda(sweep: *const AcfidSweep, buf: *mut f64, len: usize) -> AcfidStatus {
    guard(|| copy_out(&deref(sweep, "sweep")?.0.lambda_grid, buf, len))
}

/// Copy S of one tracked row into `buf`.
///
/// # Safety
/// `sweep` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep_s_row(
    sweep: *const AcfidSweep,
    row: usize,
    buf: *mut f64,
    len: usize,
) -> AcfidStatus {
    guard(|| {
        let sw = &deref(sweep, "sweep")?.0;
        let s = sw.s.get(row).ok_or_else(|| {
            set_error(&format!("row {row} out of range (levels {})", sw.levels()));
            AcfidStatus::InvalidArgument
        })?;
        copy_out(s, buf, len)
    })
}

/// # Safety
/// `sweep` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn acfid_sweep_free(sweep: *mut AcfidSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Detect, refine and pair peaks. `threshold <= 0` selects the automatic
/// rule.
///
/// # Safety
/// `spec` and `sweep` must be live handles from the same family; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_detect(
    spec: *const AcfidSpec,
    sweep: *const AcfidSweep,
    threshold: f64,
    out: *mut *mut AcfidDetection,
) -> AcfidStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        let sw = deref(sweep, "sweep")?;
        if sw.0.spec_id != spec.0.spec_id() {
            set_error("sweep was computed for a different family");
            return Err(AcfidStatus::InvalidArgument);
        }
        let rule = if threshold > 0.0 { ThresholdRule::Fixed(threshold) } else { ThresholdRule::Auto };
        let det = fidelity::detect_events(&spec.0, &sw.0, &DetectConfig { threshold: rule, ..Default::default() })
            .or_status()?;
        put(out, AcfidDetection(det))
    })
}

/// # Safety
/// `det` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn acfid_detection_len(det: *const AcfidDetection) -> usize {
    det.as_ref().map_or(0, |d| d.0.events.len())
}

/// # Safety
/// `det` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_detection_event(
    det: *const AcfidDetection,
    index: usize,
    out: *mut AcfidEvent,
) -> AcfidStatus {
    guard(|| {
        let d = deref(det, "detection")?;
        let e = d.0.events.get(index).ok_or_else(|| {
            set_error(&format!("event {index} out of range ({} events)", d.0.events.len()));
            AcfidStatus::InvalidArgument
        })?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = AcfidEvent {
            level_lo: e.level_pair.0,
            level_hi: e.level_pair.1,
            lambda_star: e.lambda_star,
            s_max: e.s_max,
            c_est: e.c_est,
            gap: e.gap,
            paired: e.paired as c_int,
        };
        Ok(())
    })
}

/// Events as a JSON array.
///
/// # Safety
/// `det` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_detection_to_json(det: *const AcfidDetection, out: *mut *mut c_char) -> AcfidStatus {
    guard(|| put_string(out, fidelity::io::events_json(&deref(det, "detection")?.0.events)))
}

/// # Safety
/// `det` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn acfid_detection_free(det: *mut AcfidDetection) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}

/// CDF of unit-mean GOE widths, erf(c/sqrt(pi)); NaN for invalid input.
#[no_mangle]
pub extern "C" fn acfid_goe_width_cdf(c: f64) -> f64 {
    stats::goe_width_cdf(c).unwrap_or(f64::NAN)
}

/// Normalize `widths` to unit mean and fit the chaotic weight gamma.
///
/// # Safety
/// `widths` must hold `n` doubles; `gamma` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acfid_fit_gamma(widths: *const f64, n: usize, gamma: *mut f64) -> AcfidStatus {
    guard(|| {
        if widths.is_null() || gamma.is_null() {
            return Err(null("widths or gamma"));
        }
        let (norm, _) = stats::normalize_unit_mean(std::slice::from_raw_parts(widths, n)).or_status()?;
        *gamma = stats::fit_gamma(&norm).or_status()?.gamma;
        Ok(())
    })
}
