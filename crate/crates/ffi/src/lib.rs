//! C ABI for `quantprec`.
//!
//! Every function returns a [`QpStatus`]; on failure a message is available
//! from [`qp_last_error`] on the calling thread. Handles are opaque and must
//! be released with the matching `_free` function. Strings returned to the
//! caller are owned by the caller and released with [`qp_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::ptr;

use quantprec::cli::{ExperimentSpec, run_to_artifacts};
use quantprec::mp::ShapingFunction;
use quantprec::simulator::EtaPolicy;
use quantprec::{Error, Quantizer, SystemConfig};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad argument, configuration or spec string.
    InvalidArgument = 3,
    /// Numerical failure (degenerate quantizer, non-finite value, ...).
    Numerical = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Opaque quantizer handle.
pub struct QpQuantizer(Quantizer);

/// Opaque parsed experiment.
pub struct QpExperiment(ExperimentSpec);

/// Optimal design summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QpDesign {
    pub alpha_star: f64,
    pub phi_star: f64,
    pub eta_star: f64,
    pub rho_star: f64,
    pub tau_star: f64,
    pub zeta_star: f64,
}

/// Asymptotic performance of one precoder.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QpAsymptotic {
    pub eta: f64,
    pub alpha_bar: f64,
    pub phi: f64,
    pub sinr: f64,
    pub tx_power: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QpStatus {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidConstellation(_)
        | Error::InvalidQuantizer(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::ZeroVector => QpStatus::InvalidArgument,
        _ => QpStatus::Numerical,
    }
}

enum Fail {
    Status(QpStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QpStatus::Ok,
        Ok(Err(Fail::Status(s, m))) => {
            set_error(m);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            QpStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(QpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a nul-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::Status(QpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: checked non-null; caller guarantees it is writable.
    unsafe { out.write(v) };
    Ok(())
}

fn system(gamma: f64, noise_var: f64) -> Result<SystemConfig, Error> {
    SystemConfig::asymptotic(gamma)?.with_noise_var(noise_var)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn qp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[unsafe(no_mangle)]
pub extern "C" fn qp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `ce:L`, `indep:L:DELTA` or `identity`.
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_quantizer_parse(spec: *const c_char, out: *mut *mut QpQuantizer) -> QpStatus {
    guard(|| {
        let s = unsafe { read_str(spec, "spec") }?;
        let q: Quantizer = s.parse()?;
        unsafe { write_out(out, Box::into_raw(Box::new(QpQuantizer(q))), "out") }
    })
}

/// Releases a quantizer; null is ignored.
///
/// # Safety
/// `q` must come from [`qp_quantizer_parse`] and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_quantizer_free(q: *mut QpQuantizer) {
    if !q.is_null() {
        drop(unsafe { Box::from_raw(q) });
    }
}

/// Number of output levels `L`.
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_quantizer_levels(q: *const QpQuantizer, out: *mut usize) -> QpStatus {
    guard(|| {
        let q = unsafe { q.as_ref() }.ok_or_else(|| null("quantizer"))?;
        unsafe { write_out(out, q.0.levels(), "out") }
    })
}

/// Quantizes one complex sample.
///
/// # Safety
/// `q` must be a live handle; the output pointers must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_quantize(
    q: *const QpQuantizer,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QpStatus {
    guard(|| {
        let q = unsafe { q.as_ref() }.ok_or_else(|| null("quantizer"))?;
        let z = q.0.quantize(quantprec::Complex64::new(re, im));
        unsafe { write_out(out_re, z.re, "out_re") }?;
        unsafe { write_out(out_im, z.im, "out_im") }
    })
}

/// Bussgang moments at input scale `alpha`: `E[conj(Z) q(αZ)]` and
/// `E|q(αZ)|²` for `Z ~ CN(0, 1)`.
///
/// # Safety
/// `q` must be a live handle; the output pointers must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_quantizer_moments(
    q: *const QpQuantizer,
    alpha: f64,
    cross_re: *mut f64,
    cross_im: *mut f64,
    out_power: *mut f64,
) -> QpStatus {
    guard(|| {
        let q = unsafe { q.as_ref() }.ok_or_else(|| null("quantizer"))?;
        let m = quantprec::moments(&q.0, alpha)?;
        unsafe { write_out(cross_re, m.cross.re, "cross_re") }?;
        unsafe { write_out(cross_im, m.cross.im, "cross_im") }?;
        unsafe { write_out(out_power, m.out_power, "out_power") }
    })
}

/// Optimal regularized-ZF design at antenna ratio `gamma`, noise variance
/// `noise_var`, unit symbol variance and power budget.
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_optimal_design(
    q: *const QpQuantizer,
    gamma: f64,
    noise_var: f64,
    out: *mut QpDesign,
) -> QpStatus {
    guard(|| {
        let q = unsafe { q.as_ref() }.ok_or_else(|| null("quantizer"))?;
        let d = quantprec::optimal_design(&system(gamma, noise_var)?, &q.0)?;
        let v = QpDesign {
            alpha_star: d.alpha_star,
            phi_star: d.phi_star,
            eta_star: d.eta_star,
            rho_star: d.rho_star,
            tau_star: d.tau_star,
            zeta_star: d.zeta_star,
        };
        unsafe { write_out(out, v, "out") }
    })
}

/// Asymptotic SINR of `precoder` (`mf`, `zf`, `rzf:RHO`, `srzf:RHO:TAU`).
/// `eta <= 0` selects the power-saturating DAC scale.
///
/// # Safety
/// `q` must be a live handle, `precoder` a nul-terminated string, `out`
/// writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_asymptotic_sinr(
    q: *const QpQuantizer,
    gamma: f64,
    noise_var: f64,
    precoder: *const c_char,
    eta: f64,
    out: *mut QpAsymptotic,
) -> QpStatus {
    guard(|| {
        let q = unsafe { q.as_ref() }.ok_or_else(|| null("quantizer"))?;
        let f: ShapingFunction = unsafe { read_str(precoder, "precoder") }?.parse()?;
        let cfg = system(gamma, noise_var)?;
        let dist = quantprec::MpDistribution::new(gamma)?;
        let policy = if eta > 0.0 { EtaPolicy::Fixed(eta) } else { EtaPolicy::Saturate };
        let eta = policy.resolve(&dist, &cfg, &f, &q.0)?;
        let r = quantprec::asymptotic_sinr(&cfg, &f, &q.0, eta)?;
        let v = QpAsymptotic {
            eta,
            alpha_bar: r.alpha_bar,
            phi: r.phi,
            sinr: r.sinr,
            tx_power: r.tx_power,
        };
        unsafe { write_out(out, v, "out") }
    })
}

/// Parses an experiment in the command-line syntax, e.g.
/// `"sweep --var rho --range 0.02:0.6:30 --gamma 3"`.
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_experiment_parse(spec: *const c_char, out: *mut *mut QpExperiment) -> QpStatus {
    guard(|| {
        let s = unsafe { read_str(spec, "spec") }?;
        let e: ExperimentSpec = s.parse()?;
        unsafe { write_out(out, Box::into_raw(Box::new(QpExperiment(e))), "out") }
    })
}

/// Releases an experiment; null is ignored.
///
/// # Safety
/// `e` must come from [`qp_experiment_parse`] and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_experiment_free(e: *mut QpExperiment) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}

/// Canonical command line of an experiment.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable. Free the result with
/// [`qp_string_free`].
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_experiment_canonical(e: *const QpExperiment, out: *mut *mut c_char) -> QpStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("experiment"))?;
        let s = CString::new(e.0.to_string()).expect("spec strings have no nul bytes");
        unsafe { write_out(out, s.into_raw(), "out") }
    })
}

/// Runs an experiment and returns its CSV (`json == 0`) or JSON artifact.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable. Free the result with
/// [`qp_string_free`].
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_experiment_run(e: *const QpExperiment, json: i32, out: *mut *mut c_char) -> QpStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("experiment"))?;
        let art = run_to_artifacts(&e.0)?;
        let text = if json != 0 { art.json } else { art.csv };
        let s = CString::new(text).expect("artifacts have no nul bytes");
        unsafe { write_out(out, s.into_raw(), "out") }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn qp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
