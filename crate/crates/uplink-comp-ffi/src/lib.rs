//! C interface to the rate computations.
//!
//! A scenario is an opaque handle created by `uc_scenario_new` or
//! `uc_scenario_from_matrix` and released with `uc_scenario_free`. Every
//! call returns a `UcStatus`; on failure `uc_last_error` holds a message for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use uplink_comp::allocation::PowerAllocation;
use uplink_comp::baselines::{mac_sum_rate, no_coop_best};
use uplink_comp::channel::{
    build_scenario_channel, effective_channel, estimation_error_variance, ChannelMatrix, CsiConfig, EffectiveChannel, Scenario2x2,
};
use uplink_comp::linalg::{c, CMatrix};
use uplink_comp::schemes::{scheme_best, Quantizer, Scheme, SchemeConfig, SearchOptions};
use uplink_comp::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcScheme {
    NoCoop = 0,
    Mac = 1,
    Dis = 2,
    Cif = 3,
    DasD = 4,
    DasC = 5,
    Fdm = 6,
    DasN = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UcQuantizer {
    Practical = 0,
    RateDistortion = 1,
    SourceCoded = 2,
}

/// Two-cell geometry and channel knowledge. `n_pilots = 0` means perfect CSI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcScenarioParams {
    pub d1: f64,
    pub d2: f64,
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi12: f64,
    pub sigma2: f64,
    pub n_pilots: u32,
    pub pilot_power: f64,
    pub pilot_noise: f64,
}

/// Opaque scenario handle.
pub struct UcScenario {
    ec: EffectiveChannel,
    sigma2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UcStatus {
    match e {
        Error::InvalidConfig(_) | Error::DimensionMismatch(_) => UcStatus::InvalidArgument,
        Error::Unsupported(_) => UcStatus::Unsupported,
        _ => UcStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), UcStatus>) -> UcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            UcStatus::Panic
        }
    }
}

fn lib<T>(r: uplink_comp::Result<T>) -> Result<T, UcStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null() -> UcStatus {
    set_error("null pointer argument");
    UcStatus::NullPointer
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn uc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes at `buf`
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Cell-edge defaults: d = 0.5, θ = 3.5, all phases π/2, σ² = 0.1, perfect CSI.
#[no_mangle]
pub extern "C" fn uc_scenario_params_default() -> UcScenarioParams {
    let s = Scenario2x2::default();
    UcScenarioParams {
        d1: s.d1,
        d2: s.d2,
        theta: s.theta,
        phi1: s.phi1,
        phi2: s.phi2,
        phi12: s.phi12,
        sigma2: s.sigma2,
        n_pilots: 0,
        pilot_power: 1.0,
        pilot_noise: s.sigma2,
    }
}

fn store(out: *mut *mut UcScenario, s: UcScenario) {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(s)) };
}

/// Builds the two-cell channel with two antennas per base station.
///
/// # Safety
/// `params` and `out` must be valid pointers; `*out` receives a handle to
/// release with `uc_scenario_free`.
#[no_mangle]
pub unsafe extern "C" fn uc_scenario_new(params: *const UcScenarioParams, out: *mut *mut UcScenario) -> UcStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null; caller guarantees validity
        let p = unsafe { *params };
        let geo = Scenario2x2 { d1: p.d1, d2: p.d2, theta: p.theta, phi1: p.phi1, phi2: p.phi2, phi12: p.phi12, sigma2: p.sigma2 };
        let csi = if p.n_pilots == 0 { CsiConfig::perfect() } else { CsiConfig::pilots(p.n_pilots, p.pilot_power, p.pilot_noise) };
        let ch = lib(build_scenario_channel(&geo, 2))?;
        let ec = lib(estimation_error_variance(&csi).and_then(|se2| effective_channel(&ch, se2)))?;
        store(out, UcScenario { ec, sigma2: p.sigma2 });
        Ok(())
    })
}

/// Explicit channel from row-major real and imaginary parts (`im` may be
/// null for a real channel). Rows are antennas, grouped by base station.
///
/// # Safety
/// `re` (and `im` unless null) must hold `rows * cols` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uc_scenario_from_matrix(
    re: *const f64,
    im: *const f64,
    rows: usize,
    cols: usize,
    n_bs_antennas: usize,
    sigma2: f64,
    estimation_error_variance: f64,
    out: *mut *mut UcScenario,
) -> UcStatus {
    guard(|| {
        if re.is_null() || out.is_null() {
            return Err(null());
        }
        if rows == 0 || cols == 0 || !(sigma2 > 0.0) {
            set_error("matrix must be nonempty and sigma2 positive");
            return Err(UcStatus::InvalidArgument);
        }
        let n = rows.checked_mul(cols).ok_or_else(|| {
            set_error("matrix size overflows");
            UcStatus::InvalidArgument
        })?;
        // SAFETY: caller guarantees `n` readable values
        let re = unsafe { std::slice::from_raw_parts(re, n) };
        let im = if im.is_null() { None } else { Some(unsafe { std::slice::from_raw_parts(im, n) }) };
        let h = CMatrix::from_fn(rows, cols, |i, j| c(re[i * cols + j], im.map_or(0.0, |v| v[i * cols + j])));
        let ch = lib(ChannelMatrix::from_raw(h, n_bs_antennas))?;
        let ec = lib(effective_channel(&ch, estimation_error_variance))?;
        store(out, UcScenario { ec, sigma2 });
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `s` must come from a constructor of this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uc_scenario_free(s: *mut UcScenario) {
    if !s.is_null() {
        // SAFETY: handle was produced by Box::into_raw
        drop(unsafe { Box::from_raw(s) });
    }
}

fn with_scenario(s: *const UcScenario, out: *mut f64, f: impl FnOnce(&UcScenario) -> Result<f64, UcStatus>) -> UcStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null; caller guarantees a live handle
        let v = f(unsafe { &*s })?;
        // SAFETY: checked non-null
        unsafe { *out = v };
        Ok(())
    })
}

/// Best sum rate without cooperation, over assignments and on/off powers.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uc_nocoop_sum_rate(s: *const UcScenario, out: *mut f64) -> UcStatus {
    with_scenario(s, out, |s| Ok(lib(no_coop_best(&s.ec, &vec![1.0; s.ec.n_ue()], s.sigma2))?.sum_rate()))
}

/// Sum rate of joint decoding over all antennas at full power.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uc_mac_sum_rate(s: *const UcScenario, out: *mut f64) -> UcStatus {
    with_scenario(s, out, |s| lib(mac_sum_rate(&s.ec, &PowerAllocation::full_power(&vec![1.0; s.ec.n_ue()]), s.sigma2)))
}

/// Best sum rate of a scheme at backhaul `beta`. `scheme` and `quantizer`
/// take `UcScheme` and `UcQuantizer` values; `power_steps = 0` selects the
/// default search grid.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uc_scheme_sum_rate(
    s: *const UcScenario,
    scheme: u32,
    quantizer: u32,
    spc: bool,
    beta: f64,
    power_steps: u32,
    out: *mut f64,
) -> UcStatus {
    with_scenario(s, out, |s| {
        let scheme = match scheme {
            x if x == UcScheme::NoCoop as u32 => Scheme::NoCoop,
            x if x == UcScheme::Mac as u32 => Scheme::Mac,
            x if x == UcScheme::Dis as u32 => Scheme::Dis,
            x if x == UcScheme::Cif as u32 => Scheme::Cif,
            x if x == UcScheme::DasD as u32 => Scheme::DasD,
            x if x == UcScheme::DasC as u32 => Scheme::DasC,
            x if x == UcScheme::Fdm as u32 => Scheme::Fdm,
            x if x == UcScheme::DasN as u32 => Scheme::DasN,
            x => {
                set_error(&format!("unknown scheme code {x}"));
                return Err(UcStatus::InvalidArgument);
            }
        };
        let quantizer = match quantizer {
            x if x == UcQuantizer::Practical as u32 => Quantizer::Practical,
            x if x == UcQuantizer::RateDistortion as u32 => Quantizer::RateDistortion,
            x if x == UcQuantizer::SourceCoded as u32 => Quantizer::SourceCoded,
            x => {
                set_error(&format!("unknown quantizer code {x}"));
                return Err(UcStatus::InvalidArgument);
            }
        };
        let mut opts = SearchOptions::default();
        if power_steps > 0 {
            opts.power_steps = power_steps as usize;
        }
        let cfg = SchemeConfig::new(scheme, quantizer, spc, beta);
        Ok(lib(scheme_best(&s.ec, s.sigma2, &cfg, &vec![1.0; s.ec.n_ue()], &opts))?.sum_rate())
    })
}
