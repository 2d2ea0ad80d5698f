//! C ABI over the core toolbox: plain structs for value results, opaque
//! handles for metric models, status codes for every fallible call.
//!
//! All functions are null-safe: a null output pointer yields
//! `DSCAT_STATUS_NULL_POINTER` rather than a write.

use dscat::flow::{classical_scattering_map, FlowOptions, MetricModel, Side};
use dscat::modes::{connection_matrix, ConnectionOpts};
use dscat::poisson::pairing_constant;
use dscat::spectral::{compute_spectral, symbol_ratio, weight_regime, Regime, WeightRegime};
use num_complex::Complex64;
use std::os::raw::c_char;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DscatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
}

/// Regime tag mirrored from the core crate.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DscatRegime {
    NonIntegerGap = 0,
    IntegerGap = 1,
    Threshold = 2,
    ComplexRoots = 3,
}

/// Sign classification of the commutator weights at an exponent `r`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DscatWeightRegime {
    AllPositive = 0,
    AllNegative = 1,
    Degenerate = 2,
}

/// Indicial data for one `(n, lambda)` pair.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DscatSpectral {
    pub n: u32,
    pub lambda: f64,
    pub s_plus_re: f64,
    pub s_plus_im: f64,
    pub s_minus_re: f64,
    pub s_minus_im: f64,
    pub s_hat_plus_re: f64,
    pub s_hat_plus_im: f64,
    pub s_hat_minus_re: f64,
    pub s_hat_minus_im: f64,
    pub l_lambda: f64,
    pub regime: DscatRegime,
}

fn regime_tag(r: Regime) -> DscatRegime {
    match r {
        Regime::NonIntegerGap => DscatRegime::NonIntegerGap,
        Regime::IntegerGap => DscatRegime::IntegerGap,
        Regime::Threshold => DscatRegime::Threshold,
        Regime::ComplexRoots => DscatRegime::ComplexRoots,
    }
}

/// Indicial roots, shifted roots, decay threshold and regime for
/// `(n, lambda)`.
///
/// # Safety
/// `out` must be null or point to writable memory for one
/// [`DscatSpectral`].
#[no_mangle]
pub unsafe extern "C" fn dscat_spectral_compute(
    n: u32,
    lambda: f64,
    out: *mut DscatSpectral,
) -> DscatStatus {
    if out.is_null() {
        return DscatStatus::NullPointer;
    }
    let params = match compute_spectral(n, lambda) {
        Ok(p) => p,
        Err(_) => return DscatStatus::InvalidArgument,
    };
    unsafe {
        *out = DscatSpectral {
            n,
            lambda,
            s_plus_re: params.s_plus.re,
            s_plus_im: params.s_plus.im,
            s_minus_re: params.s_minus.re,
            s_minus_im: params.s_minus.im,
            s_hat_plus_re: params.s_hat_plus.re,
            s_hat_plus_im: params.s_hat_plus.im,
            s_hat_minus_re: params.s_hat_minus.re,
            s_hat_minus_im: params.s_hat_minus.im,
            l_lambda: params.l_lambda,
            regime: regime_tag(params.regime),
        };
    }
    DscatStatus::Ok
}

/// Weight-regime classification of the exponent `r`.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dscat_weight_regime(
    n: u32,
    lambda: f64,
    r: f64,
    out: *mut DscatWeightRegime,
) -> DscatStatus {
    if out.is_null() {
        return DscatStatus::NullPointer;
    }
    let params = match compute_spectral(n, lambda) {
        Ok(p) => p,
        Err(_) => return DscatStatus::InvalidArgument,
    };
    let w = match weight_regime(r, &params) {
        WeightRegime::AllPositive => DscatWeightRegime::AllPositive,
        WeightRegime::AllNegative => DscatWeightRegime::AllNegative,
        WeightRegime::Degenerate => DscatWeightRegime::Degenerate,
    };
    unsafe { *out = w };
    DscatStatus::Ok
}

/// The ellipticity witness `exp(i pi (s_plus - s_minus))`.
///
/// # Safety
/// `out_re`, `out_im` must be null or valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn dscat_symbol_ratio(
    n: u32,
    lambda: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> DscatStatus {
    if out_re.is_null() || out_im.is_null() {
        return DscatStatus::NullPointer;
    }
    let params = match compute_spectral(n, lambda) {
        Ok(p) => p,
        Err(_) => return DscatStatus::InvalidArgument,
    };
    let z = symbol_ratio(&params);
    unsafe {
        *out_re = z.re;
        *out_im = z.im;
    }
    DscatStatus::Ok
}

/// Distributional pairing `((1-|Y|^2)_+^s, 1)` normalizing the flat-model
/// Poisson kernel; fails on the excluded exponent set.
///
/// # Safety
/// `out_re`, `out_im` must be null or valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn dscat_pairing_constant(
    n: u32,
    s_re: f64,
    s_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> DscatStatus {
    if out_re.is_null() || out_im.is_null() {
        return DscatStatus::NullPointer;
    }
    if n < 2 {
        return DscatStatus::InvalidArgument;
    }
    match pairing_constant(Complex64::new(s_re, s_im), n) {
        Ok(v) => {
            unsafe {
                *out_re = v.re;
                *out_im = v.im;
            }
            DscatStatus::Ok
        }
        Err(_) => DscatStatus::NumericalFailure,
    }
}

/// Opaque metric model handle.
pub struct DscatModel {
    inner: MetricModel,
}

/// Exact de Sitter model in dimension `n >= 2`; returns null on invalid
/// input.  Free with [`dscat_model_free`].
#[no_mangle]
pub extern "C" fn dscat_model_exact(n: u32) -> *mut DscatModel {
    if n < 2 {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(DscatModel { inner: MetricModel::exact_de_sitter(n) }))
}

/// Warped perturbation of the boundary metric (n = 2 only); returns null
/// on invalid input.
#[no_mangle]
pub extern "C" fn dscat_model_perturbed(
    n: u32,
    amplitude: f64,
    angular_wave: u32,
) -> *mut DscatModel {
    match MetricModel::perturbed(n, amplitude, angular_wave) {
        Ok(m) => Box::into_raw(Box::new(DscatModel { inner: m })),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Release a model handle.
///
/// # Safety
/// `model` must be null or a pointer previously returned by a
/// `dscat_model_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dscat_model_free(model: *mut DscatModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Classical scattering map on the model: boundary data
/// `(theta, eta_sign)` outgoing from `Y_+`, mapped to the arrival point
/// and unit covector on `Y_-`.
///
/// # Safety
/// `model` must be a live handle; `out_theta`, `out_eta` null or valid
/// for one write each.
#[no_mangle]
pub unsafe extern "C" fn dscat_classical_scatter(
    model: *const DscatModel,
    theta: f64,
    eta_sign: f64,
    out_theta: *mut f64,
    out_eta: *mut f64,
) -> DscatStatus {
    if model.is_null() || out_theta.is_null() || out_eta.is_null() {
        return DscatStatus::NullPointer;
    }
    let m = unsafe { &(*model).inner };
    match classical_scattering_map(Side::Plus, theta, eta_sign, m, &FlowOptions::default()) {
        Ok(out) => {
            unsafe {
                *out_theta = out.y;
                *out_eta = out.eta_hat;
            }
            DscatStatus::Ok
        }
        Err(_) => DscatStatus::NumericalFailure,
    }
}

/// Mode-`k` connection matrix from `Y_+` to `Y_-` on exact de Sitter.
/// `out` receives the four entries row-major as (re, im) pairs, so 8
/// doubles.
///
/// # Safety
/// `out` must be null or valid for 8 writes; `out_cond` null or valid
/// for one.
#[no_mangle]
pub unsafe extern "C" fn dscat_connection_matrix(
    n: u32,
    lambda: f64,
    k: u32,
    out: *mut f64,
    out_cond: *mut f64,
) -> DscatStatus {
    if out.is_null() || out_cond.is_null() {
        return DscatStatus::NullPointer;
    }
    let params = match compute_spectral(n, lambda) {
        Ok(p) => p,
        Err(_) => return DscatStatus::InvalidArgument,
    };
    match connection_matrix(k as usize, &params, &ConnectionOpts::default()) {
        Ok(conn) => {
            let slice = unsafe { std::slice::from_raw_parts_mut(out, 8) };
            for i in 0..2 {
                for j in 0..2 {
                    slice[4 * i + 2 * j] = conn.matrix[i][j].re;
                    slice[4 * i + 2 * j + 1] = conn.matrix[i][j].im;
                }
            }
            unsafe { *out_cond = conn.cond };
            DscatStatus::Ok
        }
        Err(_) => DscatStatus::NumericalFailure,
    }
}

/// Library version as a static null-terminated string.
#[no_mangle]
pub extern "C" fn dscat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_through_the_abi() {
        let mut out = DscatSpectral {
            n: 0,
            lambda: 0.0,
            s_plus_re: 0.0,
            s_plus_im: 0.0,
            s_minus_re: 0.0,
            s_minus_im: 0.0,
            s_hat_plus_re: 0.0,
            s_hat_plus_im: 0.0,
            s_hat_minus_re: 0.0,
            s_hat_minus_im: 0.0,
            l_lambda: 0.0,
            regime: DscatRegime::NonIntegerGap,
        };
        let st = unsafe { dscat_spectral_compute(2, 0.0, &mut out) };
        assert_eq!(st, DscatStatus::Ok);
        assert_eq!(out.s_plus_re, 1.0);
        assert_eq!(out.regime, DscatRegime::IntegerGap);
        assert_eq!(
            unsafe { dscat_spectral_compute(1, 0.0, &mut out) },
            DscatStatus::InvalidArgument
        );
        assert_eq!(
            unsafe { dscat_spectral_compute(2, 0.0, std::ptr::null_mut()) },
            DscatStatus::NullPointer
        );
    }

    #[test]
    fn scattering_through_the_abi() {
        let model = dscat_model_exact(2);
        assert!(!model.is_null());
        let (mut th, mut eta) = (0.0f64, 0.0f64);
        let st = unsafe { dscat_classical_scatter(model, 0.3, 1.0, &mut th, &mut eta) };
        assert_eq!(st, DscatStatus::Ok);
        let d = (th - 0.3).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((d - std::f64::consts::PI).abs() < 1e-6);
        assert!((eta - 1.0).abs() < 1e-6);
        unsafe { dscat_model_free(model) };
        assert!(dscat_model_exact(1).is_null());
        assert!(dscat_model_perturbed(3, 0.1, 1).is_null());
    }

    #[test]
    fn connection_matrix_through_the_abi() {
        let mut m = [0.0f64; 8];
        let mut cond = 0.0f64;
        let st = unsafe { dscat_connection_matrix(2, 0.0, 0, m.as_mut_ptr(), &mut cond) };
        assert_eq!(st, DscatStatus::Ok);
        assert!((m[0] + 1.0).abs() < 1e-8); // m11 = -1
        assert!((m[4] - std::f64::consts::PI).abs() < 1e-8); // m21 = pi
        assert!((m[6] - 1.0).abs() < 1e-8); // m22 = 1
        assert!(cond.is_finite());
    }

    #[test]
    fn pairing_and_symbol_ratio() {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        assert_eq!(
            unsafe { dscat_pairing_constant(2, 0.0, 0.0, &mut re, &mut im) },
            DscatStatus::Ok
        );
        assert!((re - 2.0).abs() < 1e-12);
        // excluded set
        assert_eq!(
            unsafe { dscat_pairing_constant(2, -1.5, 0.0, &mut re, &mut im) },
            DscatStatus::NumericalFailure
        );
        assert_eq!(
            unsafe { dscat_symbol_ratio(2, 3.0 / 16.0, &mut re, &mut im) },
            DscatStatus::Ok
        );
        assert!(re.abs() < 1e-12 && (im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn version_string() {
        let v = dscat_version();
        assert!(!v.is_null());
        let s = unsafe { std::ffi::CStr::from_ptr(v) }.to_str().unwrap();
        assert!(!s.is_empty());
    }
}
