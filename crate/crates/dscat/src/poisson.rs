//! The explicit flat-model Poisson kernel and its Gamma-function
//! normalization.
//!
//! The kernel acting on boundary data on the flat model `Y = R^{n-1}` is
//!
//! ```text
//! E(x, y, y') = C_s x^s (1 - |y-y'|^2/x^2)_+^s,    s = s_hat_pm(lambda),
//! ```
//!
//! (a derivative of a delta distribution on the light cone when `s` is a
//! negative integer), normalized so that `x^{-s_pm} E g -> g` as `x -> 0`.
//! The normalization `C_s` is the reciprocal of the distributional pairing
//!
//! ```text
//! ((1-|Y|^2)_+^s, 1) = c_{n-2} Gamma((n-1)/2) Gamma(s+1)
//!                      / (2 Gamma((n-1)/2 + s + 1)),
//! ```
//!
//! which vanishes exactly for `s` in `-(n-1)/2 - N_+` (the excluded set).
//!
//! Application is per Fourier mode on a one-dimensional torus patch: for
//! `g = e^{iky}` the kernel acts by the multiplier
//! `m_s(kx) = int (1-Y^2)^s e^{-ikxY} dY`, evaluated by direct quadrature
//! (cosine substitution at the endpoints) for `Re s > -1` and by repeated
//! integration by parts in the `|Y|^2` variable for `Re s <= -1`.

use crate::special::{gamma, sphere_volume, tanh_sinh_c};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

type C = Complex64;

#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("the pairing constant vanishes at s = {0} (excluded exponent set)")]
    ZeroPairing(C),
    #[error("direct quadrature diverges for Re s = {0} <= -1; use the continued evaluation")]
    QuadratureDivergence(f64),
    #[error("kernel application is implemented for the one-dimensional boundary (n = 2), got n = {0}")]
    UnsupportedDimension(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    PowerLaw,
    /// `s` a negative integer: the kernel degenerates to a derivative of
    /// the delta distribution on the light cone.
    DeltaDerivative,
}

#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    /// Shifted exponent `s_hat`, so the kernel scales as `x^{s_hat + n-1}`
    /// against densities.
    pub s: C,
    pub n: u32,
    pub branch: Branch,
    pub c_s: C,
}

fn as_negative_integer(s: C) -> Option<i64> {
    if s.im.abs() > 1e-12 {
        return None;
    }
    let k = s.re.round();
    if k <= -1.0 && (s.re - k).abs() < 1e-12 {
        Some(k as i64)
    } else {
        None
    }
}

/// The distributional pairing `((1-|Y|^2)_+^s, 1)` on `R^{n-1}` (or its
/// delta-derivative analogue for negative integer `s`).
pub fn pairing_constant(s: C, n: u32) -> Result<C, PoissonError> {
    let c_sphere = sphere_volume(n - 2);
    if let Some(neg) = as_negative_integer(s) {
        // (delta^{(k-1)}(z), (1-z)^{(n-3)/2}) = prod_{i=0}^{k-2} ((n-3)/2 - i)
        let k = (-neg) as u32;
        let alpha = (n as f64 - 3.0) / 2.0;
        let mut prod = 1.0;
        for i in 0..k.saturating_sub(1) {
            prod *= alpha - i as f64;
        }
        if prod == 0.0 {
            return Err(PoissonError::ZeroPairing(s));
        }
        return Ok(C::new(0.5 * c_sphere * prod, 0.0));
    }
    // Gamma((n-1)/2 + s + 1) pole <=> s in -(n-1)/2 - N_+
    let denom_arg = s + (n as f64 - 1.0) / 2.0 + 1.0;
    if denom_arg.im.abs() < 1e-12 && denom_arg.re < 0.5 {
        let r = denom_arg.re.round();
        if r <= 0.0 && (denom_arg.re - r).abs() < 1e-12 {
            return Err(PoissonError::ZeroPairing(s));
        }
    }
    let half = C::new((n as f64 - 1.0) / 2.0, 0.0);
    let value = 0.5 * c_sphere * gamma(half) * gamma(s + 1.0) / gamma(denom_arg);
    Ok(value)
}

/// Kernel exponent, branch and normalization for a shifted root `s`.
pub fn kernel_spec(s: C, n: u32) -> Result<KernelSpec, PoissonError> {
    let branch = if as_negative_integer(s).is_some() {
        Branch::DeltaDerivative
    } else {
        Branch::PowerLaw
    };
    let pairing = pairing_constant(s, n)?;
    Ok(KernelSpec { s, n, branch, c_s: 1.0 / pairing })
}

impl KernelSpec {
    /// Unshifted exponent `s + (n-1)` governing the leading power of `x`.
    pub fn s_unshifted(&self) -> C {
        self.s + (self.n as f64 - 1.0)
    }

    /// Pointwise kernel value `C_s x^s (1 - dy^2/x^2)_+^s` (power-law
    /// branch; the delta branch has no pointwise values).
    pub fn value(&self, x: f64, dy: f64) -> C {
        assert_eq!(self.branch, Branch::PowerLaw);
        let arg = 1.0 - (dy / x) * (dy / x);
        if arg <= 0.0 {
            return C::new(0.0, 0.0);
        }
        self.c_s * (self.s * x.ln()).exp() * (self.s * arg.ln()).exp()
    }
}

/// Band-limited function on the circle, stored as Fourier coefficients
/// for modes `-kmax ..= kmax`.
#[derive(Debug, Clone)]
pub struct TorusFn {
    pub kmax: i64,
    pub coeffs: Vec<C>,
}

impl TorusFn {
    pub fn zero(kmax: i64) -> Self {
        TorusFn { kmax, coeffs: vec![C::new(0.0, 0.0); (2 * kmax + 1) as usize] }
    }

    pub fn constant(value: f64, kmax: i64) -> Self {
        let mut f = TorusFn::zero(kmax);
        *f.coeff_mut(0) = C::new(value, 0.0);
        f
    }

    /// `cos(k y)`.
    pub fn cosine(k: i64, kmax: i64) -> Self {
        let mut f = TorusFn::zero(kmax);
        *f.coeff_mut(k) = C::new(0.5, 0.0);
        *f.coeff_mut(-k) += C::new(0.5, 0.0);
        f
    }

    pub fn coeff(&self, k: i64) -> C {
        self.coeffs[(k + self.kmax) as usize]
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut C {
        &mut self.coeffs[(k + self.kmax) as usize]
    }

    pub fn eval(&self, y: f64) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i as i64 - self.kmax;
            acc += c * (C::i() * (k as f64) * y).exp();
        }
        acc
    }

    /// Translate: `(shift f)(y) = f(y - dy)`.
    pub fn shift(&self, dy: f64) -> TorusFn {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = i as i64 - self.kmax;
            *c *= (-C::i() * (k as f64) * dy).exp();
        }
        out
    }

    pub fn sup_diff(&self, other: &TorusFn, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let y = 2.0 * PI * i as f64 / samples as f64;
            worst = worst.max((self.eval(y) - other.eval(y)).norm());
        }
        worst
    }
}

// Finite sums  sum_j c_j Y^{p_j} e^{i b Y}  closed under d/dY and division
// by Y; the smooth factors appearing in the integration-by-parts ladder.
#[derive(Debug, Clone)]
struct LaurentExp {
    b: f64,
    terms: Vec<(C, i32)>,
}

impl LaurentExp {
    fn plane_wave(b: f64) -> Self {
        LaurentExp { b, terms: vec![(C::new(1.0, 0.0), 0)] }
    }

    fn eval(&self, y: f64) -> C {
        let phase = (C::i() * self.b * y).exp();
        let mut acc = C::new(0.0, 0.0);
        for (c, p) in &self.terms {
            acc += c * y.powi(*p);
        }
        acc * phase
    }

    fn div_y(&self) -> Self {
        LaurentExp { b: self.b, terms: self.terms.iter().map(|(c, p)| (*c, p - 1)).collect() }
    }

    fn deriv(&self) -> Self {
        let mut terms = Vec::new();
        for (c, p) in &self.terms {
            if *p != 0 {
                terms.push((c * (*p as f64), p - 1));
            }
            terms.push((c * C::i() * self.b, *p));
        }
        LaurentExp { b: self.b, terms }
    }
}

/// `int_{1/2}^{1} (1-Y^2)^s phi(Y) dY`, continued in `s` by the ladder
/// `J_s(phi) = (3/4)^{s+1} phi(1/2)/(s+1) + J_{s+1}((phi/Y)')/(2(s+1))`
/// (the boundary term at `Y = 1` vanishes identically for `Re s > -1`
/// and is dropped by analytic continuation).
fn continued_end_integral(s: C, phi: &LaurentExp, tol: f64) -> C {
    if s.re > -0.5 {
        return tanh_sinh_c(
            |y| (s * (1.0 - y * y).ln()).exp() * phi.eval(y),
            0.5,
            1.0,
            tol,
        );
    }
    let boundary = ((s + 1.0) * (0.75f64).ln()).exp() * phi.eval(0.5) / (s + 1.0);
    let next = phi.div_y().deriv();
    boundary + continued_end_integral(s + 1.0, &next, tol) / (2.0 * (s + 1.0))
}

/// Mode multiplier `m_s(a) = int_{-1}^{1} (1-Y^2)^s e^{-i a Y} dY` by the
/// shipped route: direct quadrature (cosine substitution) for
/// `Re s > -1`, integration by parts beyond.
pub fn mode_multiplier(s: C, a: f64, tol: f64) -> C {
    if s.re > -1.0 + 1e-9 {
        // Y = cos(phi) turns the endpoint singularity into sin^{2s+1};
        // folding onto [0, pi/2] leaves the only singular endpoint at 0,
        // where the quadrature abscissas stay exact.
        return 2.0
            * tanh_sinh_c(
                |phi: f64| {
                    let sn = phi.sin();
                    ((2.0 * s + 1.0) * sn.ln()).exp() * (a * phi.cos()).cos()
                },
                0.0,
                0.5 * PI,
                tol,
            );
    }
    // middle + two continued end integrals (Y -> -Y maps the left end to
    // the right end with the conjugate phase)
    let middle = tanh_sinh_c(
        |y| (s * (1.0 - y * y).ln()).exp() * (C::new(0.0, -a) * y).exp(),
        -0.5,
        0.5,
        tol,
    );
    let right = continued_end_integral(s, &LaurentExp::plane_wave(-a), tol);
    let left = continued_end_integral(s, &LaurentExp::plane_wave(a), tol);
    middle + right + left
}

/// Entire-series evaluation of the same multiplier,
/// `m_s(a) = sqrt(pi) Gamma(s+1) sum_m (-1)^m (a/2)^{2m} / (m! Gamma(s+m+3/2))`;
/// an independent route used as a test oracle.
pub fn multiplier_series(s: C, a: f64) -> C {
    let pref = PI.sqrt() * gamma(s + 1.0);
    let mut acc = C::new(0.0, 0.0);
    let mut pow = 1.0; // (a/2)^{2m} / m!
    for m in 0..200 {
        let term = pow / gamma(s + m as f64 + 1.5);
        acc += term;
        let next = pow * (a / 2.0) * (a / 2.0) / (m as f64 + 1.0);
        pow = -next;
        if term.norm() < 1e-18 * acc.norm().max(1e-30) && m > (a.abs() as usize) {
            break;
        }
    }
    pref * acc
}

/// Delta-branch multiplier `(delta^{(k-1)}(1-Y^2), e^{-iaY})`, computed as
/// the (k-1)-st z-derivative of `cos(a sqrt(1-z))/sqrt(1-z)` at `z = 0`
/// (Richardson-extrapolated central differences; `k <= 4`).
fn delta_multiplier(k: u32, a: f64) -> C {
    let phi = |z: f64| {
        let w = (1.0 - z).sqrt();
        (a * w).cos() / w
    };
    let j = (k - 1) as i32;
    let d = |h: f64| central_derivative(&phi, j, h);
    // one Richardson step on the O(h^2) central formulas
    let h = 0.05;
    let fine = d(h / 2.0);
    C::new((4.0 * fine - d(h)) / 3.0, 0.0)
}

fn central_derivative(f: &impl Fn(f64) -> f64, j: i32, h: f64) -> f64 {
    match j {
        0 => f(0.0),
        1 => (f(h) - f(-h)) / (2.0 * h),
        2 => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
        3 => (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h),
        _ => panic!("delta derivative order {j} not supported"),
    }
}

/// Apply the kernel to band-limited data at height `x > 0`:
/// `(E g)(x, y) = C_s x^{s + n - 1} sum_k g_k m_s(kx) e^{iky}`.
pub fn apply_poisson(spec: &KernelSpec, g: &TorusFn, x: f64) -> Result<TorusFn, PoissonError> {
    if spec.n != 2 {
        return Err(PoissonError::UnsupportedDimension(spec.n));
    }
    let tol = 1e-13;
    let mut out = TorusFn::zero(g.kmax);
    let xpow = (spec.s_unshifted() * x.ln()).exp();
    for k in 0..=g.kmax {
        let m = match spec.branch {
            Branch::PowerLaw => mode_multiplier(spec.s, k as f64 * x, tol),
            Branch::DeltaDerivative => {
                delta_multiplier((-as_negative_integer(spec.s).unwrap()) as u32, k as f64 * x)
            }
        };
        let factor = spec.c_s * xpow * m;
        *out.coeff_mut(k) = factor * g.coeff(k);
        if k > 0 {
            *out.coeff_mut(-k) = factor * g.coeff(-k);
        }
    }
    Ok(out)
}

/// `x^{-s_pm} (E g)(x, .)`, the quantity converging to `g` as `x -> 0`.
pub fn leading_coefficient(spec: &KernelSpec, g: &TorusFn, x: f64) -> Result<TorusFn, PoissonError> {
    let mut out = apply_poisson(spec, g, x)?;
    let scale = (-spec.s_unshifted() * x.ln()).exp();
    for c in out.coeffs.iter_mut() {
        *c *= scale;
    }
    Ok(out)
}
