//! The front-face model operator on the unit ball,
//!
//! ```text
//! P_sigma = (Y D_Y - i(n-1-sigma))(Y D_Y + i sigma) - Delta_Y - lambda,
//! ```
//!
//! in two realizations: a finite-difference radial discretization per
//! angular mode (polar form), and an exact symbolic action on polynomials
//! and on `(1-r^2)^a`-weighted polynomials for the algebraic identities.
//!
//! In polar coordinates the operator reads, per mode with angular
//! eigenvalue `nu_omega = m(m+n-3)` on the (n-2)-sphere,
//!
//! ```text
//! P_sigma f = (1-r^2) f'' + [(2 sigma - n) r + (n-2)/r] f'
//!             + [sigma(n-1-sigma) - lambda - nu_omega/r^2] f.
//! ```
//!
//! On constants this gives `P_sigma 1 = (sigma(n-1-sigma) - lambda) * 1`,
//! the sign consistent with the factored Cartesian form and with the
//! quadratic-form identity below.
//!
//! Identities verified here:
//! - conjugation: `(1-r^2)^{-s} P_sigma (1-r^2)^s
//!                 = 4s(s-sigma)(1-r^2)^{-1} + P_{sigma-2s}`
//!   on functions supported away from the rim;
//! - intertwining: `P_{sigma-2} Delta_Y = Delta_Y P_sigma` and
//!   `P_{sigma+2} nu^{2 sigma+4} Delta_Y nu^{-2 sigma}
//!    = nu^{2 sigma+4} Delta_Y nu^{-2 sigma} P_sigma`, exact on
//!   polynomials;
//! - the null vector `P_{s_hat} (1-r^2)^{s_hat} = 0` at the shifted
//!   indicial roots;
//! - positivity of `<u, -P_sigma u>` in the weighted inner product with
//!   measure `r^{n-2}(1-r^2)^sigma dr domega` when
//!   `lambda + sigma^2 - sigma(n-1) >= 0`.

use crate::poly::{Poly, RimPoly};
use num_complex::Complex64;
use thiserror::Error;

type C = Complex64;

#[derive(Debug, Error)]
pub enum PsigmaError {
    #[error("radial grid too coarse: {0} points (need >= 32)")]
    GridTooCoarse(usize),
    #[error("radial grid must be uniform and strictly increasing")]
    BadGrid,
    #[error("weight integral diverges at the rim for sigma = {0} (needs sigma > -1)")]
    QuadratureDivergence(f64),
}

/// Radial samples of a single angular mode on the unit ball.
#[derive(Debug, Clone)]
pub struct BallField {
    pub n: u32,
    /// Angular mode on the (n-2)-sphere; eigenvalue `m(m+n-3)`.
    pub mode: u32,
    pub r: Vec<f64>,
    pub values: Vec<C>,
}

impl BallField {
    pub fn from_fn(n: u32, mode: u32, r: Vec<f64>, f: impl Fn(f64) -> C) -> Self {
        let values = r.iter().map(|&x| f(x)).collect();
        BallField { n, mode, r, values }
    }

    pub fn angular_eigenvalue(&self) -> f64 {
        let m = self.mode as f64;
        m * (m + self.n as f64 - 3.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn spacing(&self) -> Result<f64, PsigmaError> {
        if self.r.len() < 32 {
            return Err(PsigmaError::GridTooCoarse(self.r.len()));
        }
        let h = self.r[1] - self.r[0];
        for w in self.r.windows(2) {
            if (w[1] - w[0] - h).abs() > 1e-12 * h.abs() || h <= 0.0 {
                return Err(PsigmaError::BadGrid);
            }
        }
        Ok(h)
    }
}

/// Uniform radial grid on `[r0, r1]`.
pub fn uniform_grid(r0: f64, r1: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| r0 + (r1 - r0) * i as f64 / (points - 1) as f64).collect()
}

/// Discretized `P_sigma` by 4th-order central differences; the result
/// lives on the grid trimmed by two cells at each end.
pub fn apply_psigma(
    sigma: C,
    field: &BallField,
    lambda: f64,
) -> Result<BallField, PsigmaError> {
    let h = field.spacing()?;
    let n = field.n as f64;
    let nu_omega = field.angular_eigenvalue();
    let m = field.r.len();
    let mut r_out = Vec::with_capacity(m - 4);
    let mut v_out = Vec::with_capacity(m - 4);
    let f = &field.values;
    for i in 2..m - 2 {
        let r = field.r[i];
        let d1 = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
        let d2 = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2])
            / (12.0 * h * h);
        let coeff1 = (2.0 * sigma - n) * r + (n - 2.0) / r;
        let coeff0 = sigma * (n - 1.0 - sigma) - lambda - nu_omega / (r * r);
        r_out.push(r);
        v_out.push((1.0 - r * r) * d2 + coeff1 * d1 + coeff0 * f[i]);
    }
    Ok(BallField { n: field.n, mode: field.mode, r: r_out, values: v_out })
}

/// Sup-norm residual of the conjugation identity at grid resolution, on
/// the trimmed grid (the test field must vanish near the rim so both
/// branches of `(1-r^2 +- i0)^s` coincide on its support).
pub fn check_conjugation(
    s: f64,
    sigma: f64,
    test: &BallField,
    lambda: f64,
) -> Result<f64, PsigmaError> {
    let sig = C::new(sigma, 0.0);
    let weighted = BallField {
        n: test.n,
        mode: test.mode,
        r: test.r.clone(),
        values: test
            .r
            .iter()
            .zip(&test.values)
            .map(|(&r, v)| v * (1.0 - r * r).powf(s))
            .collect(),
    };
    let lhs_raw = apply_psigma(sig, &weighted, lambda)?;
    let lhs: Vec<C> = lhs_raw
        .r
        .iter()
        .zip(&lhs_raw.values)
        .map(|(&r, v)| v * (1.0 - r * r).powf(-s))
        .collect();
    let shifted = apply_psigma(C::new(sigma - 2.0 * s, 0.0), test, lambda)?;
    let mut worst: f64 = 0.0;
    for (i, &r) in shifted.r.iter().enumerate() {
        let extra = 4.0 * s * (s - sigma) / (1.0 - r * r) * test.values[i + 2];
        let rhs = shifted.values[i] + extra;
        worst = worst.max((lhs[i] - rhs).norm());
    }
    Ok(worst)
}

/// `<u, -P_sigma u>` in `L^2(r^{n-2}(1-r^2)^sigma dr)` (angular part
/// normalized), by Simpson quadrature on the trimmed grid.
pub fn quadratic_form(sigma: f64, test: &BallField, lambda: f64) -> Result<f64, PsigmaError> {
    if sigma <= -1.0 {
        return Err(PsigmaError::QuadratureDivergence(sigma));
    }
    let pu = apply_psigma(C::new(sigma, 0.0), test, lambda)?;
    let n = test.n as f64;
    let integrand: Vec<f64> = pu
        .r
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let w = r.powf(n - 2.0) * (1.0 - r * r).powf(sigma);
            -(pu.values[i] * test.values[i + 2].conj()).re * w
        })
        .collect();
    let h = pu.r[1] - pu.r[0];
    Ok(simpson(&integrand, h))
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        acc += 0.5 * h * (f[i] + f[i + 1]);
    }
    acc
}

// ---- exact symbolic action ----

/// `P_sigma` on a polynomial in the ambient `Y` variables (exact).
pub fn psigma_poly(sigma: C, n: u32, lambda: f64, p: &Poly) -> Poly {
    let i = C::i();
    // (YD_Y + i sigma) p, with YD_Y = -i * Euler
    let q1 = p.euler().scale(-i).add(&p.scale(i * sigma));
    let q2 = q1
        .euler()
        .scale(-i)
        .add(&q1.scale(-i * (n as f64 - 1.0 - sigma)));
    // - Delta_Y (positive Laplacian) is + sum of second partials
    q2.add(&p.laplacian()).sub(&p.scale(C::new(lambda, 0.0)))
}

/// `P_sigma` on a `(1-r^2)^a`-weighted polynomial (exact).
pub fn psigma_rim(sigma: C, n: u32, lambda: f64, p: &RimPoly) -> RimPoly {
    let i = C::i();
    let q1 = p.euler().scale(-i).add(&p.scale(i * sigma));
    let q2 = q1
        .euler()
        .scale(-i)
        .add(&q1.scale(-i * (n as f64 - 1.0 - sigma)));
    q2.add(&p.laplacian()).sub(&p.scale(C::new(lambda, 0.0)))
}

/// Max residual coefficient of `P_{sigma-2} Delta_Y - Delta_Y P_sigma`
/// over the polynomial basis of total degree `<= degree` (exactly zero in
/// exact arithmetic).
pub fn check_intertwining(sigma: C, n: u32, lambda: f64, degree: u32) -> f64 {
    let nvars = (n - 1) as usize;
    let mut worst: f64 = 0.0;
    for p in Poly::basis_up_to(nvars, degree) {
        // positive-Laplacian convention: Delta_Y = -(sum of second partials)
        let lapl = p.laplacian().scale(C::new(-1.0, 0.0));
        let lhs = psigma_poly(sigma - 2.0, n, lambda, &lapl);
        let rhs = psigma_poly(sigma, n, lambda, &p).laplacian().scale(C::new(-1.0, 0.0));
        worst = worst.max(lhs.sub(&rhs).max_coeff());
    }
    worst
}

/// Max residual (canonical collapse) of the weighted intertwining identity
/// `P_{sigma+2} nu^{2 sigma+4} Delta_Y nu^{-2 sigma}
///  = nu^{2 sigma+4} Delta_Y nu^{-2 sigma} P_sigma`
/// applied to `q * nu^{2 sigma}` over polynomials `q` of degree `<= degree`.
pub fn check_intertwining_weighted(sigma: C, n: u32, lambda: f64, degree: u32) -> f64 {
    let nvars = (n - 1) as usize;
    let minus = C::new(-1.0, 0.0);
    let mut worst: f64 = 0.0;
    for q in Poly::basis_up_to(nvars, degree) {
        // u = q nu^{2 sigma}
        let u = RimPoly::from_poly(q.clone(), sigma);

        // LHS: nu^{-2 sigma} u = q; Delta q; weight by nu^{2 sigma + 4};
        // then P_{sigma+2}.
        let dq = q.laplacian().scale(minus);
        let weighted = RimPoly::from_poly(dq, sigma + 2.0);
        let lhs = psigma_rim(sigma + 2.0, n, lambda, &weighted);

        // RHS: P_sigma u; strip nu^{2 sigma}; Delta; weight back.
        let pu = psigma_rim(sigma, n, lambda, &u);
        let stripped = pu.shift(0, -sigma); // base 0, possibly negative layers
        let dstr = stripped.laplacian().scale(minus);
        let rhs = dstr.shift(0, sigma + 2.0);

        worst = worst.max(lhs.sub(&rhs).residual_norm());
    }
    worst
}
