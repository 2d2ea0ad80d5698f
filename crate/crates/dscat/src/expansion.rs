//! Boundary Frobenius recursion: truncated power-log expansions
//! `x^s sum_{j,k} a_{j,k} x^j (log x)^k` solving `P u = O(x^{s+N+1})` near
//! a conformal boundary, per angular mode.
//!
//! The operators handled here are warped products whose mode reduction has
//! the form
//!
//! ```text
//! P = A(x) (xD_x)^2 + B(x) i(xD_x) + C(x),
//! ```
//!
//! with `A, B, C` given by short x-Taylor series, `A(0) = 1`,
//! `B(0) = n - 1`, `C(0) = -lambda`.  Writing `Q_m(s) = -A_m s^2 + B_m s +
//! C_m` for the Taylor layers, the action on a power-log monomial is
//!
//! ```text
//! P (x^s log^k x) = sum_m x^{s+m} [ Q_m(s) log^k + k Q_m'(s) log^{k-1}
//!                                   + k(k-1)/2 Q_m''(s) log^{k-2} ],
//! ```
//!
//! and matching orders gives a triangular recursion for the coefficients.
//! `Q_0` is the indicial polynomial `I(s) = s(n-1-s) - lambda`; a
//! resonance (`I(s+j) = 0` at an integer offset of the minus branch) shifts
//! the solve one log slot up.  The pure-power slot freed at the resonance
//! is set to zero there - that content belongs to the plus branch - which
//! is the minimal choice for the polynomial block.

use crate::spectral::{Regime, SpectralParams};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Log slots carried per order: the shipped regimes use k <= 1, the third
/// slot exists to detect ladders deeper than the ansatz.
pub const LOG_SLOTS: usize = 3;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("resonance at offset {offset} of mode {mode} forces a log ladder deeper than the ansatz")]
    OrderClash { mode: usize, offset: usize },
    #[error("leading data lists differ in length: {0} vs {1}")]
    ModeCountMismatch(usize, usize),
}

/// Which warped-product operator the expansion solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExpansionModel {
    /// Exact boundary normal form `(xD)^2 + i(n-1)(xD) - x^2 Delta_Y - lambda`.
    NormalForm,
    /// Exact de Sitter mode operator in the coordinate `x = 1/t`:
    /// `(1+x^2)(xD)^2 + i(n-1-x^2)(xD) - x^2 Delta_Y/(1+x^2) - lambda`.
    DeSitterTime,
    /// Warped product with radial warp `h(x)` given by its x-Taylor
    /// coefficients (`h[0] = 1`): `B = (n-1)(1 - x h'/(2h))`,
    /// `C = -lambda - mu x^2 / h`.
    WarpedRadial { warp: Vec<f64> },
}

/// Mode-reduced operator as Taylor layers of `A, B, C`.
#[derive(Debug, Clone)]
pub struct IndicialOperator {
    pub n: u32,
    pub lambda: f64,
    pub mu: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

// Truncated power-series helpers (dense, index = power of x).
fn series_mul(f: &[f64], g: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, fi) in f.iter().enumerate().take(len) {
        for (j, gj) in g.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += fi * gj;
        }
    }
    out
}

fn series_inv(f: &[f64], len: usize) -> Vec<f64> {
    // 1/f with f[0] != 0
    let mut out = vec![0.0; len];
    out[0] = 1.0 / f[0];
    for m in 1..len {
        let mut acc = 0.0;
        for j in 1..=m {
            acc += f.get(j).copied().unwrap_or(0.0) * out[m - j];
        }
        out[m] = -acc / f[0];
    }
    out
}

impl IndicialOperator {
    pub fn build(model: &ExpansionModel, params: &SpectralParams, mu: f64, order: usize) -> Self {
        let n = params.n;
        let nm1 = n as f64 - 1.0;
        let lambda = params.lambda;
        let len = order + 1;
        let (a, b, c) = match model {
            ExpansionModel::NormalForm => {
                let mut c = vec![0.0; len];
                c[0] = -lambda;
                if len > 2 {
                    c[2] = -mu;
                }
                (vec![1.0], vec![nm1], c)
            }
            ExpansionModel::DeSitterTime => {
                // A = 1 + x^2, B = (n-1) - x^2, C = -lambda - mu x^2/(1+x^2)
                let mut a = vec![0.0; 3.min(len)];
                a[0] = 1.0;
                if len > 2 {
                    a[2] = 1.0;
                }
                let mut b = vec![0.0; 3.min(len)];
                b[0] = nm1;
                if len > 2 {
                    b[2] = -1.0;
                }
                let mut c = vec![0.0; len];
                c[0] = -lambda;
                let mut m = 2;
                let mut sign = -1.0;
                while m < len {
                    c[m] = sign * mu;
                    sign = -sign;
                    m += 2;
                }
                (a, b, c)
            }
            ExpansionModel::WarpedRadial { warp } => {
                assert!(
                    (warp.first().copied().unwrap_or(0.0) - 1.0).abs() < 1e-14,
                    "warp Taylor series must start at 1"
                );
                let hinv = series_inv(warp, len);
                // x h'(x): coefficient m is m*h[m]
                let xhp: Vec<f64> =
                    (0..len).map(|m| m as f64 * warp.get(m).copied().unwrap_or(0.0)).collect();
                let ratio = series_mul(&xhp, &hinv, len); // x h'/h
                let mut b = vec![0.0; len];
                for m in 0..len {
                    b[m] = if m == 0 { nm1 } else { -nm1 * 0.5 * ratio[m] };
                }
                // C = -lambda - mu x^2 / h
                let mut c = vec![0.0; len];
                c[0] = -lambda;
                for m in 2..len {
                    c[m] -= mu * hinv[m - 2];
                }
                (vec![1.0], b, c)
            }
        };
        IndicialOperator { n, lambda, mu, a, b, c }
    }

    pub fn taylor_order(&self) -> usize {
        self.a.len().max(self.b.len()).max(self.c.len()) - 1
    }

    fn layer(&self, m: usize) -> (f64, f64, f64) {
        (
            self.a.get(m).copied().unwrap_or(0.0),
            self.b.get(m).copied().unwrap_or(0.0),
            self.c.get(m).copied().unwrap_or(0.0),
        )
    }

    /// `Q_m(s) = -A_m s^2 + B_m s + C_m`, its s-derivative, and `Q_m''`.
    fn q(&self, m: usize, s: Complex64) -> (Complex64, Complex64, f64) {
        let (a, b, c) = self.layer(m);
        (-a * s * s + b * s + c, -2.0 * a * s + b, -2.0 * a)
    }
}

/// Indicial polynomial `I(s) = s(n-1-s) - lambda`.
pub fn indicial_polynomial(s: Complex64, params: &SpectralParams) -> Complex64 {
    params.indicial(s)
}

/// `dI/ds = n - 1 - 2s`; vanishes exactly at the threshold double root.
pub fn indicial_derivative(s: Complex64, params: &SpectralParams) -> Complex64 {
    Complex64::new(params.n as f64 - 1.0, 0.0) - 2.0 * s
}

/// One branch `x^s sum_{j<=order} sum_k a_{j,k} x^j log^k x`.
#[derive(Debug, Clone)]
pub struct BranchSeries {
    pub exponent: Complex64,
    /// `coeffs[j][k]`.
    pub coeffs: Vec<[Complex64; LOG_SLOTS]>,
}

impl BranchSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn has_log_terms(&self) -> bool {
        self.coeffs.iter().any(|c| c[1..].iter().any(|z| z.norm() > 0.0))
    }

    /// Value at `x > 0` (principal branch of `x^s`).
    pub fn eval(&self, x: f64) -> Complex64 {
        let lx = x.ln();
        let xp = (self.exponent * lx).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut xj = 1.0;
        for c in &self.coeffs {
            let mut logpow = 1.0;
            for ck in c {
                acc += ck * xj * logpow;
                logpow *= lx;
            }
            xj *= x;
        }
        xp * acc
    }

    /// d/dx of [`Self::eval`], using
    /// `d/dx [x^{s+j} log^k x] = x^{s+j-1} ((s+j) log^k x + k log^{k-1} x)`.
    pub fn eval_dx(&self, x: f64) -> Complex64 {
        let lx = x.ln();
        let xp = (self.exponent * lx).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut xjm1 = 1.0 / x;
        for (j, c) in self.coeffs.iter().enumerate() {
            let sj = self.exponent + j as f64;
            for (k, ck) in c.iter().enumerate() {
                let logk = lx.powi(k as i32);
                let logkm1 = if k == 0 { 0.0 } else { lx.powi(k as i32 - 1) };
                acc += ck * xjm1 * (sj * logk + k as f64 * logkm1);
            }
            xjm1 *= x;
        }
        xp * acc
    }

    /// Crude magnitude bound for the first dropped order at `x`, used to
    /// pick matching points where the truncated frame is trustworthy.
    pub fn tail_estimate(&self, x: f64) -> f64 {
        let n = self.order();
        let lx = x.ln().abs().max(1.0);
        let mut worst: f64 = 0.0;
        for j in n.saturating_sub(2)..=n {
            let mag = self.coeffs[j].iter().map(|z| z.norm()).sum::<f64>();
            worst = worst.max(mag * x.powi((j + 1) as i32) * lx);
        }
        worst * x.powf(self.exponent.re)
    }
}

/// Truncated two-branch expansion for a list of angular modes.
#[derive(Debug, Clone)]
pub struct PowerLogSeries {
    pub params: SpectralParams,
    pub model: ExpansionModel,
    pub order: usize,
    pub modes: Vec<ModeSeries>,
    /// Estimated radius of absolute convergence of the coefficient series
    /// (infinite when every tail vanishes).
    pub radius_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct ModeSeries {
    pub mode: usize,
    pub mu: f64,
    pub plus: BranchSeries,
    pub minus: BranchSeries,
}

impl ModeSeries {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.plus.eval(x) + self.minus.eval(x)
    }
    pub fn eval_dx(&self, x: f64) -> Complex64 {
        self.plus.eval_dx(x) + self.minus.eval_dx(x)
    }
}

/// Eigenvalue of the boundary Laplacian for mode index `k`: `k^2` on the
/// circle, `k(k+n-2)` on the (n-1)-sphere.
pub fn mode_eigenvalue(n: u32, k: usize) -> f64 {
    if n == 2 {
        (k * k) as f64
    } else {
        (k * (k + n as usize - 2)) as f64
    }
}

pub(crate) fn solve_branch(
    op: &IndicialOperator,
    params: &SpectralParams,
    s: Complex64,
    seed_slot: usize,
    seed: Complex64,
    resonance_at: Option<usize>,
    order: usize,
    mode: usize,
) -> Result<BranchSeries, ExpansionError> {
    let mut coeffs = vec![[Complex64::new(0.0, 0.0); LOG_SLOTS]; order + 1];
    coeffs[0][seed_slot] = seed;
    let taylor = op.taylor_order();

    for j in 1..=order {
        let sj = s + j as f64;
        let mut rhs = [Complex64::new(0.0, 0.0); LOG_SLOTS];
        for m in 1..=taylor.min(j) {
            let (q, qp, qpp) = op.q(m, s + (j - m) as f64);
            let prev = &coeffs[j - m];
            for (k, r) in rhs.iter_mut().enumerate() {
                let mut t = q * prev[k];
                if k + 1 < LOG_SLOTS {
                    t += qp * ((k + 1) as f64) * prev[k + 1];
                }
                if k + 2 < LOG_SLOTS {
                    t += qpp * (((k + 2) * (k + 1)) as f64 / 2.0) * prev[k + 2];
                }
                *r -= t;
            }
        }

        let i_sj = params.indicial(sj);
        let ip_sj = indicial_derivative(sj, params);
        if resonance_at == Some(j) {
            // Structural zero of I(s+j): solve the ladder one slot up,
            // leaving the freed pure-power slot at zero.  the equation in
            // the top slot must then be trivially satisfied.
            if rhs[LOG_SLOTS - 1] != Complex64::new(0.0, 0.0) {
                return Err(ExpansionError::OrderClash { mode, offset: j });
            }
            for k in (0..LOG_SLOTS - 1).rev() {
                let mut num = rhs[k];
                if k + 2 < LOG_SLOTS {
                    num += (((k + 2) * (k + 1)) as f64) * coeffs[j][k + 2];
                }
                coeffs[j][k + 1] = num / (ip_sj * (k + 1) as f64);
            }
            coeffs[j][0] = Complex64::new(0.0, 0.0);
        } else {
            for k in (0..LOG_SLOTS).rev() {
                let mut num = rhs[k];
                if k + 1 < LOG_SLOTS {
                    num -= ip_sj * ((k + 1) as f64) * coeffs[j][k + 1];
                }
                if k + 2 < LOG_SLOTS {
                    num += (((k + 2) * (k + 1)) as f64) * coeffs[j][k + 2];
                }
                coeffs[j][k] = num / i_sj;
            }
        }
        if coeffs[j][LOG_SLOTS - 1] != Complex64::new(0.0, 0.0) {
            return Err(ExpansionError::OrderClash { mode, offset: j });
        }
    }
    Ok(BranchSeries { exponent: s, coeffs })
}

/// Truncated expansion of the single mode `mode` with leading data
/// `(g_plus, g_minus)`.
pub fn build_mode_series(
    g_plus: Complex64,
    g_minus: Complex64,
    params: &SpectralParams,
    model: &ExpansionModel,
    mode: usize,
    order: usize,
) -> Result<ModeSeries, ExpansionError> {
    let mu = mode_eigenvalue(params.n, mode);
    let op = IndicialOperator::build(model, params, mu, order + 2);
    let plus = solve_branch(&op, params, params.s_plus, 0, g_plus, None, order, mode)?;
    let minus = match params.regime {
        Regime::Threshold => solve_branch(&op, params, params.s_minus, 1, g_minus, None, order, mode)?,
        Regime::IntegerGap => {
            let gap = params.integer_gap().unwrap() as usize;
            let resonance = if gap <= order { Some(gap) } else { None };
            solve_branch(&op, params, params.s_minus, 0, g_minus, resonance, order, mode)?
        }
        _ => solve_branch(&op, params, params.s_minus, 0, g_minus, None, order, mode)?,
    };
    Ok(ModeSeries { mode, mu, plus, minus })
}

/// Build the truncated expansion with leading data `g_plus`, `g_minus`
/// given per mode (index = mode number).
pub fn build_series(
    g_plus: &[Complex64],
    g_minus: &[Complex64],
    params: &SpectralParams,
    model: &ExpansionModel,
    order: usize,
) -> Result<PowerLogSeries, ExpansionError> {
    if g_plus.len() != g_minus.len() {
        return Err(ExpansionError::ModeCountMismatch(g_plus.len(), g_minus.len()));
    }
    let mut modes = Vec::with_capacity(g_plus.len());
    for (k, (&gp, &gm)) in g_plus.iter().zip(g_minus).enumerate() {
        modes.push(build_mode_series(gp, gm, params, model, k, order)?);
    }
    let radius_estimate = estimate_radius(&modes);
    Ok(PowerLogSeries { params: *params, model: model.clone(), order, modes, radius_estimate })
}

fn estimate_radius(modes: &[ModeSeries]) -> f64 {
    let mut rate: f64 = 0.0;
    for m in modes {
        for br in [&m.plus, &m.minus] {
            for (j, c) in br.coeffs.iter().enumerate().skip(1) {
                let mag = c.iter().map(|z| z.norm()).sum::<f64>();
                if mag > 1e-280 {
                    rate = rate.max(mag.powf(1.0 / j as f64));
                }
            }
        }
    }
    if rate == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rate
    }
}

impl PowerLogSeries {
    pub fn eval_mode(&self, mode: usize, x: f64) -> Complex64 {
        self.modes[mode].eval(x)
    }

    /// Value at `(x, theta)` pairing mode `k` with `exp(i k theta)`.
    pub fn eval(&self, x: f64, theta: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.eval(x) * (Complex64::i() * (m.mode as f64) * theta).exp())
            .sum()
    }
}

/// Outcome of the residual-slope certificate for one mode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeResidual {
    pub mode: usize,
    /// Fitted slope of `log ||P u_N||` against `log x`; `None` when the
    /// residual vanishes identically (exact solution).
    pub slope: Option<f64>,
    pub pass_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub per_mode: Vec<ModeResidual>,
    /// Least slope over the non-exact modes.
    pub min_slope: Option<f64>,
}

/// Apply the operator to the truncated series symbolically and fit the
/// decay rate of the remainder over a log-spaced window.
pub fn series_residual(series: &PowerLogSeries, window: (f64, f64), points: usize) -> ResidualReport {
    let params = &series.params;
    let n_ord = series.order;
    let mut per_mode = Vec::new();
    let mut min_slope: Option<f64> = None;

    for ms in &series.modes {
        let op = IndicialOperator::build(&series.model, params, ms.mu, n_ord + 2);
        let taylor = op.taylor_order();

        // residual coefficients for orders N+1 .. N+taylor on each branch
        let mut branches = Vec::new();
        for br in [&ms.plus, &ms.minus] {
            let mut res = vec![[Complex64::new(0.0, 0.0); LOG_SLOTS]; taylor];
            for (jj, r) in res.iter_mut().enumerate() {
                let j = n_ord + 1 + jj;
                for m in 1..=taylor.min(j) {
                    if j - m > n_ord {
                        continue;
                    }
                    let (q, qp, qpp) = op.q(m, br.exponent + (j - m) as f64);
                    let prev = &br.coeffs[j - m];
                    for (k, rk) in r.iter_mut().enumerate() {
                        let mut t = q * prev[k];
                        if k + 1 < LOG_SLOTS {
                            t += qp * ((k + 1) as f64) * prev[k + 1];
                        }
                        if k + 2 < LOG_SLOTS {
                            t += qpp * (((k + 2) * (k + 1)) as f64 / 2.0) * prev[k + 2];
                        }
                        *rk += t;
                    }
                }
            }
            branches.push((br.exponent, res));
        }

        let max_mag: f64 = branches
            .iter()
            .flat_map(|(_, res)| res.iter())
            .flat_map(|c| c.iter().map(|z| z.norm()))
            .fold(0.0, f64::max);
        if max_mag < 1e-280 {
            per_mode.push(ModeResidual { mode: ms.mode, slope: None, pass_exact: true });
            continue;
        }

        // evaluate |residual| on the window and fit log-log slope
        let (lo, hi) = window;
        let mut pts = Vec::with_capacity(points);
        for i in 0..points {
            let f = i as f64 / (points - 1) as f64;
            let x = lo * (hi / lo).powf(f);
            let lx = x.ln();
            let mut total = 0.0;
            for (s, res) in &branches {
                let xp = (s * lx).exp().norm();
                let mut acc = Complex64::new(0.0, 0.0);
                for (jj, c) in res.iter().enumerate() {
                    let xj = x.powi((n_ord + 1 + jj) as i32);
                    for (k, ck) in c.iter().enumerate() {
                        acc += ck * xj * lx.powi(k as i32);
                    }
                }
                total += xp * acc.norm();
            }
            if total > 0.0 {
                pts.push((lx, total.ln()));
            }
        }
        let slope = fit_slope(&pts);
        if let Some(sl) = slope {
            min_slope = Some(min_slope.map_or(sl, |cur: f64| cur.min(sl)));
        }
        per_mode.push(ModeResidual { mode: ms.mode, slope, pass_exact: false });
    }
    ResidualReport { per_mode, min_slope }
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::compute_spectral;

    const Z: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn indicial_values() {
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        assert!(indicial_polynomial(p.s_plus, &p).norm() < 1e-15);
        assert!(indicial_polynomial(p.s_minus, &p).norm() < 1e-15);
        let v = indicial_polynomial(Complex64::new(2.25, 0.0), &p);
        assert_eq!(v, Complex64::new(-3.0, 0.0));
        // threshold double root kills the derivative
        let t = compute_spectral(2, 0.25).unwrap();
        assert_eq!(indicial_derivative(t.s_plus, &t), Z);
    }

    #[test]
    fn constant_solution_is_exact() {
        let p = compute_spectral(2, 0.0).unwrap();
        let s = build_series(&[Z], &[ONE], &p, &ExpansionModel::NormalForm, 6).unwrap();
        let m = &s.modes[0];
        assert_eq!(m.minus.coeffs[0][0], ONE);
        for j in 1..=6 {
            for k in 0..LOG_SLOTS {
                assert_eq!(m.minus.coeffs[j][k], Z);
                assert_eq!(m.plus.coeffs[j][k], Z);
            }
        }
        let rep = series_residual(&s, (1e-3, 1e-1), 16);
        assert!(rep.per_mode[0].pass_exact);
        assert!(s.radius_estimate.is_infinite());
    }

    #[test]
    fn quarter_gap_mode1_second_coefficient() {
        // I(s_- + 2) = -3 and the -x^2 Delta_Y layer force a_2 = -1/3.
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let s = build_series(&[Z, Z], &[Z, ONE], &p, &ExpansionModel::NormalForm, 4).unwrap();
        let a2 = s.modes[1].minus.coeffs[2][0];
        assert!((a2 - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert!(!s.modes[1].minus.has_log_terms());
    }

    #[test]
    fn residual_slope_certificate() {
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let s = build_series(&[Z, Z], &[Z, ONE], &p, &ExpansionModel::NormalForm, 4).unwrap();
        let rep = series_residual(&s, (1e-3, 1e-1), 24);
        let slope = rep.per_mode[1].slope.unwrap();
        // spec floor s_- + N + 1 - 0.1; the even coefficient structure of
        // the normal form actually cancels one more order
        assert!(slope >= 5.15, "slope {slope}");
    }

    #[test]
    fn truncation_drops_slope_by_one_on_generic_model() {
        // A warp with an odd Taylor layer makes consecutive orders populate.
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let model = ExpansionModel::WarpedRadial { warp: vec![1.0, 0.5, 0.25] };
        let g = [Z, ONE];
        let hi = build_series(&g, &[Z, Z], &p, &model, 5).unwrap();
        let lo = build_series(&g, &[Z, Z], &p, &model, 4).unwrap();
        let s_hi = series_residual(&hi, (1e-3, 1e-2), 16).per_mode[1].slope.unwrap();
        let s_lo = series_residual(&lo, (1e-3, 1e-2), 16).per_mode[1].slope.unwrap();
        assert!((s_hi - s_lo - 1.0).abs() < 0.25, "slopes {s_hi} vs {s_lo}");
    }

    #[test]
    fn threshold_leading_log() {
        let p = compute_spectral(2, 0.25).unwrap();
        let s = build_series(&[ONE, Z], &[ONE, ONE], &p, &ExpansionModel::NormalForm, 4).unwrap();
        // mode 0: x^{1/2} and x^{1/2} log x are exact solutions
        let m0 = &s.modes[0];
        assert_eq!(m0.plus.coeffs[0][0], ONE);
        assert_eq!(m0.minus.coeffs[0][1], ONE);
        assert_eq!(m0.minus.coeffs[0][0], Z);
        let rep = series_residual(&s, (1e-3, 1e-1), 16);
        assert!(rep.per_mode[0].pass_exact);
        // mode 1 has genuine tail and carries the log upward
        assert!(s.modes[1].minus.has_log_terms());
        assert!(rep.per_mode[1].slope.unwrap() > 0.5 + 4.0 + 1.0 - 0.2);
    }

    #[test]
    fn integer_gap_log_block() {
        // gap 2 at lambda = -3/4: the mode-1 minus branch picks up
        // a_{2,1} = mu a_0 / I'(s_+) = 1/(1-3) = -1/2, pure slot zeroed.
        let p = compute_spectral(2, -0.75).unwrap();
        assert_eq!(p.integer_gap(), Some(2));
        let s = build_series(&[Z, Z], &[Z, ONE], &p, &ExpansionModel::NormalForm, 4).unwrap();
        let m = &s.modes[1];
        assert_eq!(m.minus.coeffs[2][0], Z);
        assert!((m.minus.coeffs[2][1] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        // the log block certifies: residual still cancels through order N
        let rep = series_residual(&s, (1e-3, 1e-2), 16);
        assert!(rep.per_mode[1].slope.unwrap() > p.s_minus.re + 4.0 + 1.0 - 0.3);
    }

    #[test]
    fn odd_gap_mode_zero_has_no_log() {
        // n=2, lambda=0 (gap 1): solutions 1 and x, no log forced.
        let p = compute_spectral(2, 0.0).unwrap();
        let s = build_series(&[ONE], &[ONE], &p, &ExpansionModel::NormalForm, 5).unwrap();
        assert!(!s.modes[0].minus.has_log_terms());
    }

    #[test]
    fn order_clash_detected() {
        // A log-seeded branch meeting a resonance needs a second log slot.
        let p = compute_spectral(2, -0.75).unwrap();
        let op = IndicialOperator::build(&ExpansionModel::NormalForm, &p, 1.0, 6);
        let err =
            solve_branch(&op, &p, p.s_minus, 1, ONE, Some(2), 4, 7).unwrap_err();
        match err {
            ExpansionError::OrderClash { mode, offset } => {
                assert_eq!(mode, 7);
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn linearity_and_idempotence() {
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let m = ExpansionModel::DeSitterTime;
        let a = build_series(&[ONE, Z], &[Z, ONE], &p, &m, 6).unwrap();
        let b = build_series(&[Z, ONE], &[ONE, Z], &p, &m, 6).unwrap();
        let both = build_series(
            &[Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0)],
            &[Complex64::new(-3.0, 0.0), Complex64::new(2.0, 0.0)],
            &p,
            &m,
            6,
        )
        .unwrap();
        for k in 0..2 {
            for j in 0..=6 {
                for slot in 0..LOG_SLOTS {
                    let lin = 2.0 * a.modes[k].minus.coeffs[j][slot]
                        + (-3.0) * b.modes[k].minus.coeffs[j][slot];
                    let got = both.modes[k].minus.coeffs[j][slot];
                    assert!((lin - got).norm() <= 1e-12 * (1.0 + lin.norm()));
                }
            }
        }
        // leading coefficients reproduce the data exactly
        assert_eq!(both.modes[1].plus.coeffs[0][0], Complex64::new(-3.0, 0.0));
        let rebuilt = build_series(
            &[both.modes[0].plus.coeffs[0][0], both.modes[1].plus.coeffs[0][0]],
            &[both.modes[0].minus.coeffs[0][0], both.modes[1].minus.coeffs[0][0]],
            &p,
            &m,
            6,
        )
        .unwrap();
        for k in 0..2 {
            for j in 0..=6 {
                assert_eq!(rebuilt.modes[k].minus.coeffs[j][0], both.modes[k].minus.coeffs[j][0]);
            }
        }
    }

    #[test]
    fn mode_decoupling() {
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let m = ExpansionModel::NormalForm;
        let a = build_series(&[ONE, ONE], &[ONE, ONE], &p, &m, 5).unwrap();
        let b = build_series(&[Z, ONE], &[Z, ONE], &p, &m, 5).unwrap();
        for j in 0..=5 {
            assert_eq!(a.modes[1].minus.coeffs[j][0], b.modes[1].minus.coeffs[j][0]);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = compute_spectral(2, 3.0 / 16.0).unwrap();
        let s = build_series(&[ONE, ONE], &[ONE, ONE], &p, &ExpansionModel::DeSitterTime, 10)
            .unwrap();
        let x = 0.17;
        let h = 1e-6;
        for k in 0..2 {
            let fd = (s.modes[k].eval(x + h) - s.modes[k].eval(x - h)) / (2.0 * h);
            let an = s.modes[k].eval_dx(x);
            assert!((fd - an).norm() < 1e-7 * (1.0 + an.norm()), "mode {k}");
        }
    }

    #[test]
    fn de_sitter_time_reproduces_arctan() {
        // n=2, lambda=0, mode 0: x - x^3/3 + x^5/5 - ... (arctan(1/t)).
        let p = compute_spectral(2, 0.0).unwrap();
        let s = build_series(&[ONE], &[Z], &p, &ExpansionModel::DeSitterTime, 8).unwrap();
        let c = &s.modes[0].plus.coeffs;
        assert!((c[2][0] - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((c[4][0] - Complex64::new(1.0 / 5.0, 0.0)).norm() < 1e-14);
        assert!((c[6][0] - Complex64::new(-1.0 / 7.0, 0.0)).norm() < 1e-14);
        // truncation at order 8 leaves the x^{11}/11 tail
        let x = 0.3;
        let got = s.modes[0].eval(x).re;
        assert!((got - x.atan()).abs() < 2.0 * x.powi(11) / 11.0);
    }
}
