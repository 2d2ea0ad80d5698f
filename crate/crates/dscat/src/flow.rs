//! Null bicharacteristics in 0-cotangent coordinates and the classical
//! scattering map between the two boundary components.
//!
//! Phase space is coordinatized by covectors `xi dx/x + eta dy/x`; the
//! principal symbol of the wave operator on a warped product
//! `g = (dx^2 - w(x,y) dy^2)/x^2` is `p = xi^2 - eta^2 / w(x,y)`.  The
//! rescaled Hamilton field `W'_p` (the `x`-divided, fiber-rescaled field)
//! extends smoothly to `x = 0`, where its `x`-component is exactly
//! `2 sign(xi)`.  Because that component is constant on each chart, the
//! integration below marches in `x` itself: the projective state
//! `(y, eta_hat)`, `eta_hat = eta/|xi|`, satisfies
//!
//! ```text
//! dy/dx       = -H_eta(x, y, eta_hat) / (2 sigma)
//! deta_hat/dx = (H_y - sigma eta_hat H_x)(x, y, eta_hat) / (2 sigma)
//! ```
//!
//! with `H = eta_hat^2 / w` and `sigma = sign(xi)`, and the characteristic
//! constraint `H(x, y, eta_hat) = 1` is re-imposed after every accepted
//! step.
//!
//! Global picture: exact de Sitter in the exact warped chart has
//! `w(x) = (1 + x^2/4)^2` with the boundary at `x = 0` and the equatorial
//! time slice at `x = 2`; the far half is the same chart again through
//! `x -> 4/x`.  A bicharacteristic therefore runs `x: 0 -> 2` in the plus
//! chart, switches charts (where `sigma` flips and `eta` is rescaled by
//! `4/x^2`, the identity at `x = 2`), and runs `x: 2 -> 0` toward the other
//! boundary.
//!
//! Orientation convention: the fiber components of `W'_p` follow the
//! canonical symplectic sign (`dy ~ +d p/d eta`), and the lift to
//! unprojectivized coordinates is gauged so `|xi|` is constant along the
//! flow.  Which sign of `eta_hat` travels toward increasing `y` is a
//! convention of this module, not something the asymptotic analysis fixes.

use crate::ode::{AdaptiveRk, OdeError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("covector with xi = 0 lies outside the near-boundary characteristic chart")]
    DegenerateCovector,
    #[error("point is off the characteristic set (relative residual {0:.3e})")]
    OffCharacteristicSet(f64),
    #[error("flow integration failed to converge: {0}")]
    NonConvergence(#[from] OdeError),
    #[error("direction must be +1 or -1, got {0}")]
    BadDirection(i32),
    #[error("the perturbed metric family is only shipped for n = 2")]
    UnsupportedDimension,
}

/// Which boundary component a chart is adapted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MetricFamily {
    ExactDeSitter,
    /// Warp multiplied by `1 + amplitude cos(wave * y) b(x)` with
    /// `b = x/(1 + x^4/16)`, so the perturbation vanishes at both
    /// boundaries and is `amplitude * x` to leading order at `Y_+`.
    WarpedPerturbation { amplitude: f64, angular_wave: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct MetricModel {
    pub n: u32,
    pub family: MetricFamily,
}

impl MetricModel {
    pub fn exact_de_sitter(n: u32) -> Self {
        MetricModel { n, family: MetricFamily::ExactDeSitter }
    }

    pub fn perturbed(n: u32, amplitude: f64, angular_wave: u32) -> Result<Self, FlowError> {
        if n != 2 {
            return Err(FlowError::UnsupportedDimension);
        }
        Ok(MetricModel { n, family: MetricFamily::WarpedPerturbation { amplitude, angular_wave } })
    }

    fn perturbation(&self) -> (f64, f64) {
        match self.family {
            MetricFamily::ExactDeSitter => (0.0, 0.0),
            MetricFamily::WarpedPerturbation { amplitude, angular_wave } => {
                (amplitude, angular_wave as f64)
            }
        }
    }

    /// Warp coefficient `w` of the chart adapted to `side`, valid for all
    /// chart `x >= 0`; `w(0, y)` is the boundary metric coefficient.
    pub fn warp(&self, side: Side, x: f64, y: f64) -> f64 {
        let base = (1.0 + 0.25 * x * x).powi(2);
        let (amp, m) = self.perturbation();
        if amp == 0.0 {
            return base;
        }
        base * (1.0 + amp * (m * y).cos() * bump(side, x))
    }

    /// (d/dx, d/dy) of [`Self::warp`].
    pub fn warp_grad(&self, side: Side, x: f64, y: f64) -> (f64, f64) {
        let q = 1.0 + 0.25 * x * x;
        let base = q * q;
        let dbase = x * q;
        let (amp, m) = self.perturbation();
        if amp == 0.0 {
            return (dbase, 0.0);
        }
        let c = (m * y).cos();
        let s = (m * y).sin();
        let b = bump(side, x);
        let db = bump_dx(side, x);
        (
            dbase * (1.0 + amp * c * b) + base * amp * c * db,
            -base * amp * m * s * b,
        )
    }

    /// Boundary metric coefficient `h(x, y)` in the plus chart (the
    /// `dy^2` part of `h` in `g = (dx^2 - h)/x^2`).
    pub fn boundary_metric(&self, x: f64, y: f64) -> f64 {
        self.warp(Side::Plus, x, y)
    }
}

// Perturbation profile in the plus chart and its image in the minus chart
// (through x -> 4/x), both vanishing at x = 0.
fn bump(side: Side, x: f64) -> f64 {
    match side {
        Side::Plus => x / (1.0 + x.powi(4) / 16.0),
        Side::Minus => 4.0 * x.powi(3) / (x.powi(4) + 16.0),
    }
}

fn bump_dx(side: Side, x: f64) -> f64 {
    match side {
        Side::Plus => {
            let d = 1.0 + x.powi(4) / 16.0;
            (1.0 - 3.0 * x.powi(4) / 16.0) / (d * d)
        }
        Side::Minus => {
            let d = x.powi(4) + 16.0;
            (192.0 * x * x - 4.0 * x.powi(6)) / (d * d)
        }
    }
}

/// A point of the 0-cotangent bundle in plus-chart coordinates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
}

impl PhasePoint {
    /// Relative residual of characteristic-set membership,
    /// `|p| / xi^2 = |1 - H(x, y, eta/|xi|)|`.
    pub fn char_residual(&self, model: &MetricModel) -> f64 {
        let w = model.warp(Side::Plus, self.x, self.y);
        let eta_hat = self.eta / self.xi.abs();
        (1.0 - eta_hat * eta_hat / w).abs()
    }

    /// Rescale `eta` onto the characteristic set, keeping `xi`.
    pub fn projected(&self, model: &MetricModel) -> PhasePoint {
        let w = model.warp(Side::Plus, self.x, self.y);
        PhasePoint { eta: self.eta.signum() * w.sqrt() * self.xi.abs(), ..*self }
    }
}

/// The rescaled Hamilton field `W'_p` at `pt`, as `(dx, dy, dxi, deta)`
/// components in the `|xi|`-preserving lift (so `dxi = 0` identically).
/// At `x = 0` the `dx` component is exactly `2 sign(xi)`.
pub fn hamilton_field(pt: &PhasePoint, model: &MetricModel) -> Result<[f64; 4], FlowError> {
    if pt.xi == 0.0 {
        return Err(FlowError::DegenerateCovector);
    }
    let sigma = pt.xi.signum();
    let xi_abs = pt.xi.abs();
    let eta_hat = pt.eta / xi_abs;
    let w = model.warp(Side::Plus, pt.x, pt.y);
    let (wx, wy) = model.warp_grad(Side::Plus, pt.x, pt.y);
    // H = eta_hat^2 / w
    let h_eta = 2.0 * eta_hat / w;
    let h_x = -eta_hat * eta_hat * wx / (w * w);
    let h_y = -eta_hat * eta_hat * wy / (w * w);
    Ok([2.0 * sigma, -h_eta, 0.0, xi_abs * (h_y - sigma * eta_hat * h_x)])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectorySample {
    /// Boundary-adapted flow parameter of the current chart, continuous
    /// across the equatorial chart switch.
    pub tau: f64,
    pub side: Side,
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
    pub p_residual: f64,
}

/// Limiting data of a trajectory end on the boundary cosphere bundle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryData {
    pub side: Side,
    pub y: f64,
    /// `eta/|xi|` normalized to unit boundary-metric length.
    pub eta_hat: f64,
    pub xi_sign: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// End reached through the start chart's own boundary.
    pub near_end: BoundaryData,
    /// End reached through the chart switch.
    pub far_end: BoundaryData,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Integration stops at this chart `x`; endpoint data are Richardson
    /// extrapolated to `x = 0` from `x_stop` and `2 x_stop`.
    pub x_stop: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { rtol: 1e-10, atol: 1e-12, x_stop: 1e-6, max_steps: 200_000 }
    }
}

// Internal chart state for the x-marching integration.
#[derive(Debug, Clone, Copy)]
struct ChartState {
    side: Side,
    x: f64,
    y: f64,
    eta_hat: f64,
    sigma: f64,
}

fn rhs_for(model: MetricModel, side: Side, sigma: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |x, state, d| {
        let (y, eta_hat) = (state[0], state[1]);
        let w = model.warp(side, x, y);
        let (wx, wy) = model.warp_grad(side, x, y);
        let h_eta = 2.0 * eta_hat / w;
        let h_x = -eta_hat * eta_hat * wx / (w * w);
        let h_y = -eta_hat * eta_hat * wy / (w * w);
        d[0] = -h_eta / (2.0 * sigma);
        d[1] = (h_y - sigma * eta_hat * h_x) / (2.0 * sigma);
    }
}

fn projector(model: MetricModel, side: Side) -> impl Fn(f64, &mut [f64]) {
    move |x, state| {
        let w = model.warp(side, x, state[0]);
        state[1] = state[1].signum() * w.sqrt();
    }
}

/// March one chart leg from `st.x` to `x_target`, recording samples.
fn run_leg(
    st: ChartState,
    x_target: f64,
    model: &MetricModel,
    opts: &FlowOptions,
    tau0: f64,
    xi_abs: f64,
    out: &mut Vec<TrajectorySample>,
) -> Result<(ChartState, f64), FlowError> {
    let rk = AdaptiveRk { rtol: opts.rtol, atol: opts.atol, max_steps: opts.max_steps };
    let rhs = rhs_for(*model, st.side, st.sigma);
    let proj = projector(*model, st.side);
    let mut tau_end = tau0;
    let mut first = true;
    let y_final = rk.solve_with(
        rhs,
        st.x,
        x_target,
        &[st.y, st.eta_hat],
        |x, state| proj(x, state),
        |x, state| {
            let tau = tau0 + (x - st.x) / (2.0 * st.sigma);
            tau_end = tau;
            // legs share their junction point; record it once
            if first && !out.is_empty() {
                first = false;
                return;
            }
            first = false;
            let w = model.warp(st.side, x, state[0]);
            out.push(TrajectorySample {
                tau,
                side: st.side,
                x,
                y: state[0],
                xi: st.sigma * xi_abs,
                eta: state[1] * xi_abs,
                p_residual: (1.0 - state[1] * state[1] / w).abs(),
            });
        },
    )?;
    Ok((
        ChartState { side: st.side, x: x_target, y: y_final[0], eta_hat: y_final[1], sigma: st.sigma },
        tau_end,
    ))
}

/// Run from `st` to the boundary of its current chart (through the chart
/// switch first if the flow points outward), returning the extrapolated
/// boundary data.
fn run_to_boundary(
    mut st: ChartState,
    model: &MetricModel,
    opts: &FlowOptions,
    mut tau: f64,
    xi_abs: f64,
    out: &mut Vec<TrajectorySample>,
) -> Result<BoundaryData, FlowError> {
    // Outward-moving state: cross the equator and switch charts.
    if st.sigma > 0.0 {
        let (at_eq, t) = run_leg(st, 2.0, model, opts, tau, xi_abs, out)?;
        tau = t;
        st = ChartState {
            side: at_eq.side.other(),
            x: 2.0,
            y: at_eq.y,
            eta_hat: at_eq.eta_hat, // 4 eta / x^2 = eta at x = 2
            sigma: -at_eq.sigma,
        };
    }
    // Inward leg: sample at 2*x_stop and x_stop, extrapolate linearly to 0.
    let (mid, t) = run_leg(st, 2.0 * opts.x_stop, model, opts, tau, xi_abs, out)?;
    let (end, _) = run_leg(mid, opts.x_stop, model, opts, t, xi_abs, out)?;
    let y0 = 2.0 * end.y - mid.y;
    let eta0 = 2.0 * end.eta_hat - mid.eta_hat;
    let w0 = model.warp(end.side, 0.0, y0);
    Ok(BoundaryData { side: end.side, y: y0, eta_hat: eta0 / w0.sqrt(), xi_sign: end.sigma })
}

fn chart_normalize(pt: &PhasePoint) -> ChartState {
    // Plus-chart coordinates cover x in (0, inf); beyond the equator the
    // minus chart is better conditioned.
    let xi_abs = pt.xi.abs();
    if pt.x <= 2.0 {
        ChartState { side: Side::Plus, x: pt.x, y: pt.y, eta_hat: pt.eta / xi_abs, sigma: pt.xi.signum() }
    } else {
        ChartState {
            side: Side::Minus,
            x: 4.0 / pt.x,
            y: pt.y,
            eta_hat: 4.0 * (pt.eta / xi_abs) / (pt.x * pt.x),
            sigma: -pt.xi.signum(),
        }
    }
}

/// Integrate the bicharacteristic through `start` to both boundary ends.
///
/// `direction = -1` reverses the parameterization (`tau -> -tau`), which by
/// the antipodal symmetry of `p` is the flow of the negated covector.
pub fn integrate_bicharacteristic(
    start: &PhasePoint,
    model: &MetricModel,
    direction: i32,
    opts: &FlowOptions,
) -> Result<Trajectory, FlowError> {
    if direction != 1 && direction != -1 {
        return Err(FlowError::BadDirection(direction));
    }
    if start.xi == 0.0 {
        return Err(FlowError::DegenerateCovector);
    }
    let st = chart_normalize(&start.projected(model));
    if start.char_residual(model) > 1e-6 {
        return Err(FlowError::OffCharacteristicSet(start.char_residual(model)));
    }
    let xi_abs = start.xi.abs();

    // Far end: along increasing flow parameter when sigma > 0.
    let mut fwd_samples = Vec::new();
    let far = run_to_boundary(st, model, opts, 0.0, xi_abs, &mut fwd_samples)?;

    // Near end: reverse the covector, integrate, un-reverse the samples.
    let mut back_samples = Vec::new();
    let st_rev = ChartState { eta_hat: -st.eta_hat, sigma: -st.sigma, ..st };
    let near_rev = run_to_boundary(st_rev, model, opts, 0.0, xi_abs, &mut back_samples)?;
    let near = BoundaryData {
        side: near_rev.side,
        y: near_rev.y,
        eta_hat: -near_rev.eta_hat,
        xi_sign: -near_rev.xi_sign,
    };

    let mut samples: Vec<TrajectorySample> = back_samples
        .into_iter()
        .map(|s| TrajectorySample { tau: -s.tau, xi: -s.xi, eta: -s.eta, ..s })
        .rev()
        .collect();
    let skip = usize::from(!samples.is_empty());
    samples.extend(fwd_samples.into_iter().skip(skip));
    if direction == -1 {
        samples.reverse();
        for s in &mut samples {
            s.tau = -s.tau;
        }
    }
    Ok(Trajectory { samples, near_end: near, far_end: far })
}

/// Classical scattering map: boundary phase data `(y, eta_hat)` with
/// `|eta_hat|_h = 1` outgoing from `from` (positive `xi` in that chart),
/// mapped along the unique bicharacteristic to limiting data on the other
/// boundary component.
pub fn classical_scattering_map(
    from: Side,
    y: f64,
    eta_hat_unit: f64,
    model: &MetricModel,
    opts: &FlowOptions,
) -> Result<BoundaryData, FlowError> {
    let w0 = model.warp(from, 0.0, y);
    let st = ChartState { side: from, x: 0.0, y, eta_hat: eta_hat_unit * w0.sqrt(), sigma: 1.0 };
    let mut samples = Vec::new();
    run_to_boundary(st, model, opts, 0.0, 1.0, &mut samples)
}

/// Classical scattering map on exact de Sitter for general dimension:
/// boundary point `u` on the unit sphere and unit covector `v` orthogonal
/// to it.  Exact rotational symmetry reduces the flow to the great circle
/// through `u` in direction `v`, which is the n = 2 integration.
pub fn classical_scattering_map_sphere(
    u: &[f64],
    v: &[f64],
    model: &MetricModel,
    opts: &FlowOptions,
) -> Result<(Vec<f64>, Vec<f64>), FlowError> {
    assert!(matches!(model.family, MetricFamily::ExactDeSitter));
    assert_eq!(u.len(), model.n as usize);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let vn = dot(v, v).sqrt();
    let e: Vec<f64> = v.iter().map(|c| c / vn).collect();

    // Reduced flow along the great circle spanned by (u, e).
    let circle = MetricModel::exact_de_sitter(2);
    let out = classical_scattering_map(Side::Plus, 0.0, 1.0, &circle, opts)?;
    let (dth, eta_f) = (out.y, out.eta_hat);

    let u_new: Vec<f64> =
        u.iter().zip(&e).map(|(a, b)| a * dth.cos() + b * dth.sin()).collect();
    // Coordinate covector transported along the circle, scaled by the
    // final fiber component.
    let v_new: Vec<f64> = u
        .iter()
        .zip(&e)
        .map(|(a, b)| (vn * eta_f) * (-a * dth.sin() + b * dth.cos()))
        .collect();
    Ok((u_new, v_new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::tanh_sinh;
    use std::f64::consts::PI;

    fn wrap_angle(a: f64) -> f64 {
        let mut a = a % (2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        if a < -PI {
            a += 2.0 * PI;
        }
        a
    }

    #[test]
    fn field_x_component_at_boundary() {
        let m = MetricModel::exact_de_sitter(2);
        let pt = PhasePoint { x: 0.0, y: 0.3, xi: 2.0, eta: 2.0 };
        let f = hamilton_field(&pt, &m).unwrap();
        assert_eq!(f[0], 2.0);
        let pt = PhasePoint { x: 0.0, y: 0.3, xi: -2.0, eta: 2.0 };
        assert_eq!(hamilton_field(&pt, &m).unwrap()[0], -2.0);
        assert!(matches!(
            hamilton_field(&PhasePoint { x: 0.0, y: 0.0, xi: 0.0, eta: 1.0 }, &m),
            Err(FlowError::DegenerateCovector)
        ));
    }

    #[test]
    fn field_tangential_component_matches_symbol_derivative() {
        // At x = 0, w = 1: the dy component is d(p)/d(eta)/|xi| = -2 eta/w.
        let m = MetricModel::exact_de_sitter(2);
        let pt = PhasePoint { x: 0.0, y: 0.0, xi: 1.0, eta: 1.0 };
        let f = hamilton_field(&pt, &m).unwrap();
        let dp_deta = -2.0 * pt.eta / m.warp(Side::Plus, 0.0, 0.0);
        assert!((f[1] - dp_deta).abs() < 1e-14);
        assert_eq!(f[1], -2.0);
    }

    #[test]
    fn field_antipodal_antisymmetry() {
        let m = MetricModel::perturbed(2, 0.07, 3).unwrap();
        let pt = PhasePoint { x: 0.4, y: 1.1, xi: 1.3, eta: 1.5 };
        let f = hamilton_field(&pt, &m).unwrap();
        let g = hamilton_field(&PhasePoint { xi: -pt.xi, eta: -pt.eta, ..pt }, &m).unwrap();
        // W'_p(-covector) = (-dx, -dy, +dxi, +deta) relative to W'_p.
        assert!((g[0] + f[0]).abs() < 1e-13);
        assert!((g[1] + f[1]).abs() < 1e-13);
        assert!((g[2] - f[2]).abs() < 1e-13);
        assert!((g[3] - f[3]).abs() < 1e-13);
    }

    #[test]
    fn exact_scattering_is_antipodal() {
        let m = MetricModel::exact_de_sitter(2);
        let opts = FlowOptions::default();
        for i in 0..8 {
            let th = 2.0 * PI * (i as f64) / 8.0 - PI;
            for sgn in [1.0, -1.0] {
                let out = classical_scattering_map(Side::Plus, th, sgn, &m, &opts).unwrap();
                assert_eq!(out.side, Side::Minus);
                assert!(wrap_angle(out.y - th - PI).abs() < 1e-7, "dtheta off: {}", out.y - th);
                assert!((out.eta_hat - sgn).abs() < 1e-7);
                assert_eq!(out.xi_sign, -1.0);
            }
        }
    }

    #[test]
    fn exact_scattering_equivariance() {
        let m = MetricModel::exact_de_sitter(2);
        let opts = FlowOptions::default();
        let base = classical_scattering_map(Side::Plus, 0.2, 1.0, &m, &opts).unwrap();
        for phi in [0.5, 1.7, -2.4] {
            let rot = classical_scattering_map(Side::Plus, 0.2 + phi, 1.0, &m, &opts).unwrap();
            assert!(wrap_angle(rot.y - base.y - phi).abs() < 1e-8);
            assert!((rot.eta_hat - base.eta_hat).abs() < 1e-8);
        }
    }

    #[test]
    fn scattering_inverse_composition() {
        // Mapping Y+ -> Y-, then reversing the arrival covector and mapping
        // back, recovers the start to 1e-6.
        let m = MetricModel::perturbed(2, 0.05, 2).unwrap();
        let opts = FlowOptions::default();
        for th in [0.0, 0.9, 2.5] {
            let out = classical_scattering_map(Side::Plus, th, 1.0, &m, &opts).unwrap();
            let back =
                classical_scattering_map(Side::Minus, out.y, -out.eta_hat, &m, &opts).unwrap();
            assert_eq!(back.side, Side::Plus);
            assert!(wrap_angle(back.y - th).abs() < 1e-6, "y mismatch {}", back.y - th);
            assert!((-back.eta_hat - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn trajectory_conserves_p_and_is_monotone() {
        let m = MetricModel::perturbed(2, 0.1, 2).unwrap();
        let opts = FlowOptions::default();
        let w = m.warp(Side::Plus, 0.7, 0.4);
        let start = PhasePoint { x: 0.7, y: 0.4, xi: 1.0, eta: w.sqrt() };
        let traj = integrate_bicharacteristic(&start, &m, 1, &opts).unwrap();
        let max_res = traj.samples.iter().map(|s| s.p_residual).fold(0.0, f64::max);
        assert!(max_res <= 1e-8, "characteristic drift {max_res}");
        assert_eq!(traj.near_end.side, Side::Plus);
        assert_eq!(traj.far_end.side, Side::Minus);
        // tau strictly increasing, chart x monotone toward each end
        for w in traj.samples.windows(2) {
            assert!(w[1].tau > w[0].tau - 1e-15);
            if w[0].side == w[1].side {
                let rising = w[1].xi > 0.0;
                assert_eq!(w[1].x > w[0].x, rising, "x monotone per leg");
            }
        }
        let last = traj.samples.last().unwrap();
        assert!(last.x <= opts.x_stop * (1.0 + 1e-12));
    }

    #[test]
    fn reversed_direction_is_reparameterization() {
        let m = MetricModel::exact_de_sitter(2);
        let opts = FlowOptions::default();
        let start = PhasePoint { x: 0.5, y: 1.0, xi: 1.0, eta: m.warp(Side::Plus, 0.5, 1.0).sqrt() };
        let a = integrate_bicharacteristic(&start, &m, 1, &opts).unwrap();
        let b = integrate_bicharacteristic(&start, &m, -1, &opts).unwrap();
        let sa = &a.samples[a.samples.len() / 3];
        // same geometric point appears with negated tau
        let sb = b.samples.iter().min_by(|p, q| {
            (p.tau + sa.tau).abs().partial_cmp(&(q.tau + sa.tau).abs()).unwrap()
        });
        let sb = sb.unwrap();
        assert!((sb.tau + sa.tau).abs() < 1e-9);
        assert!((sb.x - sa.x).abs() < 1e-8);
        assert!((sb.y - sa.y).abs() < 1e-8);
    }

    #[test]
    fn radial_perturbation_matches_quadrature_oracle() {
        // Angular-wave 0 keeps the warp independent of theta, so the total
        // turning angle has the closed quadrature form
        //   -sigma eps [ int_0^2 dx/sqrt(w_+) + int_0^2 dx/sqrt(w_-) ].
        let m = MetricModel::perturbed(2, 0.1, 0).unwrap();
        let opts = FlowOptions::default();
        let out = classical_scattering_map(Side::Plus, 0.0, 1.0, &m, &opts).unwrap();
        let i_plus = tanh_sinh(|x| 1.0 / m.warp(Side::Plus, x, 0.0).sqrt(), 0.0, 2.0, 1e-13);
        let i_minus = tanh_sinh(|x| 1.0 / m.warp(Side::Minus, x, 0.0).sqrt(), 0.0, 2.0, 1e-13);
        let oracle = -(i_plus + i_minus);
        assert!((out.y - oracle).abs() < 1e-7, "flow {} vs quadrature {}", out.y, oracle);
        // the perturbed angle genuinely differs from pi
        assert!((oracle.abs() - PI).abs() > 1e-3);
    }

    #[test]
    fn sphere_map_is_antipodal_and_equivariant() {
        let opts = FlowOptions::default();
        for n in [2u32, 3] {
            let m = MetricModel::exact_de_sitter(n);
            let dim = n as usize;
            let (u, v) = if n == 2 {
                (vec![1.0, 0.0], vec![0.0, 1.0])
            } else {
                let s = (0.5f64).sqrt();
                (vec![s, s, 0.0], vec![0.0, 0.0, 1.0])
            };
            let (u1, v1) = classical_scattering_map_sphere(&u, &v, &m, &opts).unwrap();
            for i in 0..dim {
                assert!((u1[i] + u[i]).abs() < 1e-6, "antipodal in coordinate {i}");
                assert!((v1[i] + v[i]).abs() < 1e-6);
            }
            // commutes with a rotation in the (0,1) plane
            let c = 0.8f64.cos();
            let s = 0.8f64.sin();
            let rot = |p: &[f64]| {
                let mut q = p.to_vec();
                q[0] = c * p[0] - s * p[1];
                q[1] = s * p[0] + c * p[1];
                q
            };
            let (u2, v2) = classical_scattering_map_sphere(&rot(&u), &rot(&v), &m, &opts).unwrap();
            let (ru1, rv1) = (rot(&u1), rot(&v1));
            for i in 0..dim {
                assert!((u2[i] - ru1[i]).abs() < 1e-6);
                assert!((v2[i] - rv1[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exact_chart_reproduces_hyperboloid_warp() {
        // w(x) = (1 + x^2/4)^2 must equal (x cosh rho)^2 at x = 2 e^{-rho}.
        let m = MetricModel::exact_de_sitter(2);
        for rho in [0.0f64, 0.5, 1.0, 2.5, 6.0] {
            let x = 2.0 * (-rho).exp();
            let cosh = rho.cosh();
            let w = m.warp(Side::Plus, x, 0.0);
            assert!((w.sqrt() - x * cosh).abs() < 1e-12 * (1.0 + x * cosh));
        }
    }
}
