//! Embedded Dormand-Prince 5(4) integrator with step rejection and an
//! optional per-step projection hook.
//!
//! The projection hook is how flow and mode computations keep first
//! integrals (characteristic-set membership, Wronskians) pinned: the
//! constraint is exact analytically and only drifts through roundoff, so it
//! is re-imposed after every accepted step.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step count exceeded {max_steps} before reaching t = {t_end} (at t = {t})")]
    MaxStepsExceeded { t: f64, t_end: f64, max_steps: usize },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveRk {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveRk {
    fn default() -> Self {
        AdaptiveRk { rtol: 1e-10, atol: 1e-12, max_steps: 200_000 }
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl AdaptiveRk {
    /// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end` (either
    /// direction). `project` is applied to the state after every accepted
    /// step; `observe` sees each accepted `(t, y)` including the endpoints.
    pub fn solve_with<F, P, O>(
        &self,
        rhs: F,
        t0: f64,
        t_end: f64,
        y0: &[f64],
        mut project: P,
        mut observe: O,
    ) -> Result<Vec<f64>, OdeError>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        P: FnMut(f64, &mut [f64]),
        O: FnMut(f64, &[f64]),
    {
        let dim = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        if span == 0.0 {
            observe(t0, y0);
            return Ok(y0.to_vec());
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h = dir * (span / 100.0).min(1e-2).max(span * 1e-12);
        let mut k = vec![vec![0.0; dim]; 7];
        let mut y_stage = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];
        observe(t, &y);

        for _step in 0..self.max_steps {
            if (t - t_end).abs() <= 1e-300 {
                return Ok(y);
            }
            if dir * (t + h - t_end) > 0.0 {
                h = t_end - t;
            }

            rhs(t, &y, &mut k[0]);
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                rhs(t + C[s] * h, &y_stage, &mut k[s]);
            }

            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut y5 = 0.0;
                let mut y4 = 0.0;
                for s in 0..7 {
                    y5 += B5[s] * k[s][i];
                    y4 += B4[s] * k[s][i];
                }
                y_new[i] = y[i] + h * y5;
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                let e = h * (y5 - y4) / scale;
                err_sq += e * e;
            }
            let err = (err_sq / dim as f64).sqrt();

            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&y_new);
                project(t, &mut y);
                observe(t, &y);
                if t == t_end {
                    return Ok(y);
                }
            }
            let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= factor.clamp(0.2, 5.0);
            if h.abs() < 1e-15 * (1.0 + t.abs()) {
                return Err(OdeError::StepUnderflow { t });
            }
        }
        Err(OdeError::MaxStepsExceeded { t, t_end, max_steps: self.max_steps })
    }

    /// [`Self::solve_with`] without projection or observation.
    pub fn solve<F>(&self, rhs: F, t0: f64, t_end: f64, y0: &[f64]) -> Result<Vec<f64>, OdeError>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        self.solve_with(rhs, t0, t_end, y0, |_, _| {}, |_, _| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential() {
        let rk = AdaptiveRk::default();
        let y = rk.solve(|_, y, dy| dy[0] = y[0], 0.0, 1.0, &[1.0]).unwrap();
        assert!((y[0] - 1.0f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let rk = AdaptiveRk { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let fwd = rk.solve(rhs, 0.0, 3.0, &[1.0, 0.0]).unwrap();
        assert!((fwd[0] - 3.0f64.cos()).abs() < 1e-10);
        let back = rk.solve(rhs, 3.0, 0.0, &fwd).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-10);
        assert!(back[1].abs() < 1e-10);
    }

    #[test]
    fn projection_pins_invariant() {
        let rk = AdaptiveRk { rtol: 1e-6, atol: 1e-9, ..Default::default() };
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let y = rk
            .solve_with(
                rhs,
                0.0,
                50.0,
                &[1.0, 0.0],
                |_, y| {
                    let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
                    y[0] /= r;
                    y[1] /= r;
                },
                |_, _| {},
            )
            .unwrap();
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!((r - 1.0).abs() < 1e-14);
    }
}
