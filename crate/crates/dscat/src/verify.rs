//! Acceptance battery: one runner per criterion, each pinning its
//! tolerances in code and reporting a single pass/fail line.

use crate::evolve::{
    decay_uniqueness_probe, scattering_via_cauchy, EvolutionModel, MeshSpec,
};
use crate::expansion::{build_series, series_residual, ExpansionModel};
use crate::flow::{classical_scattering_map, FlowOptions, MetricModel, Side};
use crate::modes::{assemble_scattering, connection_matrix, ConnectionOpts};
use crate::poisson::{kernel_spec, leading_coefficient, pairing_constant, TorusFn};
use crate::psigma::{
    apply_psigma, check_conjugation, check_intertwining, quadratic_form, uniform_grid, BallField,
};
use crate::special::{sphere_volume, tanh_sinh};
use crate::spectral::{compute_spectral, symbol_ratio, symbol_ratio_elliptic, Regime};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

type C = Complex64;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String) -> CriterionReport {
    CriterionReport { id, name, pass, detail }
}

/// Run all ten criteria with the seed driving the randomized checks.
pub fn run_acceptance(seed: u64) -> Vec<CriterionReport> {
    vec![
        c1_indicial_algebra(),
        c2_classical_scattering(),
        c3_frobenius_recursion(),
        c4_threshold_log_detection(),
        c5_poisson_constants(),
        c6_psigma_identities(seed),
        c7_mode0_matrix(),
        c8_ellipticity_shadow(),
        c9_pde_cross_validation(),
        c10_empirical_uniqueness(),
    ]
}

fn c1_indicial_algebra() -> CriterionReport {
    // hand classification of the 12 test points
    let hand: &[(u32, f64, Regime)] = &[
        (2, 0.0, Regime::IntegerGap),
        (2, 3.0 / 16.0, Regime::NonIntegerGap),
        (2, 0.25, Regime::Threshold),
        (2, 1.0, Regime::ComplexRoots),
        (3, 0.0, Regime::IntegerGap),
        (3, 3.0 / 16.0, Regime::NonIntegerGap),
        (3, 0.25, Regime::NonIntegerGap),
        (3, 1.0, Regime::Threshold),
        (4, 0.0, Regime::IntegerGap),
        (4, 3.0 / 16.0, Regime::NonIntegerGap),
        (4, 0.25, Regime::NonIntegerGap),
        (4, 1.0, Regime::NonIntegerGap),
    ];
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    for &(n, lambda, want) in hand {
        let p = compute_spectral(n, lambda).unwrap();
        let scale = 1.0 + lambda.abs() + n as f64;
        let sum_err = (p.s_plus + p.s_minus - C::new(n as f64 - 1.0, 0.0)).norm() / scale;
        let prod_err = (p.s_plus * p.s_minus - C::new(lambda, 0.0)).norm() / scale;
        worst = worst.max(sum_err).max(prod_err);
        if p.regime != want {
            mismatches.push(format!("(n={n}, lambda={lambda}): {:?} != {want:?}", p.regime));
        }
    }
    let pass = worst <= 1e-12 && mismatches.is_empty();
    report(
        1,
        "indicial algebra and regime classification",
        pass,
        format!("max relative root-identity error {worst:.2e}; mismatches: {mismatches:?}"),
    )
}

fn c2_classical_scattering() -> CriterionReport {
    let start = Instant::now();
    let model = MetricModel::exact_de_sitter(2);
    let opts = FlowOptions::default();
    let mut worst_angle: f64 = 0.0;
    let mut worst_eta: f64 = 0.0;
    for i in 0..16 {
        let th = 2.0 * PI * (i as f64) / 16.0;
        let sgn = if i % 2 == 0 { 1.0 } else { -1.0 };
        let out = classical_scattering_map(Side::Plus, th, sgn, &model, &opts).unwrap();
        let mut d = (out.y - th).abs() % (2.0 * PI);
        if d > PI {
            d = 2.0 * PI - d;
        }
        worst_angle = worst_angle.max((d - PI).abs());
        worst_eta = worst_eta.max((out.eta_hat - sgn).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_angle < 1e-6 && worst_eta < 1e-6 && elapsed < 1.0;
    report(
        2,
        "classical scattering map is antipodal",
        pass,
        format!(
            "max |dtheta - pi| = {worst_angle:.2e}, max covector error {worst_eta:.2e}, runtime {elapsed:.3} s"
        ),
    )
}

fn c3_frobenius_recursion() -> CriterionReport {
    let p = compute_spectral(2, 3.0 / 16.0).unwrap();
    let zero = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let series = build_series(&[zero, zero], &[zero, one], &p, &ExpansionModel::NormalForm, 4)
        .unwrap();
    let a2 = series.modes[1].minus.coeffs[2][0];
    let a2_exact = (a2 - C::new(-1.0 / 3.0, 0.0)).norm() == 0.0;
    let slope = series_residual(&series, (1e-3, 1e-1), 24).per_mode[1].slope.unwrap_or(f64::NAN);
    let pass = a2_exact && slope >= 5.15;
    report(
        3,
        "Frobenius recursion: a2 = -1/3 and residual slope",
        pass,
        format!("a2 = {a2} (exact match: {a2_exact}), slope {slope:.3} >= 5.15"),
    )
}

fn c4_threshold_log_detection() -> CriterionReport {
    let mesh = MeshSpec { n_theta: 64, cfl: 0.4, stop_x: 1e-2 };
    let thr = compute_spectral(2, 0.25).unwrap();
    let fits_thr =
        scattering_via_cauchy(&[(1.0, 1.0)], &thr, &EvolutionModel::Exact, &mesh).unwrap();
    let ratio = fits_thr[0].residual_power / fits_thr[0].residual_log.max(1e-300);
    let generic = compute_spectral(2, 3.0 / 16.0).unwrap();
    let fits_gen =
        scattering_via_cauchy(&[(1.0, 1.0)], &generic, &EvolutionModel::Exact, &mesh).unwrap();
    let pass = fits_thr[0].log_flag && ratio >= 10.0 && !fits_gen[0].log_flag;
    report(
        4,
        "threshold log detection",
        pass,
        format!(
            "lambda=1/4: power/log residual ratio {ratio:.1} (flag {}), lambda=3/16 flag {}",
            fits_thr[0].log_flag, fits_gen[0].log_flag
        ),
    )
}

fn c5_poisson_constants() -> CriterionReport {
    let mut worst: f64 = 0.0;
    for n in [2u32, 3, 4] {
        for s in [0.0, 0.5, 1.0, 1.5] {
            let direct = sphere_volume(n - 2)
                * tanh_sinh(|r| (1.0 - r * r).powf(s) * r.powi(n as i32 - 2), 0.0, 1.0, 1e-14);
            let formula = pairing_constant(C::new(s, 0.0), n).unwrap().re;
            worst = worst.max((formula - direct).abs() / (1.0 + direct.abs()));
        }
    }
    let v2 = pairing_constant(C::new(0.0, 0.0), 2).unwrap().re;
    let v3 = pairing_constant(C::new(0.0, 0.0), 3).unwrap().re;

    // leading-coefficient recovery for g = cos y at x = 1e-2
    let p = compute_spectral(2, 3.0 / 16.0).unwrap();
    let spec = kernel_spec(p.s_hat_plus, 2).unwrap();
    let g = TorusFn::cosine(1, 4);
    let lead = leading_coefficient(&spec, &g, 1e-2).unwrap();
    let rec_err = lead.sup_diff(&g, 128);

    let pass = worst <= 1e-10 && (v2 - 2.0).abs() < 1e-12 && (v3 - PI).abs() < 1e-10 && rec_err < 1e-4;
    report(
        5,
        "Poisson pairing constants and leading recovery",
        pass,
        format!(
            "max formula/quadrature gap {worst:.2e}; c(0,2) = {v2}; c(0,3) - pi = {:.2e}; cos-recovery {rec_err:.2e}",
            v3 - PI
        ),
    )
}

fn c6_psigma_identities(seed: u64) -> CriterionReport {
    // intertwining exact on degree <= 4, exactly zero for integer sigma
    let exact0 = check_intertwining(C::new(2.0, 0.0), 3, 0.25, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca7);
    let mut float_worst: f64 = 0.0;
    for _ in 0..4 {
        let sigma = rng.random_range(-2.0..2.0);
        float_worst = float_worst.max(check_intertwining(C::new(sigma, 0.0), 3, 0.25, 4));
    }

    // conjugation residual order >= 3.5 under refinement
    let bump = |a: f64, b: f64| {
        move |r: f64| {
            let z = (2.0 * r - a - b) / (b - a);
            if z.abs() >= 1.0 {
                C::new(0.0, 0.0)
            } else {
                C::new((std::f64::consts::FRAC_PI_2 * z).cos().powi(12), 0.0)
            }
        }
    };
    let mut errs = Vec::new();
    for pts in [128usize, 256, 512, 1024] {
        let f = BallField::from_fn(3, 0, uniform_grid(0.01, 0.95, pts), bump(0.1, 0.85));
        errs.push(check_conjugation(0.9, -0.4, &f, -0.2).unwrap());
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, e) in errs.iter().enumerate() {
        let x = i as f64 - 1.5;
        num += x * (-e.log2());
        den += x * x;
    }
    let conj_order = num / den;

    // null vector at lambda = -2 (s_hat_+ = 1) on a dyadic 1024-point grid
    let pnull = compute_spectral(2, -2.0).unwrap();
    let grid: Vec<f64> = (1..=1024).map(|j| j as f64 / 1024.0).collect();
    let f = BallField::from_fn(2, 0, grid, |r| C::new(1.0 - r * r, 0.0));
    let out = apply_psigma(pnull.s_hat_plus, &f, pnull.lambda).unwrap();
    let null_res = out
        .r
        .iter()
        .zip(&out.values)
        .filter(|(r, _)| **r <= 0.99)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);

    // positivity on 100 random bumps with sigma > s_hat_+, lambda < 1/4
    let mut positive = true;
    let mut min_q = f64::INFINITY;
    for _ in 0..100 {
        let lambda = rng.random_range(-2.0..0.2);
        let p = compute_spectral(2, lambda).unwrap();
        let sigma = p.s_hat_plus.re.max(0.0) + rng.random_range(0.05..2.0);
        let a = rng.random_range(0.05..0.4);
        let b = rng.random_range(a + 0.2..0.95);
        let amp = rng.random_range(0.1..3.0);
        let grid = uniform_grid(0.005, 0.99, 512);
        let f = BallField::from_fn(2, 0, grid, |r| {
            let z = (2.0 * r - a - b) / (b - a);
            if z.abs() >= 1.0 {
                C::new(0.0, 0.0)
            } else {
                C::new(amp * (std::f64::consts::FRAC_PI_2 * z).cos().powi(12), 0.0)
            }
        });
        let q = quadratic_form(sigma, &f, lambda).unwrap();
        min_q = min_q.min(q);
        positive &= q > 0.0;
    }

    let pass = exact0 == 0.0 && float_worst < 1e-12 && conj_order >= 3.5 && null_res < 1e-10 && positive;
    report(
        6,
        "P_sigma identities",
        pass,
        format!(
            "intertwining: integer-sigma residual {exact0:.1e}, float worst {float_worst:.1e}; conjugation order {conj_order:.2}; null-vector residual {null_res:.2e}; min quadratic form {min_q:.3e}"
        ),
    )
}

fn c7_mode0_matrix() -> CriterionReport {
    let p = compute_spectral(2, 0.0).unwrap();
    let conn = connection_matrix(0, &p, &ConnectionOpts::default()).unwrap();
    let want = [[C::new(-1.0, 0.0), C::new(0.0, 0.0)], [C::new(PI, 0.0), C::new(1.0, 0.0)]];
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((conn.matrix[i][j] - want[i][j]).norm());
        }
    }
    report(
        7,
        "mode-0 connection matrix [[-1,0],[pi,1]]",
        worst < 1e-8,
        format!("max entry deviation {worst:.2e}"),
    )
}

fn c8_ellipticity_shadow() -> CriterionReport {
    let p = compute_spectral(2, 3.0 / 16.0).unwrap();
    let s = assemble_scattering(32, &p, &ConnectionOpts::default()).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for b in &s.blocks[1..] {
        for row in &b.renorm_symmetric {
            for e in row {
                lo = lo.min(e.norm());
                hi = hi.max(e.norm());
            }
        }
    }
    let ratio = hi / lo;
    let sr = symbol_ratio(&p);
    let sr_is_i = (sr - C::i()).norm() < 1e-12;
    let pass = ratio <= 10.0 && lo >= 1e-3 * hi && sr_is_i && symbol_ratio_elliptic(&p);
    report(
        8,
        "renormalized blocks bounded; symbol ratio = i",
        pass,
        format!("entry range [{lo:.3e}, {hi:.3e}], ratio {ratio:.2}; symbol ratio {sr}"),
    )
}

fn c9_pde_cross_validation() -> CriterionReport {
    let start = Instant::now();
    let p = compute_spectral(2, 3.0 / 16.0).unwrap();
    let pairs: Vec<(f64, f64)> = (0..=8).map(|k| (1.0 / (1.0 + k as f64), 0.5)).collect();
    let conns: Vec<_> = (0..=8)
        .map(|k| connection_matrix(k, &p, &ConnectionOpts::default()).unwrap())
        .collect();
    let run = |n_theta: usize| -> f64 {
        let mesh = MeshSpec { n_theta, ..MeshSpec::default() };
        let fits = scattering_via_cauchy(&pairs, &p, &EvolutionModel::Exact, &mesh).unwrap();
        let mut worst: f64 = 0.0;
        for (k, fit) in fits.iter().enumerate() {
            let want = conns[k].apply([C::new(pairs[k].0, 0.0), C::new(pairs[k].1, 0.0)]);
            worst = worst.max((fit.g_plus - want[0].re).abs());
            worst = worst.max((fit.g_minus - want[1].re).abs());
        }
        worst
    };
    let coarse = run(MeshSpec::default().n_theta);
    let fine = run(2 * MeshSpec::default().n_theta);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = coarse < 1e-3 && coarse / fine >= 3.0 && elapsed < 300.0;
    report(
        9,
        "PDE/mode cross-validation",
        pass,
        format!(
            "max |Cauchy-route - connection| = {coarse:.2e} at default resolution, {fine:.2e} doubled (gain {:.1}x), runtime {elapsed:.1} s",
            coarse / fine
        ),
    )
}

fn c10_empirical_uniqueness() -> CriterionReport {
    // The criterion asserts interior scaling eps^{s_- + N}.  The measured
    // exponent is eps^{s_- + N - s_+}: Cauchy data of size eps^{s_-+N} at
    // offset eps project onto the growing frame with weight eps^{-s_+}
    // (Wronskian projection), as the lambda = 0 closed form {1, arctan t}
    // shows explicitly.  The stated assertion is evaluated as written and
    // the corrected rate is reported alongside.
    let p = compute_spectral(2, 3.0 / 16.0).unwrap();
    let mesh = MeshSpec { n_theta: 64, cfl: 0.4, stop_x: 2e-3 };
    let offsets = [0.04, 0.08, 0.16];
    let mut lines = Vec::new();
    let mut stated_pass = true;
    let mut corrected_pass = true;
    let mut fitted = Vec::new();
    for n_order in [2usize, 4] {
        let rep =
            decay_uniqueness_probe(&p, &EvolutionModel::Exact, &mesh, n_order, 1, &offsets)
                .unwrap();
        let claimed = p.s_minus.re + n_order as f64;
        let corrected = claimed - p.s_plus.re;
        stated_pass &= (rep.fitted_exponent - claimed).abs() <= 0.3;
        corrected_pass &= (rep.fitted_exponent - corrected).abs() <= 0.3;
        lines.push(format!(
            "N={n_order}: fitted {:.3} (stated rate {claimed:.2}, projection rate {corrected:.2}), control O(1) field {:.3}",
            rep.fitted_exponent, rep.control_interior
        ));
        fitted.push(rep.fitted_exponent);
    }
    // two extra orders of smallness between N = 2 and N = 4
    let increment_ok = ((fitted[1] - fitted[0]) - 2.0).abs() < 0.2;
    report(
        10,
        "empirical uniqueness scaling",
        stated_pass,
        format!(
            "{}; N-increment {:.2} (want 2); corrected-rate check {}",
            lines.join("; "),
            fitted[1] - fitted[0],
            if corrected_pass && increment_ok { "PASS" } else { "FAIL" }
        ),
    )
}

/// Render the reports as a fixed-width table.
pub fn format_table(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "[{}] {:>2}  {:<48} {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        ));
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    out.push_str(&format!("{passed}/{} criteria passed\n", reports.len()));
    out
}
