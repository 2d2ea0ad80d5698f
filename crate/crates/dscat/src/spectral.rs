//! Indicial roots, growth exponents and weight regimes for
//! `P = Box - lambda` on an n-dimensional asymptotically de Sitter space.
//!
//! Everything downstream consumes [`SpectralParams`]: the roots of
//! `s(n-1-s) = lambda`,
//!
//! ```text
//! s_pm = (n-1)/2 +- sqrt((n-1)^2/4 - lambda),
//! ```
//!
//! their shifts `s_hat_pm = s_pm - (n-1)`, the decay threshold
//! `l(lambda) = Re sqrt((n-1)^2/4 - lambda)`, and a regime tag telling the
//! expansion machinery whether logarithmic terms can occur.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Tolerance on `|gap - round(gap)|` below which the gap is declared an
/// integer when it is not exactly representable. Regime branching must be
/// stable under float noise in `lambda`.
pub const INTEGER_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("dimension must be >= 2, got {0}")]
    DimensionTooSmall(u32),
    #[error("spectral parameter must be finite, got {0}")]
    NonFiniteLambda(f64),
}

/// How the two indicial roots relate; controls which expansion ansatz the
/// boundary recursion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `s_plus - s_minus` real, positive, not an integer: both branches are
    /// plain power series.
    NonIntegerGap,
    /// `s_plus - s_minus` a positive integer: the minus branch acquires a
    /// `x^gap log x` block.
    IntegerGap,
    /// `lambda = (n-1)^2/4`: double root, the second solution carries
    /// `log x` at leading order.
    Threshold,
    /// `lambda > (n-1)^2/4`: roots `(n-1)/2 +- i mu` are complex; exponents
    /// oscillate.
    ComplexRoots,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralParams {
    pub n: u32,
    pub lambda: f64,
    pub s_plus: Complex64,
    pub s_minus: Complex64,
    pub s_hat_plus: Complex64,
    pub s_hat_minus: Complex64,
    /// `l(lambda) = Re sqrt((n-1)^2/4 - lambda) >= 0`.
    pub l_lambda: f64,
    pub regime: Regime,
}

/// Sign classification of the commutator weights at exponent `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightRegime {
    AllPositive,
    AllNegative,
    /// `r` lies in the excluded set where the three commutator coefficients
    /// cannot be given one sign. A value, not an error: the estimate is
    /// simply unavailable there.
    Degenerate,
}

/// Roots and regime for dimension `n` and spectral parameter `lambda`.
pub fn compute_spectral(n: u32, lambda: f64) -> Result<SpectralParams, SpectralError> {
    if n < 2 {
        return Err(SpectralError::DimensionTooSmall(n));
    }
    if !lambda.is_finite() {
        return Err(SpectralError::NonFiniteLambda(lambda));
    }

    let half = (n as f64 - 1.0) / 2.0;
    let crit = half * half; // (n-1)^2/4
    let disc = crit - lambda;

    let (s_plus, s_minus, l_lambda, regime) = if disc < 0.0 {
        let mu = (-disc).sqrt();
        (
            Complex64::new(half, mu),
            Complex64::new(half, -mu),
            0.0,
            Regime::ComplexRoots,
        )
    } else if disc == 0.0 {
        (
            Complex64::new(half, 0.0),
            Complex64::new(half, 0.0),
            0.0,
            Regime::Threshold,
        )
    } else {
        let root = disc.sqrt();
        let gap = 2.0 * root;
        let k = gap.round();
        // Exact when 4*disc is a representable perfect square (the usual
        // case for rational inputs), tolerance fallback otherwise.
        let integer_gap = k >= 1.0 && (k * k == 4.0 * disc || (gap - k).abs() <= INTEGER_GAP_TOL);
        let regime = if integer_gap {
            Regime::IntegerGap
        } else {
            Regime::NonIntegerGap
        };
        (
            Complex64::new(half + root, 0.0),
            Complex64::new(half - root, 0.0),
            root,
            regime,
        )
    };

    let shift = Complex64::new(n as f64 - 1.0, 0.0);
    Ok(SpectralParams {
        n,
        lambda,
        s_plus,
        s_minus,
        s_hat_plus: s_plus - shift,
        s_hat_minus: s_minus - shift,
        l_lambda,
        regime,
    })
}

impl SpectralParams {
    /// `s_plus - s_minus = 2 sqrt((n-1)^2/4 - lambda)`.
    pub fn gap(&self) -> Complex64 {
        self.s_plus - self.s_minus
    }

    /// The threshold value `(n-1)^2/4` of `lambda`.
    pub fn critical_lambda(&self) -> f64 {
        let half = (self.n as f64 - 1.0) / 2.0;
        half * half
    }

    /// Integer gap size when in the [`Regime::IntegerGap`] regime.
    pub fn integer_gap(&self) -> Option<u32> {
        match self.regime {
            Regime::IntegerGap => Some(self.gap().re.round() as u32),
            _ => None,
        }
    }

    /// Indicial polynomial `I(s) = s(n-1-s) - lambda`; vanishes exactly at
    /// `s_plus` and `s_minus`.
    pub fn indicial(&self, s: Complex64) -> Complex64 {
        s * (Complex64::new(self.n as f64 - 1.0, 0.0) - s) - self.lambda
    }
}

/// Sign regime of the three commutator coefficients at weight exponent `r`:
/// all positive iff `r > max(0, 1-2l)` and `r != 1+2l`, all negative iff
/// `r < min(0, 1-2l)`, excluded otherwise.
pub fn weight_regime(r: f64, params: &SpectralParams) -> WeightRegime {
    let l = params.l_lambda;
    if r > (1.0 - 2.0 * l).max(0.0) && r != 1.0 + 2.0 * l {
        WeightRegime::AllPositive
    } else if r < (1.0 - 2.0 * l).min(0.0) {
        WeightRegime::AllNegative
    } else {
        WeightRegime::Degenerate
    }
}

/// `exp(i pi (s_plus - s_minus))`, the ratio of the two principal-symbol
/// branches of the renormalized boundary-data map. A value different from 1
/// (gap not an even integer) witnesses ellipticity.
pub fn symbol_ratio(params: &SpectralParams) -> Complex64 {
    (Complex64::i() * std::f64::consts::PI * params.gap()).exp()
}

/// Whether [`symbol_ratio`] differs from 1, i.e. the gap is not an even
/// integer and the two-sided symbol matrix is invertible.
pub fn symbol_ratio_elliptic(params: &SpectralParams) -> bool {
    (symbol_ratio(params) - Complex64::new(1.0, 0.0)).norm() > 1e-9
}

fn serialize_c64<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    // Real values print as plain numbers so that e.g. s_plus: 1.0 stays a
    // scalar in the JSON; complex roots become {"re":..,"im":..}.
    if z.im == 0.0 {
        s.serialize_f64(z.re)
    } else {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &z.re)?;
        st.serialize_field("im", &z.im)?;
        st.end()
    }
}

impl Serialize for SpectralParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Flat<'a> {
            n: u32,
            lambda: f64,
            #[serde(serialize_with = "serialize_c64")]
            s_plus: &'a Complex64,
            #[serde(serialize_with = "serialize_c64")]
            s_minus: &'a Complex64,
            #[serde(serialize_with = "serialize_c64")]
            s_hat_plus: &'a Complex64,
            #[serde(serialize_with = "serialize_c64")]
            s_hat_minus: &'a Complex64,
            l_lambda: f64,
            regime: Regime,
        }
        Flat {
            n: self.n,
            lambda: self.lambda,
            s_plus: &self.s_plus,
            s_minus: &self.s_minus,
            s_hat_plus: &self.s_hat_plus,
            s_hat_minus: &self.s_hat_minus,
            l_lambda: self.l_lambda,
            regime: self.regime,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp(n: u32, lambda: f64) -> SpectralParams {
        compute_spectral(n, lambda).unwrap()
    }

    #[test]
    fn n2_lambda0() {
        let p = sp(2, 0.0);
        assert_eq!(p.s_plus, Complex64::new(1.0, 0.0));
        assert_eq!(p.s_minus, Complex64::new(0.0, 0.0));
        assert_eq!(p.l_lambda, 0.5);
        assert_eq!(p.regime, Regime::IntegerGap);
        assert_eq!(p.integer_gap(), Some(1));
    }

    #[test]
    fn n2_threshold() {
        let p = sp(2, 0.25);
        assert_eq!(p.s_plus, Complex64::new(0.5, 0.0));
        assert_eq!(p.s_minus, Complex64::new(0.5, 0.0));
        assert_eq!(p.regime, Regime::Threshold);
    }

    #[test]
    fn n2_quarter_gap() {
        let p = sp(2, 3.0 / 16.0);
        assert!((p.s_plus.re - 0.75).abs() < 1e-15);
        assert!((p.s_minus.re - 0.25).abs() < 1e-15);
        assert!((p.gap().re - 0.5).abs() < 1e-15);
        assert_eq!(p.regime, Regime::NonIntegerGap);
    }

    #[test]
    fn n4_lambda0() {
        let p = sp(4, 0.0);
        assert_eq!(p.s_plus, Complex64::new(3.0, 0.0));
        assert_eq!(p.s_minus, Complex64::new(0.0, 0.0));
        assert_eq!(p.s_hat_plus, Complex64::new(0.0, 0.0));
        assert_eq!(p.s_hat_minus, Complex64::new(-3.0, 0.0));
        assert_eq!(p.regime, Regime::IntegerGap);
    }

    #[test]
    fn complex_roots() {
        let p = sp(2, 1.0);
        assert_eq!(p.regime, Regime::ComplexRoots);
        let mu = (1.0f64 - 0.25).sqrt();
        assert!((p.s_plus - Complex64::new(0.5, mu)).norm() < 1e-15);
        assert_eq!(p.l_lambda, 0.0);
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(
            compute_spectral(1, 0.0).unwrap_err(),
            SpectralError::DimensionTooSmall(1)
        );
        assert!(compute_spectral(2, f64::NAN).is_err());
    }

    #[test]
    fn weight_regime_examples() {
        let p = sp(2, 0.0); // l = 1/2, excluded value r = 2
        assert_eq!(weight_regime(3.0, &p), WeightRegime::AllPositive);
        assert_eq!(weight_regime(-1.0, &p), WeightRegime::AllNegative);
        assert_eq!(weight_regime(2.0, &p), WeightRegime::Degenerate);
    }

    #[test]
    fn symbol_ratio_examples() {
        // gap 1/2 -> i
        let p = sp(2, 3.0 / 16.0);
        assert!((symbol_ratio(&p) - Complex64::i()).norm() < 1e-14);
        assert!(symbol_ratio_elliptic(&p));
        // gap 3 -> -1
        let p = sp(4, 0.0);
        assert!((symbol_ratio(&p) + Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert!(symbol_ratio_elliptic(&p));
        // gap 2 -> +1, not elliptic
        let p = sp(3, 0.0);
        assert!((symbol_ratio(&p) - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert!(!symbol_ratio_elliptic(&p));
    }

    #[test]
    fn threshold_tag_is_exact() {
        for n in 2..6u32 {
            let crit = ((n as f64) - 1.0).powi(2) / 4.0;
            assert_eq!(sp(n, crit).regime, Regime::Threshold);
            assert_ne!(sp(n, crit - 1e-13).regime, Regime::Threshold);
        }
    }

    #[test]
    fn json_shape() {
        let p = sp(2, 0.0);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["s_plus"], serde_json::json!(1.0));
        assert_eq!(v["regime"], serde_json::json!("IntegerGap"));
        let c = sp(2, 1.0);
        let v = serde_json::to_value(&c).unwrap();
        assert!(v["s_plus"]["im"].as_f64().unwrap() > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        /// Root sum and product identities to 1e-12 relative.
        #[test]
        fn root_identities(n in 2u32..8, lambda in -50.0f64..50.0) {
            let p = sp(n, lambda);
            let sum = p.s_plus + p.s_minus;
            let prod = p.s_plus * p.s_minus;
            let scale = 1.0 + lambda.abs() + n as f64;
            prop_assert!((sum.re - (n as f64 - 1.0)).abs() <= 1e-12 * scale);
            prop_assert!(sum.im.abs() <= 1e-12 * scale);
            prop_assert!((prod.re - lambda).abs() <= 1e-12 * scale);
            prop_assert!(prod.im.abs() <= 1e-12 * scale);
            // shifted roots are exact shifts
            prop_assert_eq!(p.s_hat_plus, p.s_plus - Complex64::new(n as f64 - 1.0, 0.0));
        }

        /// l(lambda) is non-increasing and vanishes past the threshold.
        #[test]
        fn l_monotone(n in 2u32..8, a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pl = sp(n, lo);
            let ph = sp(n, hi);
            prop_assert!(pl.l_lambda >= ph.l_lambda - 1e-12);
            if hi >= pl.critical_lambda() {
                prop_assert_eq!(ph.l_lambda, 0.0);
            }
        }

        /// Regimes partition the input space: exactly one tag holds, and the
        /// positive/negative weight ranges never overlap.
        #[test]
        fn weight_ranges_disjoint(n in 2u32..8, lambda in -50.0f64..50.0, r in -10.0f64..10.0) {
            let p = sp(n, lambda);
            let w = weight_regime(r, &p);
            let pos = r > (1.0 - 2.0 * p.l_lambda).max(0.0) && r != 1.0 + 2.0 * p.l_lambda;
            let neg = r < (1.0 - 2.0 * p.l_lambda).min(0.0);
            prop_assert!(!(pos && neg));
            match w {
                WeightRegime::AllPositive => prop_assert!(pos),
                WeightRegime::AllNegative => prop_assert!(neg),
                WeightRegime::Degenerate => prop_assert!(!pos && !neg),
            }
        }

        /// |symbol ratio| = 1 whenever lambda <= (n-1)^2/4.
        #[test]
        fn symbol_ratio_unit_modulus(n in 2u32..8, lambda in -50.0f64..50.0) {
            let p = sp(n, lambda);
            if lambda <= p.critical_lambda() {
                prop_assert!((symbol_ratio(&p).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
