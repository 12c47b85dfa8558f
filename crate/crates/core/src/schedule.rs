//! Time-varying scalar gains restricted to families with closed-form
//! integrals, so event times never depend on numerical quadrature.
//!
//! Supported families, all positive and non-increasing on `t >= 0`:
//!
//! * `constant`:     `s(t) = a`
//! * `hyperbolic`:   `s(t) = a / (1 + t)^p` with `p` in `{1, 2}`
//! * `exponential`:  `s(t) = a * exp(-b t)`
//!
//! [`ScalarSchedule::integral`] is exact (one closed-form expression per
//! family), which is what lets the event engine place polling times
//! reproducibly. [`ratio_infimum`] computes `inf_{t>=0} num(t) / den(t)`
//! analytically for every family pair; the time-varying protocols use it to
//! certify a positive lower bound on inter-poll intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule amplitude must be positive, got {a}")]
    NonPositiveAmplitude { a: f64 },
    #[error("hyperbolic exponent must be 1 or 2, got {p}")]
    BadExponent { p: u8 },
    #[error("exponential decay rate must be positive, got {b}")]
    NonPositiveDecay { b: f64 },
    #[error("schedule evaluated at negative time {t}")]
    NegativeTime { t: f64 },
    #[error("integral bounds are reversed: t0 = {t0} > t1 = {t1}")]
    ReversedInterval { t0: f64, t1: f64 },
}

/// A positive, non-increasing scalar gain with exact integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarSchedule {
    Constant { a: f64 },
    Hyperbolic { a: f64, p: u8 },
    Exponential { a: f64, b: f64 },
}

impl ScalarSchedule {
    pub fn constant(a: f64) -> Result<Self, ScheduleError> {
        let s = ScalarSchedule::Constant { a };
        s.validate()?;
        Ok(s)
    }

    pub fn hyperbolic(a: f64, p: u8) -> Result<Self, ScheduleError> {
        let s = ScalarSchedule::Hyperbolic { a, p };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(a: f64, b: f64) -> Result<Self, ScheduleError> {
        let s = ScalarSchedule::Exponential { a, b };
        s.validate()?;
        Ok(s)
    }

    /// Parameter sanity: positive amplitude, exponent in `{1, 2}`, positive
    /// decay rate. Deserialized values must be passed through this before
    /// use; the constructors above do it for you.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        match *self {
            ScalarSchedule::Constant { a } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(ScheduleError::NonPositiveAmplitude { a });
                }
            }
            ScalarSchedule::Hyperbolic { a, p } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(ScheduleError::NonPositiveAmplitude { a });
                }
                if p != 1 && p != 2 {
                    return Err(ScheduleError::BadExponent { p });
                }
            }
            ScalarSchedule::Exponential { a, b } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(ScheduleError::NonPositiveAmplitude { a });
                }
                if !(b > 0.0) || !b.is_finite() {
                    return Err(ScheduleError::NonPositiveDecay { b });
                }
            }
        }
        Ok(())
    }

    /// `s(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> Result<f64, ScheduleError> {
        if t < 0.0 || t.is_nan() {
            return Err(ScheduleError::NegativeTime { t });
        }
        Ok(match *self {
            ScalarSchedule::Constant { a } => a,
            ScalarSchedule::Hyperbolic { a, p } => a / (1.0 + t).powi(p as i32),
            ScalarSchedule::Exponential { a, b } => a * (-b * t).exp(),
        })
    }

    /// Exact `∫_{t0}^{t1} s(τ) dτ` for `0 <= t0 <= t1`.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64, ScheduleError> {
        if t0 < 0.0 || t0.is_nan() {
            return Err(ScheduleError::NegativeTime { t: t0 });
        }
        if t1 < t0 || t1.is_nan() {
            return Err(ScheduleError::ReversedInterval { t0, t1 });
        }
        Ok(match *self {
            ScalarSchedule::Constant { a } => a * (t1 - t0),
            ScalarSchedule::Hyperbolic { a, p: 1 } => a * ((1.0 + t1) / (1.0 + t0)).ln(),
            ScalarSchedule::Hyperbolic { a, p: _ } => {
                a * (1.0 / (1.0 + t0) - 1.0 / (1.0 + t1))
            }
            ScalarSchedule::Exponential { a, b } => (a / b) * ((-b * t0).exp() - (-b * t1).exp()),
        })
    }

    /// `∫_0^∞ s`, with `f64::INFINITY` for the divergent families
    /// (`constant` and `hyperbolic` with `p = 1`).
    pub fn total_integral(&self) -> f64 {
        match *self {
            ScalarSchedule::Constant { .. } => f64::INFINITY,
            ScalarSchedule::Hyperbolic { p: 1, .. } => f64::INFINITY,
            ScalarSchedule::Hyperbolic { a, .. } => a,
            ScalarSchedule::Exponential { a, b } => a / b,
        }
    }

    pub fn is_integral_divergent(&self) -> bool {
        self.total_integral().is_infinite()
    }

    /// Whether `s(t) -> 0` as `t -> ∞` (every family except `constant`).
    pub fn decays_to_zero(&self) -> bool {
        !matches!(self, ScalarSchedule::Constant { .. })
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            ScalarSchedule::Constant { a }
            | ScalarSchedule::Hyperbolic { a, .. }
            | ScalarSchedule::Exponential { a, .. } => a,
        }
    }

    /// Same family and same decay shape (exponent / rate), amplitudes free.
    /// Sums of same-shape schedules stay in the family, which is what makes
    /// the per-agent trigger capacities of the non-uniform protocol exactly
    /// representable.
    pub fn same_shape(&self, other: &ScalarSchedule) -> bool {
        match (*self, *other) {
            (ScalarSchedule::Constant { .. }, ScalarSchedule::Constant { .. }) => true,
            (ScalarSchedule::Hyperbolic { p: p1, .. }, ScalarSchedule::Hyperbolic { p: p2, .. }) => {
                p1 == p2
            }
            (ScalarSchedule::Exponential { b: b1, .. }, ScalarSchedule::Exponential { b: b2, .. }) => {
                b1 == b2
            }
            _ => false,
        }
    }

    /// Sum of same-shape schedules (see [`ScalarSchedule::same_shape`]):
    /// amplitudes add, the shape is preserved. Returns `None` when shapes
    /// differ.
    pub fn sum_same_shape(terms: &[ScalarSchedule]) -> Option<ScalarSchedule> {
        let first = *terms.first()?;
        if !terms.iter().all(|s| first.same_shape(s)) {
            return None;
        }
        let a_sum: f64 = terms.iter().map(|s| s.amplitude()).sum();
        Some(match first {
            ScalarSchedule::Constant { .. } => ScalarSchedule::Constant { a: a_sum },
            ScalarSchedule::Hyperbolic { p, .. } => ScalarSchedule::Hyperbolic { a: a_sum, p },
            ScalarSchedule::Exponential { b, .. } => ScalarSchedule::Exponential { a: a_sum, b },
        })
    }
}

/// Exact `inf_{t >= 0} num(t) / den(t)` for every family pairing.
///
/// Returns `0.0` when the ratio tends to zero (the Zeno-prone pairings). The
/// only interior minimum occurs for hyperbolic-over-exponential with
/// `b < p`, at `t* = p/b - 1`, where the ratio is
/// `(a_num / a_den) * e^(p - b) * (b / p)^p`.
pub fn ratio_infimum(num: &ScalarSchedule, den: &ScalarSchedule) -> f64 {
    use ScalarSchedule::*;
    let at_zero = num.amplitude() / den.amplitude();
    match (*num, *den) {
        (Constant { .. }, Constant { .. }) => at_zero,
        // Denominator decays strictly faster than a constant numerator:
        // ratio grows, infimum at t = 0.
        (Constant { .. }, Hyperbolic { .. }) | (Constant { .. }, Exponential { .. }) => at_zero,
        // Numerator decays against a constant: ratio -> 0.
        (Hyperbolic { .. }, Constant { .. }) | (Exponential { .. }, Constant { .. }) => 0.0,
        (Hyperbolic { p: p1, .. }, Hyperbolic { p: p2, .. }) => {
            if p2 >= p1 {
                // (1+t)^(p2-p1) is non-decreasing: infimum at t = 0.
                at_zero
            } else {
                0.0
            }
        }
        (Exponential { b: b1, .. }, Exponential { b: b2, .. }) => {
            if b2 >= b1 {
                at_zero
            } else {
                0.0
            }
        }
        (Hyperbolic { p, .. }, Exponential { b, .. }) => {
            let p = p as f64;
            if b >= p {
                // log-derivative b - p/(1+t) >= 0 everywhere: minimum at 0.
                at_zero
            } else {
                at_zero * (p - b).exp() * (b / p).powi(p as i32)
            }
        }
        (Exponential { .. }, Hyperbolic { .. }) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_match_closed_forms() {
        let h = ScalarSchedule::hyperbolic(0.05, 1).unwrap();
        assert_eq!(h.value(0.0).unwrap(), 0.05);
        assert_eq!(h.value(1.0).unwrap(), 0.025);

        let h2 = ScalarSchedule::hyperbolic(1.0, 2).unwrap();
        assert_eq!(h2.value(1.0).unwrap(), 0.25);

        let e = ScalarSchedule::exponential(2.0, 0.5).unwrap();
        assert!((e.value(2.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);

        let c = ScalarSchedule::constant(0.25).unwrap();
        assert_eq!(c.value(123.0).unwrap(), 0.25);
    }

    #[test]
    fn integrals_match_closed_forms() {
        let c = ScalarSchedule::constant(0.25).unwrap();
        assert_eq!(c.integral(0.0, 4.0).unwrap(), 1.0);

        let h = ScalarSchedule::hyperbolic(0.05, 1).unwrap();
        let expect = 0.05 * 2.0f64.ln();
        assert!((h.integral(0.0, 1.0).unwrap() - expect).abs() < 1e-16);

        let h2 = ScalarSchedule::hyperbolic(0.25, 2).unwrap();
        // ∫_0^1 = a (1 - 1/2) = a/2
        assert!((h2.integral(0.0, 1.0).unwrap() - 0.125).abs() < 1e-16);

        let e = ScalarSchedule::exponential(1.0, 2.0).unwrap();
        let expect = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((e.integral(0.0, 1.0).unwrap() - expect).abs() < 1e-16);
    }

    #[test]
    fn total_integrals() {
        assert!(ScalarSchedule::constant(1.0).unwrap().is_integral_divergent());
        assert!(ScalarSchedule::hyperbolic(0.25, 1)
            .unwrap()
            .is_integral_divergent());
        assert_eq!(
            ScalarSchedule::hyperbolic(0.25, 2).unwrap().total_integral(),
            0.25
        );
        assert_eq!(
            ScalarSchedule::exponential(1.0, 4.0).unwrap().total_integral(),
            0.25
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ScalarSchedule::constant(0.0).is_err());
        assert!(ScalarSchedule::constant(-1.0).is_err());
        assert!(ScalarSchedule::hyperbolic(1.0, 3).is_err());
        assert!(ScalarSchedule::hyperbolic(1.0, 0).is_err());
        assert!(ScalarSchedule::exponential(1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_times() {
        let s = ScalarSchedule::constant(1.0).unwrap();
        assert!(matches!(
            s.value(-0.1),
            Err(ScheduleError::NegativeTime { .. })
        ));
        assert!(matches!(
            s.integral(-1.0, 0.0),
            Err(ScheduleError::NegativeTime { .. })
        ));
        assert!(matches!(
            s.integral(2.0, 1.0),
            Err(ScheduleError::ReversedInterval { .. })
        ));
    }

    #[test]
    fn serde_round_trip_and_tags() {
        let parsed: ScalarSchedule =
            serde_json::from_str(r#"{"kind": "hyperbolic", "a": 0.05, "p": 1}"#).unwrap();
        assert_eq!(parsed, ScalarSchedule::Hyperbolic { a: 0.05, p: 1 });
        let parsed: ScalarSchedule =
            serde_json::from_str(r#"{"kind": "exponential", "a": 1.0, "b": 0.5}"#).unwrap();
        assert_eq!(parsed, ScalarSchedule::Exponential { a: 1.0, b: 0.5 });
        let parsed: ScalarSchedule = serde_json::from_str(r#"{"kind": "constant", "a": 2.0}"#).unwrap();
        assert_eq!(parsed, ScalarSchedule::Constant { a: 2.0 });
    }

    #[test]
    fn ratio_infimum_same_shape_pairs() {
        let eps = ScalarSchedule::hyperbolic(0.05, 1).unwrap();
        let gamma = ScalarSchedule::hyperbolic(0.25, 1).unwrap();
        // Same shape: constant ratio, and 0.05/0.25 is exactly 0.2 in binary.
        assert_eq!(ratio_infimum(&eps, &gamma), 0.2);

        let e1 = ScalarSchedule::exponential(1.0, 1.0).unwrap();
        let e2 = ScalarSchedule::exponential(4.0, 1.0).unwrap();
        assert_eq!(ratio_infimum(&e1, &e2), 0.25);
    }

    #[test]
    fn ratio_infimum_detects_zeno_prone_pairs() {
        let fast = ScalarSchedule::hyperbolic(1.0, 2).unwrap();
        let slow = ScalarSchedule::hyperbolic(1.0, 1).unwrap();
        // Numerator decays faster than denominator: ratio -> 0.
        assert_eq!(ratio_infimum(&fast, &slow), 0.0);

        let e_fast = ScalarSchedule::exponential(1.0, 2.0).unwrap();
        let e_slow = ScalarSchedule::exponential(1.0, 1.0).unwrap();
        assert_eq!(ratio_infimum(&e_fast, &e_slow), 0.0);

        let e = ScalarSchedule::exponential(1.0, 1.0).unwrap();
        let h = ScalarSchedule::hyperbolic(1.0, 1).unwrap();
        assert_eq!(ratio_infimum(&e, &h), 0.0);

        let c = ScalarSchedule::constant(1.0).unwrap();
        assert_eq!(ratio_infimum(&h, &c), 0.0);
    }

    #[test]
    fn ratio_infimum_numerator_slower_is_at_zero() {
        let slow = ScalarSchedule::hyperbolic(0.05, 1).unwrap();
        let fast = ScalarSchedule::hyperbolic(0.25, 2).unwrap();
        // Ratio (a/b)(1+t) is increasing; infimum at t = 0.
        assert_eq!(ratio_infimum(&slow, &fast), 0.2);
    }

    #[test]
    fn ratio_infimum_interior_minimum_matches_grid_search() {
        // hyperbolic(a, p) over exponential(c, b) with b < p has its minimum
        // at t* = p/b - 1; cross-check the closed form against a dense grid.
        let num = ScalarSchedule::hyperbolic(2.0, 2).unwrap();
        let den = ScalarSchedule::exponential(0.5, 0.4).unwrap();
        let closed = ratio_infimum(&num, &den);
        let mut grid_min = f64::INFINITY;
        let mut t = 0.0;
        while t <= 40.0 {
            let r = num.value(t).unwrap() / den.value(t).unwrap();
            grid_min = grid_min.min(r);
            t += 1e-3;
        }
        assert!(closed <= grid_min + 1e-12);
        assert!((closed - grid_min).abs() < 1e-5, "closed {closed} grid {grid_min}");
    }

    #[test]
    fn sum_same_shape() {
        let g1 = ScalarSchedule::hyperbolic(0.25, 1).unwrap();
        let g2 = ScalarSchedule::hyperbolic(0.5, 1).unwrap();
        let sum = ScalarSchedule::sum_same_shape(&[g1, g2]).unwrap();
        assert_eq!(sum, ScalarSchedule::Hyperbolic { a: 0.75, p: 1 });

        let e = ScalarSchedule::exponential(1.0, 1.0).unwrap();
        assert!(ScalarSchedule::sum_same_shape(&[g1, e]).is_none());
    }

    /// Adaptive Simpson quadrature, used only as an independent oracle.
    fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 50)
    }

    #[test]
    fn integrals_match_adaptive_quadrature() {
        let cases = vec![
            ScalarSchedule::constant(0.25).unwrap(),
            ScalarSchedule::hyperbolic(0.05, 1).unwrap(),
            ScalarSchedule::hyperbolic(0.25, 2).unwrap(),
            ScalarSchedule::exponential(1.0, 0.1).unwrap(),
            ScalarSchedule::exponential(0.3, 2.0).unwrap(),
        ];
        for s in cases {
            for (t0, t1) in [(0.0, 100.0), (0.0, 1.0), (3.5, 17.25), (50.0, 100.0)] {
                let exact = s.integral(t0, t1).unwrap();
                let quad = simpson_adaptive(&|t| s.value(t).unwrap(), t0, t1, 1e-12);
                assert!(
                    (exact - quad).abs() <= 1e-9 * (1.0 + exact.abs()),
                    "{s:?} on [{t0}, {t1}]: exact {exact} vs quadrature {quad}"
                );
            }
        }
    }

    fn schedule_strategy() -> impl Strategy<Value = ScalarSchedule> {
        prop_oneof![
            (0.01f64..10.0).prop_map(|a| ScalarSchedule::Constant { a }),
            (0.01f64..10.0, 1u8..=2).prop_map(|(a, p)| ScalarSchedule::Hyperbolic { a, p }),
            (0.01f64..10.0, 0.01f64..3.0).prop_map(|(a, b)| ScalarSchedule::Exponential { a, b }),
        ]
    }

    proptest! {
        /// integral(t0, t1) + integral(t1, t2) == integral(t0, t2) within
        /// 1e-12 relative error.
        #[test]
        fn integral_additivity(
            s in schedule_strategy(),
            t0 in 0.0f64..50.0,
            d1 in 0.0f64..50.0,
            d2 in 0.0f64..50.0,
        ) {
            let t1 = t0 + d1;
            let t2 = t1 + d2;
            let split = s.integral(t0, t1).unwrap() + s.integral(t1, t2).unwrap();
            let whole = s.integral(t0, t2).unwrap();
            prop_assert!((split - whole).abs() <= 1e-12 * (1.0 + whole.abs()),
                "split {split} whole {whole}");
        }

        /// Values are positive and non-increasing on a coarse grid.
        #[test]
        fn values_positive_non_increasing(s in schedule_strategy()) {
            let mut prev = f64::INFINITY;
            for k in 0..=100 {
                let t = k as f64 * 0.5;
                let v = s.value(t).unwrap();
                prop_assert!(v > 0.0);
                prop_assert!(v <= prev + 1e-15);
                prev = v;
            }
        }

        /// The closed-form infimum never exceeds sampled ratio values.
        #[test]
        fn ratio_infimum_is_a_lower_bound(
            num in schedule_strategy(),
            den in schedule_strategy(),
        ) {
            let inf = ratio_infimum(&num, &den);
            for k in 0..200 {
                let t = k as f64 * 0.25;
                let r = num.value(t).unwrap() / den.value(t).unwrap();
                prop_assert!(inf <= r * (1.0 + 1e-12) + 1e-300, "inf {inf} ratio {r} at t {t}");
            }
        }
    }
}
