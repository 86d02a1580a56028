//! Closed-form error bounds and predicted curves.
//!
//! This module evaluates the white-noise-hypothesis RMS prediction, the
//! concentration band `[A' (mu - c1 sqrt(log k) lambda^{-1/2} delta),
//! A (mu + c1 sqrt(log k) lambda^{-1/2} delta)]`, the bias-term cap
//! `(delta/2)(1 + c_K sqrt(k/m))`, and the Gaussian bias bracket
//! `[2|x|(e^{-2 pi^2 |x|^2 / delta^2} - e^{-8 pi^2 |x|^2 / delta^2}),
//! 2|x| e^{-2 pi^2 |x|^2 / delta^2}]`.
//!
//! The absolute constants `C` (inside `c1`) and `c3` are not pinned by the
//! theory; they default to `C = 1` and `c3 = 1/8` and are exposed as
//! configuration. The bands are qualitative envelopes, not certified
//! probabilities.

use crate::error::{Error, Result};

/// Band constants for a given ensemble and redundancy `lambda = m/k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    /// `c_K`: 1 for the Gaussian ensemble; configurable elsewhere.
    pub c_k_ensemble: f64,
    /// `c1 = C sqrt(ln(e^2 / c2))`.
    pub c1: f64,
    pub c2: f64,
    /// Absolute exponent constant in the failure probability (default 1/8).
    pub c3: f64,
    pub lambda: f64,
}

impl TheoremConstants {
    /// Builds the constants with `C = 1`.
    pub fn new(c_k_ensemble: f64, c2: f64, lambda: f64) -> Result<Self> {
        Self::with_big_c(c_k_ensemble, c2, 1.0, lambda)
    }

    /// Builds the constants with an explicit absolute constant `C`.
    pub fn with_big_c(c_k_ensemble: f64, c2: f64, big_c: f64, lambda: f64) -> Result<Self> {
        if !(0.0 < c2 && c2 < 1.0) {
            return Err(Error::Config(format!("c2 must lie in (0,1), got {c2}")));
        }
        if c_k_ensemble <= 0.0 || big_c <= 0.0 || lambda <= 0.0 {
            return Err(Error::Config(
                "c_K, C, and lambda must be positive".into(),
            ));
        }
        let c1 = big_c * (std::f64::consts::E.powi(2) / c2).ln().sqrt();
        Ok(Self { c_k_ensemble, c1, c2, c3: 0.125, lambda })
    }

    /// Threshold `(2 c_K)^2` below which the upper constant blows up.
    pub fn lambda_threshold(&self) -> f64 {
        4.0 * self.c_k_ensemble * self.c_k_ensemble
    }

    /// `A = (1/2 - c_K lambda^{-1/2})^{-2}`, defined for
    /// `lambda > (2 c_K)^2`.
    pub fn a_upper(&self) -> Result<f64> {
        let t = 0.5 - self.c_k_ensemble / self.lambda.sqrt();
        if t <= 0.0 {
            return Err(Error::DegenerateConstants {
                lambda: self.lambda,
                threshold: self.lambda_threshold(),
            });
        }
        Ok(t.powi(-2))
    }

    /// `A' = (3/2 + c_K lambda^{-1/2})^{-2}`, always defined and in (0, 4/9].
    pub fn a_lower(&self) -> f64 {
        let t = 1.5 + self.c_k_ensemble / self.lambda.sqrt();
        t.powi(-2)
    }
}

/// White-noise-hypothesis RMS prediction
/// `sqrt(|pinv(E)|_F^2 delta^2 / 12)`.
pub fn wnh_prediction(delta: f64, frob_norm_pinv: f64) -> f64 {
    (frob_norm_pinv * frob_norm_pinv * delta * delta / 12.0).sqrt()
}

/// The prediction for a unit-norm tight frame, where
/// `|pinv(E)|_F^2 = k/m`: `delta sqrt(k/(12 m))`.
pub fn wnh_prediction_tight(k: usize, m: usize, delta: f64) -> f64 {
    delta * (k as f64 / (12.0 * m as f64)).sqrt()
}

/// Error band `(lower, upper)` around the bias term `mu`:
/// `lower = A' max(0, mu - c1 sqrt(log k) lambda^{-1/2} delta)` and
/// `upper = A (mu + c1 sqrt(log k) lambda^{-1/2} delta)`.
/// Natural logarithm; requires `k >= 3` and `lambda > (2 c_K)^2`.
pub fn theorem1_band(
    mu: f64,
    constants: &TheoremConstants,
    k: usize,
    delta: f64,
) -> Result<(f64, f64)> {
    if k < 3 {
        return Err(Error::Config(format!("band requires k >= 3, got {k}")));
    }
    let a = constants.a_upper()?;
    let a_prime = constants.a_lower();
    let fluctuation =
        constants.c1 * (k as f64).ln().sqrt() / constants.lambda.sqrt() * delta;
    let lower = a_prime * (mu - fluctuation).max(0.0);
    let upper = a * (mu + fluctuation);
    Ok((lower, upper))
}

/// Worst-case cap on the bias term: `(delta/2)(1 + c_K sqrt(k/m))`.
pub fn mu_cap(delta: f64, k: usize, m: usize, c_k_ensemble: f64) -> f64 {
    delta / 2.0 * (1.0 + c_k_ensemble * (k as f64 / m as f64).sqrt())
}

/// Two-term alternating-series bracket for the Gaussian bias term:
/// `(2|x|(t1 - t2), 2|x| t1)` with `t1 = exp(-2 pi^2 |x|^2/delta^2)` and
/// `t2 = exp(-8 pi^2 |x|^2/delta^2)`.
pub fn gaussian_mu_bracket(x_norm: f64, delta: f64) -> (f64, f64) {
    if x_norm == 0.0 {
        return (0.0, 0.0);
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let r = x_norm * x_norm / (delta * delta);
    let t1 = (-2.0 * pi2 * r).exp();
    let t2 = (-8.0 * pi2 * r).exp();
    (2.0 * x_norm * (t1 - t2), 2.0 * x_norm * t1)
}

/// The band for Gaussian frames: applies [`theorem1_band`] with `c_K = 1`
/// and the Gaussian bracket standing in for `mu` (the lower band uses the
/// bracket's lower edge, the upper band its upper edge).
pub fn gaussian_corollary_band(
    x_norm: f64,
    delta: f64,
    lambda: f64,
    k: usize,
    c1: f64,
) -> Result<(f64, f64)> {
    if k < 3 {
        return Err(Error::Config(format!("band requires k >= 3, got {k}")));
    }
    let constants = TheoremConstants {
        c_k_ensemble: 1.0,
        c1,
        c2: 0.05,
        c3: 0.125,
        lambda,
    };
    let a = constants.a_upper()?;
    let a_prime = constants.a_lower();
    let (mu_lo, mu_hi) = gaussian_mu_bracket(x_norm, delta);
    let fluctuation = c1 * (k as f64).ln().sqrt() / lambda.sqrt() * delta;
    let lower = a_prime * (mu_lo - fluctuation).max(0.0);
    let upper = a * (mu_hi + fluctuation);
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_frame_prediction_value() {
        // k=20, m=2000, delta=0.1 -> 0.1 sqrt(20/24000)
        let p = wnh_prediction_tight(20, 2000, 0.1);
        assert!((p - 2.8868e-3).abs() < 1e-6);
        assert_eq!(wnh_prediction(0.0, 3.0), 0.0);
    }

    #[test]
    fn band_constants_at_lambda_16() {
        let c = TheoremConstants::new(1.0, 0.5, 16.0).unwrap();
        assert!((c.a_upper().unwrap() - 16.0).abs() < 1e-12);
        assert!((c.a_lower() - 16.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn band_degenerates_at_threshold() {
        let c = TheoremConstants::new(1.0, 0.5, 4.0).unwrap();
        assert!(c.a_upper().is_err());
        assert!(theorem1_band(0.1, &c, 20, 0.1).is_err());
    }

    #[test]
    fn asymptotic_constants() {
        let c = TheoremConstants::new(1.0, 0.5, 1e12).unwrap();
        assert!((c.a_upper().unwrap() - 4.0).abs() < 1e-4);
        assert!((c.a_lower() - 4.0 / 9.0).abs() < 1e-6);
    }

    #[test]
    fn cap_examples() {
        assert!((mu_cap(0.1, 20, 2000, 1.0) - 0.055).abs() < 1e-15);
        // m -> infinity limit is delta/2
        assert!((mu_cap(0.1, 20, usize::MAX, 1.0) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn bracket_at_zero_signal() {
        assert_eq!(gaussian_mu_bracket(0.0, 0.5), (0.0, 0.0));
    }

    #[test]
    fn band_ordering_and_monotonicity() {
        let mut prev_upper = f64::INFINITY;
        for lam in [5.0, 8.0, 16.0, 64.0, 256.0] {
            let c = TheoremConstants::new(1.0, 0.1, lam).unwrap();
            let (lo, hi) = theorem1_band(0.3, &c, 20, 0.1).unwrap();
            assert!(lo <= hi);
            assert!(hi < prev_upper, "upper band not decreasing at lambda={lam}");
            prev_upper = hi;
        }
    }
}
