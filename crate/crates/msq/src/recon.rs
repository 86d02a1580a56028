//! Quantize-then-linearly-reconstruct: `x_hat = pinv(E) Q(E x)` and its
//! Euclidean error, for a fixed signal and a drawn frame.
//!
//! Complex frames solve the complex least-squares reconstruction and return
//! the real part, with the discarded imaginary mass reported as a
//! diagnostic.

use num_complex::Complex64;

use crate::ensembles::{EnsembleKind, FrameEntries, FrameMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, Pseudoinverse, DEFAULT_REL_TOL};
use crate::quantizer::{q_delta, QuantizerConfig};

/// A fixed real signal with its cached Euclidean norm.
#[derive(Debug, Clone)]
pub struct Signal {
    values: Vec<f64>,
    norm: f64,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("signal must have at least one entry".into()));
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Outcome of one reconstruction.
#[derive(Debug, Clone)]
pub struct ReconResult {
    pub x_hat: Vec<f64>,
    /// Euclidean reconstruction error `|x - x_hat|`.
    pub error: f64,
    pub sigma_min: f64,
    pub m: usize,
    pub k: usize,
    pub delta: f64,
    /// Norm of the imaginary part discarded when the frame is complex.
    pub imag_norm: Option<f64>,
}

/// Worst-case error bound `(1/sigma_min) sqrt(m) delta/2` for a full-rank
/// frame. Complex frames quantize real and imaginary parts independently, so
/// the per-entry residual modulus is bounded by `delta/sqrt(2)` instead of
/// `delta/2`, which contributes the extra `sqrt(2)`.
pub fn rough_error_bound(sigma_min: f64, m: usize, delta: f64, complex: bool) -> f64 {
    let base = (m as f64).sqrt() * delta / 2.0 / sigma_min;
    if complex {
        base * std::f64::consts::SQRT_2
    } else {
        base
    }
}

/// Reconstructs `x` from the quantized frame coefficients `Q(E x)` with the
/// canonical dual, reusing a precomputed pseudoinverse.
pub fn reconstruct_with_pinv(
    x: &Signal,
    frame: &FrameMatrix,
    pinv: &Pseudoinverse,
    cfg: &QuantizerConfig,
) -> Result<ReconResult> {
    if x.len() != frame.k() {
        return Err(Error::Contract(format!(
            "signal length {} does not match frame columns {}",
            x.len(),
            frame.k()
        )));
    }
    let delta = cfg.delta();
    match &frame.entries {
        FrameEntries::Real(e) => {
            let mut y = linalg::matvec(e, x.values());
            for v in y.iter_mut() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(*v));
                }
                *v = q_delta(*v, delta);
            }
            let x_hat = pinv.apply_real(&y);
            let error = l2_distance(x.values(), &x_hat);
            Ok(ReconResult {
                x_hat,
                error,
                sigma_min: pinv.sigma_min,
                m: frame.m(),
                k: frame.k(),
                delta,
                imag_norm: None,
            })
        }
        FrameEntries::Complex(e) => {
            let xc: Vec<Complex64> =
                x.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let mut y = linalg::matvec_c(e, &xc);
            for z in y.iter_mut() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite(f64::NAN));
                }
                *z = Complex64::new(q_delta(z.re, delta), q_delta(z.im, delta));
            }
            let x_hat_c = pinv.apply_complex(&y);
            let x_hat: Vec<f64> = x_hat_c.iter().map(|z| z.re).collect();
            let imag_norm = x_hat_c.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
            let error = l2_distance(x.values(), &x_hat);
            Ok(ReconResult {
                x_hat,
                error,
                sigma_min: pinv.sigma_min,
                m: frame.m(),
                k: frame.k(),
                delta,
                imag_norm: Some(imag_norm),
            })
        }
    }
}

/// Convenience wrapper that computes the pseudoinverse and reconstructs.
pub fn reconstruct(x: &Signal, frame: &FrameMatrix, cfg: &QuantizerConfig) -> Result<ReconResult> {
    let pinv = linalg::pseudoinverse(frame, DEFAULT_REL_TOL)?;
    reconstruct_with_pinv(x, frame, &pinv, cfg)
}

/// Whether `Q(E x) = E Q(x)` entrywise for a Bernoulli frame. Equality is
/// checked up to `delta * 1e-9` to absorb the rounding of the k-term sums;
/// both sides are lattice points, so that slack cannot bridge two cells.
pub fn bernoulli_commutation_check(
    x: &Signal,
    frame: &FrameMatrix,
    cfg: &QuantizerConfig,
) -> Result<bool> {
    if frame.spec.kind != EnsembleKind::Bernoulli {
        return Err(Error::Contract(
            "commutation check is defined for Bernoulli frames".into(),
        ));
    }
    let FrameEntries::Real(e) = &frame.entries else {
        return Err(Error::Contract("Bernoulli frame must be real".into()));
    };
    let delta = cfg.delta();
    let qx: Vec<f64> = x.values().iter().map(|&v| q_delta(v, delta)).collect();
    let lhs = {
        let mut y = linalg::matvec(e, x.values());
        for v in y.iter_mut() {
            *v = q_delta(*v, delta);
        }
        y
    };
    let rhs = linalg::matvec(e, &qx);
    let tol = delta * 1e-9;
    Ok(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= tol))
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_frame, EnsembleSpec};

    #[test]
    fn lattice_coefficients_reconstruct_exactly() {
        let f = FrameMatrix::from_real(
            nalgebra::DMatrix::identity(4, 4),
            EnsembleSpec::gaussian(),
            0,
        );
        let x = Signal::new(vec![0.3, -0.6, 0.0, 1.2]).unwrap();
        let cfg = QuantizerConfig::new(0.3).unwrap();
        let r = reconstruct(&x, &f, &cfg).unwrap();
        assert!(r.error < 1e-12, "error = {}", r.error);
    }

    #[test]
    fn rough_bound_holds_for_random_draws() {
        let cfg = QuantizerConfig::new(0.1).unwrap();
        let x = Signal::new(vec![0.21, -0.47, 0.93]).unwrap();
        for seed in 0..20 {
            let f = sample_frame(&EnsembleSpec::gaussian(), 12, 3, seed).unwrap();
            let r = reconstruct(&x, &f, &cfg).unwrap();
            let bound = rough_error_bound(r.sigma_min, r.m, r.delta, false);
            assert!(r.error <= bound * (1.0 + 1e-12), "{} > {}", r.error, bound);
        }
    }

    #[test]
    fn commutation_requires_bernoulli() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 8, 2, 1).unwrap();
        let x = Signal::new(vec![0.1, 0.2]).unwrap();
        let cfg = QuantizerConfig::new(0.5).unwrap();
        assert!(bernoulli_commutation_check(&x, &f, &cfg).is_err());
    }
}
