//! The uniform scalar quantizer, its vector extension, and the residual map.
//!
//! `q_delta(v) = n*delta` for the unique integer `n` with
//! `v in (n*delta - delta/2, n*delta + delta/2]`; cells are open on the left
//! and closed on the right, so `q_1(0.5) = 0` while `q_1(-0.5) = -1`. The
//! lattice is unbounded: there is no saturation and no dithering.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Step size `delta` of the uniform scalar quantizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    delta: f64,
}

impl QuantizerConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidDelta(delta));
        }
        Ok(Self { delta })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Raw quantizer kernel. Assumes `v` finite and `delta > 0`.
///
/// The cell index is `n = ceil(v/delta - 1/2)`, which maps the right cell
/// edge `n*delta + delta/2` to `n`. For non-dyadic steps the division can
/// round across a cell edge, so the index is corrected until the residual
/// `v - n*delta` lies in `(-delta/2, delta/2]` as evaluated in f64; the
/// correction moves `n` by at most one for any finite input.
#[inline]
pub(crate) fn q_delta(v: f64, delta: f64) -> f64 {
    let half = 0.5 * delta;
    let mut n = (v / delta - 0.5).ceil();
    loop {
        let q = n * delta;
        let r = v - q;
        if r > half {
            n += 1.0;
        } else if r <= -half {
            n -= 1.0;
        } else {
            return q;
        }
    }
}

/// Quantizes a single finite scalar to the lattice `delta * Z`.
pub fn quantize_scalar(v: f64, cfg: &QuantizerConfig) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(v));
    }
    Ok(q_delta(v, cfg.delta))
}

/// Componentwise quantization of a real vector.
pub fn quantize_vector(u: &[f64], cfg: &QuantizerConfig) -> Result<Vec<f64>> {
    for &v in u {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    Ok(u.iter().map(|&v| q_delta(v, cfg.delta)).collect())
}

/// Componentwise quantization of a complex vector: real and imaginary parts
/// are quantized independently with the same step.
pub fn quantize_complex_vector(u: &[Complex64], cfg: &QuantizerConfig) -> Result<Vec<Complex64>> {
    for z in u {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite(if z.re.is_finite() { z.im } else { z.re }));
        }
    }
    Ok(u.iter()
        .map(|z| Complex64::new(q_delta(z.re, cfg.delta), q_delta(z.im, cfg.delta)))
        .collect())
}

/// The residual map `F(v) = v - q_delta(v)`, with range `(-delta/2, delta/2]`.
pub fn residual(v: f64, cfg: &QuantizerConfig) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(v));
    }
    Ok(v - q_delta(v, cfg.delta))
}

#[inline]
pub(crate) fn residual_raw(v: f64, delta: f64) -> f64 {
    v - q_delta(v, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(delta: f64) -> QuantizerConfig {
        QuantizerConfig::new(delta).unwrap()
    }

    #[test]
    fn lattice_point_is_fixed() {
        assert_eq!(quantize_scalar(0.0, &cfg(0.1)).unwrap(), 0.0);
    }

    #[test]
    fn interior_point() {
        // 0.26 lies in (0.25, 0.35], so it maps to 0.3.
        let q = quantize_scalar(0.26, &cfg(0.1)).unwrap();
        assert!((q - 0.3).abs() < 1e-15);
    }

    #[test]
    fn right_closed_boundary() {
        // (-0.5, 0.5] contains 0.5; (-1.5, -0.5] contains -0.5.
        assert_eq!(quantize_scalar(0.5, &cfg(1.0)).unwrap(), 0.0);
        assert_eq!(quantize_scalar(-0.5, &cfg(1.0)).unwrap(), -1.0);
        assert_eq!(quantize_scalar(2.0, &cfg(4.0)).unwrap(), 0.0);
        assert_eq!(quantize_scalar(-2.0, &cfg(4.0)).unwrap(), -4.0);
    }

    #[test]
    fn residual_examples() {
        let r = residual(0.26, &cfg(0.1)).unwrap();
        assert!((r - (-0.04)).abs() < 1e-15);
        assert_eq!(residual(0.5, &cfg(1.0)).unwrap(), 0.5);
        for n in -5i32..=5 {
            assert_eq!(residual(n as f64 * 1.0, &cfg(1.0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn complex_components_quantized_independently() {
        let q = quantize_complex_vector(&[Complex64::new(1.05, 0.26)], &cfg(0.1)).unwrap();
        assert!((q[0].re - 1.1).abs() < 1e-12);
        assert!((q[0].im - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(quantize_scalar(f64::NAN, &cfg(1.0)).is_err());
        assert!(quantize_scalar(f64::INFINITY, &cfg(1.0)).is_err());
        assert!(QuantizerConfig::new(0.0).is_err());
        assert!(QuantizerConfig::new(-0.1).is_err());
    }
}
