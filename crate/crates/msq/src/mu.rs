//! The bias term `mu = (1/m) |E[ E^T (Ex - Q(Ex)) ]|`, computed three ways.
//!
//! For ensembles with i.i.d. rows the bias reduces to the single-row mean
//! `|E[ e (e^T x - Q(e^T x)) ]|`, a constant independent of `m`. This module
//! evaluates it
//!
//! - in closed form for the Gaussian ensemble, where entry `i` of the mean
//!   vector is `2 x_i S` with
//!   `S = sum_{p>=1} (-1)^{p+1} exp(-2 pi^2 |x|^2 p^2 / delta^2)`;
//! - as a Poisson-summation series for any entry density whose Fourier data
//!   is available (see [`SchwartzDensity`]): entry `i` equals
//!   `x_i (1 + sum_{p in Z} (-1)^p g_hat(|x_i| p / delta)
//!   prod_{s != i} phi_hat(x_s sign(x_i) p / delta))`;
//! - by Monte Carlo over single rows of the ensemble, with a delta-method
//!   standard error.
//!
//! A self-check of the Poisson summation identity used in the derivation is
//! provided by [`poisson_check`].
//!
//! Series are truncated when the next term falls below `1e-17` times the
//! first term, with a hard cap; the number of retained terms is always
//! reported.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensembles::{EnsembleSpec, RowSample};
use crate::error::{Error, Result};
use crate::quantizer::{residual_raw, QuantizerConfig};
use crate::recon::Signal;
use crate::seeding;

/// Relative truncation threshold shared by all series in this module.
pub const SERIES_REL_TOL: f64 = 1e-17;
/// Term cap for the Gaussian closed form.
pub const GAUSSIAN_P_CAP: usize = 64;
/// Term cap for the general Schwartz series and the Poisson check.
pub const SCHWARTZ_P_CAP: usize = 512;

const MC_BLOCK: u64 = 8192;

/// How a bias estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuMethod {
    GaussianClosedForm,
    SchwartzSeries,
    MonteCarlo,
}

/// A value of the bias term with its provenance and uncertainty.
#[derive(Debug, Clone)]
pub struct MuEstimate {
    pub value: f64,
    pub method: MuMethod,
    /// Zero for the analytic methods.
    pub std_error: f64,
    /// Retained series terms (analytic methods).
    pub truncation_p: usize,
    /// Monte Carlo sample count (zero for analytic methods).
    pub trials: u64,
}

/// Fourier data of a Schwartz entry density `phi`:
/// `phi_hat(w) = int exp(-2 pi i t w) phi(t) dt` and `g_hat`, the transform
/// of `g(z) = int_{-inf}^z t phi(t) dt`. The direct-space `g` is optional
/// and only needed by [`poisson_check`].
pub trait SchwartzDensity {
    fn phi(&self, t: f64) -> f64;
    fn phi_hat(&self, w: f64) -> Complex64;
    fn g_hat(&self, w: f64) -> Complex64;
    fn g(&self, _z: f64) -> Option<f64> {
        None
    }
}

/// The standard normal bundle: `phi_hat(w) = exp(-2 pi^2 w^2)`,
/// `g_hat(w) = -exp(-2 pi^2 w^2)`, and `g(z) = -phi(z)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianDensity;

impl SchwartzDensity for GaussianDensity {
    fn phi(&self, t: f64) -> f64 {
        (2.0 * std::f64::consts::PI).sqrt().recip() * (-0.5 * t * t).exp()
    }

    fn phi_hat(&self, w: f64) -> Complex64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        Complex64::new((-2.0 * pi2 * w * w).exp(), 0.0)
    }

    fn g_hat(&self, w: f64) -> Complex64 {
        -self.phi_hat(w)
    }

    fn g(&self, z: f64) -> Option<f64> {
        Some(-self.phi(z))
    }
}

/// Closed-form Gaussian bias term `2 |x| S`.
pub fn mu_gaussian(x: &Signal, cfg: &QuantizerConfig) -> MuEstimate {
    let x_norm = x.norm();
    let done = |value: f64, truncation_p: usize| MuEstimate {
        value,
        method: MuMethod::GaussianClosedForm,
        std_error: 0.0,
        truncation_p,
        trials: 0,
    };
    if x_norm == 0.0 {
        return done(0.0, 0);
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let c = 2.0 * pi2 * (x_norm / cfg.delta()).powi(2);
    let first = (-c).exp();
    if first == 0.0 {
        // the whole series underflows
        return done(0.0, 1);
    }
    let mut s = 0.0;
    let mut p_last = 0;
    for p in 1..=GAUSSIAN_P_CAP {
        let term = (-c * (p * p) as f64).exp();
        if p > 1 && term < SERIES_REL_TOL * first {
            break;
        }
        s += if p % 2 == 1 { term } else { -term };
        p_last = p;
    }
    done(2.0 * x_norm * s, p_last)
}

/// General-density bias term via the per-entry Poisson series.
///
/// Entries with `x_i = 0` contribute zero. Complex transform values are
/// accumulated in complex arithmetic; the `+-p` terms are conjugate, so the
/// imaginary parts cancel and the real part is taken at the end.
pub fn mu_schwartz(
    x: &Signal,
    cfg: &QuantizerConfig,
    density: &impl SchwartzDensity,
) -> Result<MuEstimate> {
    let delta = cfg.delta();
    let vals = x.values();
    let k = vals.len();
    let mut mean_entries = vec![0.0f64; k];
    let mut p_max = 0usize;
    for i in 0..k {
        if vals[i] == 0.0 {
            continue;
        }
        let sgn = vals[i].signum();
        let a = vals[i].abs() / delta;
        let scaled: Vec<f64> = (0..k)
            .filter(|&s| s != i)
            .map(|s| vals[s] * sgn / delta)
            .collect();
        let others = |p: f64| -> Complex64 {
            scaled
                .iter()
                .map(|&b| density.phi_hat(b * p))
                .product::<Complex64>()
        };
        // p = 0 term
        let mut series = density.g_hat(0.0) * others(0.0);
        let mut first_mag = 0.0f64;
        let mut converged = false;
        for p in 1..=SCHWARTZ_P_CAP {
            let pf = p as f64;
            let pair = density.g_hat(a * pf) * others(pf) + density.g_hat(-a * pf) * others(-pf);
            let signed = if p % 2 == 1 { -pair } else { pair };
            let mag = signed.norm();
            if p == 1 {
                first_mag = mag;
            }
            if p > 1 && mag < SERIES_REL_TOL * first_mag {
                converged = true;
                p_max = p_max.max(p - 1);
                break;
            }
            series += signed;
            if p == SCHWARTZ_P_CAP {
                p_max = p_max.max(p);
            }
        }
        if !converged && first_mag > 0.0 {
            let tail = density.g_hat(a * (SCHWARTZ_P_CAP + 1) as f64).norm();
            if tail >= SERIES_REL_TOL * first_mag {
                return Err(Error::SeriesDiverged { max_terms: SCHWARTZ_P_CAP });
            }
        }
        mean_entries[i] = vals[i] * (1.0 + series.re);
    }
    let value = mean_entries.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(MuEstimate {
        value,
        method: MuMethod::SchwartzSeries,
        std_error: 0.0,
        truncation_p: p_max,
        trials: 0,
    })
}

/// Per-block accumulator: sums of the summand vector and of its outer
/// products, in a real representation (dimension `k`, or `2k` for complex
/// rows).
struct McAcc {
    n: u64,
    sum: Vec<f64>,
    outer: Vec<f64>, // row-major dim x dim
}

impl McAcc {
    fn new(dim: usize) -> Self {
        Self { n: 0, sum: vec![0.0; dim], outer: vec![0.0; dim * dim] }
    }

    fn push(&mut self, w: &[f64]) {
        let d = self.sum.len();
        debug_assert_eq!(w.len(), d);
        for (s, &wi) in self.sum.iter_mut().zip(w) {
            *s += wi;
        }
        for i in 0..d {
            let wi = w[i];
            let row = &mut self.outer[i * d..(i + 1) * d];
            for (o, &wj) in row.iter_mut().zip(w) {
                *o += wi * wj;
            }
        }
        self.n += 1;
    }

    fn merge(mut self, other: &McAcc) -> McAcc {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.outer.iter_mut().zip(&other.outer) {
            *a += b;
        }
        self
    }
}

/// Pairwise reduction in block-index order, independent of worker count.
fn pairwise_reduce(mut accs: Vec<McAcc>) -> McAcc {
    debug_assert!(!accs.is_empty());
    while accs.len() > 1 {
        let mut next = Vec::with_capacity(accs.len().div_ceil(2));
        let mut it = accs.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        accs = next;
    }
    accs.into_iter().next().unwrap()
}

/// Monte Carlo bias estimate from single ensemble rows: averages
/// `w = e * (e^T x - Q(e^T x))` (conjugated row for complex ensembles) and
/// returns the norm of the average. The standard error propagates the
/// sample covariance of `w` through the norm by the delta method.
///
/// Trials are split into fixed blocks with per-block substreams and reduced
/// pairwise in block order, so the result does not depend on the number of
/// worker threads. Reassociation across blocks can still perturb the last
/// couple of ulps relative to a serial sum.
pub fn mu_monte_carlo(
    x: &Signal,
    spec: &EnsembleSpec,
    trials: u64,
    seed: u64,
    cfg: &QuantizerConfig,
) -> Result<MuEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let k = x.len();
    let delta = cfg.delta();
    let complex = spec.kind.is_complex();
    let dim = if complex { 2 * k } else { k };
    let blocks = trials.div_ceil(MC_BLOCK);
    let accs: Vec<McAcc> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeding::trial_rng(seed, 0x6d63, b);
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(trials);
            let mut acc = McAcc::new(dim);
            let mut w = vec![0.0f64; dim];
            for _ in lo..hi {
                match crate::ensembles::sample_row(spec, k, &mut rng) {
                    RowSample::Real(row) => {
                        let y: f64 = row.iter().zip(x.values()).map(|(e, v)| e * v).sum();
                        let f = residual_raw(y, delta);
                        for (wi, e) in w.iter_mut().zip(&row) {
                            *wi = e * f;
                        }
                    }
                    RowSample::Complex(row) => {
                        let mut y = Complex64::new(0.0, 0.0);
                        for (e, &v) in row.iter().zip(x.values()) {
                            y += e * v;
                        }
                        let f = Complex64::new(residual_raw(y.re, delta), residual_raw(y.im, delta));
                        for (j, e) in row.iter().enumerate() {
                            let wj = e.conj() * f;
                            w[j] = wj.re;
                            w[k + j] = wj.im;
                        }
                    }
                }
                acc.push(&w);
            }
            acc
        })
        .collect();
    let total = pairwise_reduce(accs);
    let n = total.n as f64;
    let mean: Vec<f64> = total.sum.iter().map(|s| s / n).collect();
    let value = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let std_error = if value > 0.0 && total.n > 1 {
        // u^T Cov(mean) u with u = mean/|mean|
        let u: Vec<f64> = mean.iter().map(|v| v / value).collect();
        let mut quad = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let cov_ij = (total.outer[i * dim + j] - n * mean[i] * mean[j]) / (n - 1.0);
                quad += u[i] * cov_ij * u[j];
            }
        }
        (quad.max(0.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(MuEstimate {
        value,
        method: MuMethod::MonteCarlo,
        std_error,
        truncation_p: 0,
        trials,
    })
}

/// Two-sided evaluation of the Poisson summation identity
/// `sum_n f(a n + b) = sum_p (1/a) f_hat(p/a) exp(2 pi i (p/a) b)` for
/// `f = g` of the given density. Returns `(lhs, rhs, |difference|)`.
pub fn poisson_check(
    density: &impl SchwartzDensity,
    a: f64,
    b: f64,
) -> Result<(f64, f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Config(format!("poisson_check requires a > 0, got {a}")));
    }
    let g = |z: f64| -> Result<f64> {
        density
            .g(z)
            .ok_or_else(|| Error::Contract("density does not expose g in direct space".into()))
    };
    // left side: direct-space lattice sum
    let mut lhs = g(b)?;
    let mut max_mag = lhs.abs();
    let mut converged = false;
    for n in 1..=SCHWARTZ_P_CAP {
        let t = g(a * n as f64 + b)? + g(-a * n as f64 + b)?;
        lhs += t;
        max_mag = max_mag.max(t.abs());
        if n >= 4 && t.abs() < SERIES_REL_TOL * max_mag.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesDiverged { max_terms: SCHWARTZ_P_CAP });
    }
    // right side: frequency-space sum
    let inv_a = 1.0 / a;
    let mut rhs = density.g_hat(0.0) * inv_a;
    let mut max_mag = rhs.norm();
    converged = false;
    for p in 1..=SCHWARTZ_P_CAP {
        let w = p as f64 * inv_a;
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * w * b);
        let t = (density.g_hat(w) * phase + density.g_hat(-w) * phase.conj()) * inv_a;
        rhs += t;
        max_mag = max_mag.max(t.norm());
        if p >= 4 && t.norm() < SERIES_REL_TOL * max_mag.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesDiverged { max_terms: SCHWARTZ_P_CAP });
    }
    let diff = (Complex64::new(lhs, 0.0) - rhs).norm();
    Ok((lhs, rhs.re, diff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(delta: f64) -> QuantizerConfig {
        QuantizerConfig::new(delta).unwrap()
    }

    #[test]
    fn gaussian_density_values() {
        let d = GaussianDensity;
        assert!((d.phi(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert!((d.phi_hat(0.0).re - 1.0).abs() < 1e-15);
        assert!((d.g_hat(0.0).re + 1.0).abs() < 1e-15);
        assert!(d.g_hat(10.0).norm() < 1e-12);
        assert!((d.g(1.3).unwrap() + d.phi(1.3)).abs() < 1e-15);
    }

    #[test]
    fn mu_gaussian_zero_signal() {
        let x = Signal::new(vec![0.0, 0.0, 0.0]).unwrap();
        let est = mu_gaussian(&x, &cfg(0.5));
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn mu_gaussian_depends_only_on_norm() {
        let x1 = Signal::new(vec![1.0, 0.0]).unwrap();
        let x2 = Signal::new(vec![0.6, 0.8]).unwrap();
        let a = mu_gaussian(&x1, &cfg(2.5)).value;
        let b = mu_gaussian(&x2, &cfg(2.5)).value;
        assert!((a - b).abs() < 1e-14 * a.max(1.0));
    }

    #[test]
    fn schwartz_zero_entry_contributes_zero() {
        // x with a zero coordinate: compare against the same x without it
        let d = GaussianDensity;
        let x = Signal::new(vec![0.7, 0.0, -0.4]).unwrap();
        let est = mu_schwartz(&x, &cfg(1.5), &d).unwrap();
        let closed = mu_gaussian(&x, &cfg(1.5));
        assert!((est.value - closed.value).abs() < 1e-13);
    }

    #[test]
    fn monte_carlo_bernoulli_k1_is_exact() {
        let x = Signal::new(vec![0.3]).unwrap();
        let est =
            mu_monte_carlo(&x, &EnsembleSpec::bernoulli(), 1000, 7, &cfg(1.0)).unwrap();
        assert_eq!(est.value, 0.3);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_zero_signal() {
        let x = Signal::new(vec![0.0, 0.0]).unwrap();
        let est =
            mu_monte_carlo(&x, &EnsembleSpec::gaussian(), 100, 3, &cfg(0.5)).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn poisson_check_rejects_bad_scale() {
        assert!(poisson_check(&GaussianDensity, 0.0, 0.1).is_err());
        assert!(poisson_check(&GaussianDensity, -1.0, 0.1).is_err());
    }

    #[test]
    fn poisson_identity_gaussian() {
        let (lhs, rhs, diff) = poisson_check(&GaussianDensity, 1.0, 0.0).unwrap();
        assert!(diff < 1e-10, "lhs={lhs} rhs={rhs} diff={diff}");
        let (_, _, diff) = poisson_check(&GaussianDensity, 0.5, 0.25).unwrap();
        assert!(diff < 1e-10);
    }
}
