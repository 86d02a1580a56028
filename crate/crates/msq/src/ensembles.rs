//! Seeded generation of the random measurement ensembles.
//!
//! Four ensembles are supported, all with isotropic rows of norm about
//! `sqrt(k)`:
//!
//! - `Gaussian`: i.i.d. standard normal entries;
//! - `Bernoulli`: i.i.d. entries from `{-1, +1}`;
//! - `SphereRows`: rows drawn uniformly from the sphere of radius `sqrt(k)`;
//! - `PartialDft`: `m` distinct rows of the unnormalized `N x N` DFT matrix
//!   restricted to its first `k` columns, so every entry has modulus one.
//!
//! Generation is a pure function of `(spec, m, k, seed)`; see
//! [`crate::seeding`] for how parallel substreams are derived.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EnsembleKind {
    Gaussian,
    Bernoulli,
    SphereRows,
    PartialDft,
}

impl EnsembleKind {
    pub fn is_complex(&self) -> bool {
        matches!(self, EnsembleKind::PartialDft)
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Bernoulli => "bernoulli",
            EnsembleKind::SphereRows => "sphere-rows",
            EnsembleKind::PartialDft => "partial-dft",
        };
        f.write_str(s)
    }
}

/// Which ensemble to draw, with its ambient DFT size and sub-Gaussian norm
/// metadata `K` (used by the bound constants, not by generation).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    /// Ambient dimension `N` of the DFT matrix; ignored by the other kinds.
    pub ambient_n: usize,
    /// Sub-Gaussian norm bound `K` for the rows.
    pub subgaussian_norm_k: f64,
}

impl EnsembleSpec {
    pub fn gaussian() -> Self {
        Self { kind: EnsembleKind::Gaussian, ambient_n: 0, subgaussian_norm_k: 1.0 }
    }

    pub fn bernoulli() -> Self {
        Self { kind: EnsembleKind::Bernoulli, ambient_n: 0, subgaussian_norm_k: 1.0 }
    }

    pub fn sphere_rows() -> Self {
        Self { kind: EnsembleKind::SphereRows, ambient_n: 0, subgaussian_norm_k: 1.0 }
    }

    pub fn partial_dft(ambient_n: usize) -> Self {
        Self { kind: EnsembleKind::PartialDft, ambient_n, subgaussian_norm_k: 1.0 }
    }
}

/// Matrix entries of a sampled frame.
#[derive(Debug, Clone)]
pub enum FrameEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// An `m x k` measurement matrix with its ensemble provenance.
#[derive(Debug, Clone)]
pub struct FrameMatrix {
    pub entries: FrameEntries,
    pub spec: EnsembleSpec,
    pub seed: u64,
}

impl FrameMatrix {
    pub fn m(&self) -> usize {
        match &self.entries {
            FrameEntries::Real(a) => a.nrows(),
            FrameEntries::Complex(a) => a.nrows(),
        }
    }

    pub fn k(&self) -> usize {
        match &self.entries {
            FrameEntries::Real(a) => a.ncols(),
            FrameEntries::Complex(a) => a.ncols(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.entries, FrameEntries::Complex(_))
    }

    /// Wraps an explicit real matrix (used for submatrices and tests).
    pub fn from_real(a: DMatrix<f64>, spec: EnsembleSpec, seed: u64) -> Self {
        Self { entries: FrameEntries::Real(a), spec, seed }
    }
}

/// A single measurement row, used by the Monte Carlo bias estimator.
#[derive(Debug, Clone)]
pub enum RowSample {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Draws the `m x k` matrix of the given ensemble as a deterministic
/// function of `(spec, m, k, seed)`.
pub fn sample_frame(spec: &EnsembleSpec, m: usize, k: usize, seed: u64) -> Result<FrameMatrix> {
    if m == 0 || k == 0 {
        return Err(Error::Config(format!("frame dimensions must be positive, got {m} x {k}")));
    }
    if spec.kind == EnsembleKind::PartialDft {
        if spec.ambient_n < m {
            return Err(Error::Config(format!(
                "partial-dft draws {m} distinct rows but ambient N = {}",
                spec.ambient_n
            )));
        }
        if spec.ambient_n < k {
            return Err(Error::Config(format!(
                "partial-dft keeps the first {k} columns but ambient N = {}",
                spec.ambient_n
            )));
        }
    }
    let mut rng = seeding::stream_rng(seed, 0);
    let entries = match spec.kind {
        EnsembleKind::Gaussian => {
            FrameEntries::Real(DMatrix::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng)))
        }
        EnsembleKind::Bernoulli => FrameEntries::Real(DMatrix::from_fn(m, k, |_, _| {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        })),
        EnsembleKind::SphereRows => {
            let mut a = DMatrix::zeros(m, k);
            let mut row = vec![0.0f64; k];
            for i in 0..m {
                sphere_row(&mut row, &mut rng);
                for j in 0..k {
                    a[(i, j)] = row[j];
                }
            }
            FrameEntries::Real(a)
        }
        EnsembleKind::PartialDft => {
            let rows = sample_without_replacement(spec.ambient_n, m, &mut rng);
            FrameEntries::Complex(dft_rows(&rows, k, spec.ambient_n))
        }
    };
    Ok(FrameMatrix { entries, spec: *spec, seed })
}

/// Draws one row of the ensemble into `out` (length `k`).
pub fn sample_row(spec: &EnsembleSpec, k: usize, rng: &mut ChaCha8Rng) -> RowSample {
    match spec.kind {
        EnsembleKind::Gaussian => {
            RowSample::Real((0..k).map(|_| StandardNormal.sample(rng)).collect())
        }
        EnsembleKind::Bernoulli => {
            RowSample::Real((0..k).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
        }
        EnsembleKind::SphereRows => {
            let mut row = vec![0.0f64; k];
            sphere_row(&mut row, rng);
            RowSample::Real(row)
        }
        EnsembleKind::PartialDft => {
            let j = rng.random_range(0..spec.ambient_n);
            let a = dft_rows(&[j], k, spec.ambient_n);
            RowSample::Complex(a.row(0).iter().copied().collect())
        }
    }
}

/// Fills `row` with a point uniform on the sphere of radius `sqrt(k)`:
/// a standard Gaussian vector normalized to unit norm and rescaled.
fn sphere_row(row: &mut [f64], rng: &mut ChaCha8Rng) {
    let k = row.len();
    loop {
        let mut norm_sq = 0.0;
        for r in row.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *r = g;
            norm_sq += g * g;
        }
        if norm_sq > 0.0 {
            let scale = (k as f64).sqrt() / norm_sq.sqrt();
            for r in row.iter_mut() {
                *r *= scale;
            }
            return;
        }
        // a zero draw has probability zero; resample deterministically
    }
}

/// Partial Fisher-Yates: the first `m` entries of a random permutation of
/// `0..n`, so row indices are distinct.
fn sample_without_replacement(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(m <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

/// Rows `rows` of the unnormalized `n x n` DFT matrix restricted to its first
/// `k` columns: entry `(j, c) = exp(-2 pi i j c / n)`.
fn dft_rows(rows: &[usize], k: usize, n: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(rows.len(), k);
    for (i, &j) in rows.iter().enumerate() {
        for c in 0..k {
            // reduce j*c mod n in integers to keep the phase exact
            let t = ((j as u64) * (c as u64)) % (n as u64);
            let angle = -2.0 * std::f64::consts::PI * (t as f64) / (n as f64);
            let (s, co) = angle.sin_cos();
            a[(i, c)] = Complex64::new(co, s);
        }
    }
    a
}

/// The standard normal density bundle used by the Schwartz-series bias
/// evaluation; see [`crate::mu::GaussianDensity`].
pub fn gaussian_density() -> crate::mu::GaussianDensity {
    crate::mu::GaussianDensity
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_entries_are_signs() {
        let f = sample_frame(&EnsembleSpec::bernoulli(), 4, 2, 7).unwrap();
        let FrameEntries::Real(a) = &f.entries else { panic!("expected real") };
        assert!(a.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn sphere_rows_have_norm_sqrt_k() {
        let k = 20;
        let f = sample_frame(&EnsembleSpec::sphere_rows(), 3, k, 11).unwrap();
        let FrameEntries::Real(a) = &f.entries else { panic!("expected real") };
        for i in 0..3 {
            let norm = a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - (k as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_dft_unit_modulus_and_distinct_rows() {
        let spec = EnsembleSpec::partial_dft(64);
        let f = sample_frame(&spec, 16, 5, 3).unwrap();
        let FrameEntries::Complex(a) = &f.entries else { panic!("expected complex") };
        for z in a.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        // distinct rows: compare the second column (first is all ones)
        let mut phases: Vec<i64> = (0..16).map(|i| (a[(i, 1)].arg() * 1e12) as i64).collect();
        phases.sort_unstable();
        phases.dedup();
        assert_eq!(phases.len(), 16);
    }

    #[test]
    fn partial_dft_requires_enough_rows() {
        let spec = EnsembleSpec::partial_dft(8);
        assert!(sample_frame(&spec, 9, 2, 0).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = EnsembleSpec::gaussian();
        let a = sample_frame(&spec, 6, 3, 99).unwrap();
        let b = sample_frame(&spec, 6, 3, 99).unwrap();
        let (FrameEntries::Real(a), FrameEntries::Real(b)) = (&a.entries, &b.entries) else {
            panic!("expected real")
        };
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
