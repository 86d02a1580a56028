//! Compressed sensing: the constrained l1 coarse decoder, support
//! recovery, and the two-stage reconstruction.
//!
//! The coarse decoder solves `min |z|_1 subject to |Phi z - q| <= eps` by
//! tracing the LASSO regularization path (homotopy): starting from `z = 0`
//! and `tau = |Phi^T q|_inf`, the path of minimizers of
//! `1/2 |Phi z - q|^2 + tau |z|_1` is piecewise linear in `tau`, and the
//! constrained solution is the first path point whose residual norm reaches
//! `eps`. The path is traced exactly, so the returned point is the exact
//! minimizer up to linear-algebra rounding, the run is deterministic, and
//! the active-set correlations provide a dual certificate at exit.
//!
//! Stage 2 reapplies the frame-theory pseudoinverse reconstruction on the
//! recovered support.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::ensembles::{FrameEntries, FrameMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_REL_TOL};
use crate::quantizer::{q_delta, QuantizerConfig};
use crate::recon::l2_distance;

/// A `k`-sparse vector in `R^N`, stored as a sorted support and the values
/// on it.
#[derive(Debug, Clone)]
pub struct SparseSignal {
    ambient_n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(ambient_n: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut support = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (idx, val) in entries {
            if idx >= ambient_n {
                return Err(Error::Config(format!(
                    "support index {idx} out of range for N = {ambient_n}"
                )));
            }
            if support.last() == Some(&idx) {
                return Err(Error::Config(format!("duplicate support index {idx}")));
            }
            if !val.is_finite() {
                return Err(Error::NonFinite(val));
            }
            if val == 0.0 {
                continue; // no stored zeros on the support
            }
            support.push(idx);
            values.push(val);
        }
        Ok(Self { ambient_n, support, values })
    }

    /// `k`-sparse signal with a uniform random support and entries drawn
    /// from `{-1/sqrt(k), +1/sqrt(k)}`.
    pub fn random_pm(ambient_n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        use rand::Rng;
        if k > ambient_n {
            return Err(Error::Config(format!("sparsity {k} exceeds N = {ambient_n}")));
        }
        let mut idx: Vec<usize> = (0..ambient_n).collect();
        for i in 0..k {
            let j = rng.random_range(i..ambient_n);
            idx.swap(i, j);
        }
        let mag = 1.0 / (k as f64).sqrt();
        let entries = idx[..k]
            .iter()
            .map(|&i| (i, if rng.random::<bool>() { mag } else { -mag }))
            .collect();
        Self::new(ambient_n, entries)
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values_on_support(&self) -> &[f64] {
        &self.values
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_n];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }
}

/// One constrained decoding instance.
#[derive(Debug, Clone)]
pub struct BpdnProblem {
    pub phi: DMatrix<f64>,
    pub q: Vec<f64>,
    pub epsilon: f64,
}

impl BpdnProblem {
    pub fn new(phi: DMatrix<f64>, q: Vec<f64>, epsilon: f64) -> Result<Self> {
        if phi.nrows() != q.len() {
            return Err(Error::Config(format!(
                "measurement length {} does not match matrix rows {}",
                q.len(),
                phi.nrows()
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        Ok(Self { phi, q, epsilon })
    }
}

/// Decoder tolerances and step budget.
#[derive(Debug, Clone, Copy)]
pub struct BpdnSettings {
    /// Relative feasibility slack: the result satisfies
    /// `|Phi z - q| <= eps (1 + tol_feas) + tol_feas |q|` (the absolute part
    /// covers `eps = 0`).
    pub tol_feas: f64,
    /// Relative objective slack against the exact constrained optimum.
    pub tol_obj: f64,
    /// Homotopy step budget.
    pub max_iter: usize,
}

impl Default for BpdnSettings {
    fn default() -> Self {
        Self { tol_feas: 1e-8, tol_obj: 1e-6, max_iter: 50_000 }
    }
}

/// Exact constrained basis-pursuit decoding via the LASSO homotopy path.
pub fn bpdn_solve(p: &BpdnProblem, settings: &BpdnSettings) -> Result<Vec<f64>> {
    let (m, n) = (p.phi.nrows(), p.phi.ncols());
    let q_norm = l2_norm(&p.q);
    let mut z = vec![0.0f64; n];
    if q_norm <= p.epsilon {
        return Ok(z); // zero is feasible and has minimal l1 norm
    }
    let feas_target = p.epsilon * (1.0 + settings.tol_feas) + settings.tol_feas * q_norm;
    let eps_sq = p.epsilon * p.epsilon;

    let mut r: Vec<f64> = p.q.clone(); // residual q - Phi z
    let mut c = mat_t_vec(&p.phi, &r); // correlations Phi^T r
    let mut tau = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; n];
    let mut gram = DMatrix::<f64>::zeros(0, 0);

    let enter = |active: &mut Vec<usize>,
                 in_active: &mut Vec<bool>,
                 gram: &mut DMatrix<f64>,
                 phi: &DMatrix<f64>,
                 j: usize| {
        let s = active.len();
        let mut g = DMatrix::zeros(s + 1, s + 1);
        g.view_mut((0, 0), (s, s)).copy_from(gram);
        let col_j = phi.column(j);
        for (row, &i) in active.iter().enumerate() {
            let d = phi.column(i).dot(&col_j);
            g[(row, s)] = d;
            g[(s, row)] = d;
        }
        g[(s, s)] = col_j.dot(&col_j);
        *gram = g;
        active.push(j);
        in_active[j] = true;
    };

    // seed the active set with the most correlated column (lowest index on ties)
    let j0 = argmax_abs(&c);
    enter(&mut active, &mut in_active, &mut gram, &p.phi, j0);

    for step in 1..=settings.max_iter {
        let s = active.len();
        let signs = DVector::from_iterator(s, active.iter().map(|&i| c[i].signum()));
        let Some(chol) = Cholesky::new(gram.clone()) else {
            return Err(Error::SolverStalled {
                steps: step,
                feasibility_gap: l2_norm(&r) - p.epsilon,
                best_iterate: z.into_boxed_slice(),
            });
        };
        let d = chol.solve(&signs);
        // v = Phi_A d, the residual direction; a = Phi^T v
        let mut v = vec![0.0f64; m];
        for (&i, &di) in active.iter().zip(d.iter()) {
            for (vi, &pi) in v.iter_mut().zip(p.phi.column(i).iter()) {
                *vi += di * pi;
            }
        }
        let a = mat_t_vec(&p.phi, &v);

        // candidate step lengths
        let mut g_enter = f64::INFINITY;
        let mut j_enter = usize::MAX;
        for j in 0..n {
            if in_active[j] {
                continue;
            }
            for (num, den) in [(tau - c[j], 1.0 - a[j]), (tau + c[j], 1.0 + a[j])] {
                if den > 1e-14 {
                    let g = num / den;
                    if g > 1e-14 * tau && g < g_enter {
                        g_enter = g;
                        j_enter = j;
                    }
                }
            }
        }
        let mut g_leave = f64::INFINITY;
        let mut i_leave = usize::MAX;
        for (idx, (&i, &di)) in active.iter().zip(d.iter()).enumerate() {
            if di != 0.0 {
                let g = -z[i] / di;
                if g > 1e-14 * tau && g < g_leave {
                    g_leave = g;
                    i_leave = idx;
                }
            }
        }
        let vv = dot(&v, &v);
        let rv = dot(&r, &v);
        let rr = dot(&r, &r);
        let mut g_feas = f64::INFINITY;
        let disc = rv * rv - vv * (rr - eps_sq);
        if vv > 0.0 && disc >= 0.0 {
            let g = (rv - disc.sqrt()) / vv;
            if g > 0.0 {
                g_feas = g;
            }
        }
        let g_tau = tau;
        let g = g_enter.min(g_leave).min(g_feas).min(g_tau);

        for (&i, &di) in active.iter().zip(d.iter()) {
            z[i] += g * di;
        }
        for (ri, &vi) in r.iter_mut().zip(&v) {
            *ri -= g * vi;
        }
        for (ci, &ai) in c.iter_mut().zip(&a) {
            *ci -= g * ai;
        }
        tau -= g;

        let r_norm = l2_norm(&r);
        if g == g_feas || r_norm <= feas_target || tau <= 1e-13 * q_norm {
            if r_norm <= feas_target {
                return Ok(z);
            }
            return Err(Error::SolverStalled {
                steps: step,
                feasibility_gap: r_norm - p.epsilon,
                best_iterate: z.into_boxed_slice(),
            });
        }
        if g == g_leave {
            let i = active.remove(i_leave);
            in_active[i] = false;
            z[i] = 0.0;
            gram = gram.clone().remove_row(i_leave).remove_column(i_leave);
            if active.is_empty() {
                let j = argmax_abs(&c);
                enter(&mut active, &mut in_active, &mut gram, &p.phi, j);
            }
        } else if g == g_enter {
            if active.len() >= m {
                // the Gram matrix would become singular
                return Err(Error::SolverStalled {
                    steps: step,
                    feasibility_gap: r_norm - p.epsilon,
                    best_iterate: z.into_boxed_slice(),
                });
            }
            enter(&mut active, &mut in_active, &mut gram, &p.phi, j_enter);
        }
    }
    Err(Error::SolverStalled {
        steps: settings.max_iter,
        feasibility_gap: l2_norm(&r) - p.epsilon,
        best_iterate: z.into_boxed_slice(),
    })
}

/// Indices of the `k` largest-magnitude entries, ties broken by lowest
/// index; returned in ascending order.
pub fn support_recover(coarse: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..coarse.len()).collect();
    idx.sort_by(|&a, &b| {
        coarse[b]
            .abs()
            .partial_cmp(&coarse[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k.min(coarse.len()));
    idx.sort_unstable();
    idx
}

/// Result of the two-stage pipeline.
#[derive(Debug, Clone)]
pub struct TwoStageResult {
    /// Stage-1 coarse decode.
    pub coarse: Vec<f64>,
    pub recovered_support: Vec<usize>,
    /// Stage-2 refined estimate, zero off the recovered support.
    pub refined: Vec<f64>,
    pub coarse_error: f64,
    pub refined_error: f64,
    pub support_exact: bool,
    /// Smallest singular value of the restricted matrix, for bound checks.
    pub sigma_min_restricted: f64,
}

/// Quantizes `Phi x`, decodes coarsely with `eps = sqrt(m) delta / 2`,
/// recovers the support as the largest `k` coarse entries, and refines by
/// applying the pseudoinverse of the restricted matrix to the quantized
/// measurements.
pub fn two_stage(
    phi: &FrameMatrix,
    x: &SparseSignal,
    cfg: &QuantizerConfig,
    settings: &BpdnSettings,
) -> Result<TwoStageResult> {
    let FrameEntries::Real(phi_m) = &phi.entries else {
        return Err(Error::Contract("two-stage decoding expects a real matrix".into()));
    };
    if phi_m.ncols() != x.ambient_n() {
        return Err(Error::Contract(format!(
            "signal dimension {} does not match matrix columns {}",
            x.ambient_n(),
            phi_m.ncols()
        )));
    }
    let m = phi_m.nrows();
    let k = x.sparsity();
    let delta = cfg.delta();
    let x_dense = x.dense();

    let mut q = linalg::matvec(phi_m, &x_dense);
    for v in q.iter_mut() {
        *v = q_delta(*v, delta);
    }
    let epsilon = (m as f64).sqrt() * delta / 2.0;
    let problem = BpdnProblem::new(phi_m.clone(), q.clone(), epsilon)?;
    let coarse = bpdn_solve(&problem, settings)?;
    let recovered_support = support_recover(&coarse, k);

    let restricted = phi_m.select_columns(recovered_support.iter());
    let pinv = linalg::pseudoinverse(
        &FrameMatrix::from_real(restricted, phi.spec, phi.seed),
        DEFAULT_REL_TOL,
    )?;
    let x_hat_t = pinv.apply_real(&q);
    let mut refined = vec![0.0; x.ambient_n()];
    for (&i, &v) in recovered_support.iter().zip(&x_hat_t) {
        refined[i] = v;
    }
    let support_exact = recovered_support == x.support();
    Ok(TwoStageResult {
        coarse_error: l2_distance(&x_dense, &coarse),
        refined_error: l2_distance(&x_dense, &refined),
        coarse,
        recovered_support,
        refined,
        support_exact,
        sigma_min_restricted: pinv.sigma_min,
    })
}

/// Sufficient sample size heuristic `ceil(c4_bar k ln(0.5 e N / k))` for the
/// restricted isometry of order `2k`. `epsilon` is the targeted isometry
/// constant and is validated only; its effect is folded into the caller's
/// choice of `c4_bar`. Advisory: used to warn on undersized configurations.
pub fn rip_sample_size(k: usize, n: usize, epsilon: f64, c4_bar: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("sparsity {k} must lie in 1..=N ({n})")));
    }
    let arg = 0.5 * std::f64::consts::E * (n as f64) / (k as f64);
    Ok((c4_bar * k as f64 * arg.ln()).ceil() as usize)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_val {
            best_val = x.abs();
            best = i;
        }
    }
    best
}

/// `Phi^T v` with contiguous column dot products.
fn mat_t_vec(phi: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..phi.ncols())
        .map(|j| phi.column(j).iter().zip(v).map(|(p, w)| p * w).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_frame, EnsembleSpec};
    use crate::seeding;

    #[test]
    fn zero_is_returned_when_feasible() {
        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0]);
        let p = BpdnProblem::new(phi, vec![0.1, -0.1], 1.0).unwrap();
        let z = bpdn_solve(&p, &BpdnSettings::default()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn support_recovery_ties_break_low() {
        assert_eq!(support_recover(&[0.9, 0.1, -0.8, 0.0], 2), vec![0, 2]);
        assert_eq!(support_recover(&[0.5, 0.5, 0.0], 1), vec![0]);
    }

    #[test]
    fn exact_recovery_with_zero_epsilon() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 20, 50, 31).unwrap();
        let FrameEntries::Real(phi) = &f.entries else { panic!() };
        let x = SparseSignal::new(50, vec![(17, -1.3)]).unwrap();
        let q = linalg::matvec(phi, &x.dense());
        let p = BpdnProblem::new(phi.clone(), q, 0.0).unwrap();
        let z = bpdn_solve(&p, &BpdnSettings::default()).unwrap();
        let err = l2_distance(&z, &x.dense());
        assert!(err < 1e-6, "recovery error {err}");
    }

    #[test]
    fn two_stage_zero_signal() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 10, 30, 3).unwrap();
        let x = SparseSignal::new(30, vec![]).unwrap();
        let cfg = QuantizerConfig::new(0.1).unwrap();
        let r = two_stage(&f, &x, &cfg, &BpdnSettings::default()).unwrap();
        assert_eq!(r.coarse_error, 0.0);
        assert_eq!(r.refined_error, 0.0);
    }

    #[test]
    fn rip_heuristic_examples() {
        assert_eq!(rip_sample_size(20, 1000, 0.5, 1.0).unwrap(), 85);
        let small = rip_sample_size(10, 10, 0.5, 1.0).unwrap();
        assert!(small < 10);
        assert!(rip_sample_size(20, 1000, 1.5, 1.0).is_err());
    }

    #[test]
    fn sparse_signal_validation() {
        assert!(SparseSignal::new(5, vec![(5, 1.0)]).is_err());
        assert!(SparseSignal::new(5, vec![(1, 1.0), (1, 2.0)]).is_err());
        let s = SparseSignal::new(5, vec![(3, 0.0), (1, 2.0)]).unwrap();
        assert_eq!(s.sparsity(), 1); // zero entries are dropped
    }

    #[test]
    fn random_pm_magnitudes() {
        let mut rng = seeding::stream_rng(5, 0);
        let s = SparseSignal::random_pm(100, 16, &mut rng).unwrap();
        assert_eq!(s.sparsity(), 16);
        let mag = 0.25;
        assert!(s.values_on_support().iter().all(|&v| (v.abs() - mag).abs() < 1e-15));
    }
}
