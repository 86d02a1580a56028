//! Dense decompositions for reconstruction: SVD-based pseudoinverse and
//! singular-value extraction, for real and complex frames.
//!
//! The pseudoinverse is formed from the thin SVD rather than the normal
//! equations `(E^T E)^{-1} E^T`, which would square the condition number.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::ensembles::{FrameEntries, FrameMatrix};
use crate::error::{Error, Result};

/// Default relative tolerance for treating singular values as zero.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Pseudoinverse entries, matching the source frame's scalar field.
#[derive(Debug, Clone)]
pub enum PinvEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// The Moore-Penrose pseudoinverse of an `m x k` frame, with the extreme
/// singular values of the source matrix.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    pub matrix: PinvEntries,
    pub source_shape: (usize, usize),
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Pseudoinverse {
    /// Applies the pseudoinverse to a real vector of length `m`.
    pub fn apply_real(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            PinvEntries::Real(p) => matvec(p, v),
            PinvEntries::Complex(_) => panic!("real apply on a complex pseudoinverse"),
        }
    }

    /// Applies the pseudoinverse to a complex vector of length `m`.
    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        match &self.matrix {
            PinvEntries::Complex(p) => matvec_c(p, v),
            PinvEntries::Real(p) => {
                let re: Vec<f64> = v.iter().map(|z| z.re).collect();
                let im: Vec<f64> = v.iter().map(|z| z.im).collect();
                let xr = matvec(p, &re);
                let xi = matvec(p, &im);
                xr.into_iter().zip(xi).map(|(a, b)| Complex64::new(a, b)).collect()
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.matrix {
            PinvEntries::Real(p) => p.iter().map(|v| v * v).sum::<f64>().sqrt(),
            PinvEntries::Complex(p) => p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }
}

/// Row-major matrix-vector product with a fixed left-to-right accumulation
/// order, so repeated evaluations are bit-identical.
pub fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    let mut out = vec![0.0; a.nrows()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += a[(i, j)] * xj;
        }
        *o = acc;
    }
    out
}

/// Complex counterpart of [`matvec`].
pub fn matvec_c(a: &DMatrix<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.ncols(), x.len());
    let mut out = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += a[(i, j)] * xj;
        }
        *o = acc;
    }
    out
}

fn pinv_svd<T>(a: &DMatrix<T>, rel_tol: f64) -> Result<(DMatrix<T>, usize, f64, f64)>
where
    T: ComplexField<RealField = f64>,
{
    let k = a.ncols();
    let svd = a.clone().svd(true, true);
    let mut sigma_max = 0.0f64;
    let mut sigma_min = f64::INFINITY;
    for &s in svd.singular_values.iter() {
        sigma_max = sigma_max.max(s);
        sigma_min = sigma_min.min(s);
    }
    let cutoff = rel_tol * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < k {
        return Err(Error::RankDeficient { sigma_min, sigma_max });
    }
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    // pinv = V * Sigma^{-1} * U^H, assembled as (Sigma^{-1} U^H) then V^H^T.
    let mut ut = u.adjoint();
    for (r, &s) in svd.singular_values.iter().enumerate() {
        let inv = T::from_real(1.0 / s);
        for c in 0..ut.ncols() {
            ut[(r, c)] *= inv.clone();
        }
    }
    let pinv = v_t.adjoint() * ut;
    Ok((pinv, rank, sigma_min, sigma_max))
}

/// SVD pseudoinverse of a frame. Singular values below
/// `rel_tol * sigma_max` are treated as rank deficiency.
pub fn pseudoinverse(frame: &FrameMatrix, rel_tol: f64) -> Result<Pseudoinverse> {
    let (m, k) = (frame.m(), frame.k());
    if m < k {
        return Err(Error::Contract(format!(
            "pseudoinverse requires m >= k, got {m} x {k}"
        )));
    }
    match &frame.entries {
        FrameEntries::Real(a) => {
            let (p, rank, s_min, s_max) = pinv_svd(a, rel_tol)?;
            Ok(Pseudoinverse {
                matrix: PinvEntries::Real(p),
                source_shape: (m, k),
                rank,
                sigma_min: s_min,
                sigma_max: s_max,
            })
        }
        FrameEntries::Complex(a) => {
            let (p, rank, s_min, s_max) = pinv_svd(a, rel_tol)?;
            Ok(Pseudoinverse {
                matrix: PinvEntries::Complex(p),
                source_shape: (m, k),
                rank,
                sigma_min: s_min,
                sigma_max: s_max,
            })
        }
    }
}

/// Extreme singular values of a frame, and whether they lie in the band
/// `sqrt(m) - c_K sqrt(k) - t <= sigma <= sqrt(m) + c_K sqrt(k) + t`
/// with `t = sqrt(m)/2` and `c_K = 1`.
pub fn singular_value_band(frame: &FrameMatrix) -> (f64, f64, bool) {
    let (m, k) = (frame.m() as f64, frame.k() as f64);
    let sv = match &frame.entries {
        FrameEntries::Real(a) => a.clone().singular_values(),
        FrameEntries::Complex(a) => a.clone().singular_values(),
    };
    let mut s_max = 0.0f64;
    let mut s_min = f64::INFINITY;
    for &s in sv.iter() {
        s_max = s_max.max(s);
        s_min = s_min.min(s);
    }
    let t = m.sqrt() / 2.0;
    let lo = m.sqrt() - k.sqrt() - t;
    let hi = m.sqrt() + k.sqrt() + t;
    (s_min, s_max, s_min >= lo && s_max <= hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_frame, EnsembleSpec};
    use nalgebra::dmatrix;

    fn wrap(a: DMatrix<f64>) -> FrameMatrix {
        FrameMatrix::from_real(a, EnsembleSpec::gaussian(), 0)
    }

    #[test]
    fn identity_pseudoinverse() {
        let f = wrap(DMatrix::identity(4, 4));
        let p = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let PinvEntries::Real(p) = &p.matrix else { panic!() };
        assert!((p - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn column_of_ones() {
        // E = [1; 1] has pseudoinverse [0.5, 0.5].
        let f = wrap(dmatrix![1.0; 1.0]);
        let p = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let PinvEntries::Real(p) = &p.matrix else { panic!() };
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_left_inverse_residual() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 200, 20, 5).unwrap();
        let p = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let (PinvEntries::Real(p), FrameEntries::Real(e)) = (&p.matrix, &f.entries) else {
            panic!()
        };
        let residual = (p * e - DMatrix::identity(20, 20)).amax();
        assert!(residual < 1e-10, "|pinv(E) E - I|_max = {residual}");
    }

    #[test]
    fn rank_deficient_is_reported() {
        // rank-1 3x2 matrix
        let f = wrap(dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0]);
        let err = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
        let (s_min, _, passes) = singular_value_band(&f);
        assert!(s_min < 1e-12);
        assert!(!passes);
    }

    #[test]
    fn trivial_band_for_identity() {
        let f = wrap(DMatrix::identity(3, 3));
        let (s_min, s_max, _) = singular_value_band(&f);
        assert!((s_min - 1.0).abs() < 1e-14);
        assert!((s_max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn operator_norm_matches_sigma_min() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 120, 10, 17).unwrap();
        let p = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let PinvEntries::Real(pm) = &p.matrix else { panic!() };
        let op_norm = pm.clone().singular_values().max();
        assert!((op_norm - 1.0 / p.sigma_min).abs() <= 1e-10 * op_norm);
    }

    #[test]
    fn scaling_inverts() {
        let f = sample_frame(&EnsembleSpec::gaussian(), 30, 4, 2).unwrap();
        let FrameEntries::Real(a) = &f.entries else { panic!() };
        let scaled = wrap(a * 2.0);
        let p1 = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let p2 = pseudoinverse(&scaled, DEFAULT_REL_TOL).unwrap();
        let (PinvEntries::Real(p1), PinvEntries::Real(p2)) = (&p1.matrix, &p2.matrix) else {
            panic!()
        };
        assert!((p1 * 0.5 - p2).amax() < 1e-12);
    }

    #[test]
    fn complex_moore_penrose_identities() {
        let spec = EnsembleSpec::partial_dft(101);
        let f = sample_frame(&spec, 24, 6, 13).unwrap();
        let p = pseudoinverse(&f, DEFAULT_REL_TOL).unwrap();
        let (PinvEntries::Complex(p), FrameEntries::Complex(e)) = (&p.matrix, &f.entries) else {
            panic!()
        };
        let pe = p * e;
        let ident = DMatrix::<Complex64>::identity(6, 6);
        assert!((pe.clone() - ident).map(|z| z.norm()).max() < 1e-10);
        // E pinv(E) E = E and pinv(E) E pinv(E) = pinv(E)
        assert!(((e * p) * e - e).map(|z| z.norm()).max() < 1e-9);
        assert!(((p * e) * p - p).map(|z| z.norm()).max() < 1e-9);
        // E pinv(E) is Hermitian
        let ep = e * p;
        assert!((ep.adjoint() - ep).map(|z| z.norm()).max() < 1e-9);
    }
}
