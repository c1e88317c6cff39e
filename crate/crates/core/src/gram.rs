//! Gram matrices of pure-state decompositions, dual (biorthogonal) bases,
//! and linear homotopy paths between Gram matrices.

use crate::ensemble::PureDecomposition;
use crate::error::{MedError, Result};
use crate::matrix::{ComplexMatrix, RankProfile};
use crate::scalar::{real, to_f64, Scalar};

/// Hermitian positive-definite matrix of inner products
/// `G[(l,k),(i,j)] = <psi_lk | psi_ij>` in two-tier block order.
#[derive(Debug, Clone)]
pub struct GramMatrix<T: Scalar> {
    profile: RankProfile,
    matrix: ComplexMatrix<T>,
}

impl<T: Scalar> GramMatrix<T> {
    /// Wrap an explicit matrix, verifying hermiticity (within `tol`) and
    /// positive definiteness (numerical full rank).
    pub fn new(profile: RankProfile, matrix: ComplexMatrix<T>, tol: T) -> Result<Self> {
        let n = profile.dim();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "gram matrix is {}x{}, profile dimension is {}",
                    matrix.rows(),
                    matrix.cols(),
                    n
                ),
            });
        }
        let herm = matrix.hermitian_residual();
        if herm > tol {
            return Err(MedError::NotHermitian {
                residual: to_f64(herm),
                tol: to_f64(tol),
            });
        }
        let eig = matrix.hermitian_part().hermitian_eig(T::infinity())?;
        let largest = eig.eigenvalues[n - 1];
        let cutoff = largest.max(T::zero()) * real::<T>(n as f64) * real::<T>(1e-12);
        if eig.eigenvalues[0] <= cutoff {
            return Err(MedError::NotPositiveDefinite {
                min_eigenvalue: to_f64(eig.eigenvalues[0]),
            });
        }
        Ok(Self { profile, matrix })
    }

    pub(crate) fn new_unchecked(profile: RankProfile, matrix: ComplexMatrix<T>) -> Self {
        Self { profile, matrix }
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// The matrix scaled to unit trace. Decompositions of normalized
    /// ensembles already have `Tr G = sum_i p_i = 1`.
    pub fn trace_normalized(&self) -> ComplexMatrix<T> {
        self.matrix.scale_re(T::one() / self.trace())
    }

    /// Principal square root `G^(1/2)`.
    pub fn sqrt(&self) -> Result<ComplexMatrix<T>> {
        let tol = real::<T>(1e-8) * self.matrix.frobenius_norm().max(T::one());
        self.matrix.principal_sqrt(tol)
    }
}

/// Build the Gram matrix of a decomposition; errors with
/// `NotPositiveDefinite` when the vectors are linearly dependent.
pub fn build_gram<T: Scalar>(d: &PureDecomposition<T>) -> Result<GramMatrix<T>> {
    let psi = d.vectors();
    let g = psi.adjoint().mul(psi).hermitian_part();
    GramMatrix::new(d.profile().clone(), g, real(1e-10))
}

/// Biorthogonal partner vectors `<psi_a | u_b> = delta_ab`, stored column-wise
/// like the decomposition itself.
#[derive(Debug, Clone)]
pub struct DualBasis<T: Scalar> {
    profile: RankProfile,
    vectors: ComplexMatrix<T>,
}

impl<T: Scalar> DualBasis<T> {
    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn vectors(&self) -> &ComplexMatrix<T> {
        &self.vectors
    }
}

/// Expand the dual set in the decomposition basis with coefficients `G^(-1)`.
pub fn dual_basis<T: Scalar>(d: &PureDecomposition<T>, g: &GramMatrix<T>) -> Result<DualBasis<T>> {
    if d.profile() != g.profile() {
        return Err(MedError::ProfileMismatch {
            detail: format!(
                "decomposition has profile {}, gram {}",
                d.profile(),
                g.profile()
            ),
        });
    }
    let inv = g.matrix().inverse()?;
    Ok(DualBasis {
        profile: d.profile().clone(),
        vectors: d.vectors().mul(&inv),
    })
}

/// Convex combination `(1-t) G0 + t G1`; stays positive definite for
/// `t` in `[0, 1]` because the PD cone is convex.
pub fn homotopy_path<T: Scalar>(
    g0: &GramMatrix<T>,
    g1: &GramMatrix<T>,
    t: T,
) -> Result<GramMatrix<T>> {
    if g0.profile() != g1.profile() {
        return Err(MedError::ProfileMismatch {
            detail: format!(
                "endpoints have profiles {} and {}",
                g0.profile(),
                g1.profile()
            ),
        });
    }
    let m = g0
        .matrix()
        .scale_re(T::one() - t)
        .add(&g1.matrix().scale_re(t));
    Ok(GramMatrix::new_unchecked(g0.profile().clone(), m))
}

/// Number of continuation intervals: `max(1, ceil(|G0 - G1|_F * n^2))`.
pub fn interval_count<T: Scalar>(g0: &GramMatrix<T>, g1: &GramMatrix<T>) -> usize {
    let n = g0.dim();
    let dist = g0.matrix().sub(g1.matrix()).frobenius_norm();
    let raw = dist * real::<T>((n * n) as f64);
    let c = raw.ceil().to_usize().unwrap_or(1);
    c.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::random_ensemble;
    use crate::matrix::RankProfile;
    use num_complex::Complex;

    type M = ComplexMatrix<f64>;

    #[test]
    fn gram_of_orthonormal_vectors_is_identity() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let d = PureDecomposition::new(profile, M::identity(2)).unwrap();
        let g = build_gram(&d).unwrap();
        assert!(g.matrix().approx_eq(&M::identity(2), 1e-14));
    }

    #[test]
    fn gram_of_overlapping_pair() {
        let gamma = 0.6;
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let mut psi = M::zeros(2, 2);
        psi[(0, 0)] = Complex::new(1.0, 0.0);
        psi[(0, 1)] = Complex::new(gamma, 0.0);
        psi[(1, 1)] = Complex::new((1.0 - gamma * gamma).sqrt(), 0.0);
        let d = PureDecomposition::new(profile, psi).unwrap();
        let g = build_gram(&d).unwrap();
        assert!((g.matrix()[(0, 1)].re - gamma).abs() < 1e-14);
        assert!((g.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gram_matches_direct_stacking() {
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        let e = random_ensemble::<f64>(&profile, 20).unwrap();
        let d = e.decompose().unwrap();
        let g = build_gram(&d).unwrap();
        let direct = d.vectors().adjoint().mul(d.vectors());
        assert!(g.matrix().approx_eq(&direct, 1e-12));
        // trace equals sum of priors = 1
        assert!((g.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_rejects_dependent_vectors() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let mut psi = M::zeros(2, 2);
        psi[(0, 0)] = Complex::new(1.0, 0.0);
        psi[(0, 1)] = Complex::new(1.0, 0.0);
        let d = PureDecomposition::new(profile, psi).unwrap();
        assert_eq!(build_gram(&d).unwrap_err().kind(), "NotPositiveDefinite");
    }

    #[test]
    fn dual_of_orthonormal_set_is_itself() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let d = PureDecomposition::new(profile, M::identity(2)).unwrap();
        let g = build_gram(&d).unwrap();
        let u = dual_basis(&d, &g).unwrap();
        assert!(u.vectors().approx_eq(&M::identity(2), 1e-14));
    }

    #[test]
    fn dual_norms_for_overlap_pair() {
        let gamma = 0.3;
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let mut psi = M::zeros(2, 2);
        psi[(0, 0)] = Complex::new(1.0, 0.0);
        psi[(0, 1)] = Complex::new(gamma, 0.0);
        psi[(1, 1)] = Complex::new((1.0f64 - gamma * gamma).sqrt(), 0.0);
        let d = PureDecomposition::new(profile, psi).unwrap();
        let g = build_gram(&d).unwrap();
        let u = dual_basis(&d, &g).unwrap();
        let expected = 1.0 / (1.0 - gamma * gamma);
        for j in 0..2 {
            let norm2: f64 = u.vectors().column(j).iter().map(|z| z.norm_sqr()).sum();
            assert!((norm2 - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_gram_is_inverse_gram() {
        let profile = RankProfile::new(vec![2, 2]).unwrap();
        let e = random_ensemble::<f64>(&profile, 31).unwrap();
        let d = e.decompose().unwrap();
        let g = build_gram(&d).unwrap();
        let u = dual_basis(&d, &g).unwrap();
        let dual_gram = u.vectors().adjoint().mul(u.vectors());
        let ginv = g.matrix().inverse().unwrap();
        assert!(dual_gram.max_abs_diff(&ginv) < 1e-10);
        // biorthogonality
        let cross = d.vectors().adjoint().mul(u.vectors());
        assert!(cross.approx_eq(&M::identity(4), 1e-10));
    }

    #[test]
    fn homotopy_endpoints_and_midpoint() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let g0 = GramMatrix::new(profile.clone(), M::from_real_diag(&[1.0, 3.0]), 1e-10).unwrap();
        let g1 = GramMatrix::new(profile.clone(), M::from_real_diag(&[3.0, 1.0]), 1e-10).unwrap();
        assert!(homotopy_path(&g0, &g1, 0.0)
            .unwrap()
            .matrix()
            .approx_eq(g0.matrix(), 0.0));
        assert!(homotopy_path(&g0, &g1, 1.0)
            .unwrap()
            .matrix()
            .approx_eq(g1.matrix(), 0.0));
        let mid = homotopy_path(&g0, &g1, 0.5).unwrap();
        assert!(mid
            .matrix()
            .approx_eq(&M::from_real_diag(&[2.0, 2.0]), 1e-15));
        // constant path
        let same = homotopy_path(&g0, &g0, 0.7).unwrap();
        assert!(same.matrix().approx_eq(g0.matrix(), 1e-15));
    }

    #[test]
    fn homotopy_stays_positive_definite() {
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        let a = random_ensemble::<f64>(&profile, 1).unwrap();
        let b = random_ensemble::<f64>(&profile, 2).unwrap();
        let g0 = build_gram(&a.decompose().unwrap()).unwrap();
        let g1 = build_gram(&b.decompose().unwrap()).unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let g = homotopy_path(&g0, &g1, t).unwrap();
            let min = g.matrix().min_eigenvalue(1e-8).unwrap();
            assert!(min > 0.0, "lost positive definiteness at t={t}");
        }
    }

    #[test]
    fn interval_count_arithmetic() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let g0 = GramMatrix::new(profile.clone(), M::identity(2), 1e-10).unwrap();
        assert_eq!(interval_count(&g0, &g0), 1);
        // |dG|_F = 0.5, n = 2 -> ceil(2) = 2
        let mut m1 = M::identity(2);
        m1[(0, 0)] = Complex::new(1.5, 0.0);
        let g1 = GramMatrix::new(profile.clone(), m1, 1e-10).unwrap();
        assert_eq!(interval_count(&g0, &g1), 2);
        // |dG|_F = 0.03, n = 4 -> ceil(0.48) = 1
        let p4 = RankProfile::new(vec![2, 2]).unwrap();
        let a = GramMatrix::new(p4.clone(), M::identity(4), 1e-10).unwrap();
        let mut m2 = M::identity(4);
        m2[(0, 0)] = Complex::new(1.03, 0.0);
        let b = GramMatrix::new(p4, m2, 1e-10).unwrap();
        assert_eq!(interval_count(&a, &b), 1);
    }

    #[test]
    fn homotopy_rejects_profile_mismatch() {
        let g0 =
            GramMatrix::new(RankProfile::new(vec![1, 1]).unwrap(), M::identity(2), 1e-10).unwrap();
        let g1 =
            GramMatrix::new(RankProfile::new(vec![2]).unwrap(), M::identity(2), 1e-10).unwrap();
        assert!(homotopy_path(&g0, &g1, 0.5).is_err());
    }
}
