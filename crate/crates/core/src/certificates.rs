//! Optimality certificates for candidate POVMs.
//!
//! A candidate is optimal iff it is a projective measurement with the right
//! ranks and the operator `Z = sum_i p_i rho_i Pi_i` is positive definite.
//! The stationarity identity `Pi_j (p_j rho_j - p_i rho_i) Pi_i = 0` and the
//! global inequality `Z >= p_i rho_i` are implied, but both are evaluated
//! anyway as independent cross-checks.

use crate::ensemble::{success_probability, Ensemble, Povm};
use crate::error::{MedError, Result};
use crate::matrix::{rank_from_spectrum, ComplexMatrix, RankProfile};
use crate::scalar::{real, Scalar};

/// Residual tolerance and eigenvalue-positivity margin used by
/// [`check_optimal`].
#[derive(Debug, Clone, Copy)]
pub struct CertTolerances<T: Scalar> {
    /// Bound on projectivity, completeness, stationarity residuals and on
    /// `-lambda_min(Z - p_i rho_i)`.
    pub residual: T,
    /// Strict positivity margin required of `lambda_min(Z)`.
    pub positivity: T,
}

impl<T: Scalar> Default for CertTolerances<T> {
    fn default() -> Self {
        Self {
            residual: real(1e-8),
            positivity: real(1e-10),
        }
    }
}

/// Pass/fail record with residual magnitudes.
#[derive(Debug, Clone)]
pub struct Certificate<T: Scalar> {
    pub projectivity_residual: T,
    pub completeness_residual: T,
    pub rank_ok: Vec<bool>,
    pub stationarity_residual: T,
    pub z_hermiticity_residual: T,
    pub z_min_eigenvalue: T,
    pub global_min_eigenvalue: T,
    pub p_success: T,
    pub passed: bool,
}

/// Projectivity diagnostics of a POVM against a rank profile.
#[derive(Debug, Clone)]
pub struct ProjectivityReport<T: Scalar> {
    /// `max_ij |Pi_i Pi_j - delta_ij Pi_i|_F`.
    pub orthogonality_residual: T,
    /// `|sum_i Pi_i - 1|_F`.
    pub completeness_residual: T,
    pub ranks_found: Vec<usize>,
    pub rank_ok: Vec<bool>,
}

pub fn check_projective<T: Scalar>(
    pov: &Povm<T>,
    profile: &RankProfile,
) -> Result<ProjectivityReport<T>> {
    if pov.dim() != profile.dim() || pov.elements().len() != profile.num_blocks() {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "POVM has {} elements on dim {}, profile is {}",
                pov.elements().len(),
                pov.dim(),
                profile
            ),
        });
    }
    let n = profile.dim();
    let mut ortho = T::zero();
    for (i, a) in pov.elements().iter().enumerate() {
        for (j, b) in pov.elements().iter().enumerate() {
            let mut prod = a.mul(b);
            if i == j {
                prod = prod.sub(a);
            }
            ortho = ortho.max(prod.frobenius_norm());
        }
    }
    let completeness = pov
        .total()
        .sub(&ComplexMatrix::identity(n))
        .frobenius_norm();
    let mut ranks_found = Vec::with_capacity(profile.num_blocks());
    let mut rank_ok = Vec::with_capacity(profile.num_blocks());
    for (i, e) in pov.elements().iter().enumerate() {
        let eig = e.hermitian_part().hermitian_eig(T::infinity())?;
        let rank = rank_from_spectrum(&eig.eigenvalues, n);
        rank_ok.push(rank == profile.ranks()[i]);
        ranks_found.push(rank);
    }
    Ok(ProjectivityReport {
        orthogonality_residual: ortho,
        completeness_residual: completeness,
        ranks_found,
        rank_ok,
    })
}

/// `Z = sum_i p_i rho_i Pi_i` and its hermiticity residual. `Z` is Hermitian
/// only at stationary points, so the residual doubles as a stationarity
/// indicator.
pub fn compute_z<T: Scalar>(e: &Ensemble<T>, pov: &Povm<T>) -> Result<(ComplexMatrix<T>, T)> {
    if e.dim() != pov.dim() || e.num_states() != pov.elements().len() {
        return Err(MedError::ShapeMismatch {
            detail: "ensemble and POVM shapes differ".into(),
        });
    }
    let n = e.dim();
    let mut z = ComplexMatrix::zeros(n, n);
    for i in 0..e.num_states() {
        z = z.add(&e.weighted_state(i).mul(&pov.elements()[i]));
    }
    let herm = z.hermitian_residual();
    Ok((z, herm))
}

/// Evaluate all four certificate families; `passed` follows the
/// [`Certificate`] invariant.
pub fn check_optimal<T: Scalar>(
    e: &Ensemble<T>,
    pov: &Povm<T>,
    tols: &CertTolerances<T>,
) -> Result<Certificate<T>> {
    let proj = check_projective(pov, e.profile())?;

    let mut stationarity = T::zero();
    for i in 0..e.num_states() {
        for j in 0..e.num_states() {
            if i == j {
                continue;
            }
            let diff = e.weighted_state(j).sub(&e.weighted_state(i));
            let r = pov.elements()[j]
                .mul(&diff)
                .mul(&pov.elements()[i])
                .frobenius_norm();
            stationarity = stationarity.max(r);
        }
    }

    let (z, z_herm) = compute_z(e, pov)?;
    let zh = z.hermitian_part();
    let z_min = zh.min_eigenvalue(T::infinity())?;
    let mut global_min = T::infinity();
    for i in 0..e.num_states() {
        let gap = zh.sub(&e.weighted_state(i));
        global_min = global_min.min(gap.min_eigenvalue(T::infinity())?);
    }
    let p_success = success_probability(e, pov)?;

    let passed = proj.orthogonality_residual <= tols.residual
        && proj.completeness_residual <= tols.residual
        && proj.rank_ok.iter().all(|&b| b)
        && stationarity <= tols.residual
        && z_min > tols.positivity
        && global_min >= -tols.residual;

    Ok(Certificate {
        projectivity_residual: proj.orthogonality_residual,
        completeness_residual: proj.completeness_residual,
        rank_ok: proj.rank_ok,
        stationarity_residual: stationarity,
        z_hermiticity_residual: z_herm,
        z_min_eigenvalue: z_min,
        global_min_eigenvalue: global_min,
        p_success,
        passed,
    })
}

/// Dual objective `Tr(Z)` and the feasibility margin
/// `min_i lambda_min(Z - p_i rho_i)`. For feasible `Z` (margin >= 0), weak
/// duality gives `Tr(Z) >= P_s` for every POVM.
pub fn dual_objective<T: Scalar>(e: &Ensemble<T>, z: &ComplexMatrix<T>) -> Result<(T, T)> {
    if z.rows() != e.dim() || z.cols() != e.dim() {
        return Err(MedError::ShapeMismatch {
            detail: "Z dimension does not match the ensemble".into(),
        });
    }
    let zh = z.hermitian_part();
    let mut margin = T::infinity();
    for i in 0..e.num_states() {
        let gap = zh.sub(&e.weighted_state(i));
        margin = margin.min(gap.min_eigenvalue(T::infinity())?);
    }
    Ok((zh.trace().re, margin))
}
