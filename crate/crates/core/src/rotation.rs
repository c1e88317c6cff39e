//! The ensemble map linking optimal measurements to pretty good measurements,
//! its closed-form inverse, the PGM fixed-point test, and the pure-state
//! alignment of a mixed-state solution.
//!
//! For an ensemble `P` with decomposition vectors `psi` and solved blocks
//! `X^(ii)`, the image `Q` is built from `chi = psi * D`: the optimal POVM of
//! `P` is exactly the square-root measurement of `Q`. The inverse map needs
//! no solve at all: it reads off the inverse square roots of the diagonal
//! blocks of `F^(1/2)`, where `F` is the Gram matrix of a decomposition of
//! `Q`.

use itertools::Itertools;
use num_complex::Complex;

use crate::ensemble::{Ensemble, Povm, PureDecomposition};
use crate::error::{MedError, Result};
use crate::gram::{build_gram, dual_basis};
use crate::matrix::{assemble_block_diagonal, extract_diagonal_blocks, ComplexMatrix, RankProfile};
use crate::scalar::{real, Scalar};
use crate::solver::SolverSolution;

/// Image ensemble `Q = {q_i, sigma_i}` together with the vectors
/// `chi = psi * D` it was built from.
#[derive(Debug, Clone)]
pub struct MappedEnsemble<T: Scalar> {
    pub ensemble: Ensemble<T>,
    pub chi: ComplexMatrix<T>,
}

/// Apply the map: `chi_ij = sum_k X^(ii)_kj psi_ik`, then
/// `q_i sigma_i = sum_j |chi_ij><chi_ij| / Tr(DGD)`.
pub fn map_r<T: Scalar>(
    e: &Ensemble<T>,
    sol: &SolverSolution<T>,
    d: &PureDecomposition<T>,
) -> Result<MappedEnsemble<T>> {
    if e.profile() != &sol.profile || e.profile() != d.profile() {
        return Err(MedError::ProfileMismatch {
            detail: "ensemble, solution and decomposition profiles differ".into(),
        });
    }
    let profile = e.profile().clone();
    let chi = d.vectors().mul(&sol.d);
    let mut weights = Vec::with_capacity(profile.num_blocks());
    let mut raw = Vec::with_capacity(profile.num_blocks());
    for i in 0..profile.num_blocks() {
        let cols = chi.columns(profile.block_range(i));
        let w = cols.mul(&cols.adjoint()).hermitian_part();
        let norm = w.trace().re;
        weights.push(norm);
        raw.push(w);
    }
    let total: T = weights.iter().copied().sum();
    let priors: Vec<T> = weights.iter().map(|&w| w / total).collect();
    let states: Vec<ComplexMatrix<T>> = raw
        .into_iter()
        .zip(&weights)
        .map(|(w, &norm)| w.scale_re(T::one() / norm))
        .collect();
    Ok(MappedEnsemble {
        ensemble: Ensemble::new(profile, priors, states)?,
        chi,
    })
}

/// Pretty good (square-root) measurement of an ensemble:
/// `Pi_i = S^(-1/2) p_i rho_i S^(-1/2)` with `S = sum_j p_j rho_j`.
pub fn pgm<T: Scalar>(e: &Ensemble<T>) -> Result<Povm<T>> {
    let n = e.dim();
    let mut s = ComplexMatrix::zeros(n, n);
    for i in 0..e.num_states() {
        s = s.add(&e.weighted_state(i));
    }
    let tol = real::<T>(1e-8) * s.frobenius_norm().max(T::one());
    let s_inv_sqrt = s
        .hermitian_part()
        .principal_inv_sqrt(tol)
        .map_err(|_| MedError::SingularAverage)?;
    let elements: Vec<ComplexMatrix<T>> = (0..e.num_states())
        .map(|i| {
            s_inv_sqrt
                .mul(&e.weighted_state(i))
                .mul(&s_inv_sqrt)
                .hermitian_part()
        })
        .collect();
    Povm::new(e.profile().clone(), elements)
}

/// Cross-check the central identity: the PGM of the mapped ensemble must
/// equal the solver's POVM element-wise within `tol`.
pub fn verify_pgm_identity<T: Scalar>(
    e: &Ensemble<T>,
    sol: &SolverSolution<T>,
    d: &PureDecomposition<T>,
    tol: T,
) -> Result<bool> {
    let mapped = map_r(e, sol, d)?;
    let via_pgm = pgm(&mapped.ensemble)?;
    let g = build_gram(d)?;
    let dual = dual_basis(d, &g)?;
    let via_solver = crate::solver::povm_from_solution(sol, d, &dual)?;
    let mut max_diff = T::zero();
    for (a, b) in via_pgm.elements().iter().zip(via_solver.elements()) {
        max_diff = max_diff.max(a.max_abs_diff(b));
    }
    Ok(max_diff <= tol)
}

/// Closed-form inverse of the map. Takes the image ensemble `Q`, returns the
/// unique source `P` whose optimal POVM is the PGM of `Q`.
pub fn map_r_inverse<T: Scalar>(q: &Ensemble<T>) -> Result<Ensemble<T>> {
    let profile = q.profile().clone();
    let chi = q.decompose()?;
    let f = build_gram(&chi)?;
    let f_sqrt = f.sqrt()?;
    let h_blocks = extract_diagonal_blocks(&f_sqrt, &profile)?;
    let h_inv_sqrt: Vec<ComplexMatrix<T>> = h_blocks
        .iter()
        .map(|h| {
            let tol = real::<T>(1e-10) * h.frobenius_norm().max(T::one());
            h.principal_inv_sqrt(tol)
        })
        .collect::<Result<_>>()?;
    let d_a = assemble_block_diagonal(&h_inv_sqrt, &profile)?;

    // normalizer from the boxed closed form: c^2 = 1 / sum_s Tr(H_s^(-1/2) F^(ss) H_s^(-1/2))
    let mut denom = T::zero();
    for (i, h) in h_inv_sqrt.iter().enumerate() {
        let f_ii = crate::matrix::block_view(f.matrix(), &profile, i, i)?;
        denom += h.mul(&f_ii).mul(h).trace().re;
    }
    let c = (T::one() / denom).sqrt();

    let psi = chi.vectors().mul(&d_a).scale_re(c);
    PureDecomposition::new(profile, psi)?.recompose()
}

/// True iff every eigenvalue of every diagonal block of `G^(1/2)` equals a
/// single common value within `tol` — exactly the ensembles that are fixed
/// points of the map, i.e. whose own PGM is optimal.
pub fn pgm_is_optimal<T: Scalar>(e: &Ensemble<T>, tol: T) -> Result<bool> {
    let d = e.decompose()?;
    let g = build_gram(&d)?;
    let s = g.sqrt()?;
    let blocks = extract_diagonal_blocks(&s, e.profile())?;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for b in blocks {
        let eig = b.hermitian_eig(T::infinity())?;
        lo = lo.min(eig.eigenvalues[0]);
        hi = hi.max(eig.eigenvalues[eig.eigenvalues.len() - 1]);
    }
    Ok(hi - lo <= tol)
}

/// Pure-state alignment of a solved mixed instance.
#[derive(Debug, Clone)]
pub struct AlignedPure<T: Scalar> {
    /// The rotated decomposition of the source ensemble.
    pub rotated: PureDecomposition<T>,
    /// The aligned pure ensemble `{lambda_ij, |psi_ij>}` on profile `(1,...,1)`.
    pub pure_ensemble: Ensemble<T>,
    /// Rank-one optimal POVM of the pure ensemble, flat block order.
    pub pure_povm: Povm<T>,
    /// Diagonal entries of the rotated `D` (flat block order).
    pub d_diagonal: Vec<T>,
}

/// Rotate each decomposition block by the eigenbasis of its `X^(ii)` so the
/// solved `D` becomes diagonal; the resulting pure ensemble has a rank-one
/// optimal POVM whose block sums reproduce the mixed projectors.
pub fn aligned_pure_decomposition<T: Scalar>(
    e: &Ensemble<T>,
    sol: &SolverSolution<T>,
    d: &PureDecomposition<T>,
) -> Result<AlignedPure<T>> {
    if e.profile() != &sol.profile || e.profile() != d.profile() {
        return Err(MedError::ProfileMismatch {
            detail: "ensemble, solution and decomposition profiles differ".into(),
        });
    }
    let profile = e.profile().clone();
    let n = profile.dim();

    let mut unitaries = Vec::with_capacity(profile.num_blocks());
    let mut d_diagonal = Vec::with_capacity(n);
    for x in sol.d_blocks()? {
        let eig = x.hermitian_eig(real(1e-8))?;
        d_diagonal.extend(eig.eigenvalues.iter().copied());
        unitaries.push(eig.eigenvectors);
    }
    let u_d = assemble_block_diagonal(&unitaries, &profile)?;

    let rotated_vectors = d.vectors().mul(&u_d);
    let rotated = PureDecomposition::new(profile.clone(), rotated_vectors.clone())?;

    // pure ensemble: weights are squared norms, states the normalized columns
    let mut priors = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for a in 0..n {
        let col = rotated_vectors.column(a);
        let norm2: T = col.iter().map(|z| z.norm_sqr()).sum();
        priors.push(norm2);
        let inv = T::one() / norm2.sqrt();
        let mut outer = ComplexMatrix::zeros(n, n);
        for (i, &vi) in col.iter().enumerate() {
            for (j, &vj) in col.iter().enumerate() {
                outer[(i, j)] = vi * vj.conj() * Complex::new(inv * inv, T::zero());
            }
        }
        states.push(outer);
    }
    let pure_profile = RankProfile::pure(n);
    let pure_ensemble = Ensemble::new(pure_profile.clone(), priors, states)?;

    // rank-one projectors: columns of (dual * D^-1 * M * U_D)
    let g = build_gram(d)?;
    let dual = dual_basis(d, &g)?;
    let d_inv_blocks: Vec<ComplexMatrix<T>> = sol
        .d_blocks()?
        .iter()
        .map(|b| b.inverse())
        .collect::<Result<_>>()?;
    let d_inv = assemble_block_diagonal(&d_inv_blocks, &profile)?;
    let w = dual.vectors().mul(&d_inv).mul(&sol.m).mul(&u_d);
    let mut elements = Vec::with_capacity(n);
    for a in 0..n {
        let col = w.column(a);
        let mut outer = ComplexMatrix::zeros(n, n);
        for (i, &vi) in col.iter().enumerate() {
            for (j, &vj) in col.iter().enumerate() {
                outer[(i, j)] = vi * vj.conj();
            }
        }
        elements.push(outer);
    }
    let pure_povm = Povm::new(pure_profile, elements)?;

    Ok(AlignedPure {
        rotated,
        pure_ensemble,
        pure_povm,
        d_diagonal,
    })
}

/// Distance between two ensembles of the same profile: total Frobenius
/// distance of the weighted states, minimized over permutations within each
/// group of equal-rank states.
pub fn ensemble_distance<T: Scalar>(a: &Ensemble<T>, b: &Ensemble<T>) -> Result<T> {
    if a.profile() != b.profile() {
        return Err(MedError::ProfileMismatch {
            detail: format!("profiles {} and {} differ", a.profile(), b.profile()),
        });
    }
    let ranks = a.profile().ranks();
    let mut total = T::zero();
    let mut start = 0;
    while start < ranks.len() {
        let mut end = start + 1;
        while end < ranks.len() && ranks[end] == ranks[start] {
            end += 1;
        }
        let group: Vec<usize> = (start..end).collect();
        let mut best = T::infinity();
        for perm in group.iter().copied().permutations(group.len()) {
            let mut dist = T::zero();
            for (&i, &j) in group.iter().zip(&perm) {
                dist += a
                    .weighted_state(i)
                    .sub(&b.weighted_state(j))
                    .frobenius_norm();
            }
            best = best.min(dist);
        }
        total += best;
        start = end;
    }
    Ok(total)
}
