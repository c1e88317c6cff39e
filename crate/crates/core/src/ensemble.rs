//! Ensembles of linearly independent states, their pure-state decompositions,
//! POVMs, and scoring.
//!
//! An ensemble lives in the class fixed by a [`RankProfile`]: state `i` has
//! rank `r_i`, the supports are linearly independent, and together they span
//! the whole `n`-dimensional space (`sum r_i = n`). Random members of the
//! class are produced by congruence transformations of a fixed orthogonal
//! seed set.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MedError, Result};
use crate::matrix::{rank_from_spectrum, BlockIndex, ComplexMatrix, RankProfile};
use crate::scalar::{real, Scalar};

/// Prior probabilities plus density matrices with a fixed rank profile.
#[derive(Debug, Clone)]
pub struct Ensemble<T: Scalar> {
    profile: RankProfile,
    priors: Vec<T>,
    states: Vec<ComplexMatrix<T>>,
}

impl<T: Scalar> Ensemble<T> {
    /// Structural construction: counts and shapes only. Use [`validate`]
    /// (or [`is_valid`]) for the full membership diagnostics.
    ///
    /// [`validate`]: Ensemble::validate
    /// [`is_valid`]: Ensemble::is_valid
    pub fn new(
        profile: RankProfile,
        priors: Vec<T>,
        states: Vec<ComplexMatrix<T>>,
    ) -> Result<Self> {
        let m = profile.num_blocks();
        let n = profile.dim();
        if priors.len() != m || states.len() != m {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "profile has {} states, got {} priors and {} density matrices",
                    m,
                    priors.len(),
                    states.len()
                ),
            });
        }
        for (i, s) in states.iter().enumerate() {
            if s.rows() != n || s.cols() != n {
                return Err(MedError::ShapeMismatch {
                    detail: format!(
                        "state {} is {}x{}, expected {}x{}",
                        i,
                        s.rows(),
                        s.cols(),
                        n,
                        n
                    ),
                });
            }
        }
        Ok(Self {
            profile,
            priors,
            states,
        })
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn states(&self) -> &[ComplexMatrix<T>] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn num_states(&self) -> usize {
        self.profile.num_blocks()
    }

    /// `p_i * rho_i`.
    pub fn weighted_state(&self, i: usize) -> ComplexMatrix<T> {
        self.states[i].scale_re(self.priors[i])
    }

    /// Full membership diagnostics; passes iff the ensemble lies in the
    /// rank-profile class.
    pub fn validate(&self, tol: T) -> MembershipReport<T> {
        let n = self.dim();
        let prior_sum: T = self.priors.iter().copied().sum();
        let prior_sum_residual = (prior_sum - T::one()).abs();
        let min_prior = self
            .priors
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b));

        let mut hermiticity_residual = T::zero();
        let mut min_state_eigenvalue = T::infinity();
        let mut trace_residual = T::zero();
        let mut ranks_found = Vec::with_capacity(self.num_states());
        let mut ranks_ok = true;

        for (i, s) in self.states.iter().enumerate() {
            hermiticity_residual = hermiticity_residual.max(s.hermitian_residual());
            trace_residual = trace_residual.max((s.trace().re - T::one()).abs());
            match s.hermitian_part().hermitian_eig(T::infinity()) {
                Ok(eig) => {
                    min_state_eigenvalue = min_state_eigenvalue.min(eig.eigenvalues[0]);
                    let rank = rank_from_spectrum(&eig.eigenvalues, n);
                    ranks_found.push(rank);
                    if rank != self.profile.ranks()[i] {
                        ranks_ok = false;
                    }
                }
                Err(_) => {
                    ranks_found.push(0);
                    ranks_ok = false;
                }
            }
        }

        // joint span / linear independence: sum of the weighted states must
        // have full numerical rank
        let mut total = ComplexMatrix::zeros(n, n);
        for i in 0..self.num_states() {
            total = total.add(&self.weighted_state(i));
        }
        let span_ok = match total.hermitian_part().hermitian_eig(T::infinity()) {
            Ok(eig) => rank_from_spectrum(&eig.eigenvalues, n) == n,
            Err(_) => false,
        };

        let passed = prior_sum_residual <= tol
            && min_prior > T::zero()
            && hermiticity_residual <= tol
            && min_state_eigenvalue >= -tol
            && trace_residual <= tol
            && ranks_ok
            && span_ok;

        MembershipReport {
            prior_sum_residual,
            min_prior,
            hermiticity_residual,
            min_state_eigenvalue,
            trace_residual,
            ranks_found,
            ranks_ok,
            span_ok,
            passed,
        }
    }

    pub fn is_valid(&self, tol: T) -> bool {
        self.validate(tol).passed
    }

    /// Eigendecomposition-based resolution of each `p_i rho_i` into `r_i`
    /// unnormalized pure components (largest eigenvalues first).
    pub fn decompose(&self) -> Result<PureDecomposition<T>> {
        let n = self.dim();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (i, s) in self.states.iter().enumerate() {
            let r = self.profile.ranks()[i];
            let eig = s
                .hermitian_part()
                .hermitian_eig(T::infinity())
                .map_err(|_| {
                    MedError::InvalidEnsemble(format!("state {i} has no eigendecomposition"))
                })?;
            let rank = rank_from_spectrum(&eig.eigenvalues, n);
            if rank != r {
                return Err(MedError::RankMismatch {
                    block: i,
                    expected: r,
                    found: rank,
                });
            }
            let offset = self.profile.offset(i);
            for j in 0..r {
                // eigenvalues are ascending; take the top r_i in descending order
                let idx = n - 1 - j;
                let lambda = eig.eigenvalues[idx].max(T::zero());
                let w = (self.priors[i] * lambda).sqrt();
                let col = eig.eigenvectors.column(idx);
                for (row, &v) in col.iter().enumerate() {
                    vectors[(row, offset + j)] = v * Complex::new(w, T::zero());
                }
            }
        }
        PureDecomposition::new(self.profile.clone(), vectors)
    }
}

/// Diagnostics returned by [`Ensemble::validate`].
#[derive(Debug, Clone)]
pub struct MembershipReport<T: Scalar> {
    pub prior_sum_residual: T,
    pub min_prior: T,
    pub hermiticity_residual: T,
    pub min_state_eigenvalue: T,
    pub trace_residual: T,
    pub ranks_found: Vec<usize>,
    pub ranks_ok: bool,
    pub span_ok: bool,
    pub passed: bool,
}

/// Block-indexed unnormalized vectors resolving each `p_i rho_i`.
///
/// Stored as an `n x n` matrix whose column at flat index `(i, j)` is the
/// vector for component `j` of state `i`.
#[derive(Debug, Clone)]
pub struct PureDecomposition<T: Scalar> {
    profile: RankProfile,
    vectors: ComplexMatrix<T>,
}

impl<T: Scalar> PureDecomposition<T> {
    pub fn new(profile: RankProfile, vectors: ComplexMatrix<T>) -> Result<Self> {
        let n = profile.dim();
        if vectors.rows() != n || vectors.cols() != n {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "decomposition matrix is {}x{}, expected {}x{}",
                    vectors.rows(),
                    vectors.cols(),
                    n,
                    n
                ),
            });
        }
        Ok(Self { profile, vectors })
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    /// Columns are the vectors, flat two-tier order.
    pub fn vectors(&self) -> &ComplexMatrix<T> {
        &self.vectors
    }

    pub fn vector(&self, index: BlockIndex) -> Result<Vec<Complex<T>>> {
        Ok(self.vectors.column(self.profile.flat_index(index)?))
    }

    /// The `n x r_i` matrix whose columns resolve state `i`.
    pub fn block_columns(&self, i: usize) -> ComplexMatrix<T> {
        self.vectors.columns(self.profile.block_range(i))
    }

    /// Rebuild the ensemble: `p_i rho_i = sum_j |psi_ij><psi_ij|`.
    pub fn recompose(&self) -> Result<Ensemble<T>> {
        let m = self.profile.num_blocks();
        let mut priors = Vec::with_capacity(m);
        let mut states = Vec::with_capacity(m);
        for i in 0..m {
            let b = self.block_columns(i);
            let weighted = b.mul(&b.adjoint());
            let p = weighted.trace().re;
            if p <= T::zero() {
                return Err(MedError::InvalidEnsemble(format!(
                    "state {i} recomposes to zero weight"
                )));
            }
            priors.push(p);
            states.push(weighted.scale_re(T::one() / p));
        }
        Ensemble::new(self.profile.clone(), priors, states)
    }
}

/// An `m`-element POVM tagged with the rank profile its elements should carry.
#[derive(Debug, Clone)]
pub struct Povm<T: Scalar> {
    profile: RankProfile,
    elements: Vec<ComplexMatrix<T>>,
}

impl<T: Scalar> Povm<T> {
    pub fn new(profile: RankProfile, elements: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let n = profile.dim();
        if elements.len() != profile.num_blocks() {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "profile has {} outcomes, got {} elements",
                    profile.num_blocks(),
                    elements.len()
                ),
            });
        }
        for (i, e) in elements.iter().enumerate() {
            if e.rows() != n || e.cols() != n {
                return Err(MedError::ShapeMismatch {
                    detail: format!(
                        "element {} is {}x{}, expected {}x{}",
                        i,
                        e.rows(),
                        e.cols(),
                        n,
                        n
                    ),
                });
            }
        }
        Ok(Self { profile, elements })
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn elements(&self) -> &[ComplexMatrix<T>] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    /// Sum of all elements.
    pub fn total(&self) -> ComplexMatrix<T> {
        let mut t = ComplexMatrix::zeros(self.dim(), self.dim());
        for e in &self.elements {
            t = t.add(e);
        }
        t
    }

    /// Elements PSD within `tol` and summing to the identity within `tol`.
    pub fn is_valid(&self, tol: T) -> bool {
        let complete = self
            .total()
            .sub(&ComplexMatrix::identity(self.dim()))
            .frobenius_norm()
            <= tol;
        let psd = self.elements.iter().all(|e| {
            e.hermitian_residual() <= tol
                && e.hermitian_part()
                    .min_eigenvalue(T::infinity())
                    .map(|l| l >= -tol)
                    .unwrap_or(false)
        });
        complete && psd
    }
}

/// Average success probability `sum_i p_i Tr(rho_i Pi_i)`.
pub fn success_probability<T: Scalar>(e: &Ensemble<T>, pov: &Povm<T>) -> Result<T> {
    if e.dim() != pov.dim() || e.num_states() != pov.elements().len() {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "ensemble is {} states on dim {}, POVM is {} elements on dim {}",
                e.num_states(),
                e.dim(),
                pov.elements().len(),
                pov.dim()
            ),
        });
    }
    let mut total = T::zero();
    for i in 0..e.num_states() {
        total += e.weighted_state(i).mul(&pov.elements()[i]).trace().re;
    }
    Ok(total)
}

/// `1 - P_s`.
pub fn error_probability<T: Scalar>(e: &Ensemble<T>, pov: &Povm<T>) -> Result<T> {
    Ok(T::one() - success_probability(e, pov)?)
}

/// Deterministic orthogonal seed set: state `i` is maximally mixed on the
/// `i`-th coordinate block.
pub fn seed_states<T: Scalar>(profile: &RankProfile) -> Vec<ComplexMatrix<T>> {
    let n = profile.dim();
    (0..profile.num_blocks())
        .map(|i| {
            let mut s = ComplexMatrix::zeros(n, n);
            let w = T::one() / real::<T>(profile.ranks()[i] as f64);
            for k in profile.block_range(i) {
                s[(k, k)] = Complex::new(w, T::zero());
            }
            s
        })
        .collect()
}

/// Image of the seed set under the congruence transformation by `t`:
/// `rho_i' = T rho_i T† / Tr(.)` with priors proportional to the traces.
pub fn congruence_ensemble<T: Scalar>(
    profile: &RankProfile,
    t: &ComplexMatrix<T>,
) -> Result<Ensemble<T>> {
    let n = profile.dim();
    if t.rows() != n || t.cols() != n {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "transform is {}x{}, expected {}x{}",
                t.rows(),
                t.cols(),
                n,
                n
            ),
        });
    }
    let seeds = seed_states::<T>(profile);
    let mut raw = Vec::with_capacity(seeds.len());
    let mut traces = Vec::with_capacity(seeds.len());
    for s in &seeds {
        let image = t.mul(s).mul(&t.adjoint()).hermitian_part();
        let tr = image.trace().re;
        if tr <= T::zero() {
            return Err(MedError::InvalidEnsemble(
                "congruence image has non-positive trace".into(),
            ));
        }
        traces.push(tr);
        raw.push(image);
    }
    let total: T = traces.iter().copied().sum();
    let priors: Vec<T> = traces.iter().map(|&tr| tr / total).collect();
    let states: Vec<ComplexMatrix<T>> = raw
        .into_iter()
        .zip(&traces)
        .map(|(m, &tr)| m.scale_re(T::one() / tr))
        .collect();
    Ensemble::new(profile.clone(), priors, states)
}

/// Seeded random member of the rank-profile class.
///
/// Draws the congruence transform with i.i.d. complex standard normal
/// entries, re-drawing while its condition number exceeds `1e6` (at most 100
/// attempts). The same seed always returns the same ensemble.
pub fn random_ensemble<T: Scalar>(profile: &RankProfile, seed: u64) -> Result<Ensemble<T>> {
    let n = profile.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 100;
    for _ in 0..max_attempts {
        let t = ComplexMatrix::<T>::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(real(re), real(im))
        });
        let gram = t.adjoint().mul(&t);
        let eig = gram.hermitian_eig(real(1e-8))?;
        let smallest = eig.eigenvalues[0].max(T::zero()).sqrt();
        let largest = eig.eigenvalues[n - 1].max(T::zero()).sqrt();
        if smallest > T::zero() && largest / smallest <= real(1e6) {
            return congruence_ensemble(profile, &t);
        }
    }
    Err(MedError::DegenerateDraw {
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::block_view;

    type M = ComplexMatrix<f64>;
    const TOL: f64 = 1e-10;

    fn qubit_pair() -> Ensemble<f64> {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let zero = M::from_real_diag(&[1.0, 0.0]);
        let one = M::from_real_diag(&[0.0, 1.0]);
        Ensemble::new(profile, vec![0.5, 0.5], vec![zero, one]).unwrap()
    }

    #[test]
    fn validate_accepts_orthogonal_pair() {
        let report = qubit_pair().validate(TOL);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn validate_rejects_bad_priors() {
        let mut e = qubit_pair();
        e.priors = vec![0.5, 0.4];
        let report = e.validate(TOL);
        assert!(!report.passed);
        assert!(report.prior_sum_residual > 0.09);
    }

    #[test]
    fn validate_rejects_dependent_states() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let zero = M::from_real_diag(&[1.0, 0.0]);
        let e = Ensemble::new(profile, vec![0.5, 0.5], vec![zero.clone(), zero]).unwrap();
        let report = e.validate(TOL);
        assert!(!report.passed);
        assert!(!report.span_ok);
    }

    #[test]
    fn congruence_with_identity_returns_seeds() {
        let profile = RankProfile::new(vec![1, 1]).unwrap();
        let e = congruence_ensemble(&profile, &M::identity(2)).unwrap();
        assert_eq!(e.priors(), &[0.5, 0.5]);
        assert!(e.states()[0].approx_eq(&M::from_real_diag(&[1.0, 0.0]), 1e-15));
        assert!(e.states()[1].approx_eq(&M::from_real_diag(&[0.0, 1.0]), 1e-15));
    }

    #[test]
    fn random_ensembles_validate_and_are_deterministic() {
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        let a = random_ensemble::<f64>(&profile, 7).unwrap();
        let b = random_ensemble::<f64>(&profile, 7).unwrap();
        assert!(a.validate(1e-9).passed);
        for (x, y) in a.states().iter().zip(b.states()) {
            assert!(
                x.approx_eq(y, 0.0),
                "same seed must give identical ensembles"
            );
        }
        assert_eq!(a.priors(), b.priors());
    }

    #[test]
    fn decompose_pure_states_gives_scaled_kets() {
        let e = qubit_pair();
        let d = e.decompose().unwrap();
        let v0 = d.vector(BlockIndex { block: 0, inner: 0 }).unwrap();
        assert!((v0[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(v0[1].norm() < 1e-12);
    }

    #[test]
    fn decompose_maximally_mixed_qubit() {
        let profile = RankProfile::new(vec![2]).unwrap();
        let e = Ensemble::new(profile, vec![1.0], vec![M::from_real_diag(&[0.5, 0.5])]).unwrap();
        let d = e.decompose().unwrap();
        let g = d.vectors().adjoint().mul(d.vectors());
        assert!(g.approx_eq(&M::from_real_diag(&[0.5, 0.5]), 1e-12));
    }

    #[test]
    fn decompose_recompose_round_trip() {
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        let e = random_ensemble::<f64>(&profile, 11).unwrap();
        let d = e.decompose().unwrap();
        let back = d.recompose().unwrap();
        for i in 0..2 {
            assert!(back
                .weighted_state(i)
                .approx_eq(&e.weighted_state(i), 1e-10));
        }
        // blocks of the recomposition match the originals
        for i in 0..d.profile().num_blocks() {
            let b = d.block_columns(i);
            let w = b.mul(&b.adjoint());
            assert!(w.approx_eq(&e.weighted_state(i), 1e-10));
        }
    }

    #[test]
    fn decompose_detects_rank_mismatch() {
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        // first state is actually rank 1
        let s1 = M::from_real_diag(&[1.0, 0.0, 0.0]);
        let s2 = M::from_real_diag(&[0.0, 0.0, 1.0]);
        let e = Ensemble::new(profile, vec![0.5, 0.5], vec![s1, s2]).unwrap();
        let err = e.decompose().unwrap_err();
        assert_eq!(err.kind(), "RankMismatch");
    }

    #[test]
    fn success_probability_examples() {
        let e = qubit_pair();
        let discriminator = Povm::new(
            e.profile().clone(),
            vec![
                M::from_real_diag(&[1.0, 0.0]),
                M::from_real_diag(&[0.0, 1.0]),
            ],
        )
        .unwrap();
        assert!((success_probability(&e, &discriminator).unwrap() - 1.0).abs() < 1e-14);

        let uniform = Povm::new(
            e.profile().clone(),
            vec![M::identity(2).scale_re(0.5), M::identity(2).scale_re(0.5)],
        )
        .unwrap();
        assert!((success_probability(&e, &uniform).unwrap() - 0.5).abs() < 1e-14);
        assert!((error_probability(&e, &uniform).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn success_probability_unitary_invariance() {
        use crate::matrix::random_unitary;
        use rand::SeedableRng;
        let profile = RankProfile::new(vec![2, 1]).unwrap();
        let e = random_ensemble::<f64>(&profile, 3).unwrap();
        let d = e.decompose().unwrap();
        // crude POVM: projectors onto the support blocks of a unitary
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u: M = random_unitary(3, &mut rng);
        let mut elems = Vec::new();
        for i in 0..2 {
            let cols = u.columns(profile.block_range(i));
            elems.push(cols.mul(&cols.adjoint()));
        }
        let pov = Povm::new(profile.clone(), elems.clone()).unwrap();
        let ps = success_probability(&e, &pov).unwrap();

        let v: M = random_unitary(3, &mut rng);
        let rotated_states: Vec<M> = e
            .states()
            .iter()
            .map(|s| v.mul(s).mul(&v.adjoint()))
            .collect();
        let re = Ensemble::new(profile.clone(), e.priors().to_vec(), rotated_states).unwrap();
        let rotated_elems: Vec<M> = elems.iter().map(|p| v.mul(p).mul(&v.adjoint())).collect();
        let rp = Povm::new(profile.clone(), rotated_elems).unwrap();
        assert!((success_probability(&re, &rp).unwrap() - ps).abs() < 1e-12);
        let _ = block_view(d.vectors(), &profile, 0, 0);
    }
}
