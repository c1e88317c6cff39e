//! Independent reference solvers used for verification and benchmarking:
//! a log-det barrier interior-point method on the dual SDP, the two-state
//! closed form, and an exhaustive sweep over projective measurements for
//! tiny instances.

use std::time::Instant;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{random_ensemble, success_probability, Ensemble, Povm};
use crate::error::{MedError, Result};
use crate::gram::build_gram;
use crate::matrix::{
    hermitian_dof, pack_hermitian, random_unitary, solve_real_system, unpack_hermitian,
    ComplexMatrix, RankProfile,
};
use crate::scalar::{real, to_f64, Scalar};
use crate::solver::{homotopy_solve, newton_solve, povm_from_solution, SolverConfig};

/// Barrier method knobs. The objective per outer loop is
/// `Tr(Z) - w * sum_i log det(Z - p_i rho_i)`, with `w` starting at
/// `initial_weight` and shrinking by `weight_decay` each loop.
#[derive(Debug, Clone)]
pub struct BarrierConfig<T: Scalar> {
    pub initial_weight: T,
    pub weight_decay: T,
    pub inner_tol: T,
    pub outer_tol: T,
    pub max_outer: usize,
}

impl<T: Scalar> Default for BarrierConfig<T> {
    fn default() -> Self {
        Self {
            initial_weight: real(1e-3),
            weight_decay: real(0.1),
            inner_tol: real(1e-10),
            outer_tol: real(1e-7),
            max_outer: 6,
        }
    }
}

/// Minimize `Tr(Z)` over `Z >= p_i rho_i` by a barrier-type interior point
/// method, starting from the feasible `Z = sum_i p_i rho_i + eps``1``.
///
/// Returns the dual certificate `Z`, `Tr(Z)`, and the total inner Newton
/// iteration count; with no duality gap the trace equals the optimal
/// success probability within `outer_tol`.
pub fn barrier_solve<T: Scalar>(
    e: &Ensemble<T>,
    cfg: &BarrierConfig<T>,
) -> Result<(ComplexMatrix<T>, T, usize)> {
    let n = e.dim();
    let m = e.num_states();
    let dof = hermitian_dof(n);
    let weighted: Vec<ComplexMatrix<T>> = (0..m).map(|i| e.weighted_state(i)).collect();

    let mut z = ComplexMatrix::identity(n).scale_re(real::<T>(0.1) / real::<T>(n as f64));
    for w in &weighted {
        z = z.add(w);
    }

    // barrier value and slack inverses at a point; None when infeasible
    // (Cholesky failure on any slack block)
    let evaluate = |z: &ComplexMatrix<T>, w: T| -> Option<(T, Vec<ComplexMatrix<T>>)> {
        let mut logdet_sum = T::zero();
        let mut inverses = Vec::with_capacity(m);
        for ws in &weighted {
            let slack = z.sub(ws).hermitian_part();
            let (inv, logdet) = slack.cholesky_inverse_logdet()?;
            logdet_sum += logdet;
            inverses.push(inv);
        }
        Some((z.trace().re - w * logdet_sum, inverses))
    };

    let max_inner = 100;
    let mut w = cfg.initial_weight;
    let mut total_iterations = 0usize;
    for _outer in 0..cfg.max_outer {
        let mut inner = 0;
        loop {
            inner += 1;
            total_iterations += 1;
            if inner > max_inner {
                return Err(MedError::MaxIterationsExceeded {
                    iterations: max_inner,
                    residual: f64::NAN,
                });
            }
            let (f0, inverses) = match evaluate(&z, w) {
                Some(v) => v,
                None => {
                    return Err(MedError::NotPositiveDefinite {
                        min_eigenvalue: 0.0,
                    })
                }
            };
            // gradient of the barrier objective
            let mut grad = ComplexMatrix::identity(n);
            for inv in &inverses {
                grad = grad.sub(&inv.scale_re(w));
            }
            let gnorm = grad.frobenius_norm();
            if gnorm <= cfg.inner_tol * (T::one() + real::<T>(n as f64).sqrt()) {
                break;
            }

            // Newton step: assemble the dense n^2 x n^2 Hessian of the
            // barrier term explicitly, one column per Hermitian coordinate,
            // each column a full set of dense products A^-1 E A^-1
            let mut hessian = vec![T::zero(); dof * dof];
            let mut basis = ComplexMatrix::zeros(n, n);
            let mut packed: Vec<T> = Vec::with_capacity(dof);
            for col in 0..dof {
                basis.fill_zero();
                let (a, b, phase) = coordinate_basis::<T>(col, n);
                if a == b {
                    basis[(a, a)] = Complex::new(T::one(), T::zero());
                } else {
                    basis[(a, b)] = phase;
                    basis[(b, a)] = phase.conj();
                }
                let mut image = ComplexMatrix::zeros(n, n);
                for inv in &inverses {
                    image = image.add(&inv.mul(&basis).mul(inv));
                }
                let image = image.scale_re(w);
                packed.clear();
                pack_hermitian(&image, &mut packed);
                for row in 0..dof {
                    hessian[row * dof + col] = packed[row];
                }
            }
            let mut rhs = Vec::with_capacity(dof);
            pack_hermitian(&grad.scale_re(-T::one()), &mut rhs);
            solve_real_system(&mut hessian, dof, &mut rhs)?;
            let step = unpack_hermitian(&rhs, n);

            // backtracking line search restricted to the feasible cone
            let mut alpha = T::one();
            let mut moved = false;
            for _ in 0..60 {
                let trial = z.add(&step.scale_re(alpha));
                if let Some((f_trial, _)) = evaluate(&trial, w) {
                    if f_trial < f0 {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= real::<T>(0.5);
            }
            if !moved {
                break; // stationary for this weight
            }
        }
        w *= cfg.weight_decay;
    }
    let trace = z.trace().re;
    Ok((z, trace, total_iterations))
}

/// Recover the measurement from a dual certificate `Z`: element `i` projects
/// onto the (near-)kernel of `Z - p_i rho_i`. The stacked kernel bases are
/// polar-orthonormalized, so the result is exactly projective; its accuracy
/// is limited by the accuracy of `Z`. Degenerate instances where the slack
/// kernels overlap are not handled.
pub fn povm_from_dual<T: Scalar>(e: &Ensemble<T>, z: &ComplexMatrix<T>) -> Result<Povm<T>> {
    let n = e.dim();
    if z.rows() != n || z.cols() != n {
        return Err(MedError::ShapeMismatch {
            detail: "Z dimension does not match the ensemble".into(),
        });
    }
    let zh = z.hermitian_part();
    let profile = e.profile().clone();
    let mut stacked = ComplexMatrix::zeros(n, n);
    for i in 0..profile.num_blocks() {
        let slack = zh.sub(&e.weighted_state(i));
        let eig = slack.hermitian_eig(T::infinity())?;
        let range = profile.block_range(i);
        for (k, col) in range.enumerate() {
            stacked.set_column(col, &eig.eigenvectors.column(k));
        }
    }
    let gram = stacked.adjoint().mul(&stacked).hermitian_part();
    let correction = gram.principal_inv_sqrt(real(1e-6))?;
    let ortho = stacked.mul(&correction);
    let mut elements = Vec::with_capacity(profile.num_blocks());
    for i in 0..profile.num_blocks() {
        let cols = ortho.columns(profile.block_range(i));
        elements.push(cols.mul(&cols.adjoint()).hermitian_part());
    }
    Povm::new(profile, elements)
}

/// Closed-form optimum for a two-state ensemble: spectral projectors of
/// `p_1 rho_1 - p_2 rho_2`, `P_s = (1 + sum_k |lambda_k|) / 2`. The kernel of
/// the difference operator is assigned to the first element.
pub fn helstrom_two_state<T: Scalar>(e: &Ensemble<T>) -> Result<(Povm<T>, T)> {
    if e.num_states() != 2 {
        return Err(MedError::ShapeMismatch {
            detail: format!("two-state closed form needs m = 2, got {}", e.num_states()),
        });
    }
    let delta = e
        .weighted_state(0)
        .sub(&e.weighted_state(1))
        .hermitian_part();
    let eig = delta.hermitian_eig(real(1e-8))?;
    let flags: Vec<T> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l >= T::zero() { T::one() } else { T::zero() })
        .collect();
    let first = eig.recompose(&flags);
    let second = ComplexMatrix::identity(e.dim()).sub(&first);
    let abs_sum: T = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    let ps = (T::one() + abs_sum) * real(0.5);
    let pov = Povm::new(e.profile().clone(), vec![first, second])?;
    Ok((pov, ps))
}

/// Indices `(a, b)` and phase of the Hermitian coordinate basis matrix
/// `phase * e_a e_b^dag + conj(phase) * e_b e_a^dag` matching the packing
/// order of [`pack_hermitian`] (diagonal first, then re/im of each upper
/// pair). The diagonal case `a == b` counts the entry twice in this form.
fn coordinate_basis<T: Scalar>(coord: usize, n: usize) -> (usize, usize, Complex<T>) {
    if coord < n {
        return (coord, coord, Complex::new(T::one(), T::zero()));
    }
    let idx = coord - n;
    let pair = idx / 2;
    let imaginary = idx % 2 == 1;
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if count == pair {
                let phase = if imaginary {
                    Complex::new(T::zero(), T::one())
                } else {
                    Complex::new(T::one(), T::zero())
                };
                return (i, j, phase);
            }
            count += 1;
        }
    }
    unreachable!("coordinate {coord} out of range for dimension {n}");
}

fn outer_product<T: Scalar>(col: &[Complex<T>]) -> ComplexMatrix<T> {
    let n = col.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = col[i] * col[j].conj();
        }
    }
    m
}

/// Best projective measurement found by a dense parameter sweep.
///
/// Flag manifolds with at most 5 real parameters are covered by a regular
/// grid with `grid` points per axis; larger ones (the qutrit pure profile)
/// are sampled with `grid^k` Haar-random unitaries, `k` the parameter count.
/// Only dimensions up to 3 are supported. `seed` fixes the Haar stream.
pub fn exhaustive_search<T: Scalar>(
    e: &Ensemble<T>,
    grid: usize,
    seed: u64,
) -> Result<(Povm<T>, T)> {
    let n = e.dim();
    if n > 3 {
        return Err(MedError::ShapeMismatch {
            detail: format!("exhaustive search supports n <= 3, got {n}"),
        });
    }
    let profile = e.profile().clone();
    let m = profile.num_blocks();
    if m == 1 {
        let pov = Povm::new(profile, vec![ComplexMatrix::identity(n)])?;
        let ps = success_probability(e, &pov)?;
        return Ok((pov, ps));
    }

    let mut best: Option<(Povm<T>, T)> = None;
    let mut consider = |pov: Povm<T>| -> Result<()> {
        let ps = success_probability(e, &pov)?;
        if best.as_ref().map(|(_, b)| ps > *b).unwrap_or(true) {
            best = Some((pov, ps));
        }
        Ok(())
    };

    let tau = std::f64::consts::TAU;
    match (n, profile.ranks()) {
        // one complex projective parameter pair: v = (cos t, sin t e^{i phi})
        (2, [1, 1]) => {
            for a in 0..grid {
                let theta = (a as f64 + 0.5) / grid as f64 * std::f64::consts::FRAC_PI_2;
                for b in 0..grid {
                    let phi = b as f64 / grid as f64 * tau;
                    let v = vec![
                        Complex::new(real(theta.cos()), T::zero()),
                        Complex::from_polar(real(theta.sin()), real(phi)),
                    ];
                    let p1 = outer_product(&v);
                    let p2 = ComplexMatrix::identity(2).sub(&p1);
                    consider(Povm::new(profile.clone(), vec![p1, p2])?)?;
                }
            }
        }
        // rank-one element v in CP^2 (4 parameters), complement is rank 2
        (3, [2, 1]) => {
            for a in 0..grid {
                let t1 = (a as f64 + 0.5) / grid as f64 * std::f64::consts::FRAC_PI_2;
                for b in 0..grid {
                    let t2 = (b as f64 + 0.5) / grid as f64 * std::f64::consts::FRAC_PI_2;
                    for c in 0..grid {
                        let phi1 = c as f64 / grid as f64 * tau;
                        for dd in 0..grid {
                            let phi2 = dd as f64 / grid as f64 * tau;
                            let v = vec![
                                Complex::new(real(t1.cos()), T::zero()),
                                Complex::from_polar(real(t1.sin() * t2.cos()), real(phi1)),
                                Complex::from_polar(real(t1.sin() * t2.sin()), real(phi2)),
                            ];
                            let p2 = outer_product(&v);
                            let p1 = ComplexMatrix::identity(3).sub(&p2);
                            consider(Povm::new(profile.clone(), vec![p1, p2])?)?;
                        }
                    }
                }
            }
        }
        // six parameters: Haar sampling of full flags; score columns directly
        // and only materialize the winning POVM
        (3, [1, 1, 1]) => {
            let samples = grid.saturating_pow(6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weighted: Vec<ComplexMatrix<T>> = (0..3).map(|i| e.weighted_state(i)).collect();
            let mut best_u: Option<(ComplexMatrix<T>, T)> = None;
            for _ in 0..samples {
                let u: ComplexMatrix<T> = random_unitary(3, &mut rng);
                let mut ps = T::zero();
                for (i, w) in weighted.iter().enumerate() {
                    let col = u.column(i);
                    let mut quad = Complex::new(T::zero(), T::zero());
                    for r in 0..3 {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for c in 0..3 {
                            acc += w[(r, c)] * col[c];
                        }
                        quad += col[r].conj() * acc;
                    }
                    ps += quad.re;
                }
                if best_u.as_ref().map(|(_, b)| ps > *b).unwrap_or(true) {
                    best_u = Some((u, ps));
                }
            }
            if let Some((u, _)) = best_u {
                let elems: Vec<ComplexMatrix<T>> =
                    (0..3).map(|i| outer_product(&u.column(i))).collect();
                consider(Povm::new(profile.clone(), elems)?)?;
            }
        }
        (2, [2]) | (3, [3]) => unreachable!("single-block handled above"),
        _ => {
            return Err(MedError::ShapeMismatch {
                detail: format!("no sweep parameterization for profile {profile} in dimension {n}"),
            })
        }
    }
    best.ok_or(MedError::ShapeMismatch {
        detail: "empty sweep".into(),
    })
}

/// Which solver a benchmark row timed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Newton,
    Homotopy,
    Barrier,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Newton => "newton",
            SolverKind::Homotopy => "homotopy",
            SolverKind::Barrier => "barrier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "newton" => Some(SolverKind::Newton),
            "homotopy" => Some(SolverKind::Homotopy),
            "barrier" => Some(SolverKind::Barrier),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub solver: String,
    pub n: usize,
    pub profile: String,
    pub median_seconds: f64,
    pub p_success: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    /// CSV with header `solver,n,profile,median_seconds,p_success`.
    /// The profile column is quoted because it contains commas.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,n,profile,median_seconds,p_success\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},\"{}\",{:.6e},{:.12}\n",
                r.solver, r.n, r.profile, r.median_seconds, r.p_success
            ));
        }
        out
    }

    /// Least-squares slope of `log(median_seconds)` against `log(n)`.
    pub fn fitted_slope(&self, solver: &str) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.solver == solver && r.median_seconds > 0.0)
            .map(|r| ((r.n as f64).ln(), r.median_seconds.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let len = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    }
}

/// Time the requested solvers on matched random instances, one profile per
/// size. Instances are generated from `seed` deterministically, so every
/// solver sees the identical set.
pub fn bench_scaling<T: Scalar>(
    profiles: &[RankProfile],
    repeats: usize,
    seed: u64,
    solvers: &[SolverKind],
) -> Result<ScalingReport> {
    let mut rows = Vec::new();
    for (pi, profile) in profiles.iter().enumerate() {
        let n = profile.dim();
        let instances: Vec<Ensemble<T>> = (0..repeats)
            .map(|r| random_ensemble(profile, seed.wrapping_add((pi * 1000 + r) as u64)))
            .collect::<Result<_>>()?;
        for &solver in solvers {
            let mut times = Vec::with_capacity(repeats);
            let mut score = 0.0;
            for (k, e) in instances.iter().enumerate() {
                let d = e.decompose()?;
                let g = build_gram(&d)?;
                let start = Instant::now();
                let ps = match solver {
                    SolverKind::Newton => {
                        let sol = newton_solve(&g, &SolverConfig::default(), None)?;
                        let dual = crate::gram::dual_basis(&d, &g)?;
                        let pov = povm_from_solution(&sol, &d, &dual)?;
                        success_probability(e, &pov)?
                    }
                    SolverKind::Homotopy => {
                        let sol = homotopy_solve(&g, &SolverConfig::default())?;
                        let dual = crate::gram::dual_basis(&d, &g)?;
                        let pov = povm_from_solution(&sol, &d, &dual)?;
                        success_probability(e, &pov)?
                    }
                    SolverKind::Barrier => barrier_solve(e, &BarrierConfig::default())?.1,
                };
                times.push(start.elapsed().as_secs_f64());
                if k == 0 {
                    score = to_f64(ps);
                }
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = times[times.len() / 2];
            rows.push(ScalingRow {
                solver: solver.name().to_string(),
                n,
                profile: profile.to_string(),
                median_seconds: median,
                p_success: score,
            });
        }
    }
    Ok(ScalingReport { rows })
}
