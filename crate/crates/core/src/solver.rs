//! Solvers for the rotationally invariant optimality condition: find a
//! block-diagonal positive definite `D` such that the diagonal blocks of the
//! positive square root of `D G D` equal `D^2`.
//!
//! Writing `M = sqrt(DGD)`, the equation residual is
//! `|blockdiag(M) - D^2|_F`. Two routes are provided:
//!
//! * [`newton_solve`] — Newton-Raphson in the real coordinates of the
//!   Hermitian blocks of `D`, with a forward-difference Jacobian and a
//!   backtracking line search that keeps every block positive definite.
//! * [`homotopy_solve`] — Taylor-series analytic continuation of `D` along
//!   the linear path from `blockdiag(G)` (where the solution is closed-form)
//!   to the target Gram matrix, with a final Newton polish.
//!
//! The optimal POVM is then reconstructed from `D`, `M` and the dual basis by
//! [`povm_from_solution`].

use crate::ensemble::{Povm, PureDecomposition};
use crate::error::{MedError, Result};
use crate::gram::{homotopy_path, interval_count, DualBasis, GramMatrix};
use crate::matrix::{
    assemble_block_diagonal, block_diagonal_part, extract_diagonal_blocks, hermitian_dof,
    pack_hermitian, solve_real_system, unpack_hermitian, ComplexMatrix, RankProfile,
};
use crate::scalar::{real, to_f64, Scalar};

/// Solver knobs. `damping` is the backtracking factor of the line search;
/// `taylor_order` and `intervals_override` only affect [`homotopy_solve`].
#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar> {
    pub tol: T,
    pub max_iters: usize,
    pub damping: T,
    pub taylor_order: usize,
    pub intervals_override: Option<usize>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tol: real(1e-11),
            max_iters: 200,
            damping: real(0.5),
            taylor_order: 4,
            intervals_override: None,
        }
    }
}

/// A solved instance: `d` block-diagonal positive definite, `m = sqrt(DGD)`
/// positive definite with `blockdiag(m) = d^2` within `residual`.
#[derive(Debug, Clone)]
pub struct SolverSolution<T: Scalar> {
    pub profile: RankProfile,
    pub d: ComplexMatrix<T>,
    pub m: ComplexMatrix<T>,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Scalar> SolverSolution<T> {
    /// Diagonal blocks of `d`.
    pub fn d_blocks(&self) -> Result<Vec<ComplexMatrix<T>>> {
        extract_diagonal_blocks(&self.d, &self.profile)
    }
}

/// Equation residual at `D`: the Frobenius norm of
/// `blockdiag(sqrt(DGD)) - D^2`, together with the square root itself.
pub fn residual<T: Scalar>(
    d_blocks: &[ComplexMatrix<T>],
    g: &GramMatrix<T>,
) -> Result<(T, ComplexMatrix<T>)> {
    let (value, m, _) = residual_parts(d_blocks, g)?;
    Ok((value, m))
}

/// Residual plus the per-block difference matrices (the Newton residual map).
fn residual_parts<T: Scalar>(
    d_blocks: &[ComplexMatrix<T>],
    g: &GramMatrix<T>,
) -> Result<(T, ComplexMatrix<T>, Vec<ComplexMatrix<T>>)> {
    let profile = g.profile();
    let d = assemble_block_diagonal(d_blocks, profile)?;
    let dgd = d.mul(g.matrix()).mul(&d).hermitian_part();
    let sqrt_tol = real::<T>(1e-8) * dgd.frobenius_norm().max(T::one());
    let m = dgd.principal_sqrt(sqrt_tol).map_err(|e| match e {
        MedError::NotPositiveSemidefinite { min_eigenvalue, .. } => {
            MedError::NotPositiveDefinite { min_eigenvalue }
        }
        other => other,
    })?;
    let mut value2 = T::zero();
    let mut diffs = Vec::with_capacity(d_blocks.len());
    for (i, x) in d_blocks.iter().enumerate() {
        let m_ii = crate::matrix::block_view(&m, profile, i, i)?;
        let diff = m_ii.sub(&x.mul(x));
        let f = diff.frobenius_norm();
        value2 += f * f;
        diffs.push(diff);
    }
    Ok((value2.sqrt(), m, diffs))
}

/// Closed-form starting point: the diagonal blocks of `G^(1/2)`.
fn default_init<T: Scalar>(g: &GramMatrix<T>) -> Result<Vec<ComplexMatrix<T>>> {
    extract_diagonal_blocks(&g.sqrt()?, g.profile())
}

/// Real coordinates of a list of Hermitian blocks.
fn pack_blocks<T: Scalar>(blocks: &[ComplexMatrix<T>]) -> Vec<T> {
    let mut x = Vec::new();
    for b in blocks {
        pack_hermitian(b, &mut x);
    }
    x
}

fn unpack_blocks<T: Scalar>(x: &[T], profile: &RankProfile) -> Vec<ComplexMatrix<T>> {
    let mut blocks = Vec::with_capacity(profile.num_blocks());
    let mut start = 0;
    for &r in profile.ranks() {
        let len = hermitian_dof(r);
        blocks.push(unpack_hermitian(&x[start..start + len], r));
        start += len;
    }
    blocks
}

fn min_block_eigenvalue<T: Scalar>(blocks: &[ComplexMatrix<T>]) -> Result<T> {
    let mut min = T::infinity();
    for b in blocks {
        min = min.min(b.min_eigenvalue(T::infinity())?);
    }
    Ok(min)
}

/// Newton-Raphson on the matrix equation, unknowns being the real/imaginary
/// coordinates of the Hermitian blocks of `D`.
pub fn newton_solve<T: Scalar>(
    g: &GramMatrix<T>,
    cfg: &SolverConfig<T>,
    init: Option<Vec<ComplexMatrix<T>>>,
) -> Result<SolverSolution<T>> {
    let profile = g.profile().clone();
    let mut blocks = match init {
        Some(b) => b,
        None => default_init(g)?,
    };
    if min_block_eigenvalue(&blocks)? <= T::zero() {
        return Err(MedError::NonPositiveIterate);
    }

    let k = profile.sum_sq();
    let sqrt_eps = T::epsilon().sqrt();
    let (mut value, mut m, mut diffs) = residual_parts(&blocks, g)?;
    let mut iterations = 0;

    while value > cfg.tol {
        if iterations >= cfg.max_iters {
            return Err(MedError::MaxIterationsExceeded {
                iterations,
                residual: to_f64(value),
            });
        }
        iterations += 1;

        let x0 = pack_blocks(&blocks);
        let f0 = pack_blocks(&diffs);

        // forward-difference Jacobian, column per unknown
        let mut jac = vec![T::zero(); k * k];
        for col in 0..k {
            let h = sqrt_eps * x0[col].abs().max(T::one());
            let mut xp = x0.clone();
            xp[col] += h;
            let blocks_p = unpack_blocks(&xp, &profile);
            let (_, _, diffs_p) = residual_parts(&blocks_p, g)?;
            let fp = pack_blocks(&diffs_p);
            for row in 0..k {
                jac[row * k + col] = (fp[row] - f0[row]) / h;
            }
        }

        let mut step = f0.iter().map(|&v| -v).collect::<Vec<_>>();
        solve_real_system(&mut jac, k, &mut step)?;

        // backtracking line search; reject steps that lose positive
        // definiteness of any block
        let mut alpha = T::one();
        let min_alpha = real::<T>(2.0f64.powi(-20));
        let mut accepted = false;
        let mut saw_positive_trial = false;
        while alpha >= min_alpha {
            let xt: Vec<T> = x0.iter().zip(&step).map(|(&x, &s)| x + alpha * s).collect();
            let blocks_t = unpack_blocks(&xt, &profile);
            if min_block_eigenvalue(&blocks_t)? > cfg.tol.min(real(1e-14)) {
                saw_positive_trial = true;
                if let Ok((value_t, m_t, diffs_t)) = residual_parts(&blocks_t, g) {
                    if value_t < value {
                        blocks = blocks_t;
                        value = value_t;
                        m = m_t;
                        diffs = diffs_t;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= cfg.damping;
        }
        if !accepted {
            if !saw_positive_trial {
                return Err(MedError::NonPositiveIterate);
            }
            return Err(MedError::MaxIterationsExceeded {
                iterations,
                residual: to_f64(value),
            });
        }
    }

    Ok(SolverSolution {
        d: assemble_block_diagonal(&blocks, &profile)?,
        profile,
        m,
        residual: value,
        iterations,
    })
}

/// Derivatives of the structured unknown along the linear Gram path.
///
/// The unknown at order `k` is a single Hermitian matrix `Z_k`: its diagonal
/// blocks are the k-th derivatives of the blocks of `D`, its off-diagonal
/// blocks the k-th derivatives of the matching blocks of `M = sqrt(DGD)`.
/// Differentiating `M^2 = DGD` k times yields, order by order, a linear
/// system for `Z_k` with the same operator at every order.
pub fn taylor_derivatives<T: Scalar>(
    g0: &GramMatrix<T>,
    g1: &GramMatrix<T>,
    t: T,
    d_blocks: &[ComplexMatrix<T>],
    order: usize,
) -> Result<Vec<ComplexMatrix<T>>> {
    if g0.profile() != g1.profile() {
        return Err(MedError::ProfileMismatch {
            detail: format!(
                "path endpoints have profiles {} and {}",
                g0.profile(),
                g1.profile()
            ),
        });
    }
    let profile = g0.profile().clone();
    let n = profile.dim();
    let gt = homotopy_path(g0, g1, t)?;
    let gdot = g1.matrix().sub(g0.matrix());

    let d0 = assemble_block_diagonal(d_blocks, &profile)?;
    let (_, m0) = residual(d_blocks, &gt)?;

    // linear operator applied to a Hermitian candidate Z
    let apply = |z: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
        let dz = block_diagonal_part(z, &profile)?;
        let off = z.sub(&dz);
        let mu = off.add(&dz.mul(&d0)).add(&d0.mul(&dz));
        let lhs = mu.mul(&m0).add(&m0.mul(&mu));
        let rhs = dz
            .mul(gt.matrix())
            .mul(&d0)
            .add(&d0.mul(gt.matrix()).mul(&dz));
        Ok(lhs.sub(&rhs))
    };

    // assemble the real n^2 x n^2 operator column by column
    let dof = hermitian_dof(n);
    let mut op = vec![T::zero(); dof * dof];
    for col in 0..dof {
        let mut unit = vec![T::zero(); dof];
        unit[col] = T::one();
        let basis = unpack_hermitian(&unit, n);
        let image = apply(&basis)?;
        let mut packed = Vec::with_capacity(dof);
        pack_hermitian(&image, &mut packed);
        for row in 0..dof {
            op[row * dof + col] = packed[row];
        }
    }

    let binom = |a: usize, b: usize| -> T {
        let mut v = 1.0f64;
        for i in 0..b {
            v = v * (a - i) as f64 / (i + 1) as f64;
        }
        real(v)
    };
    // k! / (a! b! c!)
    let multinom = |k: usize, a: usize, b: usize, c: usize| -> T {
        debug_assert_eq!(a + b + c, k);
        let fact = |v: usize| (1..=v).map(|x| x as f64).product::<f64>();
        real(fact(k) / (fact(a) * fact(b) * fact(c)))
    };

    // derivative lists; index 0 holds current values
    let mut m_derivs: Vec<ComplexMatrix<T>> = vec![m0.clone()];
    let mut d_derivs: Vec<ComplexMatrix<T>> = vec![d0.clone()];
    let mut result = Vec::with_capacity(order);

    for k in 1..=order {
        // known part of the k-th derivative of the diagonal blocks of M
        let mut m_known = ComplexMatrix::zeros(n, n);
        for j in 1..k {
            m_known = m_known.add(&d_derivs[j].mul(&d_derivs[k - j]).scale_re(binom(k, j)));
        }

        // known DGD terms: a + b + c = k with b <= 1, excluding the two
        // terms that contain the k-th derivative of D
        let mut rhs = ComplexMatrix::zeros(n, n);
        for a in 1..k {
            let c = k - a;
            rhs = rhs.add(
                &d_derivs[a]
                    .mul(gt.matrix())
                    .mul(&d_derivs[c])
                    .scale_re(multinom(k, a, 0, c)),
            );
        }
        for a in 0..k {
            let c = k - 1 - a;
            rhs = rhs.add(
                &d_derivs[a]
                    .mul(&gdot)
                    .mul(&d_derivs[c])
                    .scale_re(multinom(k, a, 1, c)),
            );
        }
        for j in 1..k {
            rhs = rhs.sub(&m_derivs[j].mul(&m_derivs[k - j]).scale_re(binom(k, j)));
        }
        rhs = rhs.sub(&m_known.mul(&m0)).sub(&m0.mul(&m_known));
        let rhs = rhs.hermitian_part();

        let mut b = Vec::with_capacity(dof);
        pack_hermitian(&rhs, &mut b);
        let mut lu = op.clone();
        solve_real_system(&mut lu, dof, &mut b)?;
        let z = unpack_hermitian(&b, n);

        let dk = block_diagonal_part(&z, &profile)?;
        let mk = z.sub(&dk).add(&dk.mul(&d0)).add(&d0.mul(&dk)).add(&m_known);
        d_derivs.push(dk);
        m_derivs.push(mk);
        result.push(z);
    }
    Ok(result)
}

/// Analytic continuation from the block-diagonal of the target Gram matrix
/// (where the solution is closed-form) to the target itself, followed by one
/// Newton polish.
pub fn homotopy_solve<T: Scalar>(
    g_target: &GramMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverSolution<T>> {
    let profile = g_target.profile().clone();
    let g0_matrix = block_diagonal_part(g_target.matrix(), &profile)?;
    let g0 = GramMatrix::new_unchecked(profile.clone(), g0_matrix);

    // closed form at t = 0: D is the square root of each diagonal block
    let mut d_blocks: Vec<ComplexMatrix<T>> = extract_diagonal_blocks(g0.matrix(), &profile)?
        .iter()
        .map(|b| {
            let tol = real::<T>(1e-10) * b.frobenius_norm().max(T::one());
            b.principal_sqrt(tol)
        })
        .collect::<Result<_>>()?;

    // already solved (block-diagonal target): no continuation needed
    let (start_res, m) = residual(&d_blocks, g_target)?;
    if start_res <= cfg.tol {
        return Ok(SolverSolution {
            d: assemble_block_diagonal(&d_blocks, &profile)?,
            profile,
            m,
            residual: start_res,
            iterations: 0,
        });
    }

    let intervals = cfg
        .intervals_override
        .unwrap_or_else(|| interval_count(&g0, g_target));
    let base_dt = T::one() / real::<T>(intervals as f64);
    let blowup = real::<T>(1e-3);
    let mut t = T::zero();
    let mut dt = base_dt;
    let mut depth = 0usize;

    while t < T::one() - real::<T>(1e-14) {
        dt = dt.min(T::one() - t);
        let attempt = (|| -> Result<Vec<ComplexMatrix<T>>> {
            let derivs = taylor_derivatives(&g0, g_target, t, &d_blocks, cfg.taylor_order)?;
            let mut next = d_blocks.clone();
            let mut factor = T::one();
            for (k, z) in derivs.iter().enumerate() {
                factor = factor * dt / real::<T>((k + 1) as f64);
                let step_blocks = extract_diagonal_blocks(z, &profile)?;
                for (b, s) in next.iter_mut().zip(step_blocks) {
                    *b = b.add(&s.scale_re(factor));
                }
            }
            Ok(next)
        })();

        let accepted = match attempt {
            Ok(next) => {
                let t_next = t + dt;
                let g_next = homotopy_path(&g0, g_target, t_next)?;
                let pd_ok = min_block_eigenvalue(&next)? > T::zero();
                if pd_ok {
                    match residual(&next, &g_next) {
                        Ok((v, _)) if v <= blowup => {
                            d_blocks = next;
                            t = t_next;
                            true
                        }
                        _ => false,
                    }
                } else {
                    false
                }
            }
            Err(MedError::SingularLinearSystem) => false,
            Err(e) => return Err(e),
        };

        if accepted {
            dt = (dt + dt).min(base_dt);
            depth = depth.saturating_sub(1);
        } else {
            dt *= real::<T>(0.5);
            depth += 1;
            if depth > 20 {
                return Err(MedError::PathBreakdown { levels: depth });
            }
        }
    }

    newton_solve(g_target, cfg, Some(d_blocks))
}

/// Reconstruct the projective POVM from a solution: expand in the vectors
/// biorthogonal to `chi = psi * D` and contract the blocks of `M`.
///
/// The measurement basis `omega * M` is orthonormal in exact arithmetic; a
/// polar correction snaps it back onto the orthonormal manifold so that
/// projectivity and completeness hold to machine precision even when `G` is
/// ill-conditioned.
pub fn povm_from_solution<T: Scalar>(
    sol: &SolverSolution<T>,
    d: &PureDecomposition<T>,
    dual: &DualBasis<T>,
) -> Result<Povm<T>> {
    if sol.profile != *d.profile() || sol.profile != *dual.profile() {
        return Err(MedError::ProfileMismatch {
            detail: format!(
                "solution profile {}, decomposition {}, dual {}",
                sol.profile,
                d.profile(),
                dual.profile()
            ),
        });
    }
    let profile = &sol.profile;
    let d_inv_blocks: Vec<ComplexMatrix<T>> = sol
        .d_blocks()?
        .iter()
        .map(|b| b.inverse())
        .collect::<Result<_>>()?;
    let d_inv = assemble_block_diagonal(&d_inv_blocks, profile)?;
    let omega = dual.vectors().mul(&d_inv);

    let w_full = omega.mul(&sol.m);
    let w_gram = w_full.adjoint().mul(&w_full).hermitian_part();
    let correction = w_gram.principal_inv_sqrt(real(1e-6))?;
    let w_orth = w_full.mul(&correction);

    let mut elements = Vec::with_capacity(profile.num_blocks());
    for i in 0..profile.num_blocks() {
        let w = w_orth.columns(profile.block_range(i));
        elements.push(w.mul(&w.adjoint()).hermitian_part());
    }
    Povm::new(profile.clone(), elements)
}
