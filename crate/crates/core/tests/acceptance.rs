//! End-to-end verification suite.
//!
//! Every check prints one `PASS`/`FAIL` line; run with
//!
//! ```text
//! cargo test -p medsolve-core --test acceptance -- --nocapture
//! ```
//!
//! Check 09 documents a known sampling-resolution limitation of the Haar
//! sweep and is expected to fail its closeness clause; see the README.

use medsolve_core::certificates::{check_optimal, CertTolerances};
use medsolve_core::ensemble::{random_ensemble, success_probability, Ensemble, PureDecomposition};
use medsolve_core::gram::{build_gram, dual_basis, homotopy_path};
use medsolve_core::matrix::block_diagonal_part;
use medsolve_core::oracles::{
    barrier_solve, bench_scaling, exhaustive_search, helstrom_two_state, BarrierConfig, SolverKind,
};
use medsolve_core::rotation::{
    aligned_pure_decomposition, ensemble_distance, map_r, map_r_inverse, pgm, pgm_is_optimal,
    verify_pgm_identity,
};
use medsolve_core::solver::{
    homotopy_solve, newton_solve, povm_from_solution, taylor_derivatives, SolverConfig,
    SolverSolution,
};
use medsolve_core::{Matrix64, Povm64, RankProfile};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

/// The checks assert wall-clock budgets and fitted timing slopes, so they
/// must not compete for cores; every check takes this lock.
fn serialize_suite() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn finish(name: &str, pass: bool, detail: String) {
    println!(
        "criterion {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {name} failed: {detail}");
}

fn profiles(ranks: &[&[usize]]) -> Vec<RankProfile> {
    ranks
        .iter()
        .map(|r| RankProfile::new(r.to_vec()).unwrap())
        .collect()
}

fn small_pool() -> Vec<RankProfile> {
    profiles(&[
        &[1, 1],
        &[2, 1],
        &[1, 1, 1],
        &[2, 2],
        &[2, 1, 1],
        &[3, 2],
        &[2, 2, 1],
        &[3, 3],
    ])
}

fn n8_pool() -> Vec<RankProfile> {
    profiles(&[
        &[1, 1],
        &[2, 1],
        &[1, 1, 1],
        &[2, 2],
        &[2, 1, 1],
        &[3, 1],
        &[1, 1, 1, 1],
        &[3, 2],
        &[2, 2, 1],
        &[3, 3],
        &[2, 2, 2],
        &[3, 2, 1],
        &[3, 3, 1],
        &[4, 2, 1],
        &[4, 4],
        &[3, 3, 2],
        &[2, 2, 2, 2],
        &[4, 2, 1, 1],
    ])
}

struct Solved {
    decomposition: PureDecomposition<f64>,
    solution: SolverSolution<f64>,
    povm: Povm64,
    p_success: f64,
}

fn solve_newton(e: &Ensemble<f64>) -> medsolve_core::Result<Solved> {
    let decomposition = e.decompose()?;
    let gram = build_gram(&decomposition)?;
    let solution = newton_solve(&gram, &SolverConfig::default(), None)?;
    let dual = dual_basis(&decomposition, &gram)?;
    let povm = povm_from_solution(&solution, &decomposition, &dual)?;
    let p_success = success_probability(e, &povm)?;
    Ok(Solved {
        decomposition,
        solution,
        povm,
        p_success,
    })
}

/// Newton first; on any failure fall back to analytic continuation,
/// logging the retry (the undesirable-branch protocol).
fn solve_robust(e: &Ensemble<f64>, retries: &mut usize) -> medsolve_core::Result<Solved> {
    match solve_newton(e) {
        Ok(s) => Ok(s),
        Err(err) => {
            *retries += 1;
            eprintln!("newton branch failed ({err}); retrying via homotopy");
            let decomposition = e.decompose()?;
            let gram = build_gram(&decomposition)?;
            let solution = homotopy_solve(&gram, &SolverConfig::default())?;
            let dual = dual_basis(&decomposition, &gram)?;
            let povm = povm_from_solution(&solution, &decomposition, &dual)?;
            let p_success = success_probability(e, &povm)?;
            Ok(Solved {
                decomposition,
                solution,
                povm,
                p_success,
            })
        }
    }
}

#[test]
fn criterion_01_helstrom_agreement() {
    let _guard = serialize_suite();
    let start = Instant::now();
    let pool = profiles(&[&[1, 1], &[2, 1], &[2, 2], &[3, 1]]);
    let mut worst: f64 = 0.0;
    for i in 0..200usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 1000 + i as u64).unwrap();
        let solved = solve_newton(&e).unwrap();
        let (_, ps_helstrom) = helstrom_two_state(&e).unwrap();
        worst = worst.max((solved.p_success - ps_helstrom).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && elapsed < 10.0;
    finish(
        "01 helstrom-agreement",
        pass,
        format!("max |dP_s| = {worst:.3e} over 200 two-state ensembles, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_02_sdp_agreement() {
    let _guard = serialize_suite();
    let start = Instant::now();
    let pool = profiles(&[&[1, 1, 1], &[2, 1], &[2, 2], &[2, 1, 1]]);
    let mut worst: f64 = 0.0;
    for i in 0..100usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 2000 + i as u64).unwrap();
        let solved = solve_newton(&e).unwrap();
        let (_, trace, _) = barrier_solve(&e, &BarrierConfig::default()).unwrap();
        worst = worst.max((solved.p_success - trace).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && elapsed < 120.0;
    finish(
        "02 sdp-agreement",
        pass,
        format!("max |P_s - Tr Z| = {worst:.3e} over 100 ensembles, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_03_certificate_suite() {
    let _guard = serialize_suite();
    let start = Instant::now();
    let pool = n8_pool();
    let mut failures = 0usize;
    let mut retries = 0usize;
    for i in 0..1000usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 9000 + i as u64).unwrap();
        let solved = match solve_robust(&e, &mut retries) {
            Ok(s) => s,
            Err(err) => {
                eprintln!("instance {i} ({profile}): both solvers failed: {err}");
                failures += 1;
                continue;
            }
        };
        let cert = check_optimal(&e, &solved.povm, &CertTolerances::default()).unwrap();
        let strict = cert.projectivity_residual <= 1e-9
            && cert.completeness_residual <= 1e-9
            && cert.rank_ok.iter().all(|&b| b)
            && cert.stationarity_residual <= 1e-8
            && cert.z_min_eigenvalue > 0.0
            && cert.global_min_eigenvalue >= -1e-8;
        if !strict {
            eprintln!("instance {i} ({profile}): certificate failed: {cert:?}");
            failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    finish(
        "03 certificate-suite",
        failures == 0,
        format!("{failures} failures, {retries} homotopy retries over 1000 instances (n <= 8), {elapsed:.2} s"),
    );
}

#[test]
fn criterion_04_central_identity() {
    let _guard = serialize_suite();
    let pool = small_pool();
    let mut ok = 0usize;
    for i in 0..200usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 3000 + i as u64).unwrap();
        let solved = solve_newton(&e).unwrap();
        if verify_pgm_identity(&e, &solved.solution, &solved.decomposition, 1e-8).unwrap() {
            ok += 1;
        }
    }
    finish(
        "04 central-identity",
        ok == 200,
        format!("{ok}/200 instances match PGM-of-image within 1e-8"),
    );
}

#[test]
fn criterion_05_round_trips() {
    let _guard = serialize_suite();
    let pool = small_pool();
    let mut worst_inverse: f64 = 0.0;
    let mut worst_forward: f64 = 0.0;
    for i in 0..200usize {
        let profile = &pool[i % pool.len()];
        // inverse-after-forward on P
        let p = random_ensemble::<f64>(profile, 4000 + i as u64).unwrap();
        let solved = solve_newton(&p).unwrap();
        let q = map_r(&p, &solved.solution, &solved.decomposition)
            .unwrap()
            .ensemble;
        let p_back = map_r_inverse(&q).unwrap();
        worst_inverse = worst_inverse.max(ensemble_distance(&p, &p_back).unwrap());

        // forward-after-inverse on an independent Q
        let q2 = random_ensemble::<f64>(profile, 4500 + i as u64).unwrap();
        let p2 = map_r_inverse(&q2).unwrap();
        let solved2 = solve_newton(&p2).unwrap();
        let q2_back = map_r(&p2, &solved2.solution, &solved2.decomposition)
            .unwrap()
            .ensemble;
        worst_forward = worst_forward.max(ensemble_distance(&q2, &q2_back).unwrap());
    }
    let pass = worst_inverse <= 1e-8 && worst_forward <= 1e-8;
    finish(
        "05 round-trips",
        pass,
        format!("max distances: inverse-after-forward = {worst_inverse:.3e}, forward-after-inverse = {worst_forward:.3e}"),
    );
}

/// Ensemble whose Gram square root has scalar diagonal blocks: the fixed
/// points of the map, where the PGM itself is optimal.
fn fixed_point_ensemble(profile: &RankProfile, seed: u64) -> Ensemble<f64> {
    let n = profile.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Hermitian perturbation with zero diagonal blocks
    let mut b = Matrix64::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            b[(i, j)] = z;
            b[(j, i)] = z.conj();
        }
    }
    b = b.sub(&block_diagonal_part(&b, profile).unwrap());
    let norm = b.frobenius_norm().max(1e-12);
    let b = b.scale_re(0.3 / norm);
    let s = Matrix64::identity(n).add(&b);
    // unit-trace Gram: scale so Tr(S^2) = 1; diagonal blocks stay scalar
    let c = s.mul(&s).trace().re.sqrt();
    let vectors = s.scale_re(1.0 / c);
    PureDecomposition::new(profile.clone(), vectors)
        .unwrap()
        .recompose()
        .unwrap()
}

#[test]
fn criterion_06_pgm_fixed_points() {
    let _guard = serialize_suite();
    let pool = profiles(&[&[1, 1], &[2, 1], &[2, 2], &[2, 1, 1], &[1, 1, 1]]);
    let mut fixed_ok = 0usize;
    for i in 0..50usize {
        let profile = &pool[i % pool.len()];
        let e = fixed_point_ensemble(profile, 6500 + i as u64);
        let solved = solve_newton(&e).unwrap();
        let q = map_r(&e, &solved.solution, &solved.decomposition)
            .unwrap()
            .ensemble;
        let is_fixed = ensemble_distance(&e, &q).unwrap() <= 1e-8;
        let flagged = pgm_is_optimal(&e, 1e-8).unwrap();
        let cert = check_optimal(&e, &pgm(&e).unwrap(), &CertTolerances::default()).unwrap();
        if is_fixed && flagged && cert.passed {
            fixed_ok += 1;
        } else {
            eprintln!(
                "fixed-point instance {i} ({profile}): map distance {}, flagged {flagged}, cert {}",
                ensemble_distance(&e, &q).unwrap(),
                cert.passed
            );
        }
    }

    let mut skew_ok = 0usize;
    let mut min_gap = f64::INFINITY;
    for i in 0..50usize {
        let profile = &pool[i % pool.len()];
        let e0 = random_ensemble::<f64>(profile, 6000 + i as u64).unwrap();
        let mut priors: Vec<f64> = e0
            .priors()
            .iter()
            .enumerate()
            .map(|(k, &p)| p * 4.0f64.powi(k as i32))
            .collect();
        let total: f64 = priors.iter().sum();
        priors.iter_mut().for_each(|p| *p /= total);
        let e = Ensemble::new(profile.clone(), priors, e0.states().to_vec()).unwrap();
        let flagged = pgm_is_optimal(&e, 1e-10).unwrap();
        let solved = solve_newton(&e).unwrap();
        let gap = solved.p_success - success_probability(&e, &pgm(&e).unwrap()).unwrap();
        min_gap = min_gap.min(gap);
        if !flagged && gap > 1e-6 {
            skew_ok += 1;
        } else {
            eprintln!("skew instance {i} ({profile}): flagged {flagged}, gap {gap:.3e}");
        }
    }
    let pass = fixed_ok == 50 && skew_ok == 50;
    finish(
        "06 pgm-fixed-points",
        pass,
        format!("{fixed_ok}/50 constructed fixed points certified, {skew_ok}/50 skew ensembles strictly suboptimal (min gap {min_gap:.3e})"),
    );
}

#[test]
fn criterion_07_pure_alignment() {
    let _guard = serialize_suite();
    let pool = small_pool();
    let mut ok = 0usize;
    for i in 0..100usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 7000 + i as u64).unwrap();
        let solved = solve_newton(&e).unwrap();
        let aligned =
            aligned_pure_decomposition(&e, &solved.solution, &solved.decomposition).unwrap();

        let mut worst: f64 = 0.0;
        for b in 0..e.num_states() {
            let mut sum = Matrix64::zeros(e.dim(), e.dim());
            for a in e.profile().block_range(b) {
                sum = sum.add(&aligned.pure_povm.elements()[a]);
            }
            worst = worst.max(sum.max_abs_diff(&solved.povm.elements()[b]));
        }
        let cert = check_optimal(
            &aligned.pure_ensemble,
            &aligned.pure_povm,
            &CertTolerances::default(),
        )
        .unwrap();
        if worst <= 1e-8 && cert.passed {
            ok += 1;
        } else {
            eprintln!(
                "alignment instance {i} ({profile}): block-sum diff {worst:.3e}, cert {}",
                cert.passed
            );
        }
    }
    finish(
        "07 pure-alignment",
        ok == 100,
        format!("{ok}/100 instances: rank-one sums reproduce the mixed POVM and the pure instance is certified"),
    );
}

#[test]
fn criterion_08_solver_cross_agreement() {
    let _guard = serialize_suite();
    let pool = small_pool();
    let mut worst_ps: f64 = 0.0;
    for i in 0..100usize {
        let profile = &pool[i % pool.len()];
        let e = random_ensemble::<f64>(profile, 8000 + i as u64).unwrap();
        let d = e.decompose().unwrap();
        let g = build_gram(&d).unwrap();
        let dual = dual_basis(&d, &g).unwrap();
        let a = newton_solve(&g, &SolverConfig::default(), None).unwrap();
        let b = homotopy_solve(&g, &SolverConfig::default()).unwrap();
        let pa = success_probability(&e, &povm_from_solution(&a, &d, &dual).unwrap()).unwrap();
        let pb = success_probability(&e, &povm_from_solution(&b, &d, &dual).unwrap()).unwrap();
        worst_ps = worst_ps.max((pa - pb).abs());
    }

    // first path derivatives against central finite differences
    let mut worst_rel: f64 = 0.0;
    let cfg = SolverConfig {
        tol: 1e-13,
        ..SolverConfig::default()
    };
    for i in 0..10usize {
        let profile = &small_pool()[i % small_pool().len()];
        let e0 = random_ensemble::<f64>(profile, 8600 + i as u64).unwrap();
        let e1 = random_ensemble::<f64>(profile, 8700 + i as u64).unwrap();
        let g0 = build_gram(&e0.decompose().unwrap()).unwrap();
        let g1 = build_gram(&e1.decompose().unwrap()).unwrap();
        let t = 0.5;
        let gt = homotopy_path(&g0, &g1, t).unwrap();
        let sol = newton_solve(&gt, &cfg, None).unwrap();
        let blocks = sol.d_blocks().unwrap();
        let derivs = taylor_derivatives(&g0, &g1, t, &blocks, 1).unwrap();
        let analytic = block_diagonal_part(&derivs[0], profile).unwrap();

        let h = 1e-5;
        let solve_at = |tt: f64| {
            let gtt = homotopy_path(&g0, &g1, tt).unwrap();
            newton_solve(&gtt, &cfg, Some(blocks.clone())).unwrap().d
        };
        let fd = solve_at(t + h)
            .sub(&solve_at(t - h))
            .scale_re(1.0 / (2.0 * h));
        let rel = fd.max_abs_diff(&analytic) / analytic.max_abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
    }
    let pass = worst_ps <= 1e-9 && worst_rel <= 1e-4;
    finish(
        "08 solver-cross-agreement",
        pass,
        format!("max |dP_s| = {worst_ps:.3e} over 100 instances; max relative derivative error {worst_rel:.3e}"),
    );
}

#[test]
fn criterion_09_exhaustive_sanity() {
    let _guard = serialize_suite();
    // 7^6 = 117,649 Haar samples, the 1e5 budget
    let profile = RankProfile::new(vec![1, 1, 1]).unwrap();
    let mut worst_gap: f64 = 0.0;
    let mut beat_solver = false;
    for k in 0..20u64 {
        let e = random_ensemble::<f64>(&profile, 9100 + k).unwrap();
        let solved = solve_newton(&e).unwrap();
        let (_, best) = exhaustive_search(&e, 7, 123 + k).unwrap();
        if best > solved.p_success + 1e-9 {
            beat_solver = true;
        }
        worst_gap = worst_gap.max(solved.p_success - best);
    }
    // The closeness clause is unattainable at this sample budget: the best
    // of N Haar samples on the 6-parameter qutrit flag manifold sits
    // O(N^(-1/3)) ~ 1e-2 below the optimum, and reaching 1e-3 would need
    // ~1e9 samples. Kept at the stated threshold; expected to fail.
    let pass = !beat_solver && worst_gap <= 1e-3;
    finish(
        "09 exhaustive-sanity",
        pass,
        format!(
            "sampling never beat the solver: {}; worst sampled-to-optimal gap {worst_gap:.3e} (clause requires <= 1e-3)",
            !beat_solver
        ),
    );
}

#[test]
fn criterion_10_scaling_ordering() {
    let _guard = serialize_suite();
    let start = Instant::now();
    let sizes: Vec<RankProfile> = [4usize, 8, 12, 16]
        .iter()
        .map(|&n| {
            let mut ranks = vec![2];
            ranks.extend(std::iter::repeat_n(1, n - 2));
            RankProfile::new(ranks).unwrap()
        })
        .collect();
    let report =
        bench_scaling::<f64>(&sizes, 3, 77, &[SolverKind::Newton, SolverKind::Barrier]).unwrap();
    let newton = report.fitted_slope("newton").unwrap();
    let barrier = report.fitted_slope("barrier").unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = barrier - newton >= 1.0 && elapsed < 600.0;
    finish(
        "10 scaling-ordering",
        pass,
        format!("log-log slopes: newton {newton:.2}, barrier {barrier:.2}, difference {:.2}, {elapsed:.1} s", barrier - newton),
    );
}
