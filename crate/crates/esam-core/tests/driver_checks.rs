//! End-to-end behavior of the iteration driver on seeded random halfspace
//! systems: the monotonicity assertions hold along real runs, traces have
//! the promised shape, and the iteration is invariant (to rounding) under
//! pool permutations.

use esam_core::operator::OperatorHandle;
use esam_core::strings::{
    compare_error_bounds, iterate, AveragedOperator, LambdaSchedule, ProblemContext, SolveOutcome,
    SolverConfig, StepMode, StringPlan, TerminalStatus,
};
use esam_core::vecops;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `m` halfspaces `<a_i, x> <= 0` through the origin. Every normal is
/// tilted so the all-ones direction is strictly interior to the cone
/// (`<a_i, u> = -0.3` for the unit diagonal `u`): the feasible set then has
/// interior and the runs converge linearly instead of crawling toward a
/// degenerate `{0}` intersection.
fn origin_halfspaces(seed: u64, m: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = vec![1.0 / (dim as f64).sqrt(); dim];
    (0..m)
        .map(|_| loop {
            let mut a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = vecops::dot(&a, &u);
            vecops::add_scaled(&mut a, -(c + 0.3), &u);
            if vecops::norm_sq(&a) > 0.05 {
                break a;
            }
        })
        .collect()
}

/// A start that is infeasible for generic normals: orthogonal to the
/// interior direction, so its violations are driven by the random parts.
fn start(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| if i % 2 == 0 { 5.0 } else { -5.0 })
        .collect()
}

fn problem(normals: &[Vec<f64>]) -> (AveragedOperator<f64>, ProblemContext<f64>) {
    let dim = normals[0].len();
    let pool: Vec<_> = normals
        .iter()
        .map(|a| OperatorHandle::halfspace_projection(a.clone(), 0.0).unwrap())
        .collect();
    let plan = StringPlan::singletons(pool.len()).unwrap();
    let avg = AveragedOperator::new(pool, plan).unwrap();
    let normals: Arc<[Vec<f64>]> = normals.to_vec().into();
    let ctx = ProblemContext::new(move |x: &[f64]| {
        normals
            .iter()
            .fold(0.0_f64, |acc, a| acc.max(vecops::dot(a, x)))
    })
    .with_reference(vec![0.0; dim]);
    (avg, ctx)
}

fn run(seed: u64, cfg: &SolverConfig<f64>) -> SolveOutcome<f64> {
    let normals = origin_halfspaces(seed, 8, 6);
    let (avg, ctx) = problem(&normals);
    iterate(&avg, &start(6), cfg, &ctx).expect("driver run with assertions enabled")
}

#[test]
fn monotonicity_assertions_hold_along_extrapolated_runs() {
    // lambda in (0,1) arms both the Fejér and the error-bound assertion;
    // a clean return is the certificate.
    for seed in [11, 12, 13] {
        let cfg = SolverConfig::<f64> {
            lambda: LambdaSchedule::Constant(0.5),
            assert_fejer: true,
            assert_error_bound: true,
            feasibility_tol: 1e-8,
            // The default guard (step ~1e-5) would preempt a 1e-8
            // feasibility goal; shrink it so feasibility decides.
            fixed_point_guard: 1e-24,
            max_iters: 5_000,
            ..SolverConfig::default()
        };
        let out = run(seed, &cfg);
        assert_eq!(out.trace.terminal_status, TerminalStatus::FeasibilityReached);
    }
}

#[test]
fn monotonicity_assertions_hold_without_extrapolation() {
    for seed in [21, 22] {
        let cfg = SolverConfig::<f64> {
            lambda: LambdaSchedule::Constant(0.5),
            step_mode: StepMode::Constant(1.0),
            assert_fejer: true,
            assert_error_bound: true,
            feasibility_tol: 1e-8,
            fixed_point_guard: 1e-24,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let out = run(seed, &cfg);
        assert_eq!(out.trace.terminal_status, TerminalStatus::FeasibilityReached);
    }
}

#[test]
fn fejer_holds_across_the_whole_relaxation_range() {
    // The error-decrease bound is specific to lambda < 1, but Fejér
    // monotonicity holds for any lambda in (0, 2).
    for lambda in [0.1, 0.9, 1.0, 1.5, 1.9] {
        let cfg = SolverConfig::<f64> {
            lambda: LambdaSchedule::Constant(lambda),
            assert_fejer: true,
            feasibility_tol: 1e-8,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let out = run(31, &cfg);
        assert!(
            matches!(
                out.trace.terminal_status,
                TerminalStatus::FeasibilityReached | TerminalStatus::GuardTriggered
            ),
            "lambda = {lambda} stalled: {:?}",
            out.trace.terminal_status
        );
    }
}

#[test]
fn trace_rows_are_contiguous_with_one_terminal_row() {
    let cfg = SolverConfig::<f64> {
        feasibility_tol: 1e-8,
        fixed_point_guard: 1e-24,
        ..SolverConfig::default()
    };
    let out = run(41, &cfg);
    for (i, row) in out.trace.rows.iter().enumerate() {
        assert_eq!(row.k, i);
    }
    assert_eq!(out.trace.rows.len(), out.trace.iterations() + 1);
    // Feasibility termination means exactly the terminal row meets the
    // tolerance and no earlier row does.
    assert_eq!(
        out.trace.iterations_to_tolerance(1e-8),
        Some(out.trace.iterations())
    );
}

#[test]
fn scheduled_lambdas_are_recorded_per_iteration() {
    let cfg = SolverConfig::<f64> {
        lambda: LambdaSchedule::Sequence(vec![0.3, 0.7, 1.2]),
        feasibility_tol: 1e-10,
        max_iters: 6,
        ..SolverConfig::default()
    };
    let out = run(51, &cfg);
    let lambdas: Vec<f64> = out.trace.rows.iter().map(|r| r.lambda).collect();
    assert!(lambdas.len() >= 4, "run too short to see the tail value");
    assert_eq!(&lambdas[..3], &[0.3, 0.7, 1.2]);
    assert!(lambdas[3..].iter().all(|&l| l == 1.2));
}

#[test]
fn bound_report_from_a_live_trace() {
    let cfg = SolverConfig::<f64> {
        lambda: LambdaSchedule::Constant(0.5),
        feasibility_tol: 1e-8,
        max_iters: 5_000,
        ..SolverConfig::default()
    };
    let out = run(61, &cfg);
    let report = compare_error_bounds(&out.trace, 4).unwrap();
    assert!(!report.rows.is_empty());
    assert!(report.sqne_bound_holds());
    // lambda = 1/2 with m = 4 is deep inside the dominance region.
    assert!(report.sqne_dominates_cutter());
}

#[test]
fn pool_permutation_leaves_the_iteration_invariant_to_rounding() {
    let normals = origin_halfspaces(71, 5, 6);
    let permuted: Vec<Vec<f64>> = [3usize, 0, 4, 1, 2]
        .iter()
        .map(|&i| normals[i].clone())
        .collect();
    // Under-relaxed so the runs do not land exactly inside the cone after
    // a handful of steps; either way both runs must stop identically.
    let cfg = SolverConfig::<f64> {
        lambda: LambdaSchedule::Constant(0.4),
        feasibility_tol: 1e-300,
        fixed_point_guard: 1e-300,
        max_iters: 25,
        ..SolverConfig::default()
    };
    let x0 = start(6);
    let (avg_a, ctx_a) = problem(&normals);
    let (avg_b, ctx_b) = problem(&permuted);
    let out_a = iterate(&avg_a, &x0, &cfg, &ctx_a).unwrap();
    let out_b = iterate(&avg_b, &x0, &cfg, &ctx_b).unwrap();
    assert_eq!(out_a.trace.terminal_status, out_b.trace.terminal_status);
    assert_eq!(out_a.trace.iterations(), out_b.trace.iterations());
    let diff = vecops::distance(&out_a.point, &out_b.point);
    let scale = vecops::norm(&out_a.point).max(1.0);
    assert!(
        diff <= 1e-12 * scale,
        "permuted pool diverged by {diff} (scale {scale})"
    );
}
