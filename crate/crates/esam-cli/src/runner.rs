//! From a parsed config to artifacts on disk: problem assembly, the
//! driver run, trace and summary files, batch comparisons, and the
//! self-check suite behind the `verify` verb.
//!
//! Trace files are the reproducibility contract: identical configs
//! (including seeds) must produce byte-identical CSV bytes. Floats are
//! therefore written with Rust's shortest round-trip formatting and rows
//! are emitted in iteration order by a sequential driver. Summaries carry
//! wall-clock time and are *not* byte-stable; everything else in them is.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use esam_core::linear::{
    assemble_simultaneous, io as linear_io, LambdaStrategy, LinearBlockProblem, MatrixStorage,
};
use esam_core::subgrad::ConvexFunctionOracle;
use esam_core::{
    check_property, iterate, tol, AveragedOperator, IterationTrace, LambdaSchedule,
    OperatorProperty, ProblemContext, SolverConfig, StepMode, TerminalStatus,
};

use crate::classical::{build_classical_problem, ClassicalFamily};
use crate::config::{
    BlockLambda, ExperimentConfig, Mode, NamedLambda, ProblemConfig, SolverSection,
};
use crate::error::{Error, Result};
use crate::phantom::{block_by_view, build_projection_matrix, PhantomSpec};
use crate::problems::{block_layout, build_ensemble, DEFAULT_STRINGS};
use crate::qc::{generate_random_qc, RandomQcSpec};

/// File name of the batch comparison table, placed in the output
/// directory.
pub const COMPARISON_FILE: &str = "comparison.csv";

/// A problem instantiated and wired to a string plan, ready to iterate.
pub struct PreparedRun {
    pub name: String,
    pub operator: AveragedOperator<f64>,
    pub context: ProblemContext<f64>,
    pub x0: Vec<f64>,
    pub strings: usize,
    /// The inequality oracles behind the operator pool, when the problem
    /// has them (empty for linear systems and tomography).
    pub oracles: Vec<ConvexFunctionOracle<f64>>,
}

fn resolve_relative(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}

/// Instantiate the configured problem. Relative data paths are resolved
/// against the config file's directory.
pub fn prepare(cfg: &ExperimentConfig, config_path: &Path) -> Result<PreparedRun> {
    let name = cfg.problem.run_name();
    match &cfg.problem {
        ProblemConfig::Classical {
            name: slug,
            n,
            broyden_classical,
        } => {
            let family = ClassicalFamily::parse(slug)?;
            let instance = build_classical_problem(family, *n, *broyden_classical)?;
            let strings = cfg.plan.strings.unwrap_or(DEFAULT_STRINGS);
            let ensemble = build_ensemble(&instance, strings)?;
            Ok(PreparedRun {
                name,
                operator: ensemble.operator,
                context: ensemble.context,
                x0: instance.x0,
                strings,
                oracles: instance.oracles,
            })
        }
        ProblemConfig::RandomQc {
            n,
            m,
            seed,
            entry_range,
        } => {
            let mut spec = RandomQcSpec::new(*n, *m, *seed);
            if let Some(range) = entry_range {
                spec.entry_range = *range;
            }
            let instance = generate_random_qc(&spec)?;
            let strings = cfg.plan.strings.unwrap_or(DEFAULT_STRINGS);
            let ensemble = build_ensemble(&instance, strings)?;
            Ok(PreparedRun {
                name,
                operator: ensemble.operator,
                context: ensemble.context,
                x0: instance.x0,
                strings,
                oracles: instance.oracles,
            })
        }
        ProblemConfig::Tomography { grid, views, rays } => {
            let spec = PhantomSpec::with_geometry(*grid, *views, *rays);
            let scan = build_projection_matrix(&spec)?;
            let setup = block_by_view(scan)?;
            let x0 = vec![0.0; setup.x_true.len()];
            Ok(PreparedRun {
                name,
                operator: setup.operator,
                context: setup.context,
                x0,
                strings: *views,
                oracles: Vec::new(),
            })
        }
        ProblemConfig::LinearFiles {
            matrix,
            rhs,
            blocks,
            lambda,
        } => {
            let matrix_path = resolve_relative(config_path, matrix);
            let rhs_path = resolve_relative(config_path, rhs);
            let csr = linear_io::read_matrix::<f64>(&matrix_path)?;
            let b = linear_io::read_vector::<f64>(&rhs_path)?;
            let storage = MatrixStorage::Csr(csr);
            let layout = block_layout(storage.nrows(), *blocks)?;
            let strategy = match lambda {
                BlockLambda::Fixed(l) => LambdaStrategy::Fixed(vec![*l; *blocks]),
                BlockLambda::Named(NamedLambda::ResidualMinimizing) => {
                    LambdaStrategy::ResidualMinimizing
                }
            };
            let problem = Arc::new(LinearBlockProblem::with_cimmino_weights(
                storage, b, layout, strategy,
            )?);
            let operator = assemble_simultaneous(&problem)?;
            let x0 = vec![0.0; problem.dim()];
            let for_violation = Arc::clone(&problem);
            let context = ProblemContext::new(move |x: &[f64]| for_violation.relative_residual(x));
            Ok(PreparedRun {
                name,
                operator,
                context,
                x0,
                strings: *blocks,
                oracles: Vec::new(),
            })
        }
    }
}

/// Translate the solver section into a driver configuration. The driver
/// stops at the strictest requested tolerance; more lenient levels are
/// read off the trace afterwards.
pub fn driver_config(cfg: &ExperimentConfig) -> SolverConfig<f64> {
    let SolverSection {
        mode,
        lambda,
        max_iters,
        guard,
        ..
    } = cfg.solver;
    SolverConfig {
        lambda: LambdaSchedule::Constant(lambda),
        epsilon: None,
        step_mode: match mode {
            Mode::Ue => StepMode::SigmaMax,
            Mode::We => StepMode::Constant(1.0),
        },
        max_iters,
        feasibility_tol: cfg.stop_tolerance(),
        fixed_point_guard: guard,
        assert_fejer: false,
        assert_error_bound: false,
    }
}

/// Write the iteration trace as CSV: `k,sigma,lambda,step_norm,violation,
/// distance`, one row per visited state, shortest round-trip float
/// formatting, LF line endings, empty distance when no reference solution
/// is known.
pub fn write_trace_csv(path: &Path, trace: &IterationTrace<f64>) -> Result<()> {
    let mut out = String::from("k,sigma,lambda,step_norm,violation,distance\n");
    for row in &trace.rows {
        let distance = row.distance.map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.k, row.sigma, row.lambda, row.step_norm, row.violation, distance
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.to_path_buf(), e))
}

#[derive(Serialize)]
struct ExperimentMeta<'a> {
    name: &'a str,
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng: Option<&'static str>,
    trace: &'a Path,
}

#[derive(Serialize)]
struct ToleranceHit {
    tol: f64,
    reached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct ResultsBlock {
    status: String,
    iterations: usize,
    final_violation: f64,
    final_step_norm: f64,
    wall_seconds: f64,
    tolerances: Vec<ToleranceHit>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    experiment: ExperimentMeta<'a>,
    resolved: &'a ExperimentConfig,
    results: ResultsBlock,
}

/// Everything a caller needs to report on a finished run.
pub struct RunReport {
    pub name: String,
    pub mode: Mode,
    pub status: TerminalStatus,
    /// Updates performed (the terminal trace row's index).
    pub iterations: usize,
    pub final_violation: f64,
    pub wall_seconds: f64,
    /// `(tolerance, first iteration at or below it)` per requested level.
    pub tolerance_hits: Vec<(f64, Option<usize>)>,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Process exit code for a completed run: 0 when feasibility was reached,
/// 2 on an exhausted iteration budget, 3 when the stationarity guard
/// fired.
pub fn exit_code(status: TerminalStatus) -> i32 {
    match status {
        TerminalStatus::FeasibilityReached => 0,
        TerminalStatus::MaxIters => 2,
        TerminalStatus::GuardTriggered => 3,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.to_path_buf(), e))?;
        }
    }
    Ok(())
}

/// Run one experiment end to end: build the problem, iterate, write the
/// trace CSV and the summary (with the resolved config echoed for
/// provenance).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    config_path: &Path,
    out_dir: Option<&Path>,
) -> Result<RunReport> {
    let prepared = prepare(cfg, config_path)?;
    let solver = driver_config(cfg);
    let started = Instant::now();
    let outcome = iterate(&prepared.operator, &prepared.x0, &solver, &prepared.context)?;
    let wall_seconds = started.elapsed().as_secs_f64();
    let trace = &outcome.trace;

    let (trace_path, summary_path) = cfg.resolve_outputs(config_path, out_dir);
    ensure_parent(&trace_path)?;
    ensure_parent(&summary_path)?;
    write_trace_csv(&trace_path, trace)?;

    let tolerance_hits: Vec<(f64, Option<usize>)> = cfg
        .solver
        .tolerances
        .iter()
        .map(|&t| (t, trace.iterations_to_tolerance(t)))
        .collect();
    let final_row = trace.final_row().expect("traces always have a row");
    let doc = SummaryDoc {
        experiment: ExperimentMeta {
            name: &prepared.name,
            mode: cfg.solver.mode,
            rng: match cfg.problem {
                ProblemConfig::RandomQc { .. } => Some("chacha8"),
                _ => None,
            },
            trace: &trace_path,
        },
        resolved: cfg,
        results: ResultsBlock {
            status: trace.terminal_status.to_string(),
            iterations: trace.iterations(),
            final_violation: final_row.violation,
            final_step_norm: final_row.step_norm,
            wall_seconds,
            tolerances: tolerance_hits
                .iter()
                .map(|&(tol, hit)| ToleranceHit {
                    tol,
                    reached: hit.is_some(),
                    iterations: hit,
                })
                .collect(),
        },
    };
    let text = toml::to_string_pretty(&doc).map_err(|e| Error::Config {
        path: summary_path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&summary_path, text).map_err(|e| Error::io(summary_path.clone(), e))?;

    Ok(RunReport {
        name: prepared.name,
        mode: cfg.solver.mode,
        status: trace.terminal_status,
        iterations: trace.iterations(),
        final_violation: final_row.violation,
        wall_seconds,
        tolerance_hits,
        trace_path,
        summary_path,
    })
}

/// Command-line overrides layered on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    /// Replaces the tolerance list when nonempty.
    pub tolerances: Vec<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub broyden_classical: bool,
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) -> Result<()> {
    if let Some(mode) = ov.mode {
        cfg.solver.mode = mode;
    }
    if !ov.tolerances.is_empty() {
        cfg.solver.tolerances = ov.tolerances.clone();
    }
    if let Some(max_iters) = ov.max_iters {
        cfg.solver.max_iters = max_iters;
    }
    if let Some(seed) = ov.seed {
        match &mut cfg.problem {
            ProblemConfig::RandomQc { seed: s, .. } => *s = seed,
            _ => {
                return Err(Error::ConfigValue(
                    "--seed applies only to random-qc problems".into(),
                ))
            }
        }
    }
    if ov.broyden_classical {
        match &mut cfg.problem {
            ProblemConfig::Classical {
                broyden_classical, ..
            } => *broyden_classical = true,
            _ => {
                return Err(Error::ConfigValue(
                    "--broyden-classical applies only to the classical families".into(),
                ))
            }
        }
    }
    cfg.validate().map_err(Error::ConfigValue)
}

/// One UE/WE pair in a batch comparison. Iteration counts are the number
/// of updates each run performed under the configured stopping rule;
/// `ratio` is `ue / we` (1.0 exactly when the counts agree).
#[derive(Clone, Debug)]
pub struct CompareRow {
    pub name: String,
    pub ue_iters: usize,
    pub we_iters: usize,
    pub ratio: f64,
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub rows: Vec<CompareRow>,
    pub mean_ue: f64,
    pub mean_we: f64,
    pub mean_ratio: f64,
    pub table_path: PathBuf,
}

fn iteration_ratio(ue: f64, we: f64) -> f64 {
    if ue == we {
        1.0
    } else if we == 0.0 {
        f64::INFINITY
    } else {
        ue / we
    }
}

struct PairSlot {
    ue: Option<(PathBuf, ExperimentConfig)>,
    we: Option<(PathBuf, ExperimentConfig)>,
}

/// Run every `*.toml` config in `dir` as UE/WE pairs and tabulate the
/// iteration counts. Configs pair up when they are identical apart from
/// mode and output paths; a config without a partner (or with a
/// duplicate) is rejected before anything runs. Rows are ordered by
/// problem name, then by the pairing key, so the table is deterministic.
pub fn batch_compare(dir: &Path, out_dir: Option<&Path>, ov: &Overrides) -> Result<BatchOutcome> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir.to_path_buf(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyBatch(dir.to_path_buf()));
    }

    let mut pairs: BTreeMap<String, PairSlot> = BTreeMap::new();
    for path in paths {
        let mut cfg = crate::config::load_config(&path)?;
        apply_overrides(&mut cfg, ov)?;
        let key = cfg.pairing_key();
        let slot = pairs.entry(key).or_insert(PairSlot { ue: None, we: None });
        let side = match cfg.solver.mode {
            Mode::Ue => &mut slot.ue,
            Mode::We => &mut slot.we,
        };
        if side.is_some() {
            return Err(Error::UnpairedConfig { path });
        }
        *side = Some((path, cfg));
    }
    let mut ordered = Vec::new();
    for (key, slot) in pairs {
        match (slot.ue, slot.we) {
            (Some(ue), Some(we)) => ordered.push((ue.1.problem.run_name(), key, ue, we)),
            (Some((path, _)), None) | (None, Some((path, _))) => {
                return Err(Error::UnpairedConfig { path })
            }
            (None, None) => unreachable!("slots are created with one side"),
        }
    }
    ordered.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));

    let mut rows = Vec::with_capacity(ordered.len());
    for (name, _, (ue_path, ue_cfg), (we_path, we_cfg)) in &ordered {
        let ue = run_experiment(ue_cfg, ue_path, out_dir)?;
        let we = run_experiment(we_cfg, we_path, out_dir)?;
        rows.push(CompareRow {
            name: name.clone(),
            ue_iters: ue.iterations,
            we_iters: we.iterations,
            ratio: iteration_ratio(ue.iterations as f64, we.iterations as f64),
        });
    }

    let count = rows.len() as f64;
    let mean_ue = rows.iter().map(|r| r.ue_iters as f64).sum::<f64>() / count;
    let mean_we = rows.iter().map(|r| r.we_iters as f64).sum::<f64>() / count;
    let mean_ratio = iteration_ratio(mean_ue, mean_we);

    let table_path = out_dir.unwrap_or(dir).join(COMPARISON_FILE);
    ensure_parent(&table_path)?;
    let mut table = std::io::BufWriter::new(
        std::fs::File::create(&table_path).map_err(|e| Error::io(table_path.clone(), e))?,
    );
    let write_err = |e| Error::io(table_path.clone(), e);
    writeln!(table, "name,ue_iters,we_iters,ratio").map_err(write_err)?;
    for row in &rows {
        writeln!(
            table,
            "{},{},{},{}",
            row.name, row.ue_iters, row.we_iters, row.ratio
        )
        .map_err(write_err)?;
    }
    writeln!(table, "mean,{mean_ue},{mean_we},{mean_ratio}").map_err(write_err)?;
    table.flush().map_err(write_err)?;

    Ok(BatchOutcome {
        rows,
        mean_ue,
        mean_we,
        mean_ratio,
        table_path,
    })
}

/// One line of `verify` output.
pub struct VerifyCheck {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

fn sample_around(x0: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            x0.iter()
                .map(|&v| v + rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        })
        .collect()
}

/// Largest relative gradient error over a deterministic coordinate sample
/// (all coordinates up to dimension 64, an even stride beyond that —
/// central differences cost two evaluations per coordinate).
fn fd_worst_error(oracle: &ConvexFunctionOracle<f64>, x: &[f64]) -> Result<f64> {
    let n = x.len();
    let grad = oracle.subgrad_at(x)?;
    let scale = 1.0 + esam_core::vecops::norm(&grad);
    let coords: Vec<usize> = if n <= 64 {
        (0..n).collect()
    } else {
        (0..64).map(|i| i * n / 64).collect()
    };
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for c in coords {
        let h = 1e-6 * (1.0 + x[c].abs());
        probe[c] = x[c] + h;
        let up = oracle.value_at(&probe)?;
        probe[c] = x[c] - h;
        let down = oracle.value_at(&probe)?;
        probe[c] = x[c];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[c]).abs() / scale);
    }
    Ok(worst)
}

/// The self-check suite behind the `verify` verb: analytic gradients
/// against central differences, a quasi-nonexpansiveness certificate for
/// every pool operator, feasibility of the reference solution, and the
/// extrapolation factor's unit lower bound over a short driver run.
pub fn verify_problem(cfg: &ExperimentConfig, config_path: &Path) -> Result<Vec<VerifyCheck>> {
    const FD_REL_TOL: f64 = 1e-5;
    const QNE_SAMPLES: usize = 200;
    const SCAN_ITERS: usize = 500;

    let prepared = prepare(cfg, config_path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let mut checks = Vec::new();

    if prepared.oracles.is_empty() {
        checks.push(VerifyCheck {
            label: "gradients".into(),
            passed: true,
            detail: "skipped (no inequality oracles; matrix rows are exact)".into(),
        });
    } else {
        let mut points = vec![prepared.x0.clone()];
        points.extend(sample_around(&prepared.x0, 10, &mut rng));
        let mut worst = 0.0f64;
        let mut worst_label = String::new();
        for oracle in &prepared.oracles {
            for point in &points {
                let err = fd_worst_error(oracle, point)?;
                if err > worst {
                    worst = err;
                    worst_label = oracle.label().to_string();
                }
            }
        }
        checks.push(VerifyCheck {
            label: "gradients".into(),
            passed: worst <= FD_REL_TOL,
            detail: format!(
                "{} oracles x {} points, worst relative error {worst:.2e}{}",
                prepared.oracles.len(),
                points.len(),
                if worst_label.is_empty() {
                    String::new()
                } else {
                    format!(" ({worst_label})")
                }
            ),
        });
    }

    match prepared.context.reference() {
        Some(z) => {
            let violation = prepared.context.violation_at(z);
            checks.push(VerifyCheck {
                label: "reference-point".into(),
                passed: violation <= 1e-12,
                detail: format!("violation at the known solution: {violation:e}"),
            });
            let samples = sample_around(&prepared.x0, QNE_SAMPLES, &mut rng);
            let fixed = vec![z.to_vec()];
            let mut violations = 0usize;
            let mut pairs = 0usize;
            for op in prepared.operator.pool() {
                let report = check_property(
                    op,
                    OperatorProperty::QuasiNonexpansive,
                    &samples,
                    &fixed,
                    tol::PROPERTY_CHECK_TOL,
                )?;
                pairs += report.checked_pairs;
                violations += report.violations.len();
            }
            checks.push(VerifyCheck {
                label: "quasi-nonexpansive".into(),
                passed: violations == 0,
                detail: format!(
                    "{} operators x {QNE_SAMPLES} samples ({pairs} pairs), {violations} violations",
                    prepared.operator.pool().len()
                ),
            });
        }
        None => checks.push(VerifyCheck {
            label: "quasi-nonexpansive".into(),
            passed: true,
            detail: "skipped (no reference solution available)".into(),
        }),
    }

    let mut solver = driver_config(cfg);
    solver.step_mode = StepMode::SigmaMax;
    solver.max_iters = solver.max_iters.min(SCAN_ITERS);
    let outcome = iterate(&prepared.operator, &prepared.x0, &solver, &prepared.context)?;
    let min_sigma = outcome
        .trace
        .rows
        .iter()
        .map(|r| r.sigma)
        .fold(f64::INFINITY, f64::min);
    checks.push(VerifyCheck {
        label: "sigma-lower-bound".into(),
        passed: min_sigma >= 1.0 - tol::SIGMA_UNITY_SLACK,
        detail: format!(
            "min sigma {min_sigma} over {} extrapolated iterations ({})",
            outcome.trace.iterations(),
            outcome.trace.terminal_status
        ),
    });

    Ok(checks)
}
