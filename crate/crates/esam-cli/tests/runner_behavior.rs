//! End-to-end harness behavior: config parsing from real files, the trace
//! CSV byte format, summary/trace agreement, batch pairing, and the process
//! exit codes of the binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use esam_cli::config::{load_config, save_config, ExperimentConfig, Mode, ProblemConfig};
use esam_cli::error::Error;
use esam_cli::runner::{
    apply_overrides, batch_compare, run_experiment, write_trace_csv, Overrides, COMPARISON_FILE,
};
use esam_core::{
    iterate, AveragedOperator, OperatorHandle, ProblemContext, SolverConfig, StepMode, StringPlan,
};
use tempfile::TempDir;

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

const QC_UE: &str = "\
[problem]
kind = \"random-qc\"
n = 20
m = 10
seed = 11

[solver]
mode = \"ue\"
tolerances = [1e-1, 1e-4]
max_iters = 500
";

fn qc_we() -> String {
    QC_UE.replace("mode = \"ue\"", "mode = \"we\"")
}

#[test]
fn config_files_round_trip_and_keep_their_diagnostics() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("qc-ue.toml");
    write(&good, QC_UE);
    let cfg = load_config(&good).unwrap();
    assert_eq!(cfg.problem.run_name(), "qc-n20-m10-seed11");
    assert_eq!(cfg.solver.mode, Mode::Ue);
    assert_eq!(cfg.solver.lambda, 1.0);
    assert_eq!(cfg.solver.guard, 1e-10);

    let copy = dir.path().join("copy.toml");
    save_config(&copy, &cfg).unwrap();
    let reloaded = load_config(&copy).unwrap();
    assert_eq!(reloaded.solver.tolerances, cfg.solver.tolerances);
    assert_eq!(reloaded.problem.run_name(), cfg.problem.run_name());

    // A misspelled key is refused with the file and position named.
    let bad = dir.path().join("bad.toml");
    write(&bad, &QC_UE.replace("max_iters", "max_iter"));
    match load_config(&bad) {
        Err(Error::Config { path, message }) => {
            assert!(path.ends_with("bad.toml"), "{path:?}");
            assert!(message.contains("line"), "{message}");
            assert!(message.contains("max_iter"), "{message}");
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn overrides_rewrite_the_solver_section_in_place() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("qc-ue.toml");
    write(&path, QC_UE);
    let mut cfg = load_config(&path).unwrap();
    apply_overrides(
        &mut cfg,
        &Overrides {
            mode: Some(Mode::We),
            tolerances: vec![5e-2],
            max_iters: Some(7),
            seed: Some(99),
            broyden_classical: false,
        },
    )
    .unwrap();
    assert_eq!(cfg.solver.mode, Mode::We);
    assert_eq!(cfg.solver.tolerances, vec![5e-2]);
    assert_eq!(cfg.solver.max_iters, 7);
    assert!(matches!(cfg.problem, ProblemConfig::RandomQc { seed: 99, .. }));

    // A seed override makes no sense for a deterministic family.
    let mut classical = ExperimentConfig::new(ProblemConfig::Classical {
        name: "extended-powell".into(),
        n: None,
        broyden_classical: false,
    });
    let err = apply_overrides(
        &mut classical,
        &Overrides {
            seed: Some(1),
            ..Overrides::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, Error::ConfigValue(_)));
}

#[test]
fn the_two_halfspace_trace_is_byte_exact() {
    let pool = vec![
        OperatorHandle::halfspace_projection(vec![1.0, 0.0], 0.0).unwrap(),
        OperatorHandle::halfspace_projection(vec![0.0, 1.0], 0.0).unwrap(),
    ];
    let op = AveragedOperator::new(pool, StringPlan::singletons(2).unwrap()).unwrap();
    let ctx = ProblemContext::new(|x: &[f64]| x.iter().fold(0.0f64, |a, &v| a.max(v)))
        .with_reference(vec![0.0, 0.0]);
    let cfg = SolverConfig::<f64> {
        step_mode: StepMode::SigmaMax,
        feasibility_tol: 1e-12,
        max_iters: 10,
        ..SolverConfig::default()
    };
    let out = iterate(&op, &[2.0, 2.0], &cfg, &ctx).unwrap();

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace_csv(&path, &out.trace).unwrap();
    // Shortest round-trip float formatting, LF endings, one terminal row:
    // the quadrant example moves (2,2) -> (0,0) in a single doubled step.
    let golden = "k,sigma,lambda,step_norm,violation,distance\n\
                  0,2,1,1.4142135623730951,2,2.8284271247461903\n\
                  1,1,1,0,0,0\n";
    assert_eq!(fs::read_to_string(&path).unwrap(), golden);
}

#[test]
fn summaries_agree_with_their_traces() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("qc-ue.toml");
    write(&path, QC_UE);
    let cfg = load_config(&path).unwrap();
    let report = run_experiment(&cfg, &path, None).unwrap();

    let trace = fs::read_to_string(&report.trace_path).unwrap();
    let rows: Vec<Vec<f64>> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    assert_eq!(rows.last().unwrap()[0] as usize, report.iterations);
    assert_eq!(rows.last().unwrap()[4], report.final_violation);

    // The per-tolerance counts must equal a scan of the violation column.
    for &(tol, hit) in &report.tolerance_hits {
        let scanned = rows.iter().position(|r| r[4] <= tol).map(|i| rows[i][0] as usize);
        assert_eq!(hit, scanned, "tolerance {tol}");
    }

    let summary: toml::Value =
        toml::from_str(&fs::read_to_string(&report.summary_path).unwrap()).unwrap();
    assert_eq!(
        summary["experiment"]["name"].as_str().unwrap(),
        "qc-n20-m10-seed11"
    );
    assert_eq!(summary["experiment"]["mode"].as_str().unwrap(), "ue");
    assert_eq!(summary["experiment"]["rng"].as_str().unwrap(), "chacha8");
    assert_eq!(
        summary["results"]["iterations"].as_integer().unwrap(),
        report.iterations as i64
    );
    assert_eq!(
        summary["results"]["status"].as_str().unwrap(),
        report.status.to_string()
    );
    // The resolved configuration is echoed for reproducibility.
    assert_eq!(
        summary["resolved"]["solver"]["max_iters"].as_integer().unwrap(),
        500
    );
    let tols = summary["results"]["tolerances"].as_array().unwrap();
    assert_eq!(tols.len(), 2);
    assert_eq!(tols[0]["tol"].as_float().unwrap(), 1e-1);
}

#[test]
fn batches_pair_by_everything_but_mode() {
    let dir = TempDir::new().unwrap();
    write(&dir.path().join("qc-ue.toml"), QC_UE);
    write(&dir.path().join("qc-we.toml"), &qc_we());
    let outcome = batch_compare(dir.path(), None, &Overrides::default()).unwrap();
    assert_eq!(outcome.rows.len(), 1);
    let row = &outcome.rows[0];
    assert_eq!(row.name, "qc-n20-m10-seed11");
    assert!(row.ue_iters > 0 && row.we_iters > 0);
    assert_eq!(outcome.mean_ue, row.ue_iters as f64);
    assert_eq!(outcome.mean_we, row.we_iters as f64);

    let table = fs::read_to_string(dir.path().join(COMPARISON_FILE)).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "name,ue_iters,we_iters,ratio");
    assert!(lines[1].starts_with("qc-n20-m10-seed11,"));
    assert!(lines[2].starts_with("mean,"));
}

#[test]
fn an_already_solved_pair_compares_at_ratio_one() {
    let dir = TempDir::new().unwrap();
    write(&dir.path().join("A.txt"), "1 1 1\n1 1 1.0\n");
    write(&dir.path().join("b.txt"), "0\n");
    let lin = "\
[problem]
kind = \"linear-files\"
matrix = \"A.txt\"
rhs = \"b.txt\"
blocks = 1

[solver]
mode = \"ue\"
tolerances = [1e-6]
";
    write(&dir.path().join("lin-ue.toml"), lin);
    write(
        &dir.path().join("lin-we.toml"),
        &lin.replace("mode = \"ue\"", "mode = \"we\""),
    );
    let outcome = batch_compare(dir.path(), None, &Overrides::default()).unwrap();
    // The zero right-hand side is satisfied by the zero start: both modes
    // stop before the first step and the ratio is exactly one.
    let row = &outcome.rows[0];
    assert_eq!(row.name, "A-b1");
    assert_eq!((row.ue_iters, row.we_iters), (0, 0));
    assert_eq!(row.ratio, 1.0);
    assert_eq!(outcome.mean_ratio, 1.0);
}

#[test]
fn unpaired_and_empty_batches_are_refused() {
    let solo = TempDir::new().unwrap();
    write(&solo.path().join("qc-ue.toml"), QC_UE);
    match batch_compare(solo.path(), None, &Overrides::default()) {
        Err(Error::UnpairedConfig { path }) => {
            assert!(path.ends_with("qc-ue.toml"), "{path:?}")
        }
        other => panic!("expected the unpaired config to be named, got {other:?}"),
    }

    let empty = TempDir::new().unwrap();
    assert!(matches!(
        batch_compare(empty.path(), None, &Overrides::default()),
        Err(Error::EmptyBatch(_))
    ));
}

fn esam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esam"))
}

#[test]
fn exit_codes_separate_the_terminal_statuses() {
    let dir = TempDir::new().unwrap();

    // Feasibility reached -> 0.
    write(&dir.path().join("A.txt"), "1 1 1\n1 1 1.0\n");
    write(&dir.path().join("b.txt"), "0\n");
    write(
        &dir.path().join("solved.toml"),
        "[problem]\nkind = \"linear-files\"\nmatrix = \"A.txt\"\nrhs = \"b.txt\"\nblocks = 1\n",
    );
    let out = esam()
        .args(["solve".as_ref(), dir.path().join("solved.toml").as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // Iteration budget exhausted -> 2.
    write(
        &dir.path().join("stuck.toml"),
        "[problem]\nkind = \"classical\"\nname = \"extended-powell\"\n\n\
         [solver]\ntolerances = [1e-12]\nmax_iters = 2\n",
    );
    let out = esam()
        .args(["solve".as_ref(), dir.path().join("stuck.toml").as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Vanishing step with the violation still large -> 3.
    write(
        &dir.path().join("guarded.toml"),
        "[problem]\nkind = \"random-qc\"\nn = 50\nm = 40\nseed = 1\n\n\
         [solver]\ntolerances = [1e-6]\n",
    );
    let out = esam()
        .args(["solve".as_ref(), dir.path().join("guarded.toml").as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn config_mistakes_exit_one_with_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let out = esam()
        .args(["solve".as_ref(), dir.path().join("missing.toml").as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    write(&dir.path().join("typo.toml"), &QC_UE.replace("seed", "sede"));
    let out = esam()
        .args(["solve".as_ref(), dir.path().join("typo.toml").as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "{stderr}");

    let out = esam().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("solve"));
}
