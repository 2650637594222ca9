use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use esam_cli::config::{load_config, save_config, ExperimentConfig, Mode, ProblemConfig};
use esam_cli::error::{Error, Result};
use esam_cli::phantom::{build_projection_matrix, PhantomSpec};
use esam_cli::qc::{full_preset, small_preset};
use esam_cli::runner::{
    apply_overrides, batch_compare, exit_code, run_experiment, verify_problem, BatchOutcome,
    Overrides, RunReport,
};

use esam_core::linear::io as linear_io;

#[derive(Parser)]
#[command(
    name = "esam",
    version,
    about = "Extrapolated string-averaging solver for convex feasibility problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    /// Step-size mode override: ue (sigma_max extrapolation) or we (unit step).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Violation level to report; repeatable. Replaces the config's list.
    #[arg(long = "tol", value_name = "LEVEL")]
    tol: Vec<f64>,
    /// Iteration budget override.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Seed override (random-qc problems only).
    #[arg(long)]
    seed: Option<u64>,
    /// Use the classical (nonconvex) Broyden residuals instead of the
    /// affine printed form.
    #[arg(long)]
    broyden_classical: bool,
}

impl From<RunFlags> for Overrides {
    fn from(f: RunFlags) -> Overrides {
        Overrides {
            mode: f.mode,
            tolerances: f.tol,
            max_iters: f.max_iters,
            seed: f.seed,
            broyden_classical: f.broyden_classical,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// The six classical inequality families, UE/WE config pairs.
    Classical,
    /// Seeded random convex-quadratic instances, UE/WE config pairs.
    Random,
    /// Head-phantom scan: matrix/sinogram/image files plus configs.
    Tomography,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its trace and summary.
    ///
    /// Exit code: 0 feasibility reached, 2 iteration budget exhausted,
    /// 3 stationarity guard fired, 1 config or runtime error.
    Solve {
        config: PathBuf,
        /// Directory for artifacts (defaults next to the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a directory of configs as UE/WE pairs and tabulate iteration
    /// counts.
    Batch {
        dir: PathBuf,
        /// Directory for artifacts and the comparison table (defaults to
        /// the config directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override applied to every config; repeatable.
        #[arg(long = "tol", value_name = "LEVEL")]
        tol: Vec<f64>,
        /// Iteration budget override applied to every config.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Emit ready-to-run experiment files.
    Gen {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        /// Shrink the random suite to the quick desk preset
        /// (n=50, M=40, 20 instances instead of n=300, M=200, 100).
        #[arg(long)]
        small: bool,
        /// Base seed for the random suite; instance k uses seed base+k.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Classical suite: configure Broyden with the classical
        /// (nonconvex) residuals.
        #[arg(long)]
        broyden_classical: bool,
    },
    /// Run the self-check suite (gradients, operator properties, step
    /// bound) on a config's problem. Exit 0 when every check passes.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { config, out, flags } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, &flags.into())?;
            let report = run_experiment(&cfg, &config, out.as_deref())?;
            print_report(&report);
            Ok(exit_code(report.status))
        }
        Command::Batch {
            dir,
            out,
            tol,
            max_iters,
        } => {
            let ov = Overrides {
                tolerances: tol,
                max_iters,
                ..Overrides::default()
            };
            let outcome = batch_compare(&dir, out.as_deref(), &ov)?;
            print_batch(&outcome);
            Ok(0)
        }
        Command::Gen {
            suite,
            out,
            small,
            seed,
            broyden_classical,
        } => {
            if broyden_classical && suite != Suite::Classical {
                return Err(Error::ConfigValue(
                    "--broyden-classical applies only to the classical suite".into(),
                ));
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.clone(), e))?;
            let written = match suite {
                Suite::Classical => gen_classical(&out, broyden_classical)?,
                Suite::Random => gen_random(&out, small, seed)?,
                Suite::Tomography => gen_tomography(&out)?,
            };
            println!("wrote {written} files to {}", out.display());
            Ok(0)
        }
        Command::Verify { config, flags } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, &flags.into())?;
            let checks = verify_problem(&cfg, &config)?;
            let mut all = true;
            for check in &checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", check.label, check.detail);
                all &= check.passed;
            }
            Ok(if all { 0 } else { 1 })
        }
    }
}

fn print_report(r: &RunReport) {
    println!(
        "{} [{}] {}: {} iterations, {:.3} s",
        r.name, r.mode, r.status, r.iterations, r.wall_seconds
    );
    for &(tol, hit) in &r.tolerance_hits {
        match hit {
            Some(k) => println!("  tol {tol:e}: reached at iteration {k}"),
            None => println!("  tol {tol:e}: not reached"),
        }
    }
    println!("  trace:   {}", r.trace_path.display());
    println!("  summary: {}", r.summary_path.display());
}

fn print_batch(b: &BatchOutcome) {
    println!(
        "{:<32} {:>9} {:>9} {:>8}",
        "name", "ue_iters", "we_iters", "ratio"
    );
    for r in &b.rows {
        println!(
            "{:<32} {:>9} {:>9} {:>8.3}",
            r.name, r.ue_iters, r.we_iters, r.ratio
        );
    }
    println!(
        "{:<32} {:>9.2} {:>9.2} {:>8.3}",
        "mean", b.mean_ue, b.mean_we, b.mean_ratio
    );
    println!("table: {}", b.table_path.display());
}

/// Both-mode config pair for one problem, named `<stem>-ue.toml` /
/// `<stem>-we.toml`.
fn write_pair(
    out: &Path,
    stem: &str,
    mut make: impl FnMut() -> ExperimentConfig,
) -> Result<usize> {
    for mode in [Mode::Ue, Mode::We] {
        let mut cfg = make();
        cfg.solver.mode = mode;
        save_config(&out.join(format!("{stem}-{mode}.toml")), &cfg)?;
    }
    Ok(2)
}

fn gen_classical(out: &Path, broyden_classical: bool) -> Result<usize> {
    let mut written = 0;
    for family in esam_cli::classical::ClassicalFamily::ALL {
        let slug = family.slug();
        written += write_pair(out, slug, || {
            ExperimentConfig::new(ProblemConfig::Classical {
                name: slug.to_string(),
                n: None,
                broyden_classical: broyden_classical
                    && family == esam_cli::classical::ClassicalFamily::BroydenTridiagonal,
            })
        })?;
    }
    Ok(written)
}

fn gen_random(out: &Path, small: bool, base_seed: u64) -> Result<usize> {
    let specs = if small {
        small_preset(base_seed)
    } else {
        full_preset(base_seed)
    };
    let mut written = 0;
    for spec in specs {
        let stem = format!("qc-n{}-m{}-seed{}", spec.n, spec.m, spec.seed);
        written += write_pair(out, &stem, || {
            ExperimentConfig::new(ProblemConfig::RandomQc {
                n: spec.n,
                m: spec.m,
                seed: spec.seed,
                entry_range: None,
            })
        })?;
    }
    Ok(written)
}

#[derive(Serialize)]
struct GeometryManifest<'a> {
    grid: usize,
    views: usize,
    rays_per_view: usize,
    rows_retained: usize,
    clamped_pixels: usize,
    angles: &'a [f64],
}

fn gen_tomography(out: &Path) -> Result<usize> {
    let spec = PhantomSpec::head_default();
    let scan = build_projection_matrix(&spec)?;
    // Exports live one level down so the parent stays a clean config
    // directory for `batch`.
    let data = out.join("data");
    std::fs::create_dir_all(&data).map_err(|e| Error::io(data.clone(), e))?;
    linear_io::write_matrix(data.join("A.txt"), &scan.matrix)?;
    linear_io::write_vector(data.join("b.txt"), &scan.rhs)?;
    linear_io::write_vector(data.join("x_true.txt"), &scan.x_true)?;
    let manifest = GeometryManifest {
        grid: scan.grid,
        views: scan.views,
        rays_per_view: scan.rays_per_view,
        rows_retained: scan.rhs.len(),
        clamped_pixels: scan.clamped_pixels,
        angles: &scan.angles,
    };
    let path = data.join("geometry.toml");
    let text = toml::to_string_pretty(&manifest).map_err(|e| Error::Config {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))?;

    // A fixed-length error study: run exactly 50 iterations by keeping
    // both stopping levels out of reach.
    let written = write_pair(out, "tomo", || {
        let mut cfg = ExperimentConfig::new(ProblemConfig::Tomography {
            grid: scan.grid,
            views: scan.views,
            rays: scan.rays_per_view,
        });
        cfg.solver.max_iters = 50;
        cfg.solver.tolerances = vec![1e-300];
        cfg.solver.guard = 1e-300;
        cfg
    })?;
    Ok(written + 4)
}
