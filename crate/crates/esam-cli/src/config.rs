//! Experiment configuration: one TOML file per run.
//!
//! A config names exactly one problem source, the string-plan size, the
//! solver settings, and where the artifacts go. Every field has a
//! documented default; the fully resolved config is echoed into the run
//! summary so an artifact is self-describing. Unknown keys are rejected
//! with the file position, as are out-of-range values.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size mode: `ue` extrapolates with `sigma_max`, `we` runs the plain
/// averaged step (`sigma = 1`).
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Ue,
    We,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ue => "ue",
            Mode::We => "we",
        })
    }
}

/// Block relaxation for file-based linear systems: a single fixed
/// `lambda_t` shared by all blocks, or the residual-minimizing choice
/// recomputed each application.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockLambda {
    Fixed(f64),
    Named(NamedLambda),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedLambda {
    ResidualMinimizing,
}

impl Default for BlockLambda {
    fn default() -> Self {
        BlockLambda::Fixed(1.0)
    }
}

fn default_grid() -> usize {
    63
}
fn default_views() -> usize {
    16
}
fn default_rays() -> usize {
    99
}

/// The problem source. Exactly one, selected by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// One of the six classical inequality families, by slug
    /// (`extended-powell`, `chained-wood`, ...).
    Classical {
        name: String,
        /// Ambient dimension override; the family default otherwise.
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        /// Use the classical (nonconvex) Broyden residuals instead of the
        /// affine printed form. Only meaningful for `broyden-tridiagonal`.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        broyden_classical: bool,
    },
    /// Seeded random convex-quadratic system, regenerated on demand.
    RandomQc {
        n: usize,
        m: usize,
        seed: u64,
        /// Sampling interval for the matrix and linear-term entries.
        #[serde(skip_serializing_if = "Option::is_none")]
        entry_range: Option<(f64, f64)>,
    },
    /// Parallel-beam scan of the built-in head phantom.
    Tomography {
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default = "default_views")]
        views: usize,
        #[serde(default = "default_rays")]
        rays: usize,
    },
    /// A linear system read from coordinate-text files, split into
    /// contiguous row blocks with Cimmino weights.
    LinearFiles {
        matrix: PathBuf,
        rhs: PathBuf,
        blocks: usize,
        #[serde(default)]
        lambda: BlockLambda,
    },
}

impl ProblemConfig {
    /// Short name used in comparison tables and default artifact stems.
    pub fn run_name(&self) -> String {
        match self {
            ProblemConfig::Classical {
                name,
                n,
                broyden_classical,
            } => {
                let mut s = name.clone();
                if let Some(n) = n {
                    s.push_str(&format!("-n{n}"));
                }
                if *broyden_classical {
                    s.push_str("-classical");
                }
                s
            }
            ProblemConfig::RandomQc { n, m, seed, .. } => format!("qc-n{n}-m{m}-seed{seed}"),
            ProblemConfig::Tomography { grid, views, rays } => {
                format!("tomo-g{grid}-v{views}-r{rays}")
            }
            ProblemConfig::LinearFiles { matrix, blocks, .. } => {
                let stem = matrix
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "linear".into());
                format!("{stem}-b{blocks}")
            }
        }
    }
}

/// String-plan parameters. All built-in problems use length-one strings;
/// the only knob is how many there are.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Number of strings `E`. Defaults to 4 for the inequality families,
    /// one per view for tomography, and the block count for file-based
    /// linear systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strings: Option<usize>,
}

/// Solver settings; see the field defaults in [`SolverSection::default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: Mode,
    /// Relaxation `lambda_k` (constant over the run), in `(0, 2)`.
    pub lambda: f64,
    /// Violation levels reported in the summary, most lenient first; the
    /// smallest one is the driver's stopping level.
    pub tolerances: Vec<f64>,
    pub max_iters: usize,
    /// Stationarity guard on the squared step norm.
    pub guard: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            mode: Mode::Ue,
            lambda: 1.0,
            tolerances: vec![1e-1, 1e-4],
            max_iters: 20_000,
            guard: 1e-10,
        }
    }
}

/// Artifact destinations. Paths left unset default to
/// `<config stem>.trace.csv` / `<config stem>.summary.toml` next to the
/// config file, or under `--out` when given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemConfig) -> Self {
        ExperimentConfig {
            problem,
            plan: PlanConfig::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let s = &self.solver;
        if s.tolerances.is_empty() {
            return Err("solver.tolerances must list at least one level".into());
        }
        for &t in &s.tolerances {
            if !(t.is_finite() && t > 0.0) {
                return Err(format!("solver.tolerances entry {t} must be positive"));
            }
        }
        if !(s.lambda.is_finite() && s.lambda > 0.0 && s.lambda < 2.0) {
            return Err(format!("solver.lambda = {} must lie in (0, 2)", s.lambda));
        }
        if s.max_iters == 0 {
            return Err("solver.max_iters must be at least 1".into());
        }
        if !(s.guard.is_finite() && s.guard > 0.0) {
            return Err(format!("solver.guard = {} must be positive", s.guard));
        }
        if let Some(e) = self.plan.strings {
            if e == 0 {
                return Err("plan.strings must be at least 1".into());
            }
            if let ProblemConfig::Tomography { views, .. } = &self.problem {
                if e != *views {
                    return Err(format!(
                        "plan.strings = {e} conflicts with the per-view plan ({views} views)"
                    ));
                }
            }
        }
        if let ProblemConfig::LinearFiles { blocks, lambda, .. } = &self.problem {
            if *blocks == 0 {
                return Err("problem.blocks must be at least 1".into());
            }
            if let BlockLambda::Fixed(l) = lambda {
                if !(l.is_finite() && *l > 0.0 && *l <= 2.0) {
                    return Err(format!("problem.lambda = {l} must lie in (0, 2]"));
                }
            }
            if let Some(e) = self.plan.strings {
                if e != *blocks {
                    return Err(format!(
                        "plan.strings = {e} conflicts with the per-block plan ({blocks} blocks)"
                    ));
                }
            }
        }
        Ok(())
    }

    /// The driver's stopping level: the strictest requested tolerance.
    pub fn stop_tolerance(&self) -> f64 {
        self.solver
            .tolerances
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Batch pairing key: the resolved config with the mode and output
    /// destinations erased. Two configs compare as a UE/WE pair exactly
    /// when their keys match.
    pub fn pairing_key(&self) -> String {
        let mut neutral = self.clone();
        neutral.solver.mode = Mode::Ue;
        neutral.output = OutputSection::default();
        toml::to_string(&neutral).expect("a parsed config serializes back")
    }

    /// Artifact paths for a run of this config: explicit `output` entries
    /// win; missing ones are derived from the config file stem, placed in
    /// `out_dir` when given and next to the config otherwise.
    pub fn resolve_outputs(&self, config_path: &Path, out_dir: Option<&Path>) -> (PathBuf, PathBuf) {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.problem.run_name());
        let base = out_dir
            .map(Path::to_path_buf)
            .or_else(|| config_path.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        let trace = self
            .output
            .trace
            .clone()
            .unwrap_or_else(|| base.join(format!("{stem}.trace.csv")));
        let summary = self
            .output
            .summary
            .clone()
            .unwrap_or_else(|| base.join(format!("{stem}.summary.toml")));
        (trace, summary)
    }
}

/// Parse and validate a config file. Syntax and unknown-key errors carry
/// the TOML position; range errors name the offending field.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|message| Error::Config {
        path: path.to_path_buf(),
        message,
    })?;
    Ok(cfg)
}

pub fn save_config(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let text = toml::to_string_pretty(cfg).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path.to_path_buf(), e))
}
