//! Seeded random quadratic-inequality instances.
//!
//! Each constraint is `f_i(x) = ||G_i x||^2 + c_i' x + d_i <= 0` with the
//! entries of `G_i` (n-by-n, row-major) and `c_i` drawn uniformly from a
//! fixed interval, and `d_i` chosen so that `f_i` vanishes exactly at an
//! anchor point `y` (all-ones by default). The anchor therefore lies on the
//! boundary of every constraint set and the intersection is nonempty by
//! construction.
//!
//! Reproducibility contract: the generator is ChaCha8 keyed by the 64-bit
//! seed, and the draw order is fixed — for each constraint in turn, the
//! `n*n` entries of `G_i` row by row, then the `n` entries of `c_i`. The
//! same seed rebuilds the same instance bit for bit, so instances are always
//! regenerated from their spec and never stored.

use std::sync::Arc;

use esam_core::linear::DenseMatrix;
use esam_core::subgrad::ConvexFunctionOracle;
use esam_core::vecops;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problems::TestProblemInstance;

/// Warn (on stderr) before allocating more than this many bytes of matrix
/// data; generation still proceeds.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 31;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomQcSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub entry_range: (f64, f64),
    /// Boundary point the constraints are calibrated against; `None` means
    /// all-ones.
    pub anchor: Option<Vec<f64>>,
    pub memory_budget: u64,
}

impl RandomQcSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        RandomQcSpec {
            n,
            m,
            seed,
            entry_range: (-10.0, 10.0),
            anchor: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// The full-scale batch: 100 instances of 200 constraints over R^300.
pub fn full_preset(base_seed: u64) -> Vec<RandomQcSpec> {
    (0..100)
        .map(|k| RandomQcSpec::new(300, 200, base_seed + k))
        .collect()
}

/// CI-sized batch: 20 instances of 40 constraints over R^50.
pub fn small_preset(base_seed: u64) -> Vec<RandomQcSpec> {
    (0..20)
        .map(|k| RandomQcSpec::new(50, 40, base_seed + k))
        .collect()
}

/// The raw seeded draws: `(G_i, c_i, d_i)` per constraint, in the documented
/// order. Split out from [`generate_random_qc`] so tests can pin the
/// determinism and range contracts directly.
pub fn draw_constraints(
    spec: &RandomQcSpec,
) -> Result<Vec<(DenseMatrix<f64>, Vec<f64>, f64)>> {
    if spec.n == 0 || spec.m == 0 {
        return Err(Error::ConfigValue(
            "random-qc needs n >= 1 and m >= 1".into(),
        ));
    }
    let (lo, hi) = spec.entry_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::ConfigValue(format!(
            "random-qc entry range [{lo}, {hi}] is empty or not finite"
        )));
    }
    let anchor = match &spec.anchor {
        Some(y) => {
            if y.len() != spec.n {
                return Err(Error::ConfigValue(format!(
                    "random-qc anchor has length {} but n = {}",
                    y.len(),
                    spec.n
                )));
            }
            y.clone()
        }
        None => vec![1.0; spec.n],
    };
    let bytes = spec.n as u64 * spec.n as u64 * spec.m as u64 * 8;
    if bytes > spec.memory_budget {
        eprintln!(
            "warning: random-qc instance needs {} MiB of matrix data (budget {} MiB)",
            bytes >> 20,
            spec.memory_budget >> 20
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let data: Vec<f64> = (0..spec.n * spec.n)
            .map(|_| rng.gen_range(lo..hi))
            .collect();
        let g = DenseMatrix::new(spec.n, spec.n, data)?;
        let c: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(lo..hi)).collect();
        // d cancels the value at the anchor; computed with the same
        // evaluation routine the oracle uses, so f_i(anchor) == 0 bitwise.
        let d = -quadratic_part(&g, &c, &anchor);
        out.push((g, c, d));
    }
    Ok(out)
}

/// `||G x||^2 + c' x`, the seed-independent part of a constraint value.
fn quadratic_part(g: &DenseMatrix<f64>, c: &[f64], x: &[f64]) -> f64 {
    let gx: Vec<f64> = (0..x.len()).map(|r| vecops::dot(g.row(r), x)).collect();
    vecops::norm_sq(&gx) + vecops::dot(c, x)
}

/// Build the instance: oracles with exact gradients `2 G'G x + c`, starting
/// point `2y` (safely infeasible — the quadratic term grows fourfold while
/// the calibration only cancels it at `y`), and the anchor recorded as the
/// known feasible point.
pub fn generate_random_qc(spec: &RandomQcSpec) -> Result<TestProblemInstance> {
    let draws = draw_constraints(spec)?;
    let anchor = spec.anchor.clone().unwrap_or_else(|| vec![1.0; spec.n]);
    let mut oracles = Vec::with_capacity(spec.m);
    for (i, (g, c, d)) in draws.into_iter().enumerate() {
        let g = Arc::new(g);
        let c = Arc::new(c);
        let (gv, cv) = (Arc::clone(&g), Arc::clone(&c));
        oracles.push(ConvexFunctionOracle::new(
            format!("qc[{}]", i + 1),
            spec.n,
            move |x: &[f64]| quadratic_part(&gv, &cv, x) + d,
            move |x: &[f64]| {
                let n = x.len();
                let gx: Vec<f64> = (0..n).map(|r| vecops::dot(g.row(r), x)).collect();
                // 2 G' (G x) + c, accumulated row by row.
                let mut grad: Vec<f64> = c.to_vec();
                for r in 0..n {
                    let w = 2.0 * gx[r];
                    for (l, e) in g.row(r).iter().enumerate() {
                        grad[l] += w * e;
                    }
                }
                grad
            },
        ));
    }
    let x0 = anchor.iter().map(|v| 2.0 * v).collect();
    Ok(TestProblemInstance {
        name: format!("qc-n{}-m{}-seed{}", spec.n, spec.m, spec.seed),
        n: spec.n,
        oracles,
        x0,
        known_feasible_point: Some(anchor),
    })
}
