//! Feasibility test-problem instances and their assembly into runnable
//! string-averaged operators.
//!
//! An instance is a bag of convex constraint oracles `g_i` (find `x` with
//! `g_i(x) <= 0` for all `i`) plus a starting point and, when one is known
//! in closed form, a feasible point used as the Fejér reference. The default
//! experiment protocol splits the `M` constraints into `E` blocks, wraps each
//! block in a parallel subgradient projection operator with the
//! norm-minimizing step, and averages the blocks as `E` length-one strings
//! with equal weights.

use std::sync::Arc;

use esam_core::subgrad::{parallel_block_op, InequalityBlockSystem, MuRule};
use esam_core::{AveragedOperator, ProblemContext, StringPlan};

use crate::error::{Error, Result};

/// Default number of strings `E` for the inequality families.
pub const DEFAULT_STRINGS: usize = 4;

/// One feasibility problem: `M` convex constraints over `R^n`.
pub struct TestProblemInstance {
    pub name: String,
    pub n: usize,
    pub oracles: Vec<esam_core::subgrad::ConvexFunctionOracle<f64>>,
    pub x0: Vec<f64>,
    /// A point known to satisfy every constraint, when the problem has one
    /// in closed form. Drives the trace's distance column and the Fejér and
    /// quasi-nonexpansiveness checks.
    pub known_feasible_point: Option<Vec<f64>>,
}

impl TestProblemInstance {
    pub fn constraints(&self) -> usize {
        self.oracles.len()
    }
}

/// Split `0..m` into `e` contiguous blocks, sizes as equal as possible with
/// the remainder spread over the leading blocks (m=10, e=3 gives 4,3,3).
pub fn block_layout(m: usize, e: usize) -> Result<Vec<Vec<usize>>> {
    if e == 0 || e > m {
        return Err(Error::TooManyStrings {
            strings: e,
            constraints: m,
        });
    }
    let base = m / e;
    let extra = m % e;
    let mut blocks = Vec::with_capacity(e);
    let mut next = 0;
    for t in 0..e {
        let len = base + usize::from(t < extra);
        blocks.push((next..next + len).collect());
        next += len;
    }
    Ok(blocks)
}

/// A problem assembled for the driver: the averaged operator, the block
/// system it wraps (kept for violation/property queries), and the context
/// the iteration reports against.
pub struct Ensemble {
    pub operator: AveragedOperator<f64>,
    pub system: Arc<InequalityBlockSystem<f64>>,
    pub context: ProblemContext<f64>,
}

/// Default experiment assembly: `e` blocks via [`block_layout`], parallel
/// subgradient operators with the norm-minimizing step inside each block
/// (uniform intra-block weights), one length-one string per block with
/// string weights `1/e`.
pub fn build_ensemble(instance: &TestProblemInstance, e: usize) -> Result<Ensemble> {
    let blocks = block_layout(instance.constraints(), e)?;
    let system = Arc::new(InequalityBlockSystem::with_uniform_weights(
        instance.oracles.clone(),
        blocks,
    )?);
    let ops = (0..system.num_blocks())
        .map(|t| parallel_block_op(Arc::clone(&system), t, MuRule::Optimal))
        .collect::<esam_core::Result<Vec<_>>>()?;
    let operator = AveragedOperator::new(ops, StringPlan::singletons(e)?)?;

    let sys = Arc::clone(&system);
    let mut context = ProblemContext::new(move |x: &[f64]| {
        sys.max_violation(x).unwrap_or(f64::NAN)
    });
    if let Some(z) = &instance.known_feasible_point {
        context = context.with_reference(z.clone());
    }
    Ok(Ensemble {
        operator,
        system,
        context,
    })
}
