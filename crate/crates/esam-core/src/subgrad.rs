//! Subgradient projections for systems of convex inequalities
//! `g_i(x) <= 0`.
//!
//! A single inequality with value `g` and subgradient `l` at `x` yields the
//! relaxed subgradient projection
//!
//! ```text
//! T(x) = x - mu * (g^+(x) / ||l||^2) * l,   mu in (0, 2),
//! ```
//!
//! a cutter-type step that leaves feasible points untouched (`g^+ = 0`
//! contributes nothing and the subgradient is not even evaluated there).
//! For a weighted block of inequalities the simultaneous step is
//!
//! ```text
//! T_t(x) = x - mu_t * sum_i w_i (g_i^+ / ||l_i||^2) l_i,
//! ```
//!
//! and the `mu_t` minimizing a natural upper bound on the distance to the
//! feasible set has the closed form
//!
//! ```text
//! mu_t = ( sum_i w_i (g_i^+)^2 / ||l_i||^2 ) / || sum_i w_i (g_i^+ / ||l_i||^2) l_i ||^2,
//! ```
//!
//! which is always `>= 1` — the convexity of the squared norm makes the
//! denominator at most the numerator — so the optimal block step is an
//! extrapolation of the plain (`mu = 1`) average. That lower bound is
//! enforced at runtime, not assumed.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::OperatorHandle;
use crate::scalar::{approx_f64, real, Scalar};
use crate::tol;
use crate::vecops as vo;

/// `g^+ = max(g, 0)`, rejecting non-finite values.
pub fn plus_part<S: Scalar>(g: S) -> Result<S> {
    if !g.is_finite() {
        return Err(Error::NonFinite {
            context: "inequality value".into(),
        });
    }
    Ok(g.max(S::zero()))
}

/// A convex inequality `g(x) <= 0` given by value and subgradient closures.
///
/// `convexity_certified` records whether `g` is known convex; the property
/// harness skips subgradient-inequality checks for oracles that opt out
/// (deliberately nonconvex test problems) instead of reporting spurious
/// failures.
#[derive(Clone)]
pub struct ConvexFunctionOracle<S: Scalar> {
    label: String,
    dim: usize,
    value: Arc<dyn Fn(&[S]) -> S + Send + Sync>,
    subgrad: Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>,
    convexity_certified: bool,
}

impl<S: Scalar> ConvexFunctionOracle<S> {
    pub fn new<F, G>(label: impl Into<String>, dim: usize, value: F, subgrad: G) -> Self
    where
        F: Fn(&[S]) -> S + Send + Sync + 'static,
        G: Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
    {
        ConvexFunctionOracle {
            label: label.into(),
            dim,
            value: Arc::new(value),
            subgrad: Arc::new(subgrad),
            convexity_certified: true,
        }
    }

    /// Flag the function as not convex (subgradient-inequality checks do
    /// not apply; the step formulas still run).
    pub fn mark_nonconvex(mut self) -> Self {
        self.convexity_certified = false;
        self
    }

    /// The affine inequality `<a, x> - beta <= 0` (gradient is constant).
    pub fn affine(label: impl Into<String>, a: Vec<S>, beta: S) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::ConfigInvalid("affine oracle needs a nonempty normal"));
        }
        if !vo::all_finite(&a) || !beta.is_finite() {
            return Err(Error::NonFinite {
                context: "affine oracle coefficients".into(),
            });
        }
        let dim = a.len();
        let a_val = a.clone();
        Ok(ConvexFunctionOracle::new(
            label,
            dim,
            move |x: &[S]| vo::dot(&a_val, x) - beta,
            move |_: &[S]| a.clone(),
        ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convexity_certified(&self) -> bool {
        self.convexity_certified
    }

    pub fn value_at(&self, x: &[S]) -> Result<S> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let g = (self.value)(x);
        if !g.is_finite() {
            return Err(Error::NonFinite {
                context: format!("value of {}", self.label),
            });
        }
        Ok(g)
    }

    pub fn subgrad_at(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let l = (self.subgrad)(x);
        if l.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: l.len(),
            });
        }
        if !vo::all_finite(&l) {
            return Err(Error::NonFinite {
                context: format!("subgradient of {}", self.label),
            });
        }
        Ok(l)
    }

    /// `g^+(x)`.
    pub fn violation(&self, x: &[S]) -> Result<S> {
        plus_part(self.value_at(x)?)
    }
}

/// The relaxed subgradient projection for one inequality.
///
/// Feasible points (`g(x) <= 0`) pass through bit-identically; the
/// subgradient is only consulted on violated states, where a zero
/// subgradient is a hard error (for convex `g` it would certify `g > 0`
/// everywhere — an infeasible constraint, not a numerical accident).
pub fn cyclic_subgrad_op<S: Scalar>(
    oracle: Arc<ConvexFunctionOracle<S>>,
    mu: S,
) -> Result<OperatorHandle<S>> {
    if !(mu.is_finite() && mu > S::zero() && mu < real::<S>(2.0)) {
        return Err(Error::MuOutOfRange(approx_f64(mu)));
    }
    let dim = oracle.dim();
    let o = Arc::clone(&oracle);
    let eval = move |x: &[S]| -> Result<Vec<S>> {
        let g = o.value_at(x)?;
        let gp = plus_part(g)?;
        if gp == S::zero() {
            return Ok(x.to_vec());
        }
        let l = o.subgrad_at(x)?;
        let nsq = vo::norm_sq(&l);
        if nsq <= S::zero() {
            return Err(Error::ZeroSubgradient {
                label: o.label().to_string(),
                value: approx_f64(g),
            });
        }
        Ok(vo::affine_step(x, -(mu * gp / nsq), &l))
    };
    let of = oracle;
    let fix = move |x: &[S]| -> bool {
        of.value_at(x)
            .map_or(false, |g| g <= real::<S>(tol::SUBGRAD_FIX_TOL))
    };
    Ok(OperatorHandle::new(dim, eval).with_fix_test(fix))
}

/// Convex inequalities split into disjoint covering blocks, with one
/// normalized positive weight vector per block.
pub struct InequalityBlockSystem<S: Scalar> {
    oracles: Vec<ConvexFunctionOracle<S>>,
    blocks: Vec<Vec<usize>>,
    weights: Vec<Vec<S>>,
    dim: usize,
}

impl<S: Scalar> InequalityBlockSystem<S> {
    pub fn new(
        oracles: Vec<ConvexFunctionOracle<S>>,
        blocks: Vec<Vec<usize>>,
        weights: Vec<Vec<S>>,
    ) -> Result<Self> {
        if oracles.is_empty() {
            return Err(Error::EmptyPool);
        }
        let dim = oracles[0].dim();
        for o in &oracles {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.dim(),
                });
            }
        }
        if blocks.is_empty() {
            return Err(Error::ConfigInvalid("block partition is empty"));
        }
        let mut seen = vec![false; oracles.len()];
        for (t, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock { block: t });
            }
            for &i in block {
                if i >= oracles.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: oracles.len(),
                    });
                }
                if seen[i] {
                    return Err(Error::OverlappingBlocks { row: i });
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::CoverageGap { index: missing });
        }
        if weights.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len(),
                got: weights.len(),
            });
        }
        let mut normalized = Vec::with_capacity(weights.len());
        for (t, (block, w)) in blocks.iter().zip(weights).enumerate() {
            if w.len() != block.len() {
                return Err(Error::DimensionMismatch {
                    expected: block.len(),
                    got: w.len(),
                });
            }
            let mut sum = S::zero();
            for (pos, &wi) in w.iter().enumerate() {
                if !(wi.is_finite() && wi > S::zero()) {
                    return Err(Error::WeightNotPositive {
                        index: block[pos],
                        value: approx_f64(wi),
                    });
                }
                sum = sum + wi;
            }
            let scaled: Vec<S> = w.into_iter().map(|wi| wi / sum).collect();
            let check: S = scaled.iter().copied().sum();
            if (check - S::one()).abs() > real::<S>(tol::WEIGHT_SUM_TOL) {
                return Err(Error::WeightSumOff {
                    sum: approx_f64(check),
                    tol: tol::WEIGHT_SUM_TOL,
                });
            }
            normalized.push(scaled);
            let _ = t;
        }
        Ok(InequalityBlockSystem {
            oracles,
            blocks,
            weights: normalized,
            dim,
        })
    }

    /// Equal weights `1/|B_t|` within each block.
    pub fn with_uniform_weights(
        oracles: Vec<ConvexFunctionOracle<S>>,
        blocks: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let weights = blocks
            .iter()
            .map(|b| vec![S::one(); b.len()])
            .collect();
        Self::new(oracles, blocks, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn oracles(&self) -> &[ConvexFunctionOracle<S>] {
        &self.oracles
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn weights(&self) -> &[Vec<S>] {
        &self.weights
    }

    /// `max_i g_i^+(x)` over the whole system.
    pub fn max_violation(&self, x: &[S]) -> Result<S> {
        let mut worst = S::zero();
        for o in &self.oracles {
            worst = worst.max(o.violation(x)?);
        }
        Ok(worst)
    }

    /// The weighted aggregate of block `t` at `x`: step direction, its
    /// weighted squared magnitude, and violation bookkeeping. Feasible
    /// members contribute exactly nothing (their subgradients are not
    /// evaluated).
    fn aggregate(&self, t: usize, x: &[S]) -> Result<BlockAggregate<S>> {
        let mut agg = BlockAggregate {
            direction: vec![S::zero(); self.dim],
            weighted_norm_sq: S::zero(),
            violated: 0,
            max_violation: S::zero(),
        };
        for (&i, &w) in self.blocks[t].iter().zip(&self.weights[t]) {
            let o = &self.oracles[i];
            let g = o.value_at(x)?;
            let gp = plus_part(g)?;
            if gp == S::zero() {
                continue;
            }
            let l = o.subgrad_at(x)?;
            let nsq = vo::norm_sq(&l);
            if nsq <= S::zero() {
                return Err(Error::ZeroSubgradient {
                    label: o.label().to_string(),
                    value: approx_f64(g),
                });
            }
            vo::add_scaled(&mut agg.direction, w * gp / nsq, &l);
            agg.weighted_norm_sq = agg.weighted_norm_sq + w * gp * gp / nsq;
            agg.violated += 1;
            agg.max_violation = agg.max_violation.max(gp);
        }
        Ok(agg)
    }

    /// The bound-minimizing step factor for block `t` at `x`. Errors:
    /// [`Error::BlockFeasible`] when nothing in the block is violated
    /// (there is no step to scale) and [`Error::DegenerateBlock`] when
    /// violated subgradients cancel to a zero aggregate direction. The
    /// theoretical lower bound `mu >= 1` is enforced.
    pub fn optimal_mu(&self, t: usize, x: &[S]) -> Result<S> {
        let agg = self.aggregate(t, x)?;
        if agg.violated == 0 {
            return Err(Error::BlockFeasible { block: t });
        }
        mu_from_aggregate(&agg, t)
    }
}

struct BlockAggregate<S: Scalar> {
    direction: Vec<S>,
    weighted_norm_sq: S,
    violated: usize,
    max_violation: S,
}

fn mu_from_aggregate<S: Scalar>(agg: &BlockAggregate<S>, t: usize) -> Result<S> {
    let dir_sq = vo::norm_sq(&agg.direction);
    if dir_sq <= S::zero() {
        return Err(Error::DegenerateBlock { block: t });
    }
    let mu = agg.weighted_norm_sq / dir_sq;
    if !mu.is_finite() {
        return Err(Error::NonFinite {
            context: format!("optimal step factor of block {t}"),
        });
    }
    if mu < S::one() - real::<S>(tol::MU_UNITY_SLACK) {
        return Err(Error::MuBelowUnity {
            mu: approx_f64(mu),
        });
    }
    Ok(mu)
}

/// Step-factor rule for a parallel block operator.
#[derive(Clone, Copy, Debug)]
pub enum MuRule<S: Scalar> {
    /// Fixed factor in `(0, 2)`.
    Fixed(S),
    /// The bound-minimizing factor, recomputed at every application
    /// (always `>= 1`, typically an extrapolation).
    Optimal,
}

/// The simultaneous subgradient step over block `t` of the system.
///
/// States with no violated member pass through bit-identically. Under
/// [`MuRule::Optimal`] a violated state whose weighted subgradients cancel
/// exactly is a hard error (the optimal factor is undefined there); under a
/// fixed rule the zero direction simply produces a zero step.
pub fn parallel_block_op<S: Scalar>(
    system: Arc<InequalityBlockSystem<S>>,
    t: usize,
    rule: MuRule<S>,
) -> Result<OperatorHandle<S>> {
    if t >= system.num_blocks() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: system.num_blocks(),
        });
    }
    if let MuRule::Fixed(mu) = rule {
        if !(mu.is_finite() && mu > S::zero() && mu < real::<S>(2.0)) {
            return Err(Error::MuOutOfRange(approx_f64(mu)));
        }
    }
    let dim = system.dim();
    let sys = Arc::clone(&system);
    let eval = move |x: &[S]| -> Result<Vec<S>> {
        let agg = sys.aggregate(t, x)?;
        if agg.violated == 0 {
            return Ok(x.to_vec());
        }
        let mu = match rule {
            MuRule::Fixed(m) => m,
            MuRule::Optimal => mu_from_aggregate(&agg, t)?,
        };
        Ok(vo::affine_step(x, -mu, &agg.direction))
    };
    let sys_fix = system;
    let fix = move |x: &[S]| -> bool {
        sys_fix.blocks[t].iter().all(|&i| {
            sys_fix.oracles[i]
                .value_at(x)
                .map_or(false, |g| g <= real::<S>(tol::SUBGRAD_FIX_TOL))
        })
    };
    Ok(OperatorHandle::new(dim, eval).with_fix_test(fix))
}
