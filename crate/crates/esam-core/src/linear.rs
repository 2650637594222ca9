//! Block operators for linear systems `Ax = b`.
//!
//! The rows of `A` are split into disjoint blocks `B_t` covering all rows.
//! Each block, together with a positive diagonal row weighting `M_t`,
//! induces the operator
//!
//! ```text
//! T_t(x) = x + lambda_t * A_t' M_t (b_t - A_t x)
//!        = x + lambda_t * sum_{i in B_t} w_i (b_i - <a_i, x>) a_i,
//! ```
//!
//! which is sQNE with fixed points `{x : A_t x = b_t}` whenever
//! `lambda_t in (0, 2 / rho(A_t' M_t A_t))`. Cimmino weighting
//! `w_i = 1 / (m_t ||a_i||^2)` makes `rho <= 1`, so `lambda_t in (0, 2)` is
//! always safe there. Two sharper relaxation strategies are provided: a
//! spectral one (`(2 - eps) / rho`, with `rho` estimated by power iteration
//! and inflated for safety) and a per-step residual-minimizing one, which
//! picks the `lambda` that minimizes `||b_t - A_t T(x)||_{M_t}` and is never
//! below the Fejér-safe range's interior.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::OperatorHandle;
use crate::scalar::{approx_f64, real, Scalar};
use crate::strings::{AveragedOperator, StringPlan};
use crate::tol;
use crate::vecops as vo;

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix<S: Scalar> {
    nrows: usize,
    ncols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn new(nrows: usize, ncols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                got: data.len(),
            });
        }
        if !vo::all_finite(&data) {
            return Err(Error::NonFinite {
                context: "dense matrix entries".into(),
            });
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in &rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::new(nrows, ncols, data)
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix<S: Scalar> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> CsrMatrix<S> {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<S>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr.first() != Some(&0) {
            return Err(Error::ConfigInvalid("csr indptr must have nrows+1 entries starting at 0"));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::ConfigInvalid("csr indptr must be nondecreasing"));
        }
        if *indptr.last().expect("nonempty indptr") != indices.len() || indices.len() != data.len()
        {
            return Err(Error::DimensionMismatch {
                expected: *indptr.last().expect("nonempty indptr"),
                got: indices.len(),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= ncols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: ncols,
            });
        }
        if !vo::all_finite(&data) {
            return Err(Error::NonFinite {
                context: "csr matrix entries".into(),
            });
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    /// Entries of row `i` as `(column, value)` pairs in storage order.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Either storage form, behind one row-oriented interface.
#[derive(Clone, Debug)]
pub enum MatrixStorage<S: Scalar> {
    Dense(DenseMatrix<S>),
    Csr(CsrMatrix<S>),
}

impl<S: Scalar> MatrixStorage<S> {
    pub fn nrows(&self) -> usize {
        match self {
            MatrixStorage::Dense(m) => m.nrows,
            MatrixStorage::Csr(m) => m.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixStorage::Dense(m) => m.ncols,
            MatrixStorage::Csr(m) => m.ncols,
        }
    }

    /// `<a_i, x>`.
    pub fn row_dot(&self, i: usize, x: &[S]) -> S {
        match self {
            MatrixStorage::Dense(m) => vo::dot(m.row(i), x),
            MatrixStorage::Csr(m) => m
                .row_entries(i)
                .fold(S::zero(), |acc, (j, v)| acc + v * x[j]),
        }
    }

    /// `out += c * a_i`.
    pub fn add_scaled_row(&self, out: &mut [S], i: usize, c: S) {
        match self {
            MatrixStorage::Dense(m) => vo::add_scaled(out, c, m.row(i)),
            MatrixStorage::Csr(m) => {
                for (j, v) in m.row_entries(i) {
                    out[j] = out[j] + c * v;
                }
            }
        }
    }

    /// `||a_i||^2`.
    pub fn row_norm_sq(&self, i: usize) -> S {
        match self {
            MatrixStorage::Dense(m) => vo::norm_sq(m.row(i)),
            MatrixStorage::Csr(m) => m
                .row_entries(i)
                .fold(S::zero(), |acc, (_, v)| acc + v * v),
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        (0..self.nrows()).map(|i| self.row_dot(i, x)).collect()
    }
}

/// Per-block relaxation strategy.
#[derive(Clone, Debug)]
pub enum LambdaStrategy<S: Scalar> {
    /// One fixed `lambda_t` per block, each in `(0, 2]`.
    Fixed(Vec<S>),
    /// `lambda_t = (2 - epsilon) / rho_t`, with `rho_t` the power-iteration
    /// estimate of `rho(A_t' M_t A_t)` inflated by a safety percentage.
    SpectralBand { epsilon: S },
    /// Recompute the residual-minimizing `lambda` at every application.
    ResidualMinimizing,
}

/// A linear system with a row partition, row weights, and a relaxation
/// strategy — everything needed to mint the per-block operators.
pub struct LinearBlockProblem<S: Scalar> {
    matrix: MatrixStorage<S>,
    rhs: Vec<S>,
    blocks: Vec<Vec<usize>>,
    /// Diagonal of `M_t` for each block, aligned with `blocks`.
    weights: Vec<Vec<S>>,
    lambda: LambdaStrategy<S>,
}

impl<S: Scalar> LinearBlockProblem<S> {
    pub fn new(
        matrix: MatrixStorage<S>,
        rhs: Vec<S>,
        blocks: Vec<Vec<usize>>,
        weights: Vec<Vec<S>>,
        lambda: LambdaStrategy<S>,
    ) -> Result<Self> {
        let nrows = matrix.nrows();
        if rhs.len() != nrows {
            return Err(Error::DimensionMismatch {
                expected: nrows,
                got: rhs.len(),
            });
        }
        if !vo::all_finite(&rhs) {
            return Err(Error::NonFinite {
                context: "right-hand side".into(),
            });
        }
        if blocks.is_empty() {
            return Err(Error::ConfigInvalid("block partition is empty"));
        }
        let mut seen = vec![false; nrows];
        for (t, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock { block: t });
            }
            for &i in block {
                if i >= nrows {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: nrows,
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
        for (t, (block, w)) in blocks.iter().zip(&weights).enumerate() {
            if w.len() != block.len() {
                return Err(Error::DimensionMismatch {
                    expected: block.len(),
                    got: w.len(),
                });
            }
            for (pos, &wi) in w.iter().enumerate() {
                if !(wi.is_finite() && wi > S::zero()) {
                    return Err(Error::WeightNotPositive {
                        index: block[pos],
                        value: approx_f64(wi),
                    });
                }
            }
            let _ = t;
        }
        if let LambdaStrategy::Fixed(values) = &lambda {
            if values.len() != blocks.len() {
                return Err(Error::DimensionMismatch {
                    expected: blocks.len(),
                    got: values.len(),
                });
            }
            for &l in values {
                if !(l.is_finite() && l > S::zero() && l <= real::<S>(2.0)) {
                    return Err(Error::LambdaOutOfRange(approx_f64(l)));
                }
            }
        }
        if let LambdaStrategy::SpectralBand { epsilon } = lambda {
            if !(epsilon.is_finite() && epsilon > S::zero() && epsilon < real::<S>(2.0)) {
                return Err(Error::EpsilonOutOfRange(approx_f64(epsilon)));
            }
        }
        Ok(LinearBlockProblem {
            matrix,
            rhs,
            blocks,
            weights,
            lambda,
        })
    }

    /// Cimmino weighting for the given partition: `w_i = 1/(m_t ||a_i||^2)`
    /// within a block of `m_t` rows, so `rho(A_t' M_t A_t) <= 1`.
    pub fn cimmino_weights(
        matrix: &MatrixStorage<S>,
        blocks: &[Vec<usize>],
    ) -> Result<Vec<Vec<S>>> {
        blocks
            .iter()
            .map(|block| {
                let m_t = real::<S>(block.len() as f64);
                block
                    .iter()
                    .map(|&i| {
                        let nsq = matrix.row_norm_sq(i);
                        if nsq <= S::zero() {
                            return Err(Error::ZeroRow { row: i });
                        }
                        Ok(S::one() / (m_t * nsq))
                    })
                    .collect()
            })
            .collect()
    }

    /// Build a problem with Cimmino weights computed from the matrix.
    pub fn with_cimmino_weights(
        matrix: MatrixStorage<S>,
        rhs: Vec<S>,
        blocks: Vec<Vec<usize>>,
        lambda: LambdaStrategy<S>,
    ) -> Result<Self> {
        let weights = Self::cimmino_weights(&matrix, &blocks)?;
        Self::new(matrix, rhs, blocks, weights, lambda)
    }

    pub fn matrix(&self) -> &MatrixStorage<S> {
        &self.matrix
    }

    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Full residual `b - Ax`.
    pub fn residual(&self, x: &[S]) -> Vec<S> {
        let ax = self.matrix.matvec(x);
        self.rhs.iter().zip(&ax).map(|(&b, &v)| b - v).collect()
    }

    /// `||b - Ax|| / ||b||`, falling back to the absolute norm when
    /// `b = 0`.
    pub fn relative_residual(&self, x: &[S]) -> S {
        let r = vo::norm(&self.residual(x));
        let b = vo::norm(&self.rhs);
        if b > S::zero() {
            r / b
        } else {
            r
        }
    }

    /// `d = A_t' M_t (b_t - A_t x)`, the unrelaxed step of block `t`.
    fn block_step(&self, t: usize, x: &[S]) -> Vec<S> {
        let mut d = vec![S::zero(); self.dim()];
        for (&i, &w) in self.blocks[t].iter().zip(&self.weights[t]) {
            let r = self.rhs[i] - self.matrix.row_dot(i, x);
            self.matrix.add_scaled_row(&mut d, i, w * r);
        }
        d
    }

    /// Squared `M_t`-weighted residual of block `t` at `x`.
    fn block_residual_sq(&self, t: usize, x: &[S]) -> S {
        self.blocks[t]
            .iter()
            .zip(&self.weights[t])
            .fold(S::zero(), |acc, (&i, &w)| {
                let r = self.rhs[i] - self.matrix.row_dot(i, x);
                acc + w * r * r
            })
    }

    /// Power-iteration estimate of `rho(A_t' M_t A_t)`.
    pub fn block_spectral_radius(&self, t: usize) -> Result<S> {
        let dim = self.dim();
        spectral_radius(
            dim,
            |v| {
                let mut out = vec![S::zero(); dim];
                for (&i, &w) in self.blocks[t].iter().zip(&self.weights[t]) {
                    let c = w * self.matrix.row_dot(i, v);
                    self.matrix.add_scaled_row(&mut out, i, c);
                }
                out
            },
            tol::POWER_ITER_REL_TOL,
        )
    }

    /// Resolve the fixed relaxation value for block `t` under the current
    /// strategy. `ResidualMinimizing` has no fixed value (it is per-step),
    /// so this is only called for the other two strategies.
    fn resolve_fixed_lambda(&self, t: usize) -> Result<Option<S>> {
        match &self.lambda {
            LambdaStrategy::Fixed(values) => Ok(Some(values[t])),
            LambdaStrategy::SpectralBand { epsilon } => {
                let rho = self.block_spectral_radius(t)?;
                let rho_used = rho * real::<S>(tol::SPECTRAL_INFLATION);
                if !(rho_used > S::zero() && rho_used.is_finite()) {
                    return Err(Error::SpectralBandEmpty {
                        block: t,
                        rho: approx_f64(rho_used),
                        epsilon: approx_f64(*epsilon),
                    });
                }
                let lambda = (real::<S>(2.0) - *epsilon) / rho_used;
                if !(lambda > S::zero() && lambda.is_finite()) {
                    return Err(Error::SpectralBandEmpty {
                        block: t,
                        rho: approx_f64(rho_used),
                        epsilon: approx_f64(*epsilon),
                    });
                }
                Ok(Some(lambda))
            }
            LambdaStrategy::ResidualMinimizing => Ok(None),
        }
    }
}

/// Largest eigenvalue of a symmetric positive-semidefinite map by power
/// iteration: normalized all-ones start, Rayleigh-quotient convergence at
/// relative tolerance `rel_tol`, hard cap on iterations. An exactly zero
/// image of the current vector is reported as a zero radius.
pub fn spectral_radius<S: Scalar>(
    dim: usize,
    apply: impl Fn(&[S]) -> Vec<S>,
    rel_tol: f64,
) -> Result<S> {
    if dim == 0 {
        return Err(Error::ConfigInvalid("spectral radius of a 0-dimensional map"));
    }
    let inv = S::one() / real::<S>(dim as f64).sqrt();
    let mut v = vec![inv; dim];
    let mut rayleigh = S::zero();
    for iter in 0..tol::POWER_ITER_CAP {
        let w = apply(&v);
        if !vo::all_finite(&w) {
            return Err(Error::NonFinite {
                context: "power iteration image".into(),
            });
        }
        let norm_w = vo::norm(&w);
        if norm_w == S::zero() {
            return Ok(S::zero());
        }
        let next = vo::dot(&v, &w); // ||v|| = 1, so this is the Rayleigh quotient
        let converged = iter > 0 && (next - rayleigh).abs() <= real::<S>(rel_tol) * next.abs();
        rayleigh = next;
        v = w.iter().map(|&x| x / norm_w).collect();
        if converged {
            return Ok(rayleigh);
        }
    }
    Err(Error::PowerIterationNoConvergence {
        iterations: tol::POWER_ITER_CAP,
        last: approx_f64(rayleigh),
    })
}

/// The `lambda` minimizing the `M_t`-weighted residual of block `t` after
/// the step `x + lambda d`, `d = A_t' M_t (b_t - A_t x)`:
///
/// ```text
/// lambda* = ||d||^2 / <M_t q, q>,   q = A_t d.
/// ```
///
/// The numerator form guarantees nonnegativity; it equals `<M_t r, q>` by
/// the normal-equations identity. Errors: [`Error::BlockAlreadySolved`]
/// when the block residual is exactly zero (no step to scale), and
/// [`Error::DegenerateBlock`] when the step vanishes while the residual
/// does not (the block is inconsistent and `x` already minimizes its
/// weighted residual).
pub fn residual_minimizing_lambda<S: Scalar>(
    problem: &LinearBlockProblem<S>,
    t: usize,
    x: &[S],
) -> Result<S> {
    let r_sq = problem.block_residual_sq(t, x);
    if r_sq == S::zero() {
        return Err(Error::BlockAlreadySolved { block: t });
    }
    let d = problem.block_step(t, x);
    let num = vo::norm_sq(&d);
    let mut den = S::zero();
    for (&i, &w) in problem.blocks[t].iter().zip(&problem.weights[t]) {
        let q_i = problem.matrix.row_dot(i, &d);
        den = den + w * q_i * q_i;
    }
    if den <= S::zero() {
        return Err(Error::DegenerateBlock { block: t });
    }
    let lambda = num / den;
    if !lambda.is_finite() {
        return Err(Error::NonFinite {
            context: format!("residual-minimizing lambda of block {t}"),
        });
    }
    Ok(lambda)
}

/// Mint the operator of block `t` under the problem's relaxation strategy.
///
/// Fixed and spectral strategies resolve their `lambda_t` here, once; the
/// residual-minimizing strategy recomputes it at every application (a
/// zero-step state leaves `x` unchanged rather than erroring, so the
/// operator stays total on its domain). The fixed-point test checks the
/// block residual at scale `1 + ||b_t||`.
pub fn block_operator<S: Scalar>(
    problem: &Arc<LinearBlockProblem<S>>,
    t: usize,
) -> Result<OperatorHandle<S>> {
    if t >= problem.num_blocks() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: problem.num_blocks(),
        });
    }
    let fixed_lambda = problem.resolve_fixed_lambda(t)?;
    let dim = problem.dim();
    let rhs_scale = {
        let b_sq = problem.blocks[t]
            .iter()
            .fold(S::zero(), |acc, &i| acc + problem.rhs[i] * problem.rhs[i]);
        S::one() + b_sq.sqrt()
    };

    let p = Arc::clone(problem);
    let eval = move |x: &[S]| -> Result<Vec<S>> {
        let lambda = match fixed_lambda {
            Some(l) => l,
            None => match residual_minimizing_lambda(&p, t, x) {
                Ok(l) => l,
                // Zero block residual or zero step: the operator acts as
                // the identity there either way.
                Err(Error::BlockAlreadySolved { .. }) | Err(Error::DegenerateBlock { .. }) => {
                    return Ok(x.to_vec())
                }
                Err(e) => return Err(e),
            },
        };
        let d = p.block_step(t, x);
        Ok(vo::affine_step(x, lambda, &d))
    };

    let pf = Arc::clone(problem);
    let fix = move |x: &[S]| -> bool {
        let r_sq = pf.block_residual_sq(t, x);
        // Unweighted residual norm would need a second pass; the weighted
        // one is equivalent up to the (positive) weights, so rescale the
        // tolerance by the smallest weight to stay conservative.
        let w_min = pf.weights[t]
            .iter()
            .copied()
            .fold(S::infinity(), S::min);
        let tol_val = real::<S>(tol::LINEAR_FIX_SCALE) * rhs_scale;
        r_sq.sqrt() <= w_min.sqrt() * tol_val
    };

    Ok(OperatorHandle::new(dim, eval).with_fix_test(fix))
}

/// All block operators strung into a single sequential pass
/// (one string visiting every block in order, `E = 1`).
pub fn assemble_sequential<S: Scalar>(
    problem: &Arc<LinearBlockProblem<S>>,
) -> Result<AveragedOperator<S>> {
    let ops = (0..problem.num_blocks())
        .map(|t| block_operator(problem, t))
        .collect::<Result<Vec<_>>>()?;
    AveragedOperator::new(ops, StringPlan::sequential(problem.num_blocks())?)
}

/// All block operators averaged simultaneously
/// (one singleton string per block, equal weights, `E = p`).
pub fn assemble_simultaneous<S: Scalar>(
    problem: &Arc<LinearBlockProblem<S>>,
) -> Result<AveragedOperator<S>> {
    let ops = (0..problem.num_blocks())
        .map(|t| block_operator(problem, t))
        .collect::<Result<Vec<_>>>()?;
    AveragedOperator::new(ops, StringPlan::singletons(problem.num_blocks())?)
}

/// Plain-text readers and writers for matrices and vectors.
///
/// Matrix files are coordinate text: a header line `rows cols nnz`, then
/// one `i j value` line per stored entry with **1-based** indices. Vector
/// files hold one value per line. Blank lines and lines starting with `#`
/// are skipped in both formats.
pub mod io {
    use std::io::{BufRead, BufReader, Write};
    use std::path::Path;

    use super::{CsrMatrix, MatrixStorage};
    use crate::error::{Error, Result};
    use crate::scalar::{real, Scalar};

    fn parse_err(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    fn parse_num<S: Scalar>(tok: &str, line: usize) -> Result<S> {
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))?;
        Ok(real(v))
    }

    fn parse_index(tok: &str, line: usize) -> Result<usize> {
        tok.parse()
            .map_err(|_| parse_err(line, format!("invalid index {tok:?}")))
    }

    /// Content lines with their 1-based file line numbers.
    fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut out = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            out.push((idx + 1, trimmed.to_string()));
        }
        Ok(out)
    }

    /// Read a coordinate-text matrix into CSR form. Entries are sorted by
    /// row and column; duplicate positions are rejected.
    pub fn read_matrix<S: Scalar>(path: impl AsRef<Path>) -> Result<CsrMatrix<S>> {
        let lines = content_lines(path.as_ref())?;
        let Some(((header_line, header), entries)) = lines.split_first().map(|(h, t)| (h.clone(), t))
        else {
            return Err(parse_err(0, "empty matrix file"));
        };
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(header_line, "header must be `rows cols nnz`"));
        }
        let nrows = parse_index(toks[0], header_line)?;
        let ncols = parse_index(toks[1], header_line)?;
        let nnz = parse_index(toks[2], header_line)?;
        if entries.len() != nnz {
            return Err(parse_err(
                header_line,
                format!("header promises {nnz} entries, file has {}", entries.len()),
            ));
        }
        let mut triplets: Vec<(usize, usize, S, usize)> = Vec::with_capacity(nnz);
        for (line_no, line) in entries {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_err(*line_no, "entry must be `i j value`"));
            }
            let i = parse_index(toks[0], *line_no)?;
            let j = parse_index(toks[1], *line_no)?;
            if i == 0 || i > nrows {
                return Err(parse_err(*line_no, format!("row index {i} out of 1..={nrows}")));
            }
            if j == 0 || j > ncols {
                return Err(parse_err(
                    *line_no,
                    format!("column index {j} out of 1..={ncols}"),
                ));
            }
            let v = parse_num::<S>(toks[2], *line_no)?;
            triplets.push((i - 1, j - 1, v, *line_no));
        }
        triplets.sort_by_key(|&(i, j, _, _)| (i, j));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(parse_err(
                    w[1].3,
                    format!("duplicate entry at ({}, {})", w[1].0 + 1, w[1].1 + 1),
                ));
            }
        }
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        for (i, j, v, _) in triplets {
            indptr[i + 1] += 1;
            indices.push(j);
            data.push(v);
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix::new(nrows, ncols, indptr, indices, data)
    }

    /// Write a matrix in coordinate text (1-based, explicit entries only
    /// for CSR, all entries for dense).
    pub fn write_matrix<S: Scalar>(path: impl AsRef<Path>, m: &MatrixStorage<S>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        match m {
            MatrixStorage::Csr(c) => {
                writeln!(f, "{} {} {}", c.nrows, c.ncols, c.nnz())?;
                for i in 0..c.nrows {
                    for (j, v) in c.row_entries(i) {
                        writeln!(f, "{} {} {}", i + 1, j + 1, v)?;
                    }
                }
            }
            MatrixStorage::Dense(d) => {
                writeln!(f, "{} {} {}", d.nrows, d.ncols, d.nrows * d.ncols)?;
                for i in 0..d.nrows {
                    for (j, v) in d.row(i).iter().enumerate() {
                        writeln!(f, "{} {} {}", i + 1, j + 1, v)?;
                    }
                }
            }
        }
        f.flush()?;
        Ok(())
    }

    /// Read a value-per-line vector.
    pub fn read_vector<S: Scalar>(path: impl AsRef<Path>) -> Result<Vec<S>> {
        content_lines(path.as_ref())?
            .iter()
            .map(|(line_no, line)| parse_num(line, *line_no))
            .collect()
    }

    /// Write a value-per-line vector.
    pub fn write_vector<S: Scalar>(path: impl AsRef<Path>, v: &[S]) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for x in v {
            writeln!(f, "{x}")?;
        }
        f.flush()?;
        Ok(())
    }
}
