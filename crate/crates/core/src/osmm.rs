//! Output-sparse matrix multiplication.
//!
//! [`osmm_deterministic`] sketches every column of `AB` with a measurement
//! matrix sized for `t`-sparse signals and recovers the product in two
//! passes, first by columns and then by rows. It needs the promise
//! `nnz(AB) <= t^2`. [`osmm_randomized`] needs no promise: it doubles the
//! sparsity budget each round and uses column-wise verification to decide
//! which recovered columns to keep.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Ring;
use crate::expander::ceil_log2;
use crate::sketch::{MeasurementMatrix, SketchError, SketchMode};
use crate::sparse::{
    dense_mm, pad_to_square, restrict_columns, sparse_mm, top_left, transpose, SparseError,
    SparseMat, SparseVec,
};
use crate::verify::{column_wise_mmv, column_wise_mmv_sparse, VerifierConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsmmError {
    #[error("expected two n x n matrices, got {left:?} and {right:?}")]
    NotSquare {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("no sparsity budget: pass t or an nnz bound, or enable post-verification")]
    MissingBudget,
    #[error("sparsity promise violated: {0}")]
    PromiseViolated(String),
    #[error("{0} columns still unresolved after the last round")]
    Unresolved(usize),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Which plain multiplication routine to use for the inner products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Dense,
    Sparse,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    Dense,
    Sparse,
}

/// Picks the sparse product when its estimated work is at most the dense
/// `m * n * p`; ties go to the sparse product.
///
/// The sparse estimate is `(max_col_nnz(A) + 1) * nnz(B) + p`: one
/// multiply-add per pair of matching entries, plus one visit per entry of
/// `B` and one gather per output column.
pub fn strategy_dispatch<E: Clone + Send + Sync>(a: &SparseMat<E>, b: &SparseMat<E>) -> Multiplier {
    let sparse_cost = (a.max_col_nnz() as u128 + 1) * b.nnz() as u128 + b.cols() as u128;
    let dense_cost = a.rows() as u128 * a.cols() as u128 * b.cols() as u128;
    let choice = if sparse_cost <= dense_cost {
        Multiplier::Sparse
    } else {
        Multiplier::Dense
    };
    log::debug!(
        "{}x{}x{}: sparse cost {sparse_cost}, dense cost {dense_cost}, using {choice:?}",
        a.rows(),
        a.cols(),
        b.cols()
    );
    choice
}

/// Plain product with the given strategy.
pub fn multiply<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    strategy: Strategy,
) -> Result<SparseMat<R::Elem>, SparseError> {
    let choice = match strategy {
        Strategy::Dense => Multiplier::Dense,
        Strategy::Sparse => Multiplier::Sparse,
        Strategy::Auto => strategy_dispatch(a, b),
    };
    match choice {
        Multiplier::Dense => dense_mm(ring, a, b),
        Multiplier::Sparse => sparse_mm(ring, a, b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsmmConfig {
    /// Sparsity budget `t` with `nnz(AB) <= t^2`.
    pub t: Option<usize>,
    /// Alternative to `t`: `t = ceil(sqrt(bound))`.
    pub nnz_bound: Option<usize>,
    pub strategy: Strategy,
    pub sketch: SketchMode,
    pub verifier: VerifierConfig,
    /// Check the deterministic result with the column-wise verifier.
    pub post_verify: bool,
}

impl Default for OsmmConfig {
    fn default() -> Self {
        Self {
            t: None,
            nnz_bound: None,
            strategy: Strategy::Auto,
            sketch: SketchMode::Auto,
            verifier: VerifierConfig::default(),
            post_verify: false,
        }
    }
}

impl OsmmConfig {
    fn budget(&self) -> Option<usize> {
        self.t.or_else(|| {
            self.nnz_bound
                .map(|b| b.isqrt() + usize::from(b.isqrt().pow(2) < b))
        })
    }

    fn verify<R: Ring>(
        &self,
        ring: &R,
        a: &SparseMat<R::Elem>,
        b: &SparseMat<R::Elem>,
        c: &SparseMat<R::Elem>,
        cfg: &VerifierConfig,
    ) -> Result<Vec<usize>, SparseError> {
        match self.strategy {
            Strategy::Dense => column_wise_mmv(ring, a, b, c, cfg),
            _ => column_wise_mmv_sparse(ring, a, b, c, cfg),
        }
    }
}

fn square_size<E: Clone + Send + Sync>(
    a: &SparseMat<E>,
    b: &SparseMat<E>,
) -> Result<usize, OsmmError> {
    let n = a.rows();
    if a.cols() != n || b.shape() != (n, n) {
        return Err(OsmmError::NotSquare {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(n)
}

/// Recovers every column of `d`; failed recoveries become zero columns and
/// are reported by position.
fn recover_columns<R: Ring>(
    ring: &R,
    h: &MeasurementMatrix,
    d: &SparseMat<R::Elem>,
) -> Result<(SparseMat<R::Elem>, Vec<usize>), OsmmError> {
    let results: Vec<(SparseVec<R::Elem>, bool)> = d
        .columns()
        .par_iter()
        .map(|col| {
            let z = crate::sketch::Measurement::new(h.blocks(), h.bits(), col.clone())?;
            let rec = h.recover(ring, &z)?;
            Ok((rec.x, rec.ok && rec.consistent))
        })
        .collect::<Result<_, SketchError>>()?;
    let failed = results
        .iter()
        .enumerate()
        .filter(|(_, (_, good))| !good)
        .map(|(j, _)| j)
        .collect();
    let columns = results.into_iter().map(|(x, _)| x).collect();
    Ok((SparseMat::from_columns(h.len(), columns)?, failed))
}

/// Intermediate state of the deterministic algorithm, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicTrace<E> {
    pub t: usize,
    /// Columns recovered in the first pass.
    pub first_pass: SparseMat<E>,
    /// Columns whose first-pass recovery failed or was inconsistent.
    pub first_pass_failures: Vec<usize>,
    pub sketch_rows: usize,
    pub sketch_degree: usize,
}

/// Deterministic output-sparse product of two `n x n` matrices.
///
/// Without a budget and with post-verification on, falls back to
/// [`osmm_randomized`].
pub fn osmm_deterministic<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<SparseMat<R::Elem>, OsmmError> {
    if cfg.budget().is_none() && cfg.post_verify {
        log::info!("no sparsity budget given; running the randomized algorithm");
        return osmm_randomized(ring, a, b, cfg);
    }
    osmm_deterministic_traced(ring, a, b, cfg).map(|(c, _)| c)
}

pub fn osmm_deterministic_traced<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<(SparseMat<R::Elem>, DeterministicTrace<R::Elem>), OsmmError> {
    let n = square_size(a, b)?;
    let t = cfg
        .budget()
        .ok_or(OsmmError::MissingBudget)?
        .clamp(1, n.max(1));
    if n == 0 {
        let empty = SparseMat::zeros(0, 0);
        let trace = DeterministicTrace {
            t,
            first_pass: empty.clone(),
            first_pass_failures: Vec::new(),
            sketch_rows: 0,
            sketch_degree: 0,
        };
        return Ok((empty, trace));
    }
    let h = MeasurementMatrix::build(n, t, &cfg.sketch)?;
    log::debug!(
        "deterministic: n={n} t={t} sketch rows={} degree={}",
        h.rows(),
        h.degree()
    );

    // pass 1: columns of AB from (HA)B
    let ha = h.apply_mat(ring, a)?;
    let d = multiply(ring, &ha, b, cfg.strategy)?;
    let (d_prime, first_pass_failures) = recover_columns(ring, &h, &d)?;

    // pass 2: rows of AB - D' from H(AB - D')^T = (H B^T) A^T - H D'^T
    let hbt = h.apply_mat(ring, &transpose(b))?;
    let g = multiply(ring, &hbt, &transpose(a), cfg.strategy)?;
    let f = g.sub(ring, &h.apply_mat(ring, &transpose(&d_prime))?)?;
    let (f_prime, failures) = recover_columns(ring, &h, &f)?;
    if !failures.is_empty() {
        return Err(OsmmError::PromiseViolated(format!(
            "row recovery failed for {} rows (first: row {})",
            failures.len(),
            failures[0] + 1
        )));
    }
    let c = d_prime.add(ring, &transpose(&f_prime))?;

    if cfg.post_verify {
        let wrong = cfg.verify(ring, a, b, &c, &cfg.verifier)?;
        if !wrong.is_empty() {
            return Err(OsmmError::PromiseViolated(format!(
                "verifier rejected {} columns",
                wrong.len()
            )));
        }
    }
    let trace = DeterministicTrace {
        t,
        first_pass: d_prime,
        first_pass_failures,
        sketch_rows: h.rows(),
        sketch_degree: h.degree(),
    };
    Ok((c, trace))
}

/// One round of the randomized algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace {
    pub t: usize,
    /// Columns still open at the start of the round, increasing.
    pub active: Vec<usize>,
    /// Columns committed at the end of the round.
    pub committed: Vec<usize>,
}

/// Randomized product of two `n x n` matrices; correct with high probability
/// whatever the sparsity of `AB`.
pub fn osmm_randomized<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<SparseMat<R::Elem>, OsmmError> {
    osmm_randomized_traced(ring, a, b, cfg).map(|(c, _)| c)
}

pub fn osmm_randomized_traced<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<(SparseMat<R::Elem>, Vec<RoundTrace>), OsmmError> {
    let n = square_size(a, b)?;
    let mut result: Vec<SparseVec<R::Elem>> = vec![SparseVec::zeros(n); n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();
    let mut cached: Option<(MeasurementMatrix, SparseMat<R::Elem>)> = None;

    for i in 0..=ceil_log2(n as u64) {
        if active.is_empty() {
            break;
        }
        let t = (1usize << i).min(n);
        let h = MeasurementMatrix::build(n, t, &cfg.sketch)?;
        // the product HA only depends on the graph
        let ha = match cached.take() {
            Some((old, ha)) if old.graph() == h.graph() => ha,
            _ => h.apply_mat(ring, a)?,
        };
        let b_active = restrict_columns(b, &active)?;
        let d = multiply(ring, &ha, &b_active, cfg.strategy)?;
        let (f, failed) = recover_columns(ring, &h, &d)?;
        let verifier = cfg
            .verifier
            .with_stream(cfg.verifier.stream.wrapping_add(i as u64));
        let mut still_open = cfg.verify(ring, a, &b_active, &f, &verifier)?;
        still_open.extend(failed);
        still_open.sort_unstable();
        still_open.dedup();

        let mut committed = Vec::new();
        let mut open_iter = still_open.iter().peekable();
        let mut next_active = Vec::with_capacity(still_open.len());
        for (pos, col) in f.into_columns().into_iter().enumerate() {
            if open_iter.peek() == Some(&&pos) {
                open_iter.next();
                next_active.push(active[pos]);
            } else {
                committed.push(active[pos]);
                result[active[pos]] = col;
            }
        }
        log::debug!(
            "randomized round {i}: t={t}, {} active, {} committed",
            active.len(),
            committed.len()
        );
        rounds.push(RoundTrace {
            t,
            active: std::mem::replace(&mut active, next_active),
            committed,
        });
        cached = Some((h, ha));
    }
    if !active.is_empty() {
        return Err(OsmmError::Unresolved(active.len()));
    }
    Ok((SparseMat::from_columns(n, result)?, rounds))
}

/// `m x n` times `n x p` with `m, p <= n`, by zero padding to `n x n`.
pub fn rect_multiply<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<SparseMat<R::Elem>, OsmmError> {
    let (a_sq, b_sq) = pad_to_square(a, b)?;
    let c = osmm_randomized(ring, &a_sq, &b_sq, cfg)?;
    Ok(top_left(&c, a.rows(), b.cols()))
}
