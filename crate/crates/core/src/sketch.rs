//! Compressed sensing over an arbitrary ring.
//!
//! The measurement matrix is `H = A ⊗_r B`: `A` is the adjacency matrix of a
//! bipartite expander (right vertices as rows) and `B` is the bit matrix whose
//! column `j` is the binary expansion of `j`. Row `i * l + k` of `H` is the
//! coordinatewise product of row `i` of `A` and row `k` of `B`, so `H` is
//! binary and the measurement of `x` splits into one length-`l` block per
//! right vertex. `H` is never stored; everything runs off the graph.

use std::collections::HashMap;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Ring;
use crate::expander::{
    build_pv_expander, build_random_expander, ceil_log2, certified_pv_params, certify_pairwise,
    verify_expansion, BipartiteGraph, ExpanderError, ExpanderParams, PvParams,
};
use crate::sparse::{SparseError, SparseMat, SparseVec};

/// Expansion slack the recovery guarantee is stated for.
pub fn sketch_eps() -> Ratio<u64> {
    Ratio::new(1, 12)
}

/// Largest signal length for which [`MeasurementMatrix::explicit`] will
/// materialize `H`.
pub const EXPLICIT_MAX_LEN: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("sparsity budget t={t} must satisfy 1 <= t <= {n}")]
    InvalidSparsity { t: usize, n: usize },
    #[error("bit matrix needs n = 2^l - 1, got {0}")]
    NotBitLength(usize),
    #[error("vector of length {got} does not match signal length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measurement shape ({got_blocks} blocks of {got_bits}) does not match ({blocks} blocks of {bits})")]
    ShapeMismatch {
        blocks: u64,
        bits: usize,
        got_blocks: u64,
        got_bits: usize,
    },
    #[error("graph has {left} left vertices, need at least {needed}")]
    GraphTooSmall { left: usize, needed: usize },
    #[error("graph is not a (t, 1/12)-expander; violating set {witness:?}")]
    NotExpanding { witness: Vec<usize> },
    #[error("matrix has {rows} rows, too many to address")]
    TooManyRows { rows: u128 },
    #[error("explicit H is only built for n <= {EXPLICIT_MAX_LEN}, got {0}")]
    TooLargeToMaterialize(usize),
    #[error(transparent)]
    Expander(#[from] ExpanderError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// The `l x n` matrix whose column `j` (1-based) is `j` in binary, most
/// significant bit in the first row.
pub fn bit_matrix<R: Ring>(ring: &R, n: usize) -> Result<SparseMat<R::Elem>, SketchError> {
    if !(n + 1).is_power_of_two() || n == 0 {
        return Err(SketchError::NotBitLength(n));
    }
    let bits = (n + 1).trailing_zeros() as usize;
    let columns = (1..=n)
        .map(|j| SparseVec::from_sorted(bits, bit_rows(j, bits).map(|k| (k, ring.one())).collect()))
        .collect();
    Ok(SparseMat::from_columns(bits, columns)?)
}

/// Rows `k` (0-based) with bit `l - 1 - k` of `j` set, increasing.
fn bit_rows(j: usize, bits: usize) -> impl Iterator<Item = usize> {
    (0..bits).filter(move |k| j >> (bits - 1 - k) & 1 == 1)
}

/// Row tensor Hadamard product: row `i * m2 + j` of the result is the
/// coordinatewise product of row `i` of `a` and row `j` of `b`.
pub fn row_tensor<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
) -> Result<SparseMat<R::Elem>, SketchError> {
    if a.cols() != b.cols() {
        return Err(SparseError::DimensionMismatch {
            op: "row_tensor",
            left: a.shape(),
            right: b.shape(),
        }
        .into());
    }
    let m2 = b.rows();
    let rows = a.rows() * m2;
    let columns = a
        .columns()
        .iter()
        .zip(b.columns())
        .map(|(ac, bc)| {
            let pairs = ac
                .iter()
                .flat_map(|(i, av)| bc.iter().map(move |(j, bv)| (i * m2 + j, ring.mul(av, bv))))
                .collect();
            SparseVec::from_accumulated(ring, rows, pairs)
        })
        .collect();
    Ok(SparseMat::from_columns(rows, columns)?)
}

/// How the expander behind `H` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SketchMode {
    /// Parameters derived from `(n, t, 1/12, alpha)` as in the construction's
    /// analysis. Impractically large except for tiny inputs.
    Theory { alpha: Ratio<u64> },
    /// Hand-picked construction parameters; `left` is overwritten with `n`.
    /// The graph is not checked.
    Manual(PvParams),
    /// Seeded random graph, accepted only if an exhaustive check confirms
    /// `(t, 1/12)`-expansion within `budget` subsets.
    Random {
        degree: usize,
        right: u64,
        seed: u64,
        budget: u64,
    },
    /// Smallest Reed–Solomon style graph whose pairwise-overlap certificate
    /// proves `(t, 1/12)`-expansion.
    Certified,
    /// The identity graph: one block per coordinate. Valid for every `t`.
    Identity,
    /// [`SketchMode::Certified`] when it has fewer right vertices than `n`,
    /// otherwise [`SketchMode::Identity`].
    Auto,
}

/// Implicit `H = A ⊗_r B` for signals of length `n_raw`, padded to
/// `n = 2^l - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementMatrix {
    n_raw: usize,
    n: usize,
    t: usize,
    bits: usize,
    graph: BipartiteGraph,
}

/// `Hx`, as `blocks` consecutive segments of `bits` entries each.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Measurement<E> {
    blocks: u64,
    bits: usize,
    values: SparseVec<E>,
}

impl<E: Clone> Measurement<E> {
    pub fn new(blocks: u64, bits: usize, values: SparseVec<E>) -> Result<Self, SketchError> {
        let rows = blocks as u128 * bits as u128;
        if values.len() as u128 != rows {
            return Err(SketchError::LengthMismatch {
                expected: usize::try_from(rows).unwrap_or(usize::MAX),
                got: values.len(),
            });
        }
        Ok(Self {
            blocks,
            bits,
            values,
        })
    }

    pub fn blocks(&self) -> u64 {
        self.blocks
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn values(&self) -> &SparseVec<E> {
        &self.values
    }

    pub fn into_values(self) -> SparseVec<E> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_zero()
    }

    /// Nonempty blocks in order, each as `(block, entries)` with entry
    /// indices local to the block.
    pub fn nonzero_blocks(&self) -> Vec<(u64, Vec<(usize, &E)>)> {
        let mut out: Vec<(u64, Vec<(usize, &E)>)> = Vec::new();
        for (idx, v) in self.values.iter() {
            let block = (idx / self.bits) as u64;
            let local = idx % self.bits;
            match out.last_mut() {
                Some((b, entries)) if *b == block => entries.push((local, v)),
                _ => out.push((block, vec![(local, v)])),
            }
        }
        out
    }
}

/// Outcome of [`MeasurementMatrix::recover`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery<E> {
    /// Sum of the halving steps, or zero when the procedure gave up.
    pub x: SparseVec<E>,
    pub ok: bool,
    /// Number of `reduce` calls made.
    pub iterations: usize,
    /// Whether the final residual `z0 - Hx` is zero, i.e. `x` is consistent
    /// with the measurement.
    pub consistent: bool,
}

impl MeasurementMatrix {
    /// Builds `H` for signals of length `n_raw` that are promised `t`-sparse.
    pub fn build(n_raw: usize, t: usize, mode: &SketchMode) -> Result<Self, SketchError> {
        if t == 0 || t > n_raw.max(1) {
            return Err(SketchError::InvalidSparsity { t, n: n_raw });
        }
        let bits = ceil_log2(n_raw as u64 + 1).max(1) as usize;
        let n = (1usize << bits) - 1;
        let eps = sketch_eps();
        let graph = match mode {
            SketchMode::Theory { alpha } => {
                let params = ExpanderParams::derive(n, t, eps, *alpha)?;
                build_pv_expander(&params.pv())?
            }
            SketchMode::Manual(params) => build_pv_expander(&PvParams { left: n, ..*params })?,
            SketchMode::Random {
                degree,
                right,
                seed,
                budget,
            } => {
                let g = build_random_expander(n, *degree, *right, *seed)?;
                let check = verify_expansion(&g, t, eps, *budget)?;
                if let Some(witness) = check.witness {
                    return Err(SketchError::NotExpanding { witness });
                }
                g
            }
            SketchMode::Certified => certified_graph(n, t, eps)?,
            SketchMode::Identity => BipartiteGraph::identity(n),
            SketchMode::Auto => {
                let params = certified_pv_params(n, t, eps);
                if params.right_size().is_some_and(|r| r < n as u64) {
                    certified_graph(n, t, eps)?
                } else {
                    BipartiteGraph::identity(n)
                }
            }
        };
        Self::from_graph(n_raw, t, graph)
    }

    /// Wraps an existing graph; its first `n_raw` left vertices are used.
    pub fn from_graph(n_raw: usize, t: usize, graph: BipartiteGraph) -> Result<Self, SketchError> {
        if t == 0 || t > n_raw.max(1) {
            return Err(SketchError::InvalidSparsity { t, n: n_raw });
        }
        if graph.left() < n_raw {
            return Err(SketchError::GraphTooSmall {
                left: graph.left(),
                needed: n_raw,
            });
        }
        let bits = ceil_log2(n_raw as u64 + 1).max(1) as usize;
        let rows = graph.right() as u128 * bits as u128;
        if usize::try_from(rows).is_err() {
            return Err(SketchError::TooManyRows { rows });
        }
        Ok(Self {
            n_raw,
            n: (1 << bits) - 1,
            t,
            bits,
            graph,
        })
    }

    /// Signal length accepted by [`apply`](Self::apply).
    pub fn len(&self) -> usize {
        self.n_raw
    }

    pub fn is_empty(&self) -> bool {
        self.n_raw == 0
    }

    /// Padded length `2^l - 1`.
    pub fn padded_len(&self) -> usize {
        self.n
    }

    pub fn sparsity(&self) -> usize {
        self.t
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn blocks(&self) -> u64 {
        self.graph.right()
    }

    pub fn rows(&self) -> usize {
        self.graph.right() as usize * self.bits
    }

    pub fn degree(&self) -> usize {
        self.graph.degree()
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    /// Most iterations [`recover`](Self::recover) will run: `ceil(log 2t)`.
    pub fn max_iterations(&self) -> usize {
        ceil_log2(2 * self.t as u64) as usize
    }

    /// Row indices of the ones in column `c` (0-based), increasing.
    pub fn column_rows(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        self.graph
            .neighbors(c)
            .iter()
            .flat_map(move |&r| bit_rows(c + 1, bits).map(move |k| r as usize * bits + k))
    }

    fn measure_vec<R: Ring>(&self, ring: &R, x: &SparseVec<R::Elem>) -> SparseVec<R::Elem> {
        let pairs = x
            .iter()
            .flat_map(|(c, v)| self.column_rows(c).map(move |row| (row, v.clone())))
            .collect();
        SparseVec::from_accumulated(ring, self.rows(), pairs)
    }

    fn check_len(&self, got: usize) -> Result<(), SketchError> {
        if got != self.n_raw {
            return Err(SketchError::LengthMismatch {
                expected: self.n_raw,
                got,
            });
        }
        Ok(())
    }

    fn check_shape<E>(&self, z: &Measurement<E>) -> Result<(), SketchError> {
        if z.blocks != self.blocks() || z.bits != self.bits {
            return Err(SketchError::ShapeMismatch {
                blocks: self.blocks(),
                bits: self.bits,
                got_blocks: z.blocks,
                got_bits: z.bits,
            });
        }
        Ok(())
    }

    /// `Hx` using only additions: each nonzero of `x` is added into the
    /// set-bit rows of every block it is adjacent to.
    pub fn apply<R: Ring>(
        &self,
        ring: &R,
        x: &SparseVec<R::Elem>,
    ) -> Result<Measurement<R::Elem>, SketchError> {
        self.check_len(x.len())?;
        Ok(Measurement {
            blocks: self.blocks(),
            bits: self.bits,
            values: self.measure_vec(ring, x),
        })
    }

    /// `HM`, column by column.
    pub fn apply_mat<R: Ring>(
        &self,
        ring: &R,
        m: &SparseMat<R::Elem>,
    ) -> Result<SparseMat<R::Elem>, SketchError> {
        self.check_len(m.rows())?;
        let columns = m
            .columns()
            .par_iter()
            .map(|col| self.measure_vec(ring, col))
            .collect();
        Ok(SparseMat::from_columns(self.rows(), columns)?)
    }

    /// `z - Hy`.
    pub fn subtract<R: Ring>(
        &self,
        ring: &R,
        z: &Measurement<R::Elem>,
        y: &SparseVec<R::Elem>,
    ) -> Result<Measurement<R::Elem>, SketchError> {
        self.check_shape(z)?;
        let hy = self.apply(ring, y)?;
        Ok(Measurement {
            blocks: z.blocks,
            bits: z.bits,
            values: z.values.sub(ring, &hy.values)?,
        })
    }

    /// One halving step.
    ///
    /// A block whose nonzero entries all equal `v` names the coordinate `j`
    /// spelled by its support; `y_j = v` is kept when `(j, v)` is named by
    /// more than `d/2` blocks. Names outside `1..=n_raw` are discarded, as
    /// are blocks with mixed values.
    pub fn reduce<R: Ring>(
        &self,
        _ring: &R,
        z: &Measurement<R::Elem>,
    ) -> Result<SparseVec<R::Elem>, SketchError> {
        self.check_shape(z)?;
        let mut votes: HashMap<(usize, &R::Elem), usize> = HashMap::new();
        for (_, entries) in z.nonzero_blocks() {
            let v = entries[0].1;
            if entries.iter().any(|(_, w)| *w != v) {
                continue;
            }
            let j: usize = entries
                .iter()
                .map(|(k, _)| 1usize << (self.bits - 1 - k))
                .sum();
            if (1..=self.n_raw).contains(&j) {
                *votes.entry((j - 1, v)).or_default() += 1;
            }
        }
        let d = self.degree();
        let mut winners: Vec<(usize, usize, &R::Elem)> = votes
            .into_iter()
            .filter(|(_, count)| 2 * count > d)
            .map(|((c, v), count)| (c, count, v))
            .collect();
        // one value per coordinate: most votes, then smallest value
        winners.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
        winners.dedup_by_key(|w| w.0);
        let entries = winners
            .into_iter()
            .map(|(c, _, v)| (c, v.clone()))
            .collect();
        Ok(SparseVec::from_sorted(self.n_raw, entries))
    }

    /// Iterated halving: at most `ceil(log 2t)` rounds of `y = reduce(z)`,
    /// `z -= Hy`. Gives up and returns zero when some `y` has more than
    /// `3t/2` nonzeros. Stops early once the residual is zero.
    pub fn recover<R: Ring>(
        &self,
        ring: &R,
        z0: &Measurement<R::Elem>,
    ) -> Result<Recovery<R::Elem>, SketchError> {
        self.check_shape(z0)?;
        let mut z = z0.clone();
        let mut x = SparseVec::zeros(self.n_raw);
        let mut iterations = 0;
        while iterations < self.max_iterations() && !z.is_zero() {
            let y = self.reduce(ring, &z)?;
            iterations += 1;
            if 2 * y.nnz() > 3 * self.t {
                return Ok(Recovery {
                    x: SparseVec::zeros(self.n_raw),
                    ok: false,
                    iterations,
                    consistent: false,
                });
            }
            z = self.subtract(ring, &z, &y)?;
            x = x.add(ring, &y)?;
        }
        Ok(Recovery {
            x,
            ok: true,
            iterations,
            consistent: z.is_zero(),
        })
    }

    /// `H` as an explicit `rows x n_raw` matrix, built as the row tensor of
    /// the adjacency and bit matrices. For cross-checking only.
    pub fn explicit<R: Ring>(&self, ring: &R) -> Result<SparseMat<R::Elem>, SketchError> {
        if self.n_raw > EXPLICIT_MAX_LEN {
            return Err(SketchError::TooLargeToMaterialize(self.n_raw));
        }
        let adjacency = self.graph.adjacency_matrix(ring);
        let adjacency =
            crate::sparse::restrict_columns(&adjacency, &(0..self.n).collect::<Vec<_>>())?;
        let h = row_tensor(ring, &adjacency, &bit_matrix(ring, self.n)?)?;
        Ok(crate::sparse::restrict_columns(
            &h,
            &(0..self.n_raw).collect::<Vec<_>>(),
        )?)
    }
}

fn certified_graph(n: usize, t: usize, eps: Ratio<u64>) -> Result<BipartiteGraph, SketchError> {
    let params = certified_pv_params(n, t, eps);
    let g = build_pv_expander(&params)?;
    let cert = certify_pairwise(&g, t, eps);
    if !cert.holds {
        return Err(ExpanderError::InvalidParams(format!(
            "pairwise certificate failed for {params:?} (overlap {})",
            cert.max_overlap
        ))
        .into());
    }
    Ok(g)
}
