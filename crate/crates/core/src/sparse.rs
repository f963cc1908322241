//! Column-major sparse vectors and matrices over a [`Ring`], with
//! input-sparse (Gustavson) multiplication and a dense cubic fallback.
//!
//! Indices are 0-based here; the text formats in [`crate::io`] are 1-based.
//! No value equal to the ring's zero is ever stored.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::Ring;

/// Default ceiling on the number of entries any densified operand may have.
pub const DEFAULT_DENSE_BUDGET: usize = 1 << 26;

/// Dense scratch accumulators are used for columns up to this many rows.
const SPA_MAX_ROWS: usize = 1 << 21;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparseError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("duplicate entry at index {0}")]
    DuplicateEntry(usize),
    #[error("explicit zero stored at index {0}")]
    ExplicitZero(usize),
    #[error("indices not strictly increasing at position {0}")]
    Unsorted(usize),
    #[error("value at index {0} is not a member of the ring")]
    ForeignValue(usize),
    #[error("cannot pad a {rows}x{cols} operand into {n}x{n}")]
    PadTooSmall { rows: usize, cols: usize, n: usize },
}

/// A vector stored as its nonzero `(index, value)` pairs, strictly increasing by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseVec<E> {
    len: usize,
    entries: Vec<(usize, E)>,
}

impl<E: Clone> SparseVec<E> {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            entries: Vec::new(),
        }
    }

    /// Validating constructor: entries may come in any order, but duplicate
    /// indices, out-of-range indices and explicit zeros are rejected.
    pub fn try_new<R: Ring<Elem = E>>(
        ring: &R,
        len: usize,
        mut entries: Vec<(usize, E)>,
    ) -> Result<Self, SparseError> {
        entries.sort_by_key(|(i, _)| *i);
        for (pos, (i, v)) in entries.iter().enumerate() {
            if *i >= len {
                return Err(SparseError::IndexOutOfRange {
                    index: *i,
                    bound: len,
                });
            }
            if pos > 0 && entries[pos - 1].0 == *i {
                return Err(SparseError::DuplicateEntry(*i));
            }
            if ring.is_zero(v) {
                return Err(SparseError::ExplicitZero(*i));
            }
            if !ring.contains(v) {
                return Err(SparseError::ForeignValue(*i));
            }
        }
        Ok(Self { len, entries })
    }

    /// Sums values that share an index and drops the resulting zeros.
    pub fn from_accumulated<R: Ring<Elem = E>>(
        ring: &R,
        len: usize,
        mut pairs: Vec<(usize, E)>,
    ) -> Self {
        pairs.sort_by_key(|(i, _)| *i);
        let mut entries: Vec<(usize, E)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            debug_assert!(i < len);
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc = ring.add(acc, &v),
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|(_, v)| !ring.is_zero(v));
        Self { len, entries }
    }

    /// Trusted constructor for entries already sorted, unique and nonzero.
    pub(crate) fn from_sorted(len: usize, entries: Vec<(usize, E)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.last().is_none_or(|(i, _)| *i < len));
        Self { len, entries }
    }

    pub fn unit<R: Ring<Elem = E>>(ring: &R, len: usize, index: usize, value: E) -> Self {
        assert!(index < len);
        if ring.is_zero(&value) {
            Self::zeros(len)
        } else {
            Self::from_sorted(len, vec![(index, value)])
        }
    }

    /// Dimension of the vector.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, E)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(usize, E)> {
        self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &E)> + '_ {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn get(&self, index: usize) -> Option<&E> {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .ok()
            .map(|pos| &self.entries[pos].1)
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|(i, _)| *i).collect()
    }

    /// Same entries, viewed in a space of a different dimension.
    pub fn with_len(mut self, len: usize) -> Self {
        self.entries.retain(|(i, _)| *i < len);
        self.len = len;
        self
    }

    pub fn add<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Result<Self, SparseError> {
        self.merge(ring, other, |r, a, b| r.add(a, b), |_, b| b.clone())
    }

    pub fn sub<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Result<Self, SparseError> {
        self.merge(ring, other, |r, a, b| r.sub(a, b), |r, b| r.neg(b))
    }

    fn merge<R: Ring<Elem = E>>(
        &self,
        ring: &R,
        other: &Self,
        both: impl Fn(&R, &E, &E) -> E,
        right_only: impl Fn(&R, &E) -> E,
    ) -> Result<Self, SparseError> {
        if self.len != other.len {
            return Err(SparseError::DimensionMismatch {
                op: "vector merge",
                left: (self.len, 1),
                right: (other.len, 1),
            });
        }
        let mut out = Vec::with_capacity(self.nnz() + other.nnz());
        let (mut p, mut q) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while p < a.len() || q < b.len() {
            let take_left = q == b.len() || (p < a.len() && a[p].0 < b[q].0);
            let take_right = p == a.len() || (q < b.len() && b[q].0 < a[p].0);
            if take_left {
                out.push(a[p].clone());
                p += 1;
            } else if take_right {
                out.push((b[q].0, right_only(ring, &b[q].1)));
                q += 1;
            } else {
                let v = both(ring, &a[p].1, &b[q].1);
                if !ring.is_zero(&v) {
                    out.push((a[p].0, v));
                }
                p += 1;
                q += 1;
            }
        }
        Ok(Self::from_sorted(self.len, out))
    }

    /// Structural audit: sorted, in range, no stored zeros.
    pub fn check_invariants<R: Ring<Elem = E>>(&self, ring: &R) -> Result<(), SparseError> {
        for (pos, (i, v)) in self.entries.iter().enumerate() {
            if *i >= self.len {
                return Err(SparseError::IndexOutOfRange {
                    index: *i,
                    bound: self.len,
                });
            }
            if pos > 0 && self.entries[pos - 1].0 >= *i {
                return Err(SparseError::Unsorted(pos));
            }
            if ring.is_zero(v) {
                return Err(SparseError::ExplicitZero(*i));
            }
        }
        Ok(())
    }
}

/// Column-major sparse matrix: one [`SparseVec`] of length `rows` per column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseMat<E> {
    rows: usize,
    columns: Vec<SparseVec<E>>,
}

impl<E: Clone + Send + Sync> SparseMat<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            columns: vec![SparseVec::zeros(rows); cols],
        }
    }

    pub fn identity<R: Ring<Elem = E>>(ring: &R, n: usize) -> Self {
        Self {
            rows: n,
            columns: (0..n)
                .map(|j| SparseVec::unit(ring, n, j, ring.one()))
                .collect(),
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<SparseVec<E>>) -> Result<Self, SparseError> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(SparseError::DimensionMismatch {
                op: "from_columns",
                left: (rows, columns.len()),
                right: (bad.len(), 1),
            });
        }
        Ok(Self { rows, columns })
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicates and
    /// explicit zeros are rejected.
    pub fn from_triplets<R: Ring<Elem = E>>(
        ring: &R,
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, E)>,
    ) -> Result<Self, SparseError> {
        let mut per_col: Vec<Vec<(usize, E)>> = vec![Vec::new(); cols];
        for (i, j, v) in triplets {
            if j >= cols {
                return Err(SparseError::IndexOutOfRange {
                    index: j,
                    bound: cols,
                });
            }
            per_col[j].push((i, v));
        }
        let columns = per_col
            .into_iter()
            .map(|entries| SparseVec::try_new(ring, rows, entries))
            .collect::<Result<_, _>>()?;
        Ok(Self { rows, columns })
    }

    /// Row-major dense input, zeros skipped. Mostly for tests.
    pub fn from_dense<R: Ring<Elem = E>>(ring: &R, dense: &[Vec<E>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let columns = (0..cols)
            .map(|j| {
                let entries = (0..rows)
                    .filter(|&i| !ring.is_zero(&dense[i][j]))
                    .map(|i| (i, dense[i][j].clone()))
                    .collect();
                SparseVec::from_sorted(rows, entries)
            })
            .collect();
        Self { rows, columns }
    }

    /// Row-major dense copy.
    pub fn to_dense<R: Ring<Elem = E>>(&self, ring: &R) -> Vec<Vec<E>> {
        let mut out = vec![vec![ring.zero(); self.cols()]; self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col.iter() {
                out[i][j] = v.clone();
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols())
    }

    pub fn col(&self, j: usize) -> &SparseVec<E> {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVec<E>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<SparseVec<E>> {
        self.columns
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseVec::nnz).sum()
    }

    pub fn max_col_nnz(&self) -> usize {
        self.columns.iter().map(SparseVec::nnz).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&E> {
        self.columns.get(j).and_then(|c| c.get(i))
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &E)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |(i, v)| (i, j, v)))
    }

    pub fn add<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Result<Self, SparseError> {
        self.zip_columns(other, "add", |a, b| a.add(ring, b))
    }

    pub fn sub<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Result<Self, SparseError> {
        self.zip_columns(other, "sub", |a, b| a.sub(ring, b))
    }

    fn zip_columns(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(&SparseVec<E>, &SparseVec<E>) -> Result<SparseVec<E>, SparseError>,
    ) -> Result<Self, SparseError> {
        if self.shape() != other.shape() {
            return Err(SparseError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            rows: self.rows,
            columns,
        })
    }

    pub fn check_invariants<R: Ring<Elem = E>>(&self, ring: &R) -> Result<(), SparseError> {
        for col in &self.columns {
            if col.len() != self.rows {
                return Err(SparseError::DimensionMismatch {
                    op: "audit",
                    left: self.shape(),
                    right: (col.len(), 1),
                });
            }
            col.check_invariants(ring)?;
        }
        Ok(())
    }
}

fn check_product_shapes<E>(
    op: &'static str,
    a: &SparseMat<E>,
    b: &SparseMat<E>,
) -> Result<(), SparseError>
where
    E: Clone + Send + Sync,
{
    if a.cols() != b.rows() {
        return Err(SparseError::DimensionMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Input-sparse product as a sum of outer products, accumulated column by
/// column of the result. Performs exactly `sum_k nnz(A[:,k]) * nnz(B[k,:])`
/// multiplications, so `nnz(AB) <= t * nnz(B)` for `t` the largest column
/// sparsity of `A`.
pub fn sparse_mm<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
) -> Result<SparseMat<R::Elem>, SparseError> {
    check_product_shapes("sparse_mm", a, b)?;
    let m = a.rows();
    let columns: Vec<SparseVec<R::Elem>> = if m <= SPA_MAX_ROWS {
        b.columns
            .par_iter()
            .map_init(
                || (vec![None; m], Vec::new()),
                |(spa, touched), bcol| spa_column(ring, a, bcol, spa, touched),
            )
            .collect()
    } else {
        b.columns
            .par_iter()
            .map(|bcol| {
                let mut pairs = Vec::new();
                for (k, bv) in bcol.iter() {
                    for (i, av) in a.col(k).iter() {
                        pairs.push((i, ring.mul(av, bv)));
                    }
                }
                SparseVec::from_accumulated(ring, m, pairs)
            })
            .collect()
    };
    Ok(SparseMat { rows: m, columns })
}

fn spa_column<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    bcol: &SparseVec<R::Elem>,
    spa: &mut [Option<R::Elem>],
    touched: &mut Vec<usize>,
) -> SparseVec<R::Elem> {
    touched.clear();
    for (k, bv) in bcol.iter() {
        for (i, av) in a.col(k).iter() {
            let p = ring.mul(av, bv);
            match &mut spa[i] {
                Some(acc) => *acc = ring.add(acc, &p),
                slot @ None => {
                    *slot = Some(p);
                    touched.push(i);
                }
            }
        }
    }
    touched.sort_unstable();
    let mut entries = Vec::with_capacity(touched.len());
    for &i in touched.iter() {
        let v = spa[i].take().expect("touched slots are filled");
        if !ring.is_zero(&v) {
            entries.push((i, v));
        }
    }
    SparseVec::from_sorted(a.rows(), entries)
}

/// Cubic product on densified operands: exactly `m * n * p` multiplications
/// and additions. Falls back to [`sparse_mm`] when an operand would exceed
/// `budget` dense entries.
pub fn dense_mm_with_budget<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    budget: usize,
) -> Result<SparseMat<R::Elem>, SparseError> {
    check_product_shapes("dense_mm", a, b)?;
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    let fits = |r: usize, c: usize| r.checked_mul(c).is_some_and(|s| s <= budget);
    if !(fits(m, n) && fits(n, p) && fits(m, p)) {
        log::debug!("dense_mm: {m}x{n}x{p} exceeds budget {budget}, using sparse_mm");
        return sparse_mm(ring, a, b);
    }
    let zero = ring.zero();
    // column-major dense copy of A
    let mut dense_a = vec![zero.clone(); m * n];
    for (k, col) in a.columns.iter().enumerate() {
        for (i, v) in col.iter() {
            dense_a[k * m + i] = v.clone();
        }
    }
    let columns = b
        .columns
        .par_iter()
        .map(|bcol| {
            let mut dense_b = vec![zero.clone(); n];
            for (k, v) in bcol.iter() {
                dense_b[k] = v.clone();
            }
            let mut acc = vec![zero.clone(); m];
            for (k, bv) in dense_b.iter().enumerate() {
                let acol = &dense_a[k * m..(k + 1) * m];
                for (c, av) in acc.iter_mut().zip(acol) {
                    *c = ring.add(c, &ring.mul(av, bv));
                }
            }
            let entries = acc
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !ring.is_zero(v))
                .collect();
            SparseVec::from_sorted(m, entries)
        })
        .collect();
    Ok(SparseMat { rows: m, columns })
}

pub fn dense_mm<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
) -> Result<SparseMat<R::Elem>, SparseError> {
    dense_mm_with_budget(ring, a, b, DEFAULT_DENSE_BUDGET)
}

pub fn transpose<E: Clone + Send + Sync>(a: &SparseMat<E>) -> SparseMat<E> {
    let mut rows: Vec<Vec<(usize, E)>> = vec![Vec::new(); a.rows()];
    for (j, col) in a.columns.iter().enumerate() {
        for (i, v) in col.iter() {
            rows[i].push((j, v.clone()));
        }
    }
    SparseMat {
        rows: a.cols(),
        columns: rows
            .into_iter()
            .map(|entries| SparseVec::from_sorted(a.cols(), entries))
            .collect(),
    }
}

/// Columns of `b` at the (strictly increasing) positions in `indices`, in that order.
pub fn restrict_columns<E: Clone + Send + Sync>(
    b: &SparseMat<E>,
    indices: &[usize],
) -> Result<SparseMat<E>, SparseError> {
    for (pos, &j) in indices.iter().enumerate() {
        if j >= b.cols() {
            return Err(SparseError::IndexOutOfRange {
                index: j,
                bound: b.cols(),
            });
        }
        if pos > 0 && indices[pos - 1] >= j {
            return Err(SparseError::Unsorted(pos));
        }
    }
    Ok(SparseMat {
        rows: b.rows(),
        columns: indices.iter().map(|&j| b.columns[j].clone()).collect(),
    })
}

/// Embeds `A` (m x n) and `B` (n x p) as the top and left blocks of two
/// n x n matrices, so the product's top-left m x p block is `AB`.
pub fn pad_to_square<E: Clone + Send + Sync>(
    a: &SparseMat<E>,
    b: &SparseMat<E>,
) -> Result<(SparseMat<E>, SparseMat<E>), SparseError> {
    if a.cols() != b.rows() {
        return Err(SparseError::DimensionMismatch {
            op: "pad_to_square",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = a.cols();
    if a.rows() > n || b.cols() > n {
        return Err(SparseError::PadTooSmall {
            rows: a.rows(),
            cols: b.cols(),
            n,
        });
    }
    let a_sq = SparseMat {
        rows: n,
        columns: a.columns.iter().map(|c| c.clone().with_len(n)).collect(),
    };
    let mut b_cols = b.columns.clone();
    b_cols.resize(n, SparseVec::zeros(n));
    Ok((
        a_sq,
        SparseMat {
            rows: n,
            columns: b_cols,
        },
    ))
}

/// The top-left `rows x cols` block.
pub fn top_left<E: Clone + Send + Sync>(
    c: &SparseMat<E>,
    rows: usize,
    cols: usize,
) -> SparseMat<E> {
    SparseMat {
        rows,
        columns: c.columns[..cols.min(c.cols())]
            .iter()
            .map(|col| col.clone().with_len(rows))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityStats {
    pub nnz: usize,
    pub max_col_nnz: usize,
    pub col_nnz: Vec<usize>,
}

pub fn sparsity_stats<E: Clone + Send + Sync>(m: &SparseMat<E>) -> SparsityStats {
    let col_nnz: Vec<usize> = m.columns.iter().map(SparseVec::nnz).collect();
    SparsityStats {
        nnz: col_nnz.iter().sum(),
        max_col_nnz: col_nnz.iter().copied().max().unwrap_or(0),
        col_nnz,
    }
}
