//! Column-wise matrix multiplication verification.
//!
//! Given `A`, `B` and a candidate `C'`, find the columns where `AB` and `C'`
//! differ. A Freivalds-style test: sample a uniform 0/1 matrix `X` with
//! `N = ceil((c + 1) log(mnp))` rows and report the nonzero columns of
//! `((XA)B) - (XC')`. A correct column is never reported; a wrong column is
//! missed with probability at most `2^-N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::Ring;
use crate::sparse::{dense_mm, sparse_mm, SparseError, SparseMat, SparseVec};

/// Seeded verifier settings.
///
/// `X` is drawn from ChaCha8 keyed by `seed` on stream `stream`, one bit per
/// entry in row-major order. Distinct streams give independent matrices from
/// one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifierConfig {
    /// `c`: a wrong column survives with probability at most `(mnp)^-c`.
    pub confidence: u32,
    pub seed: u64,
    pub stream: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            confidence: 2,
            seed: 0,
            stream: 0,
        }
    }
}

impl VerifierConfig {
    pub fn new(confidence: u32, seed: u64) -> Self {
        Self {
            confidence,
            seed,
            stream: 0,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// `ceil((c + 1) log(mnp))`, at least 1.
    pub fn sample_rows(&self, m: usize, n: usize, p: usize) -> usize {
        let size = m as f64 * n as f64 * p as f64;
        if size <= 1.0 {
            return 1;
        }
        let rows = ((self.confidence as f64 + 1.0) * size.log2() - 1e-9).ceil();
        (rows as usize).max(1)
    }

    /// The sampled `X` as `N x m` 0/1 matrix over `ring`.
    pub fn sample_matrix<R: Ring>(&self, ring: &R, rows: usize, m: usize) -> SparseMat<R::Elem> {
        let supports = self.sample_supports(rows, m);
        let columns = supports
            .into_iter()
            .map(|rs| {
                SparseVec::try_new(
                    ring,
                    rows,
                    rs.into_iter().map(|r| (r, ring.one())).collect(),
                )
                .expect("valid support")
            })
            .collect();
        SparseMat::from_columns(rows, columns).expect("consistent rows")
    }

    /// For each column `i` of `X`, the rows holding a one.
    fn sample_supports(&self, rows: usize, m: usize) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        let mut supports = vec![Vec::new(); m];
        for r in 0..rows {
            for support in supports.iter_mut() {
                if rng.gen::<bool>() {
                    support.push(r);
                }
            }
        }
        supports
    }
}

fn check_shapes<E: Clone + Send + Sync>(
    a: &SparseMat<E>,
    b: &SparseMat<E>,
    cp: &SparseMat<E>,
) -> Result<(), SparseError> {
    if a.cols() != b.rows() {
        return Err(SparseError::DimensionMismatch {
            op: "column_wise_mmv",
            left: a.shape(),
            right: b.shape(),
        });
    }
    if cp.shape() != (a.rows(), b.cols()) {
        return Err(SparseError::DimensionMismatch {
            op: "column_wise_mmv",
            left: (a.rows(), b.cols()),
            right: cp.shape(),
        });
    }
    Ok(())
}

fn nonzero_columns<E: Clone + Send + Sync>(d: &SparseMat<E>) -> Vec<usize> {
    (0..d.cols()).filter(|&j| !d.col(j).is_zero()).collect()
}

/// Reference implementation on densified products.
pub fn column_wise_mmv<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cp: &SparseMat<R::Elem>,
    cfg: &VerifierConfig,
) -> Result<Vec<usize>, SparseError> {
    check_shapes(a, b, cp)?;
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    let x = cfg.sample_matrix(ring, cfg.sample_rows(m, n, p), m);
    let xab = dense_mm(ring, &dense_mm(ring, &x, a)?, b)?;
    let xc = dense_mm(ring, &x, cp)?;
    Ok(nonzero_columns(&xab.sub(ring, &xc)?))
}

/// Same output as [`column_wise_mmv`] for the same seed, but `XA` and `XC'`
/// are formed by additions only and `(XA)B` by the sparse product.
pub fn column_wise_mmv_sparse<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cp: &SparseMat<R::Elem>,
    cfg: &VerifierConfig,
) -> Result<Vec<usize>, SparseError> {
    check_shapes(a, b, cp)?;
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    let rows = cfg.sample_rows(m, n, p);
    let supports = cfg.sample_supports(rows, m);
    let xa = binary_left_mul(ring, &supports, rows, a);
    let xab = sparse_mm(ring, &xa, b)?;
    let xc = binary_left_mul(ring, &supports, rows, cp);
    Ok(nonzero_columns(&xab.sub(ring, &xc)?))
}

/// `XM` for 0/1 `X` given by column supports.
fn binary_left_mul<R: Ring>(
    ring: &R,
    supports: &[Vec<usize>],
    rows: usize,
    m: &SparseMat<R::Elem>,
) -> SparseMat<R::Elem> {
    let columns = m
        .columns()
        .par_iter()
        .map(|col| {
            let pairs = col
                .iter()
                .flat_map(|(i, v)| supports[i].iter().map(move |&r| (r, v.clone())))
                .collect();
            SparseVec::from_accumulated(ring, rows, pairs)
        })
        .collect();
    SparseMat::from_columns(rows, columns).expect("consistent rows")
}
