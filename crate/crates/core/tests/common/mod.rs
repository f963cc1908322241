#![allow(dead_code)]

use std::sync::OnceLock;

use num_rational::Ratio;
use osmm_core::algebra::Ring;
use osmm_core::expander::{
    build_pv_expander, build_random_expander, verify_expansion, BipartiteGraph, PvParams,
};
use osmm_core::sketch::MeasurementMatrix;
use osmm_core::sparse::{SparseMat, SparseVec};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Each entry independently nonzero with probability `density`.
pub fn random_mat<R: Ring>(
    ring: &R,
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
) -> SparseMat<R::Elem> {
    let mut triples = Vec::new();
    for j in 0..cols {
        for i in 0..rows {
            if rng.gen_bool(density) {
                triples.push((i, j, ring.sample_nonzero(rng)));
            }
        }
    }
    SparseMat::from_triplets(ring, rows, cols, triples).unwrap()
}

/// Exactly `k` nonzeros at uniformly chosen positions.
pub fn random_sparse_vec<R: Ring>(
    ring: &R,
    rng: &mut ChaCha8Rng,
    len: usize,
    k: usize,
) -> SparseVec<R::Elem> {
    let entries = index::sample(rng, len, k)
        .into_iter()
        .map(|i| (i, ring.sample_nonzero(rng)))
        .collect();
    SparseVec::try_new(ring, len, entries).unwrap()
}

/// Row-major dense product by the schoolbook formula.
pub fn schoolbook<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
) -> SparseMat<R::Elem> {
    let da = a.to_dense(ring);
    let db = b.to_dense(ring);
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![vec![ring.zero(); p]; m];
    for i in 0..m {
        for j in 0..p {
            let mut acc = ring.zero();
            for k in 0..n {
                acc = ring.add(&acc, &ring.mul(&da[i][k], &db[k][j]));
            }
            out[i][j] = acc;
        }
    }
    if m == 0 {
        return SparseMat::zeros(0, p);
    }
    SparseMat::from_dense(ring, &out)
}

/// `nnz(AB) <= t * nnz(B)` with `t` the largest column sparsity of `A`.
pub fn assert_input_sparse_bound<E: Clone + Send + Sync>(
    a: &SparseMat<E>,
    b: &SparseMat<E>,
    c: &SparseMat<E>,
) {
    assert!(
        c.nnz() <= a.max_col_nnz() * b.nnz(),
        "nnz(AB)={} exceeds {} * {}",
        c.nnz(),
        a.max_col_nnz(),
        b.nnz()
    );
}

/// A graph that passed the exhaustive `(t, 1/12)` check, for `t` in
/// `{1, 2, 4, 8}`, wrapped as a measurement matrix over all its left vertices.
/// The check runs once per test binary.
pub fn verified_sketch(t: usize) -> MeasurementMatrix {
    static CACHE: [OnceLock<MeasurementMatrix>; 4] = [const { OnceLock::new() }; 4];
    let slot = match t {
        1 => 0,
        2 => 1,
        4 => 2,
        8 => 3,
        _ => panic!("no verified fixture for t={t}"),
    };
    CACHE[slot]
        .get_or_init(|| {
            let graph = verified_graph(t);
            let check = verify_expansion(&graph, t, Ratio::new(1, 12), 20_000_000).unwrap();
            assert!(check.ok, "fixture for t={t} fails on {:?}", check.witness);
            MeasurementMatrix::from_graph(graph.left(), t, graph).unwrap()
        })
        .clone()
}

fn verified_graph(t: usize) -> BipartiteGraph {
    let pv = |left, q| {
        build_pv_expander(&PvParams {
            left,
            q,
            poly_len: 2,
            m: 1,
            h: 2,
        })
        .unwrap()
    };
    match t {
        1 | 2 => pv(63, 8),
        4 => pv(63, 32),
        8 => build_random_expander(31, 16, 2048, 5).unwrap(),
        _ => panic!("no verified fixture for t={t}"),
    }
}
