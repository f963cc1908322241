//! Unbalanced bipartite expanders.
//!
//! The deterministic construction is the Parvaresh–Vardy style graph: left
//! vertices are polynomials `f` of degree `< n` over `F_q`, and `f` is joined
//! to `(y, f_0(y), ..., f_{m-1}(y))` for every `y` in `F_q`, where
//! `f_i = f^(h^i) mod p` for a fixed irreducible `p` of degree `n`.
//!
//! Alongside it: a seeded random d-left-regular graph, the trivial identity
//! graph, an exhaustive expansion checker and a cheap pairwise certificate.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{poly, AlgebraError, BinaryField, GfPoly, Ring};
use crate::sparse::{SparseMat, SparseVec};

/// Exhaustive checks refuse to enumerate more subsets than this by default.
pub const DEFAULT_VERIFY_BUDGET: u64 = 10_000_000;

/// Graphs with more edges than this are not materialized.
pub const DEFAULT_EDGE_BUDGET: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpanderError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{q}^{n} polynomials cannot label {left} left vertices")]
    TooFewPolynomials { q: u64, n: usize, left: usize },
    #[error("graph would have {edges} edges, over the budget of {budget}")]
    EdgeBudget { edges: u128, budget: u64 },
    #[error("left degree {degree} exceeds right size {right}")]
    DegreeExceedsRight { degree: usize, right: u64 },
    #[error("exhaustive check needs {needed} subsets, over the budget of {budget}")]
    VerifyBudget { needed: u128, budget: u64 },
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Parameters of the construction as derived from `(N, K, eps, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpanderParams {
    /// `N`, number of left vertices.
    pub left: usize,
    /// `K`, after clamping to at least 2.
    pub sparsity: usize,
    pub eps: Ratio<u64>,
    pub alpha: Ratio<u64>,
    /// `n = ceil(log N)`, the number of coefficients of a left polynomial.
    pub poly_len: usize,
    /// `k = log K`.
    pub log_sparsity: f64,
    pub h: u64,
    pub m: usize,
    pub q: u64,
    /// Whether any of the clamps `K >= 2`, `n >= 1`, `h >= 2`, `m >= 1`, `q >= 2` fired.
    pub clamped: bool,
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// Guards floor/ceil against representation error when the argument is an
// exact integer computed in floating point.
const ROUNDING_SLACK: f64 = 1e-9;

impl ExpanderParams {
    /// Evaluates `n = ceil(log N)`, `k = log K`, `h = ceil((2nk/eps)^(1/alpha))`,
    /// `m = ceil(k / log h)` and `q = 2^floor(log h^(1+alpha))`, logs base 2.
    pub fn derive(
        left: usize,
        sparsity: usize,
        eps: Ratio<u64>,
        alpha: Ratio<u64>,
    ) -> Result<Self, ExpanderError> {
        if sparsity == 0 || sparsity > left {
            return Err(ExpanderError::InvalidParams(format!(
                "need 1 <= K <= N, got K={sparsity}, N={left}"
            )));
        }
        if *eps.numer() == 0 || eps >= Ratio::from_integer(1) {
            return Err(ExpanderError::InvalidParams(format!(
                "eps={eps} outside (0,1)"
            )));
        }
        if *alpha.numer() == 0 {
            return Err(ExpanderError::InvalidParams(
                "alpha must be positive".into(),
            ));
        }
        let mut clamped = false;
        let mut poly_len = ceil_log2(left as u64) as usize;
        if poly_len == 0 {
            poly_len = 1;
            clamped = true;
        }
        let k_eff = if sparsity < 2 {
            clamped = true;
            2
        } else {
            sparsity
        };
        let log_sparsity = (k_eff as f64).log2();
        let base = 2.0 * poly_len as f64 * log_sparsity / ratio_f64(eps);
        let alpha_f = ratio_f64(alpha);
        let mut h = (base.powf(1.0 / alpha_f) - ROUNDING_SLACK).ceil();
        if h < 2.0 {
            h = 2.0;
            clamped = true;
        }
        if h >= u64::MAX as f64 {
            return Err(ExpanderError::InvalidParams(format!("h={h} overflows")));
        }
        let h = h as u64;
        let log_h = (h as f64).log2();
        let mut m = (log_sparsity / log_h - ROUNDING_SLACK).ceil() as usize;
        if m == 0 {
            m = 1;
            clamped = true;
        }
        let q_exp = ((1.0 + alpha_f) * log_h + ROUNDING_SLACK).floor() as u32;
        let q_exp = if q_exp == 0 {
            clamped = true;
            1
        } else {
            q_exp
        };
        if q_exp > 62 {
            return Err(ExpanderError::InvalidParams(format!(
                "q=2^{q_exp} is too large"
            )));
        }
        Ok(Self {
            left,
            sparsity: k_eff,
            eps,
            alpha,
            poly_len,
            log_sparsity,
            h,
            m,
            q: 1 << q_exp,
            clamped,
        })
    }

    pub fn degree(&self) -> u64 {
        self.q
    }

    pub fn right_size(&self) -> Option<u64> {
        self.pv().right_size()
    }

    pub fn pv(&self) -> PvParams {
        PvParams {
            left: self.left,
            q: self.q,
            poly_len: self.poly_len,
            m: self.m,
            h: self.h,
        }
    }
}

/// Inputs to [`build_pv_expander`], either derived or chosen by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PvParams {
    pub left: usize,
    /// Field size; a power of two, also the left degree.
    pub q: u64,
    /// `n`: left vertices are polynomials with `n` coefficients.
    pub poly_len: usize,
    /// Number of powered evaluations per right vertex.
    pub m: usize,
    /// Power step: `f_{i+1} = f_i^h mod p`.
    pub h: u64,
}

impl PvParams {
    pub fn right_size(&self) -> Option<u64> {
        self.q.checked_pow(self.m as u32 + 1)
    }

    pub fn validate(&self) -> Result<(), ExpanderError> {
        if self.q < 2 || !self.q.is_power_of_two() {
            return Err(ExpanderError::InvalidParams(format!(
                "q={} must be a power of two >= 2",
                self.q
            )));
        }
        if self.q > 1 << 32 {
            return Err(ExpanderError::InvalidParams(format!(
                "q={} is too large",
                self.q
            )));
        }
        if self.poly_len == 0 || self.m == 0 || self.h == 0 {
            return Err(ExpanderError::InvalidParams(
                "n, m and h must be positive".into(),
            ));
        }
        let labels = (self.q as u128).checked_pow(self.poly_len as u32);
        if labels.is_some_and(|l| l < self.left as u128) {
            return Err(ExpanderError::TooFewPolynomials {
                q: self.q,
                n: self.poly_len,
                left: self.left,
            });
        }
        if self.right_size().is_none() {
            return Err(ExpanderError::InvalidParams(format!(
                "right side q^(m+1) = {}^{} overflows",
                self.q,
                self.m + 1
            )));
        }
        Ok(())
    }
}

/// A d-left-regular bipartite graph stored as sorted left adjacency lists.
/// Right vertices are `0..right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BipartiteGraph {
    left: usize,
    right: u64,
    degree: usize,
    neighbors: Vec<u64>,
}

impl BipartiteGraph {
    /// Validates regularity, range and distinctness; sorts each list.
    pub fn from_adjacency(right: u64, lists: Vec<Vec<u64>>) -> Result<Self, ExpanderError> {
        let left = lists.len();
        let degree = lists.first().map_or(0, Vec::len);
        let mut neighbors = Vec::with_capacity(left * degree);
        for (l, mut list) in lists.into_iter().enumerate() {
            if list.len() != degree {
                return Err(ExpanderError::Malformed(format!(
                    "left vertex {} has degree {}, expected {degree}",
                    l + 1,
                    list.len()
                )));
            }
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(ExpanderError::Malformed(format!(
                    "left vertex {} has a repeated neighbor",
                    l + 1
                )));
            }
            if list.last().is_some_and(|&r| r >= right) {
                return Err(ExpanderError::Malformed(format!(
                    "left vertex {} has a neighbor outside 1..={right}",
                    l + 1
                )));
            }
            neighbors.extend(list);
        }
        Ok(Self {
            left,
            right,
            degree,
            neighbors,
        })
    }

    /// Left vertex `i` joined to right vertex `i` only: a `(K, 0)`-expander
    /// with `d = 1` for every `K`.
    pub fn identity(left: usize) -> Self {
        Self {
            left,
            right: left as u64,
            degree: 1,
            neighbors: (0..left as u64).collect(),
        }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> u64 {
        self.right
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, l: usize) -> &[u64] {
        &self.neighbors[l * self.degree..(l + 1) * self.degree]
    }

    pub fn adjacency(&self) -> impl Iterator<Item = &[u64]> + '_ {
        (0..self.left).map(move |l| self.neighbors(l))
    }

    /// Stable digest of the adjacency structure.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// The `right x left` 0/1 adjacency matrix. Needs `right` to fit in memory
    /// as a row count.
    pub fn adjacency_matrix<R: Ring>(&self, ring: &R) -> SparseMat<R::Elem> {
        let rows = self.right as usize;
        let columns = self
            .adjacency()
            .map(|nbrs| {
                let entries = nbrs.iter().map(|&r| (r as usize, ring.one())).collect();
                SparseVec::try_new(ring, rows, entries).expect("adjacency lists are valid")
            })
            .collect();
        SparseMat::from_columns(rows, columns).expect("columns have matching length")
    }

    /// Left neighbors of every right vertex that has any, keyed by dense ids.
    fn right_incidence(&self) -> (Vec<u64>, Vec<Vec<usize>>) {
        let mut ids: Vec<u64> = self.neighbors.clone();
        ids.sort_unstable();
        ids.dedup();
        let mut incidence = vec![Vec::new(); ids.len()];
        for l in 0..self.left {
            for r in self.neighbors(l) {
                let id = ids.binary_search(r).expect("id present");
                incidence[id].push(l);
            }
        }
        (ids, incidence)
    }

    /// Largest number of right vertices shared by two distinct left vertices.
    pub fn max_pair_overlap(&self) -> usize {
        let (ids, incidence) = self.right_incidence();
        let mut counts = vec![0usize; self.left];
        let mut best = 0;
        for u in 0..self.left {
            for r in self.neighbors(u) {
                let id = ids.binary_search(r).expect("id present");
                for &v in &incidence[id] {
                    if v > u {
                        counts[v] += 1;
                    }
                }
            }
            for c in counts.iter_mut().skip(u + 1) {
                best = best.max(*c);
                *c = 0;
            }
        }
        best
    }
}

/// Builds the Parvaresh–Vardy expander.
///
/// Left vertex `l` (0-based) is the polynomial whose coefficients are the
/// little-endian base-`q` digits of `l`, field elements identified with their
/// bit patterns. The right vertex `(y, e_0, ..., e_{m-1})` is encoded as the
/// big-endian radix-`q` integer with `y` most significant.
pub fn build_pv_expander(params: &PvParams) -> Result<BipartiteGraph, ExpanderError> {
    params.validate()?;
    let edges = params.left as u128 * params.q as u128;
    if edges > DEFAULT_EDGE_BUDGET as u128 {
        return Err(ExpanderError::EdgeBudget {
            edges,
            budget: DEFAULT_EDGE_BUDGET,
        });
    }
    let field = BinaryField::with_degree(params.q.trailing_zeros())?;
    let modulus = poly::find_irreducible(field, params.poly_len);
    let q = params.q;
    let m = params.m;

    let lists: Vec<Vec<u64>> = (0..params.left)
        .into_par_iter()
        .map(|l| {
            let mut digits = Vec::with_capacity(params.poly_len);
            let mut rest = l as u64;
            for _ in 0..params.poly_len {
                digits.push(rest % q);
                rest /= q;
            }
            let mut powers = Vec::with_capacity(m);
            powers.push(GfPoly::new(field, digits));
            for i in 1..m {
                let next = powers[i - 1]
                    .powmod(params.h, &modulus)
                    .expect("modulus is nonzero");
                powers.push(next);
            }
            (0..q)
                .map(|y| powers.iter().fold(y, |acc, f| acc * q + f.eval(y)))
                .collect()
        })
        .collect();

    Ok(BipartiteGraph {
        left: params.left,
        right: params.right_size().expect("validated"),
        degree: q as usize,
        neighbors: lists.into_iter().flatten().collect(),
    })
}

/// Each left vertex picks `degree` distinct right vertices uniformly, from a
/// ChaCha8 stream seeded with `seed`.
pub fn build_random_expander(
    left: usize,
    degree: usize,
    right: u64,
    seed: u64,
) -> Result<BipartiteGraph, ExpanderError> {
    if degree as u64 > right {
        return Err(ExpanderError::DegreeExceedsRight { degree, right });
    }
    let edges = left as u128 * degree as u128;
    if edges > DEFAULT_EDGE_BUDGET as u128 {
        return Err(ExpanderError::EdgeBudget {
            edges,
            budget: DEFAULT_EDGE_BUDGET,
        });
    }
    let right_usize = usize::try_from(right)
        .map_err(|_| ExpanderError::InvalidParams(format!("right size {right} too large")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lists = (0..left)
        .map(|_| {
            index::sample(&mut rng, right_usize, degree)
                .into_iter()
                .map(|r| r as u64)
                .collect()
        })
        .collect();
    let mut g = BipartiteGraph::from_adjacency(right, lists)?;
    g.degree = degree;
    Ok(g)
}

/// Outcome of an exhaustive expansion check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionCheck {
    pub ok: bool,
    /// First violating set in depth-first lexicographic order, 0-based.
    pub witness: Option<Vec<usize>>,
    pub subsets_checked: u64,
}

/// `sum_{s=1..=k} C(n, s)`, saturating.
pub fn subset_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for s in 1..=k.min(n) {
        binom = binom.saturating_mul((n - s + 1) as u128) / s as u128;
        total = total.saturating_add(binom);
    }
    total
}

fn expands(neighborhood: usize, size: usize, degree: usize, eps: Ratio<u64>) -> bool {
    let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
    den * neighborhood as u128 >= (den - num) * degree as u128 * size as u128
}

/// Checks `|N(S)| >= (1 - eps) d |S|` for every nonempty `S` with `|S| <= k`
/// by enumeration.
pub fn verify_expansion(
    g: &BipartiteGraph,
    k: usize,
    eps: Ratio<u64>,
    budget: u64,
) -> Result<ExpansionCheck, ExpanderError> {
    let k = k.min(g.left);
    let needed = subset_count(g.left, k);
    if needed > budget as u128 {
        return Err(ExpanderError::VerifyBudget { needed, budget });
    }
    let (ids, _) = g.right_incidence();
    let dense: Vec<usize> = g
        .neighbors
        .iter()
        .map(|r| ids.binary_search(r).expect("id present"))
        .collect();

    struct Search<'a> {
        dense: &'a [usize],
        degree: usize,
        left: usize,
        k: usize,
        eps: Ratio<u64>,
        counts: Vec<u32>,
        distinct: usize,
        chosen: Vec<usize>,
        checked: u64,
    }

    impl Search<'_> {
        fn push(&mut self, v: usize) {
            for &r in &self.dense[v * self.degree..(v + 1) * self.degree] {
                if self.counts[r] == 0 {
                    self.distinct += 1;
                }
                self.counts[r] += 1;
            }
            self.chosen.push(v);
        }

        fn pop(&mut self) {
            let v = self.chosen.pop().expect("nonempty");
            for &r in &self.dense[v * self.degree..(v + 1) * self.degree] {
                self.counts[r] -= 1;
                if self.counts[r] == 0 {
                    self.distinct -= 1;
                }
            }
        }

        fn run(&mut self, start: usize) -> bool {
            for v in start..self.left {
                self.push(v);
                self.checked += 1;
                if !expands(self.distinct, self.chosen.len(), self.degree, self.eps) {
                    return true;
                }
                if self.chosen.len() < self.k && self.run(v + 1) {
                    return true;
                }
                self.pop();
            }
            false
        }
    }

    let mut search = Search {
        dense: &dense,
        degree: g.degree,
        left: g.left,
        k,
        eps,
        counts: vec![0; ids.len()],
        distinct: 0,
        chosen: Vec::with_capacity(k),
        checked: 0,
    };
    let failed = k > 0 && search.run(0);
    Ok(ExpansionCheck {
        ok: !failed,
        witness: failed.then(|| search.chosen.clone()),
        subsets_checked: search.checked,
    })
}

/// Sufficient condition for `(k, eps)`-expansion from pairwise overlaps alone.
///
/// By inclusion–exclusion `|N(S)| >= d|S| - lambda * C(|S|, 2)` where `lambda` is
/// the largest common neighborhood of two left vertices; the certificate holds
/// when that bound clears `(1 - eps) d |S|` for every `|S| <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseCertificate {
    pub max_overlap: usize,
    pub holds: bool,
}

pub fn certify_pairwise(g: &BipartiteGraph, k: usize, eps: Ratio<u64>) -> PairwiseCertificate {
    let lambda = if g.left > 1 && k > 1 {
        g.max_pair_overlap()
    } else {
        0
    };
    PairwiseCertificate {
        max_overlap: lambda,
        holds: pairwise_bound_holds(g.degree, lambda, k.min(g.left), eps),
    }
}

fn pairwise_bound_holds(degree: usize, lambda: usize, k: usize, eps: Ratio<u64>) -> bool {
    (1..=k).all(|s| {
        let pairs = s * (s - 1) / 2;
        let lower = (degree * s).checked_sub(lambda * pairs);
        lower.is_some_and(|lower| expands(lower, s, degree, eps))
    })
}

/// Smallest-right-side Reed–Solomon style (`m = 1`) parameters whose pairwise
/// certificate covers `(k, eps)` for `left` vertices.
///
/// Two distinct polynomials with `n` coefficients agree on at most `n - 1`
/// points, so `lambda <= n - 1` and `q >= lambda (k - 1) / (2 eps)` suffices.
pub fn certified_pv_params(left: usize, k: usize, eps: Ratio<u64>) -> PvParams {
    let left = left.max(1);
    let k = k.clamp(1, left);
    let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
    let mut best: Option<PvParams> = None;
    for poly_len in 1..=ceil_log2(left as u64).max(1) as usize {
        let lambda = (poly_len - 1) as u128;
        // d >= lambda (k - 1) den / (2 num)
        let need_degree = (lambda * (k as u128 - 1) * den).div_ceil(2 * num).max(2);
        // q^poly_len >= left
        let mut q: u128 = 2;
        while q < need_degree || q.pow(poly_len as u32) < left as u128 {
            q *= 2;
        }
        if q > 1 << 32 {
            continue;
        }
        let cand = PvParams {
            left,
            q: q as u64,
            poly_len,
            m: 1,
            h: 2,
        };
        if best.is_none_or(|b| cand.q < b.q) {
            best = Some(cand);
        }
    }
    best.expect("poly_len = ceil(log N) always yields a candidate")
}

pub(crate) fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}
