//! Seeded generation of sparse instances with a planted sparse product.
//!
//! Both inputs have at most `ceil(n^delta_in)` nonzeros and the product at
//! most `ceil(n^delta_out)`. Input entries that must not touch the product
//! are parked on inner indices where the other factor is zero.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::Ring;
use crate::sparse::{sparse_mm, SparseError, SparseMat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("unknown planting {0:?} (expected random, rank or boundary)")]
    UnknownPlanting(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// How the product's support is planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Planting {
    /// Random sparse blocks whose product lives in a small rectangle.
    #[default]
    RandomSupport,
    /// A sum of rank-one terms with small supports.
    RankStructured,
    /// A single rank-one product with exactly `t` columns of exactly `t`
    /// nonzeros, `t = floor(sqrt(n^delta_out))`.
    Boundary,
}

impl fmt::Display for Planting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Planting::RandomSupport => "random",
            Planting::RankStructured => "rank",
            Planting::Boundary => "boundary",
        })
    }
}

impl FromStr for Planting {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Planting::RandomSupport),
            "rank" => Ok(Planting::RankStructured),
            "boundary" => Ok(Planting::Boundary),
            _ => Err(InstanceError::UnknownPlanting(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub delta_in: f64,
    pub delta_out: f64,
    pub seed: u64,
    pub planting: Planting,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let ok = |d: f64| (0.0..=2.0).contains(&d);
        if !ok(self.delta_in) || !ok(self.delta_out) {
            return Err(InstanceError::Infeasible(format!(
                "deltas must lie in [0, 2], got {} and {}",
                self.delta_in, self.delta_out
            )));
        }
        if self.delta_out > 2.0 * self.delta_in {
            return Err(InstanceError::Infeasible(format!(
                "delta_out={} exceeds 2 * delta_in={}",
                self.delta_out, self.delta_in
            )));
        }
        if self.n == 0 {
            return Err(InstanceError::Infeasible("n must be positive".into()));
        }
        Ok(())
    }

    /// `ceil(n^delta_in)`, capped at `n^2`.
    pub fn input_budget(&self) -> usize {
        budget(self.n, self.delta_in)
    }

    /// `ceil(n^delta_out)`, capped at `n^2`.
    pub fn output_budget(&self) -> usize {
        budget(self.n, self.delta_out)
    }
}

fn budget(n: usize, delta: f64) -> usize {
    let v = ((n as f64).powf(delta) - 1e-9).ceil() as usize;
    v.clamp(1, n * n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance<E> {
    pub a: SparseMat<E>,
    pub b: SparseMat<E>,
    /// `AB`, by the sparse product.
    pub c: SparseMat<E>,
}

/// `amount` distinct positions of `rows x cols`, as `(row, col)` pairs.
fn sample_cells(
    rng: &mut ChaCha8Rng,
    rows: &[usize],
    cols: &[usize],
    amount: usize,
) -> Vec<(usize, usize)> {
    let total = rows.len() * cols.len();
    index::sample(rng, total, amount.min(total))
        .into_iter()
        .map(|p| (rows[p / cols.len()], cols[p % cols.len()]))
        .collect()
}

fn fill<R: Ring>(
    ring: &R,
    rng: &mut ChaCha8Rng,
    cells: Vec<(usize, usize)>,
) -> Vec<(usize, usize, R::Elem)> {
    cells
        .into_iter()
        .map(|(i, j)| (i, j, ring.sample_nonzero(rng)))
        .collect()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v = index::sample(rng, n, k.min(n)).into_vec();
    v.sort_unstable();
    v
}

pub fn gen_instance<R: Ring>(
    ring: &R,
    spec: &InstanceSpec,
) -> Result<Instance<R::Elem>, InstanceError> {
    spec.validate()?;
    let n = spec.n;
    let input = spec.input_budget();
    let output = spec.output_budget();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let all: Vec<usize> = (0..n).collect();

    let (a_entries, b_entries) = if output >= n * n && spec.planting == Planting::RandomSupport {
        // nothing to plant: any product fits
        let a = sample_cells(&mut rng, &all, &all, input);
        let b = sample_cells(&mut rng, &all, &all, input);
        (fill(ring, &mut rng, a), fill(ring, &mut rng, b))
    } else {
        // inner indices: shared, A only, B only
        let mut inner = all.clone();
        inner.shuffle(&mut rng);
        let (live_a, live_b, shared_len) = match spec.planting {
            Planting::RandomSupport => {
                let rows_len = output.isqrt().max(1);
                let cols_len = (output / rows_len).max(1);
                let live = (input / 2).max(1);
                let shared_len = live.isqrt().clamp(1, n);
                let shared = &inner[..shared_len];
                let rows = random_subset(&mut rng, n, rows_len);
                let cols = random_subset(&mut rng, n, cols_len);
                let a = sample_cells(&mut rng, &rows, shared, live);
                let b: Vec<(usize, usize)> = sample_cells(&mut rng, &cols, shared, live)
                    .into_iter()
                    .map(|(j, k)| (k, j))
                    .collect();
                (a, b, shared_len)
            }
            Planting::RankStructured => {
                // r terms u_r v_r^T with |u_r| = |v_r| = s and r s^2 <= output
                let s = output.isqrt().clamp(1, n);
                let terms = (output / (s * s)).clamp(1, n).min(input / s.max(1)).max(1);
                let s = s.min(input / terms).max(1);
                let mut a = Vec::new();
                let mut b = Vec::new();
                for &k in &inner[..terms] {
                    a.extend(random_subset(&mut rng, n, s).into_iter().map(|i| (i, k)));
                    b.extend(random_subset(&mut rng, n, s).into_iter().map(|j| (k, j)));
                }
                (a, b, terms)
            }
            Planting::Boundary => {
                let t = output.isqrt().clamp(1, n).min(input);
                let k = inner[0];
                let a = random_subset(&mut rng, n, t)
                    .into_iter()
                    .map(|i| (i, k))
                    .collect();
                let b = random_subset(&mut rng, n, t)
                    .into_iter()
                    .map(|j| (k, j))
                    .collect();
                (a, b, 1)
            }
        };
        // parked entries: A columns and B rows that meet only zeros
        let rest = &inner[shared_len..];
        let (only_a, only_b) = rest.split_at(rest.len() / 2);
        let dead_a = input.saturating_sub(live_a.len());
        let dead_b = input.saturating_sub(live_b.len());
        let mut a = live_a;
        a.extend(sample_cells(&mut rng, &all, only_a, dead_a));
        let mut b = live_b;
        b.extend(sample_cells(&mut rng, only_b, &all, dead_b));
        (fill(ring, &mut rng, a), fill(ring, &mut rng, b))
    };

    let a = SparseMat::from_triplets(ring, n, n, a_entries)?;
    let b = SparseMat::from_triplets(ring, n, n, b_entries)?;
    let c = sparse_mm(ring, &a, &b)?;
    if a.nnz() > input || b.nnz() > input || c.nnz() > output {
        return Err(InstanceError::Infeasible(format!(
            "generated nnz (A={}, B={}, AB={}) exceeds budgets ({input}, {input}, {output})",
            a.nnz(),
            b.nnz(),
            c.nnz()
        )));
    }
    Ok(Instance { a, b, c })
}
