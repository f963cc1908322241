//! Benchmark harness: runs multiplication algorithms on generated instances
//! and reports operation counts and wall time as CSV.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::algebra::{Counted, OpCounts, Ring};
use crate::instance::{gen_instance, InstanceError, InstanceSpec};
use crate::osmm::{osmm_deterministic, osmm_randomized, OsmmConfig, OsmmError};
use crate::sparse::{dense_mm, sparse_mm, SparseError, SparseMat};

pub const CSV_HEADER: &str = "n,delta_in,delta_out,seed,alg,nnz_a,nnz_b,nnz_ab,muls,adds,dense_muls,mul_ratio,wall_ms,correct";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("unknown algorithm {0:?} (expected dense, sparse, det or rand)")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Osmm(#[from] OsmmError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Cubic dense product.
    Dense,
    /// Gustavson sparse product.
    Sparse,
    Deterministic,
    Randomized,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dense => "dense",
            Algorithm::Sparse => "sparse",
            Algorithm::Deterministic => "det",
            Algorithm::Randomized => "rand",
        })
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" | "naive" => Ok(Algorithm::Dense),
            "sparse" => Ok(Algorithm::Sparse),
            "det" => Ok(Algorithm::Deterministic),
            "rand" => Ok(Algorithm::Randomized),
            _ => Err(BenchError::UnknownAlgorithm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub spec: InstanceSpec,
    pub alg: Algorithm,
    pub nnz_a: usize,
    pub nnz_b: usize,
    pub nnz_ab: usize,
    pub counts: OpCounts,
    /// `n^3`, the multiplication count of the cubic product.
    pub dense_muls: u128,
    /// Median over the timed runs.
    pub wall_ms: f64,
    pub correct: bool,
}

impl BenchRow {
    pub fn mul_ratio(&self) -> f64 {
        self.counts.muls as f64 / self.dense_muls as f64
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.3},{}",
            self.spec.n,
            self.spec.delta_in,
            self.spec.delta_out,
            self.spec.seed,
            self.alg,
            self.nnz_a,
            self.nnz_b,
            self.nnz_ab,
            self.counts.muls,
            self.counts.adds,
            self.dense_muls,
            self.mul_ratio(),
            self.wall_ms,
            self.correct
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    /// Timed runs per algorithm, after one untimed warmup.
    pub repeats: usize,
    pub osmm: OsmmConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![
                Algorithm::Sparse,
                Algorithm::Deterministic,
                Algorithm::Randomized,
            ],
            repeats: 3,
            osmm: OsmmConfig::default(),
        }
    }
}

/// Runs `alg` once over an instrumented copy of `ring`.
pub fn run_counted<R: Ring>(
    ring: &R,
    alg: Algorithm,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<(SparseMat<R::Elem>, OpCounts), BenchError> {
    let counted = Counted::new(ring.clone());
    let c = run(&counted, alg, a, b, cfg)?;
    Ok((c, counted.counts()))
}

pub fn run<R: Ring>(
    ring: &R,
    alg: Algorithm,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    cfg: &OsmmConfig,
) -> Result<SparseMat<R::Elem>, BenchError> {
    Ok(match alg {
        Algorithm::Dense => dense_mm(ring, a, b)?,
        Algorithm::Sparse => sparse_mm(ring, a, b)?,
        Algorithm::Deterministic => osmm_deterministic(ring, a, b, cfg)?,
        Algorithm::Randomized => osmm_randomized(ring, a, b, cfg)?,
    })
}

/// Benchmarks every algorithm on every instance of `grid`. The
/// deterministic algorithm gets `t = ceil(sqrt(nnz(AB)))` unless the config
/// fixes one.
pub fn bench<R: Ring>(
    ring: &R,
    grid: &[InstanceSpec],
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for spec in grid {
        let inst = gen_instance(ring, spec)?;
        let mut osmm = cfg.osmm.clone();
        if osmm.t.is_none() && osmm.nnz_bound.is_none() {
            osmm.nnz_bound = Some(inst.c.nnz().max(1));
        }
        for &alg in &cfg.algorithms {
            let (c, counts) = run_counted(ring, alg, &inst.a, &inst.b, &osmm)?;
            let mut times = Vec::with_capacity(cfg.repeats);
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                run(ring, alg, &inst.a, &inst.b, &osmm)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            times.sort_by(f64::total_cmp);
            let n = spec.n as u128;
            rows.push(BenchRow {
                spec: *spec,
                alg,
                nnz_a: inst.a.nnz(),
                nnz_b: inst.b.nnz(),
                nnz_ab: inst.c.nnz(),
                counts,
                dense_muls: n * n * n,
                wall_ms: times.get(times.len() / 2).copied().unwrap_or(f64::NAN),
                correct: c == inst.c,
            });
        }
    }
    Ok(rows)
}

/// The report: header line, then one line per row.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}
