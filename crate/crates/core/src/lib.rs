//! Output-sparse matrix multiplication over exact rings.
//!
//! Products `AB` whose result is sparse are computed from compressed
//! measurements of the product's columns: a binary measurement matrix built
//! from an unbalanced bipartite expander lets every `t`-sparse column be
//! recovered exactly. A deterministic two-pass algorithm relies on a promised
//! bound on `nnz(AB)`; a randomized one needs no promise and checks itself
//! with a column-wise Freivalds test.

pub mod algebra;
pub mod bench;
pub mod expander;
pub mod instance;
pub mod io;
pub mod osmm;
pub mod sketch;
pub mod sparse;
pub mod verify;

pub use algebra::{BinaryField, Integers, PrimeField, Ring, RingContext};
pub use osmm::{
    osmm_deterministic, osmm_randomized, rect_multiply, OsmmConfig, OsmmError, Strategy,
};
pub use sketch::{MeasurementMatrix, SketchMode};
pub use sparse::{sparse_mm, SparseMat, SparseVec};
