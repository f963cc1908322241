//! Exact ring arithmetic.
//!
//! Every algorithm in this crate is generic over [`Ring`]: a context object that
//! owns the parameters of the ring (a prime modulus, an extension polynomial)
//! and performs arithmetic on plain element payloads. Elements carry no
//! back-pointer to their context, so equality of payloads is equality of ring
//! elements and zero tests are exact.

mod binary;
mod context;
mod counted;
mod integers;
pub mod poly;
mod prime;

pub use binary::BinaryField;
pub use context::{RingContext, RingElement};
pub use counted::{Counted, OpCounts};
pub use integers::Integers;
pub use poly::GfPoly;
pub use prime::PrimeField;

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("operands belong to different rings ({left} vs {right})")]
    MixedContext { left: String, right: String },
    #[error("element {0} is not a canonical member of the ring")]
    NotAMember(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {modulus:#x} is not an irreducible polynomial of degree {degree} over GF(2)")]
    NotIrreducible { degree: u32, modulus: u64 },
    #[error("unsupported extension degree {0} (expected 1..=63)")]
    UnsupportedDegree(u32),
    #[error("polynomial division by zero")]
    DivisionByZero,
    #[error("polynomials over different fields")]
    FieldMismatch,
    #[error("cannot parse ring element {0:?}")]
    ParseElement(String),
    #[error("cannot parse ring tag {0:?}")]
    ParseTag(String),
}

/// A commutative ring with exact equality.
///
/// `Elem` is the canonical payload: two elements are equal iff their payloads
/// are equal, which is what lets the sparse routines drop cancelled entries.
pub trait Ring: Clone + Debug + Send + Sync {
    type Elem: Clone + Eq + Ord + Hash + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    /// Whether `a` is a canonical payload of this ring.
    fn contains(&self, a: &Self::Elem) -> bool;

    /// Serialization tag, e.g. `Z`, `Fp:101` or `F2e:8:11b`.
    fn tag(&self) -> String;

    fn format_elem(&self, a: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem, AlgebraError>;

    /// Image of a machine integer under the canonical map `Z -> R`.
    fn from_i64(&self, v: i64) -> Self::Elem;

    /// A nonzero element drawn from a small, ring-appropriate range.
    fn sample_nonzero<G: Rng + ?Sized>(&self, rng: &mut G) -> Self::Elem;
}

/// `base^exp` by repeated squaring in any ring.
pub fn pow<R: Ring>(ring: &R, base: &R::Elem, mut exp: u64) -> R::Elem {
    let mut acc = ring.one();
    let mut sq = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ring.mul(&acc, &sq);
        }
        exp >>= 1;
        if exp > 0 {
            sq = ring.mul(&sq, &sq);
        }
    }
    acc
}
