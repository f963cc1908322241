use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use super::{AlgebraError, Ring};

#[derive(Debug, Default)]
struct Counters {
    adds: AtomicU64,
    muls: AtomicU64,
    negs: AtomicU64,
}

/// Snapshot of the arithmetic performed through a [`Counted`] ring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Additions and subtractions.
    pub adds: u64,
    pub muls: u64,
    pub negs: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.adds + self.muls + self.negs
    }
}

/// Instrumented ring: delegates to `R` and counts every operation.
///
/// Clones share the same counters, so a context handed to worker threads
/// still reports into one tally.
#[derive(Debug, Clone)]
pub struct Counted<R> {
    inner: R,
    counters: Arc<Counters>,
}

impl<R: Ring> Counted<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            counters: Arc::default(),
        }
    }

    pub fn inner(&self) -> &R {
        &self.inner
    }

    pub fn counts(&self) -> OpCounts {
        OpCounts {
            adds: self.counters.adds.load(Ordering::Relaxed),
            muls: self.counters.muls.load(Ordering::Relaxed),
            negs: self.counters.negs.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.counters.adds.store(0, Ordering::Relaxed);
        self.counters.muls.store(0, Ordering::Relaxed);
        self.counters.negs.store(0, Ordering::Relaxed);
    }
}

impl<R: Ring> Ring for Counted<R> {
    type Elem = R::Elem;

    fn zero(&self) -> R::Elem {
        self.inner.zero()
    }

    fn one(&self) -> R::Elem {
        self.inner.one()
    }

    fn add(&self, a: &R::Elem, b: &R::Elem) -> R::Elem {
        self.counters.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.add(a, b)
    }

    fn neg(&self, a: &R::Elem) -> R::Elem {
        self.counters.negs.fetch_add(1, Ordering::Relaxed);
        self.inner.neg(a)
    }

    fn sub(&self, a: &R::Elem, b: &R::Elem) -> R::Elem {
        self.counters.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.sub(a, b)
    }

    fn mul(&self, a: &R::Elem, b: &R::Elem) -> R::Elem {
        self.counters.muls.fetch_add(1, Ordering::Relaxed);
        self.inner.mul(a, b)
    }

    fn is_zero(&self, a: &R::Elem) -> bool {
        self.inner.is_zero(a)
    }

    fn contains(&self, a: &R::Elem) -> bool {
        self.inner.contains(a)
    }

    fn tag(&self) -> String {
        self.inner.tag()
    }

    fn format_elem(&self, a: &R::Elem) -> String {
        self.inner.format_elem(a)
    }

    fn parse_elem(&self, s: &str) -> Result<R::Elem, AlgebraError> {
        self.inner.parse_elem(s)
    }

    fn from_i64(&self, v: i64) -> R::Elem {
        self.inner.from_i64(v)
    }

    fn sample_nonzero<G: Rng + ?Sized>(&self, rng: &mut G) -> R::Elem {
        self.inner.sample_nonzero(rng)
    }
}
