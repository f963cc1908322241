use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use super::{AlgebraError, Ring};

/// The integers, with arbitrary precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Integers;

impl Ring for Integers {
    type Elem = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }

    fn one(&self) -> BigInt {
        BigInt::one()
    }

    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }

    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }

    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }

    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }

    fn contains(&self, _a: &BigInt) -> bool {
        true
    }

    fn tag(&self) -> String {
        "Z".to_string()
    }

    fn format_elem(&self, a: &BigInt) -> String {
        a.to_string()
    }

    fn parse_elem(&self, s: &str) -> Result<BigInt, AlgebraError> {
        s.parse()
            .map_err(|_| AlgebraError::ParseElement(s.to_string()))
    }

    fn from_i64(&self, v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn sample_nonzero<G: Rng + ?Sized>(&self, rng: &mut G) -> BigInt {
        let mag: i64 = rng.gen_range(1..=9);
        if rng.gen_bool(0.5) {
            BigInt::from(mag)
        } else {
            BigInt::from(-mag)
        }
    }
}
