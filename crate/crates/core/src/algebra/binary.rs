use rand::Rng;

use super::poly::{self, GfPoly};
use super::{AlgebraError, Ring};

/// `GF(2^b)` as `GF(2)[x] / (f)` for an irreducible `f` of degree `b`.
///
/// Elements are `b`-bit patterns, bit `i` holding the coefficient of `x^i`.
/// The modulus is stored with its leading `x^b` bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryField {
    degree: u32,
    modulus: u64,
}

impl BinaryField {
    /// Builds the field after checking that `modulus` is irreducible of degree `degree`.
    pub fn new(degree: u32, modulus: u64) -> Result<Self, AlgebraError> {
        if degree == 0 || degree > 63 {
            return Err(AlgebraError::UnsupportedDegree(degree));
        }
        if 63 - modulus.leading_zeros() != degree {
            return Err(AlgebraError::NotIrreducible { degree, modulus });
        }
        let f = GfPoly::from_bits(Self::gf2(), modulus);
        if !poly::is_irreducible(&f) {
            return Err(AlgebraError::NotIrreducible { degree, modulus });
        }
        Ok(Self { degree, modulus })
    }

    /// `GF(2^b)` defined by the lexicographically smallest irreducible modulus.
    pub fn with_degree(degree: u32) -> Result<Self, AlgebraError> {
        if degree == 0 || degree > 63 {
            return Err(AlgebraError::UnsupportedDegree(degree));
        }
        if degree == 1 {
            return Ok(Self::gf2());
        }
        let f = poly::find_irreducible(Self::gf2(), degree as usize);
        Ok(Self {
            degree,
            modulus: f.to_bits(),
        })
    }

    /// The prime field `GF(2)`, with modulus `x + 1`.
    pub const fn gf2() -> Self {
        Self {
            degree: 1,
            modulus: 0b11,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of field elements, `2^b`.
    pub fn order(&self) -> u64 {
        1u64 << self.degree
    }

    fn mask(&self) -> u64 {
        (1u64 << self.degree) - 1
    }
}

impl Ring for BinaryField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }

    fn one(&self) -> u64 {
        1
    }

    fn add(&self, a: &u64, b: &u64) -> u64 {
        a ^ b
    }

    fn neg(&self, a: &u64) -> u64 {
        *a
    }

    fn sub(&self, a: &u64, b: &u64) -> u64 {
        a ^ b
    }

    // Shift-and-add with the reduction folded into each doubling of `a`.
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        let top = 1u64 << (self.degree - 1);
        let low = self.modulus & self.mask();
        let mut a = *a;
        let mut b = *b;
        let mut r = 0;
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            b >>= 1;
            let carry = a & top != 0;
            a = (a << 1) & self.mask();
            if carry {
                a ^= low;
            }
        }
        r
    }

    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn contains(&self, a: &u64) -> bool {
        *a <= self.mask()
    }

    fn tag(&self) -> String {
        format!("F2e:{}:{:x}", self.degree, self.modulus)
    }

    fn format_elem(&self, a: &u64) -> String {
        format!("{a:x}")
    }

    fn parse_elem(&self, s: &str) -> Result<u64, AlgebraError> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        let v = u64::from_str_radix(digits, 16)
            .map_err(|_| AlgebraError::ParseElement(s.to_string()))?;
        if !self.contains(&v) {
            return Err(AlgebraError::NotAMember(s.to_string()));
        }
        Ok(v)
    }

    fn from_i64(&self, v: i64) -> u64 {
        (v & 1) as u64
    }

    fn sample_nonzero<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        rng.gen_range(1..=self.mask())
    }
}
