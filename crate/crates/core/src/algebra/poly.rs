//! Univariate polynomials over `GF(2^b)`.
//!
//! Only what the expander construction needs: products, remainders, gcd,
//! modular exponentiation, Horner evaluation and an irreducibility test.

use std::fmt;

use super::{pow, AlgebraError, BinaryField, Ring};

/// Polynomial with coefficients in a binary field, lowest degree first.
/// The coefficient list never has trailing zeros, so the zero polynomial is
/// the empty list and has no degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GfPoly {
    field: BinaryField,
    coeffs: Vec<u64>,
}

impl fmt::Debug for GfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, *c) {
                (0, c) => write!(f, "{c:#x}")?,
                (1, 1) => write!(f, "x")?,
                (i, 1) => write!(f, "x^{i}")?,
                (1, c) => write!(f, "{c:#x}*x")?,
                (i, c) => write!(f, "{c:#x}*x^{i}")?,
            }
        }
        Ok(())
    }
}

impl GfPoly {
    pub fn new(field: BinaryField, mut coeffs: Vec<u64>) -> Self {
        debug_assert!(coeffs.iter().all(|c| field.contains(c)));
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self { field, coeffs }
    }

    pub fn zero(field: BinaryField) -> Self {
        Self {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: BinaryField) -> Self {
        Self::constant(field, 1)
    }

    pub fn constant(field: BinaryField, c: u64) -> Self {
        Self::new(field, vec![c])
    }

    /// The indeterminate `x`.
    pub fn x(field: BinaryField) -> Self {
        Self::new(field, vec![0, 1])
    }

    /// Reads a `GF(2)` polynomial from a bit pattern (bit `i` = coefficient of `x^i`).
    pub fn from_bits(field: BinaryField, bits: u64) -> Self {
        assert_eq!(field.degree(), 1, "bit patterns encode GF(2) polynomials");
        Self::new(field, (0..64).map(|i| (bits >> i) & 1).collect())
    }

    pub fn to_bits(&self) -> u64 {
        assert_eq!(
            self.field.degree(),
            1,
            "bit patterns encode GF(2) polynomials"
        );
        assert!(self.coeffs.len() <= 64);
        self.coeffs
            .iter()
            .enumerate()
            .fold(0, |acc, (i, c)| acc | (c << i))
    }

    pub fn field(&self) -> BinaryField {
        self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<u64> {
        self.coeffs.last().copied()
    }

    fn check_field(&self, other: &Self) {
        assert_eq!(self.field, other.field, "polynomials over different fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_field(other);
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0);
                let b = other.coeffs.get(i).copied().unwrap_or(0);
                a ^ b
            })
            .collect();
        Self::new(self.field, coeffs)
    }

    /// Characteristic 2: subtraction is addition.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(other)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_field(other);
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.field);
        }
        let f = &self.field;
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] ^= f.mul(a, b);
            }
        }
        Self::new(self.field, out)
    }

    pub fn scale(&self, c: u64) -> Self {
        let f = &self.field;
        Self::new(
            self.field,
            self.coeffs.iter().map(|a| f.mul(a, &c)).collect(),
        )
    }

    /// Scales to leading coefficient one; the zero polynomial is returned unchanged.
    pub fn monic(&self) -> Self {
        match self.leading() {
            None | Some(1) => self.clone(),
            Some(lc) => self.scale(field_inverse(&self.field, lc)),
        }
    }

    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), AlgebraError> {
        if self.field != divisor.field {
            return Err(AlgebraError::FieldMismatch);
        }
        let dd = divisor.degree().ok_or(AlgebraError::DivisionByZero)?;
        let f = &self.field;
        let inv_lc = field_inverse(f, divisor.coeffs[dd]);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(self.field), self.clone()));
        }
        let mut quot = vec![0u64; rem.len() - dd];
        for top in (dd..rem.len()).rev() {
            let c = rem[top];
            if c == 0 {
                continue;
            }
            let factor = f.mul(&c, &inv_lc);
            quot[top - dd] = factor;
            for (k, d) in divisor.coeffs.iter().enumerate() {
                rem[top - dd + k] ^= f.mul(&factor, d);
            }
        }
        rem.truncate(dd);
        Ok((Self::new(self.field, quot), Self::new(self.field, rem)))
    }

    pub fn rem(&self, divisor: &Self) -> Result<Self, AlgebraError> {
        self.div_rem(divisor).map(|(_, r)| r)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        self.check_field(other);
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("divisor is nonzero");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Horner evaluation at a field element.
    pub fn eval(&self, point: u64) -> u64 {
        let f = &self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, c| f.mul(&acc, &point) ^ c)
    }

    /// `self^exponent mod modulus` by repeated squaring.
    pub fn powmod(&self, mut exponent: u64, modulus: &Self) -> Result<Self, AlgebraError> {
        if self.field != modulus.field {
            return Err(AlgebraError::FieldMismatch);
        }
        if modulus.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let mut acc = Self::one(self.field).rem(modulus)?;
        let mut sq = self.rem(modulus)?;
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = acc.mul(&sq).rem(modulus)?;
            }
            exponent >>= 1;
            if exponent > 0 {
                sq = sq.mul(&sq).rem(modulus)?;
            }
        }
        Ok(acc)
    }
}

fn field_inverse(f: &BinaryField, a: u64) -> u64 {
    debug_assert!(a != 0);
    pow(f, &a, f.order() - 2)
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test: a degree-`n` polynomial `f` over `F_q` is irreducible iff
/// `x^(q^n) = x (mod f)` and `gcd(x^(q^(n/r)) - x, f) = 1` for every prime `r | n`.
pub fn is_irreducible(f: &GfPoly) -> bool {
    let n = match f.degree() {
        None | Some(0) => return false,
        Some(n) => n,
    };
    let f = f.monic();
    let q = f.field.order();
    let x = GfPoly::x(f.field).rem(&f).expect("f is nonzero");
    // frob[i] = x^(q^i) mod f
    let mut frob = Vec::with_capacity(n + 1);
    frob.push(x.clone());
    for i in 0..n {
        let next = frob[i].powmod(q, &f).expect("f is nonzero");
        frob.push(next);
    }
    if frob[n] != x {
        return false;
    }
    prime_factors(n).into_iter().all(|r| {
        let h = frob[n / r].sub(&x);
        h.gcd(&f).degree() == Some(0)
    })
}

/// The lexicographically smallest monic irreducible polynomial of degree `n`
/// over `field`.
///
/// Candidates `x^n + c_{n-1} x^{n-1} + ... + c_0` are visited in increasing
/// order of the integer `sum c_i q^i`, field elements read as their bit patterns.
pub fn find_irreducible(field: BinaryField, n: usize) -> GfPoly {
    assert!(n >= 1, "degree must be positive");
    let q = field.order();
    let mut digits = vec![0u64; n];
    loop {
        let mut coeffs = digits.clone();
        coeffs.push(1);
        let cand = GfPoly::new(field, coeffs);
        if is_irreducible(&cand) {
            return cand;
        }
        // little-endian increment
        let mut i = 0;
        loop {
            assert!(i < n, "irreducible polynomials of every degree exist");
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
