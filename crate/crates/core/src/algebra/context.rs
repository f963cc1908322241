use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use super::{AlgebraError, BinaryField, Integers, PrimeField, Ring};

/// Runtime choice of ring, as named by a file or command-line tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RingContext {
    Integers,
    PrimeField(PrimeField),
    BinaryField(BinaryField),
}

/// An element tagged with the kind of ring it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingElement {
    Integer(BigInt),
    Residue(u64),
    Bits(u64),
}

impl fmt::Display for RingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingContext::Integers => f.write_str(&Integers.tag()),
            RingContext::PrimeField(r) => f.write_str(&r.tag()),
            RingContext::BinaryField(r) => f.write_str(&r.tag()),
        }
    }
}

impl FromStr for RingContext {
    type Err = AlgebraError;

    /// Accepts `Z`, `Fp:<p>` and `F2e:<b>:<modulus-hex>`. `F2e:<b>` alone picks
    /// the smallest irreducible modulus of degree `b`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AlgebraError::ParseTag(s.to_string());
        let mut parts = s.split(':');
        match parts.next() {
            Some("Z") if parts.next().is_none() => Ok(RingContext::Integers),
            Some("Fp") => {
                let p = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(RingContext::PrimeField(PrimeField::new(p)?))
            }
            Some("F2e") => {
                let b: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let field = match parts.next() {
                    None => BinaryField::with_degree(b)?,
                    Some(hex) => {
                        let hex = hex.strip_prefix("0x").unwrap_or(hex);
                        let modulus = u64::from_str_radix(hex, 16).map_err(|_| bad())?;
                        BinaryField::new(b, modulus)?
                    }
                };
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(RingContext::BinaryField(field))
            }
            _ => Err(bad()),
        }
    }
}

impl RingContext {
    fn check(&self, a: &RingElement) -> Result<(), AlgebraError> {
        let ok = match (self, a) {
            (RingContext::Integers, RingElement::Integer(_)) => true,
            (RingContext::PrimeField(f), RingElement::Residue(v)) => f.contains(v),
            (RingContext::BinaryField(f), RingElement::Bits(v)) => f.contains(v),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(AlgebraError::MixedContext {
                left: self.to_string(),
                right: format!("{a:?}"),
            })
        }
    }

    fn binary(
        &self,
        a: &RingElement,
        b: &RingElement,
        op: Op,
    ) -> Result<RingElement, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (self, a, b) {
            (RingContext::Integers, RingElement::Integer(x), RingElement::Integer(y)) => {
                RingElement::Integer(op.apply(&Integers, x, y))
            }
            (RingContext::PrimeField(f), RingElement::Residue(x), RingElement::Residue(y)) => {
                RingElement::Residue(op.apply(f, x, y))
            }
            (RingContext::BinaryField(f), RingElement::Bits(x), RingElement::Bits(y)) => {
                RingElement::Bits(op.apply(f, x, y))
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, AlgebraError> {
        self.binary(a, b, Op::Add)
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, AlgebraError> {
        self.binary(a, b, Op::Sub)
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, AlgebraError> {
        self.binary(a, b, Op::Mul)
    }

    pub fn neg(&self, a: &RingElement) -> Result<RingElement, AlgebraError> {
        self.sub(&self.zero(), a)
    }

    pub fn is_zero(&self, a: &RingElement) -> Result<bool, AlgebraError> {
        self.check(a)?;
        Ok(*a == self.zero())
    }

    pub fn zero(&self) -> RingElement {
        match self {
            RingContext::Integers => RingElement::Integer(BigInt::from(0)),
            RingContext::PrimeField(_) => RingElement::Residue(0),
            RingContext::BinaryField(_) => RingElement::Bits(0),
        }
    }

    pub fn one(&self) -> RingElement {
        match self {
            RingContext::Integers => RingElement::Integer(BigInt::from(1)),
            RingContext::PrimeField(_) => RingElement::Residue(1),
            RingContext::BinaryField(_) => RingElement::Bits(1),
        }
    }

    pub fn parse_elem(&self, s: &str) -> Result<RingElement, AlgebraError> {
        Ok(match self {
            RingContext::Integers => RingElement::Integer(Integers.parse_elem(s)?),
            RingContext::PrimeField(f) => RingElement::Residue(f.parse_elem(s)?),
            RingContext::BinaryField(f) => RingElement::Bits(f.parse_elem(s)?),
        })
    }
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    fn apply<R: Ring>(self, ring: &R, a: &R::Elem, b: &R::Elem) -> R::Elem {
        match self {
            Op::Add => ring.add(a, b),
            Op::Sub => ring.sub(a, b),
            Op::Mul => ring.mul(a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for tag in ["Z", "Fp:101", "Fp:7", "F2e:8:11b", "F2e:3:b"] {
            let ctx: RingContext = tag.parse().unwrap();
            assert_eq!(ctx.to_string(), tag);
        }
        let short: RingContext = "F2e:8".parse().unwrap();
        assert_eq!(short.to_string(), "F2e:8:11b");
    }

    #[test]
    fn bad_tags() {
        for tag in [
            "",
            "Q",
            "Fp",
            "Fp:10",
            "Fp:7:1",
            "F2e:8:111",
            "F2e:x",
            "Z:1",
        ] {
            assert!(tag.parse::<RingContext>().is_err(), "{tag}");
        }
    }

    #[test]
    fn checked_ops() {
        let z = RingContext::Integers;
        let three = RingElement::Integer(3.into());
        let minus_three = RingElement::Integer((-3).into());
        assert_eq!(z.add(&three, &minus_three).unwrap(), z.zero());

        let f7: RingContext = "Fp:7".parse().unwrap();
        let r = f7
            .mul(&RingElement::Residue(3), &RingElement::Residue(5))
            .unwrap();
        assert_eq!(r, RingElement::Residue(1));
    }

    #[test]
    fn mixed_context_is_an_error() {
        let f7: RingContext = "Fp:7".parse().unwrap();
        let err = f7.add(&RingElement::Residue(1), &RingElement::Bits(1));
        assert!(matches!(err, Err(AlgebraError::MixedContext { .. })));
        // out-of-range residue belongs to some other F_p
        assert!(f7
            .add(&RingElement::Residue(9), &RingElement::Residue(1))
            .is_err());
        assert!(RingContext::Integers
            .mul(&RingElement::Integer(2.into()), &RingElement::Residue(2))
            .is_err());
    }
}
