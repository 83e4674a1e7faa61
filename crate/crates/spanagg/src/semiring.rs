//! The three commutative semirings the engine computes over.
//!
//! * Boolean: `({false, true}, ∨, ∧, false, true)`
//! * Numerical: `(Q, +, ×, 0, 1)` with exact rationals
//! * Tropical: `(Q ∪ {∞}, min, +, ∞, 0)`
//!
//! All arithmetic is exact; there is no floating point anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Identifies one of the three supported semirings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemiringKind {
    Boolean,
    Numerical,
    Tropical,
}

impl SemiringKind {
    pub fn zero(self) -> SemiringValue {
        match self {
            SemiringKind::Boolean => SemiringValue::Bool(false),
            SemiringKind::Numerical => SemiringValue::Num(BigRational::zero()),
            SemiringKind::Tropical => SemiringValue::TropInfinity,
        }
    }

    pub fn one(self) -> SemiringValue {
        match self {
            SemiringKind::Boolean => SemiringValue::Bool(true),
            SemiringKind::Numerical => SemiringValue::Num(BigRational::one()),
            SemiringKind::Tropical => SemiringValue::Trop(BigRational::zero()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Boolean => "bool",
            SemiringKind::Numerical => "num",
            SemiringKind::Tropical => "trop",
        }
    }
}

impl FromStr for SemiringKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bool" => Ok(SemiringKind::Boolean),
            "num" => Ok(SemiringKind::Numerical),
            "trop" => Ok(SemiringKind::Tropical),
            other => Err(Error::Parse(format!("unknown semiring {other:?}"))),
        }
    }
}

/// A tagged semiring element.
///
/// Rationals are kept normalized (reduced, positive denominator) by the
/// underlying representation. The tropical zero element `∞` has its own
/// variant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemiringValue {
    Bool(bool),
    Num(BigRational),
    Trop(BigRational),
    TropInfinity,
}

impl SemiringValue {
    pub fn kind(&self) -> SemiringKind {
        match self {
            SemiringValue::Bool(_) => SemiringKind::Boolean,
            SemiringValue::Num(_) => SemiringKind::Numerical,
            SemiringValue::Trop(_) | SemiringValue::TropInfinity => SemiringKind::Tropical,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SemiringValue::Bool(b) => !b,
            SemiringValue::Num(q) => q.is_zero(),
            SemiringValue::Trop(_) => false,
            SemiringValue::TropInfinity => true,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            SemiringValue::Bool(b) => *b,
            SemiringValue::Num(q) => q.is_one(),
            SemiringValue::Trop(q) => q.is_zero(),
            SemiringValue::TropInfinity => false,
        }
    }

    /// The finite rational carried by a numerical or tropical value.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            SemiringValue::Num(q) | SemiringValue::Trop(q) => Some(q),
            _ => None,
        }
    }

    fn expect(&self, kind: SemiringKind, what: &str) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::Type(format!(
                "{what}: operand {self} belongs to the {} semiring, expected {}",
                self.kind().name(),
                kind.name()
            )))
        }
    }
}

/// Semiring addition: `∨` / `+` / `min`.
pub fn sr_add(kind: SemiringKind, a: &SemiringValue, b: &SemiringValue) -> Result<SemiringValue> {
    a.expect(kind, "sr_add")?;
    b.expect(kind, "sr_add")?;
    Ok(match (a, b) {
        (SemiringValue::Bool(x), SemiringValue::Bool(y)) => SemiringValue::Bool(*x || *y),
        (SemiringValue::Num(x), SemiringValue::Num(y)) => SemiringValue::Num(x + y),
        (SemiringValue::TropInfinity, y) => y.clone(),
        (x, SemiringValue::TropInfinity) => x.clone(),
        (SemiringValue::Trop(x), SemiringValue::Trop(y)) => {
            SemiringValue::Trop(if x <= y { x.clone() } else { y.clone() })
        }
        _ => unreachable!("operands checked above"),
    })
}

/// Semiring multiplication: `∧` / `×` / `+`.
pub fn sr_mul(kind: SemiringKind, a: &SemiringValue, b: &SemiringValue) -> Result<SemiringValue> {
    a.expect(kind, "sr_mul")?;
    b.expect(kind, "sr_mul")?;
    Ok(match (a, b) {
        (SemiringValue::Bool(x), SemiringValue::Bool(y)) => SemiringValue::Bool(*x && *y),
        (SemiringValue::Num(x), SemiringValue::Num(y)) => SemiringValue::Num(x * y),
        (SemiringValue::TropInfinity, _) | (_, SemiringValue::TropInfinity) => {
            SemiringValue::TropInfinity
        }
        (SemiringValue::Trop(x), SemiringValue::Trop(y)) => SemiringValue::Trop(x + y),
        _ => unreachable!("operands checked above"),
    })
}

/// Renders a rational as `p/q`, or as a plain integer when `q = 1`.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses a rational from `p/q` or integer form. Decimals are rejected.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?} (expected p/q or an integer)"));
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("invalid rational {s:?}: zero denominator")));
        }
        Ok(BigRational::new(n, d))
    } else {
        let n = BigInt::from_str(s).map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

impl fmt::Display for SemiringValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringValue::Bool(b) => write!(f, "{b}"),
            SemiringValue::Num(q) | SemiringValue::Trop(q) => {
                f.write_str(&format_rational(q))
            }
            SemiringValue::TropInfinity => f.write_str("inf"),
        }
    }
}

impl SemiringValue {
    /// Parses the textual form of a value of the given semiring.
    pub fn parse(kind: SemiringKind, s: &str) -> Result<SemiringValue> {
        match kind {
            SemiringKind::Boolean => match s.trim() {
                "true" => Ok(SemiringValue::Bool(true)),
                "false" => Ok(SemiringValue::Bool(false)),
                other => Err(Error::Parse(format!("invalid Boolean value {other:?}"))),
            },
            SemiringKind::Numerical => Ok(SemiringValue::Num(parse_rational(s)?)),
            SemiringKind::Tropical => {
                if s.trim() == "inf" {
                    Ok(SemiringValue::TropInfinity)
                } else {
                    Ok(SemiringValue::Trop(parse_rational(s)?))
                }
            }
        }
    }

    /// Total order used only for deterministic tie-breaking in containers.
    pub fn sort_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

/// Convenience constructors for tests and builders.
pub fn num(n: i64) -> SemiringValue {
    SemiringValue::Num(BigRational::from_integer(BigInt::from(n)))
}

pub fn num_ratio(n: i64, d: i64) -> SemiringValue {
    SemiringValue::Num(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

pub fn trop(n: i64) -> SemiringValue {
    SemiringValue::Trop(BigRational::from_integer(BigInt::from(n)))
}

pub fn trop_ratio(n: i64, d: i64) -> SemiringValue {
    SemiringValue::Trop(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
