//! Extended real line with explicit infinities.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> ExtReal<T> {
    /// Maps non-finite floats to the matching infinity; NaN is rejected.
    pub fn from_float(x: T) -> Result<Self> {
        if x.is_nan() {
            Err(Error::UndefinedArithmetic("NaN is not an extended real"))
        } else if x == T::infinity() {
            Ok(Self::PosInf)
        } else if x == T::neg_infinity() {
            Ok(Self::NegInf)
        } else {
            Ok(Self::Finite(x))
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Self::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// Lossy conversion to a float, infinities included.
    pub fn to_float(self) -> T {
        match self {
            Self::NegInf => T::neg_infinity(),
            Self::Finite(x) => x,
            Self::PosInf => T::infinity(),
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Self::NegInf => Self::PosInf,
            Self::Finite(x) => Self::Finite(-x),
            Self::PosInf => Self::NegInf,
        }
    }

    /// Sum; `inf + (-inf)` is undefined.
    pub fn add(self, other: Self) -> Result<Self> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::UndefinedArithmetic("inf - inf")),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        self.add(other.neg())
    }

    pub fn add_finite(self, b: T) -> Self {
        match self {
            Self::Finite(a) => Self::Finite(a + b),
            inf => inf,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl<T: Scalar> From<T> for ExtReal<T> {
    fn from(x: T) -> Self {
        Self::from_float(x).expect("NaN passed as an extended real")
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (PosInf, _) | (_, NegInf) => Some(Ordering::Greater),
        }
    }
}

impl<T: fmt::Display> fmt::Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegInf => write!(f, "-inf"),
            Self::Finite(x) => write!(f, "{x}"),
            Self::PosInf => write!(f, "inf"),
        }
    }
}
