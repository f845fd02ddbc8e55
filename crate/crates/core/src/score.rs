use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Serialize, Serializer};

/// An information quantity in nats. May be `+∞`; never NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Score(f64);

impl Score {
    pub const ZERO: Score = Score(0.0);
    pub const INFINITE: Score = Score(f64::INFINITY);

    pub fn nats(value: f64) -> Score {
        debug_assert!(!value.is_nan(), "score must not be NaN");
        Score(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Absolute difference, treating two equal infinities as agreeing.
    pub fn distance(self, other: Score) -> f64 {
        if self.0 == other.0 {
            0.0
        } else {
            (self.0 - other.0).abs()
        }
    }

    /// `self ≈ other` within `tol`, where `∞ ≈ ∞`.
    pub fn approx_eq(self, other: Score, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

impl From<f64> for Score {
    fn from(v: f64) -> Self {
        Score::nats(v)
    }
}

impl Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        Score(self.0 - rhs.0)
    }
}

/// Scaling by a nonnegative weight; `0 · ∞ = 0`.
impl Mul<Score> for f64 {
    type Output = Score;
    fn mul(self, rhs: Score) -> Score {
        if self == 0.0 {
            Score::ZERO
        } else {
            Score(self * rhs.0)
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else if let Some(p) = f.precision() {
            write!(f, "{:.*}", p, self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// JSON has no infinity; infinite scores serialize as the string `"inf"`.
impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }
}
