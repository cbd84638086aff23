//! Scalar abstraction for the matrix-game math.
//!
//! The regret-matching solver, best-response evaluation and the exact
//! minimax oracle are written once over [`Scalar`]. `f64` is the working
//! type everywhere else in the crate; `f32` is supported for compact
//! tables and [`BigRational`] gives an exact oracle with zero tolerance.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn is_finite_value(&self) -> bool;

    /// Comparison slack used by pivoting and distribution checks. Zero for exact types.
    fn tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn positive_part(&self) -> Self {
        if *self > Self::zero() {
            self.clone()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }
    fn tolerance() -> Self {
        BigRational::zero()
    }
}
