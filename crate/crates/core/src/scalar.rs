//! Scalar types the solvers are generic over.
//!
//! [`Scalar`] covers ordered fields: `f32`, `f64` and exact [`Rational`]s. The
//! combinatorial routines (oracle evaluation, line search, greedy, determinants,
//! counting) only need field arithmetic and run on any of them; with rationals
//! every tolerance is zero and results are exact. Anything that needs `ln`/`exp`
//! (mirror maps, mirror descent, multiplicative weights) is bounded on [`Real`].

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive, Zero};

/// Arbitrary-precision rational used for drift-free reference computations.
pub type Rational = BigRational;

/// An ordered field with the comparison tolerances used throughout the crate.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Membership and tightness tolerance.
    fn feas_tol() -> Self;
    /// Boundary tolerance used when probing past a line-search step.
    fn step_tol() -> Self;
    /// Tolerance for grouping gradient (or weight) values into level sets.
    fn level_tol() -> Self;

    /// Converts a literal. Exact for rationals (binary expansion of the float).
    fn lit(v: f64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_val(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_val(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `true` if `|self - other| <= tol`.
    fn near(&self, other: &Self, tol: &Self) -> bool {
        (self.clone() - other.clone()).abs_val() <= *tol
    }
}

/// Floating-point scalars.
pub trait Real: Scalar + Float + Copy {}

impl Real for f32 {}
impl Real for f64 {}

macro_rules! impl_float_scalar {
    ($t:ty, $feas:expr, $step:expr, $level:expr) => {
        impl Scalar for $t {
            fn feas_tol() -> Self {
                $feas
            }
            fn step_tol() -> Self {
                $step
            }
            fn level_tol() -> Self {
                $level
            }
            fn lit(v: f64) -> Self {
                v as $t
            }
        }
    };
}

impl_float_scalar!(f64, 1e-9, 1e-7, 1e-8);
impl_float_scalar!(f32, 1e-4, 1e-3, 1e-4);

impl Scalar for Rational {
    fn feas_tol() -> Self {
        Rational::zero()
    }
    fn step_tol() -> Self {
        // Strictly positive so "one step past the boundary" is a real probe.
        Rational::new(BigInt::from(1), BigInt::from(10_000_000))
    }
    fn level_tol() -> Self {
        Rational::zero()
    }
    fn lit(v: f64) -> Self {
        Rational::from_float(v).expect("finite literal")
    }
}

/// Builds an exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn sum<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v)
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    sum(a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()))
}
