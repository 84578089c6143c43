//! Coefficient rings.
//!
//! Series and the grammar translators are generic over [`Scalar`]. Unlabeled
//! enumeration only ever divides by an integer when the quotient is known to
//! be exact, so it runs over plain integers; labeled enumeration needs true
//! division and asks for a [`Field`].

use std::fmt::Debug;
use std::ops::{AddAssign, Div, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    fn from_u64(n: u64) -> Self;

    fn from_bigint(n: &BigInt) -> Self;

    fn mul_ref(&self, other: &Self) -> Self;

    /// Division by a positive integer. Integer rings panic when the division
    /// is not exact, which would mean the caller broke an integrality
    /// invariant.
    fn div_u64(&self, d: u64) -> Self;

    /// Sum of products over a sequence of pairs. This is the inner loop of
    /// every convolution, so rings with a cheaper accumulation override it.
    fn dot<'a, I>(pairs: I) -> Self
    where
        I: Iterator<Item = (&'a Self, &'a Self)>,
        Self: 'a,
    {
        let mut acc = Self::zero();
        for (x, y) in pairs {
            if !x.is_zero() && !y.is_zero() {
                acc += &x.mul_ref(y);
            }
        }
        acc
    }

    /// `Σ a[i] * b[len-1-i]` over two slices of equal length.
    fn dot_rev(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        Self::dot(a.iter().zip(b.iter().rev()))
    }
}

/// A scalar ring in which every nonzero element is invertible.
pub trait Field: Scalar + Div<Output = Self> {}

impl Scalar for BigInt {
    fn from_u64(n: u64) -> Self {
        BigInt::from(n)
    }

    fn from_bigint(n: &BigInt) -> Self {
        n.clone()
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_u64(&self, d: u64) -> Self {
        let (q, r) = self.div_rem(&BigInt::from(d));
        assert!(r.is_zero(), "inexact integer division by {d}");
        q
    }
}

impl Scalar for BigRational {
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_bigint(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_u64(&self, d: u64) -> Self {
        self / BigRational::from_integer(BigInt::from(d))
    }
}

impl Field for BigRational {}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_u64(n: u64) -> Self {
                n as $t
            }

            fn from_bigint(n: &BigInt) -> Self {
                num_traits::ToPrimitive::to_f64(n).unwrap_or(f64::INFINITY) as $t
            }

            fn mul_ref(&self, other: &Self) -> Self {
                self * other
            }

            fn div_u64(&self, d: u64) -> Self {
                self / d as $t
            }

            fn dot<'a, I>(pairs: I) -> Self
            where
                I: Iterator<Item = (&'a Self, &'a Self)>,
            {
                pairs.map(|(x, y)| x * y).sum()
            }
        }

        impl Field for $t {}
    };
}

float_scalar!(f32);
float_scalar!(f64);

/// Converts an exact rational to an integer when its denominator is one.
pub fn rational_to_integer(q: &BigRational) -> Option<BigInt> {
    q.is_integer().then(|| q.to_integer())
}
