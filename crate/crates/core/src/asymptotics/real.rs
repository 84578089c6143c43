//! Real arithmetic for the analytic computations: `f64` for quick work and
//! [`HighPrecision`] when digits must be certified.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign as FloatSign};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_bigint(n: &BigInt) -> Self;

    fn from_rational(q: &BigRational) -> Self {
        Self::from_bigint(q.numer()) / Self::from_bigint(q.denom())
    }

    fn zero() -> Self {
        Self::from_i64(0)
    }

    fn one() -> Self {
        Self::from_i64(1)
    }

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn pi() -> Self;
    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;

    /// Decimal digits carried by the current working precision.
    fn working_digits() -> usize;

    /// Exact binary value, for formatting and exact comparisons.
    fn to_rational(&self) -> Option<BigRational>;

    fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn is_zero(&self) -> bool {
        self.partial_cmp(&Self::zero()) == Some(Ordering::Equal)
    }

    /// Rounded to `significant` digits, in plain notation for moderate
    /// magnitudes and scientific notation otherwise.
    fn to_decimal(&self, significant: usize) -> String {
        match self.to_rational() {
            Some(q) => format_rational(&q, significant),
            None => format!("{:?}", self),
        }
    }

    /// Like [`Real::to_decimal`] but cut off after `significant` digits, so
    /// every printed digit is a digit of the value.
    fn to_decimal_truncated(&self, significant: usize) -> String {
        match self.to_rational() {
            Some(q) => format_rational_with(&q, significant, Rounding::TowardZero),
            None => format!("{:?}", self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    NearestEven,
    TowardZero,
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_bigint(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn pi() -> Self {
        std::f64::consts::PI
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn working_digits() -> usize {
        15
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }
}

pub const DEFAULT_DIGITS: usize = 50;
pub const MIN_DIGITS: usize = 30;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static DIGITS: Cell<usize> = const { Cell::new(DEFAULT_DIGITS) };
    static CONSTS: RefCell<Option<Consts>> = const { RefCell::new(None) };
}

/// Binary precision for a number of decimal digits, with a guard word.
fn bits_for(digits: usize) -> usize {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64
}

fn precision() -> usize {
    bits_for(DIGITS.with(Cell::get))
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| {
        let mut slot = c.borrow_mut();
        let cc = slot.get_or_insert_with(|| Consts::new().expect("constant cache"));
        f(cc)
    })
}

/// A binary floating-point number whose precision is the thread's working
/// precision at the time each operation runs.
#[derive(Clone)]
pub struct HighPrecision(BigFloat);

impl HighPrecision {
    /// Runs `f` with `digits` decimal digits of working precision on this
    /// thread, then restores the previous setting.
    pub fn with_digits<R>(digits: usize, f: impl FnOnce() -> R) -> R {
        assert!(digits >= MIN_DIGITS, "working precision must be at least {MIN_DIGITS} digits");
        let previous = DIGITS.with(|d| d.replace(digits));
        struct Restore(usize);
        impl Drop for Restore {
            fn drop(&mut self) {
                DIGITS.with(|d| d.set(self.0));
            }
        }
        let _restore = Restore(previous);
        f()
    }

    pub fn parse(s: &str) -> Self {
        let p = precision();
        HighPrecision(with_consts(|cc| BigFloat::parse(s, Radix::Dec, p, RM, cc)))
    }

    pub fn inner(&self) -> &BigFloat {
        &self.0
    }
}

impl Debug for HighPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_rational() {
            Some(q) => f.write_str(&format_rational(&q, 20)),
            None => write!(f, "{}", self.0),
        }
    }
}

impl fmt::Display for HighPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(DIGITS.with(Cell::get)))
    }
}

impl PartialEq for HighPrecision {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for HighPrecision {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! binary_op {
    ($tr:ident, $method:ident) => {
        impl $tr for HighPrecision {
            type Output = HighPrecision;

            fn $method(self, rhs: HighPrecision) -> HighPrecision {
                HighPrecision(self.0.$method(&rhs.0, precision(), RM))
            }
        }
    };
}

binary_op!(Add, add);
binary_op!(Sub, sub);
binary_op!(Mul, mul);
binary_op!(Div, div);

impl Neg for HighPrecision {
    type Output = HighPrecision;

    fn neg(self) -> HighPrecision {
        HighPrecision(self.0.neg())
    }
}

impl Real for HighPrecision {
    fn from_f64(x: f64) -> Self {
        HighPrecision(BigFloat::from_f64(x, precision()))
    }

    fn from_i64(n: i64) -> Self {
        HighPrecision(BigFloat::from_i64(n, precision()))
    }

    fn from_bigint(n: &BigInt) -> Self {
        if let Some(small) = n.to_i64() {
            return Self::from_i64(small);
        }
        let (sign, words) = n.to_u64_digits();
        let bits = words.len() * 64;
        let mut x = BigFloat::from_words(&words, FloatSign::Pos, bits as i32);
        x.set_precision(precision(), RM).expect("precision");
        if sign == Sign::Minus {
            x.inv_sign();
        }
        HighPrecision(x)
    }

    fn exp(&self) -> Self {
        let p = precision();
        HighPrecision(with_consts(|cc| self.0.exp(p, RM, cc)))
    }

    fn ln(&self) -> Self {
        let p = precision();
        HighPrecision(with_consts(|cc| self.0.ln(p, RM, cc)))
    }

    fn sqrt(&self) -> Self {
        HighPrecision(self.0.sqrt(precision(), RM))
    }

    fn abs(&self) -> Self {
        HighPrecision(self.0.abs())
    }

    fn pi() -> Self {
        let p = precision();
        HighPrecision(with_consts(|cc| cc.pi(p, RM)))
    }

    fn to_f64(&self) -> f64 {
        match self.to_rational() {
            Some(q) => rational_to_f64(&q),
            None => f64::NAN,
        }
    }

    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    fn working_digits() -> usize {
        DIGITS.with(Cell::get)
    }

    /// The mantissa words, read as an integer `m` with `64·len` bits, give
    /// the value `m · 2^(e - 64·len)`.
    fn to_rational(&self) -> Option<BigRational> {
        if self.0.is_zero() {
            return Some(BigRational::zero());
        }
        let (words, _, sign, exponent, _) = self.0.as_raw_parts()?;
        let m = BigInt::from_slice(
            Sign::Plus,
            &words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<u32>>(),
        );
        let shift = exponent as i64 - 64 * words.len() as i64;
        let mut q = if shift >= 0 {
            BigRational::from_integer(m << shift as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-shift) as usize)
        };
        if sign == FloatSign::Neg {
            q = -q;
        }
        Some(q)
    }
}

fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    // keep 64 significant bits, then scale
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = 64 - (nb - db);
    let scaled = if shift >= 0 {
        (q.numer() << shift as usize) / q.denom()
    } else {
        q.numer() / (q.denom() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32))
}

/// Decimal rendering of an exact rational to `significant` digits, rounding
/// half to even.
pub fn format_rational(q: &BigRational, significant: usize) -> String {
    format_rational_with(q, significant, Rounding::NearestEven)
}

pub fn format_rational_with(q: &BigRational, significant: usize, rounding: Rounding) -> String {
    let significant = significant.max(1);
    if q.is_zero() {
        return "0".to_string();
    }
    let negative = q.is_negative();
    let q = q.abs();
    let ten = BigInt::from(10);
    let pow10 = |k: i64| -> BigRational {
        if k >= 0 {
            BigRational::from_integer(num_traits::pow(ten.clone(), k as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(ten.clone(), (-k) as usize))
        }
    };
    let mut e = ((q.numer().bits() as f64 - q.denom().bits() as f64) * std::f64::consts::LOG10_2).floor() as i64;
    while pow10(e) > q {
        e -= 1;
    }
    while pow10(e + 1) <= q {
        e += 1;
    }
    let scaled = &q * pow10(significant as i64 - 1 - e);
    let (int, frac): (BigInt, BigInt) = scaled.numer().div_rem(scaled.denom());
    let twice: BigInt = frac * 2u32;
    let mut digits = match twice.cmp(scaled.denom()) {
        _ if rounding == Rounding::TowardZero => int,
        Ordering::Greater => int + 1,
        Ordering::Less => int,
        Ordering::Equal if int.is_odd() => int + 1,
        Ordering::Equal => int,
    };
    if digits == num_traits::pow(ten.clone(), significant) {
        digits /= 10;
        e += 1;
    }
    let s = digits.to_string();
    let body = if !(-20..=20).contains(&e) {
        let (head, tail) = s.split_at(1);
        if tail.is_empty() {
            format!("{head}e{e}")
        } else {
            format!("{head}.{tail}e{e}")
        }
    } else if e >= 0 {
        let point = e as usize + 1;
        if point >= s.len() {
            format!("{}{}", s, "0".repeat(point - s.len()))
        } else {
            format!("{}.{}", &s[..point], &s[point..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), s)
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_parts_convention() {
        let one = HighPrecision::from_i64(1);
        assert_eq!(one.to_rational(), Some(BigRational::one()));
        let x = HighPrecision::from_f64(-0.375);
        assert_eq!(x.to_rational(), Some(BigRational::new((-3).into(), 8.into())));
        assert_eq!(x.to_f64(), -0.375);
    }

    #[test]
    fn big_integers_round_trip() {
        let n: BigInt = BigInt::from(3).pow(60) * -1;
        assert_eq!(HighPrecision::from_bigint(&n).to_rational(), Some(BigRational::from_integer(n)));
    }

    #[test]
    fn pi_to_forty_digits() {
        let pi = HighPrecision::pi();
        assert_eq!(pi.to_decimal(40), "3.141592653589793238462643383279502884197");
    }

    #[test]
    fn exp_and_ln_are_inverse() {
        let x = HighPrecision::parse("0.7249751250");
        let back = x.exp().ln();
        let err = (back - x).abs();
        assert!(err < HighPrecision::parse("1e-45"));
    }

    #[test]
    fn precision_scope_is_restored() {
        let inside = HighPrecision::with_digits(80, HighPrecision::working_digits);
        assert_eq!(inside, 80);
        assert_eq!(HighPrecision::working_digits(), DEFAULT_DIGITS);
    }

    #[test]
    fn formatting_rounds_and_places_the_point() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(format_rational(&q(7249751250, 1_000_000_000), 10), "7.249751250");
        assert_eq!(format_rational(&q(2337516194, 100_000_000_000), 10), "0.02337516194");
        assert_eq!(format_rational(&q(-5, 2), 1), "-2");
        assert_eq!(format_rational(&q(999, 1), 2), "1000");
        assert_eq!(format_rational(&q(1, 3), 3), "0.333");
        assert_eq!(format_rational(&q(0, 3), 3), "0");
        assert_eq!(format_rational_with(&q(38484428769, 10_000_000_000), 10, Rounding::TowardZero), "3.848442876");
        assert_eq!(format_rational_with(&q(-2, 3), 2, Rounding::TowardZero), "-0.66");
    }
}
