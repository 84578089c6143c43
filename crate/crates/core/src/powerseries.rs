//! Truncated formal power series.
//!
//! A [`Series`] holds the coefficients of `z^0 .. z^order` exactly. Binary
//! operations truncate to the smaller order of their operands.

use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::scalar::{Field, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("constant term is zero, so the series has no reciprocal")]
    ZeroConstantTerm,
    #[error("constant term must vanish for exponentials and set constructions")]
    NonzeroConstantTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Series<T> {
    /// The zero series known through `z^order`.
    pub fn zero(order: usize) -> Self {
        Series { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = T::one();
        s
    }

    /// The series `z`.
    pub fn atom(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = T::one();
        }
        s
    }

    /// Panics on an empty vector; a series always knows its constant term.
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Series { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &T {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Index of the first nonzero coefficient, or `None` if every known
    /// coefficient is zero.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Series { coeffs: self.coeffs[..=order].to_vec() }
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> Series<U> {
        Series { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn add_signed(&self, other: &Self, sign: Sign) -> Self {
        let order = self.order().min(other.order());
        let coeffs = self.coeffs[..=order]
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let mut c = a.clone();
                match sign {
                    Sign::Plus => c += b,
                    Sign::Minus => c -= b,
                }
                c
            })
            .collect();
        Series { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let a = &self.coeffs[..=order];
        let b = &other.coeffs[..=order];
        let coeffs = (0..=order).map(|n| T::dot_rev(&a[..=n], &b[..=n])).collect();
        Series { coeffs }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|a| a.mul_ref(c))
    }

    /// `A(z^i)`, known through the same order as `A`.
    pub fn substitute_power(&self, i: usize) -> Self {
        assert!(i >= 1, "substitution power must be positive");
        let mut out = Self::zero(self.order());
        for (k, a) in self.coeffs.iter().enumerate() {
            match k.checked_mul(i) {
                Some(j) if j <= self.order() => out.coeffs[j] = a.clone(),
                _ => break,
            }
        }
        out
    }

    /// The Pólya exponential `exp(Σ_{i≥1} A(z^i)/i)`, the generating
    /// function of multisets of `A`-objects. Over the integers every division
    /// in the recurrence is exact.
    pub fn polya_exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.order();
        // weighted[k] = Σ_{d | k} d·a_d
        let mut weighted = vec![T::zero(); order + 1];
        for d in 1..=order {
            if self.coeffs[d].is_zero() {
                continue;
            }
            let term = self.coeffs[d].mul_ref(&T::from_u64(d as u64));
            for k in (d..=order).step_by(d) {
                weighted[k] += &term;
            }
        }
        let mut e = vec![T::zero(); order + 1];
        e[0] = T::one();
        for n in 1..=order {
            e[n] = T::dot_rev(&weighted[1..=n], &e[..n]).div_u64(n as u64);
        }
        Ok(Series { coeffs: e })
    }

    /// Multisets of exactly `k` elements, from the cycle index of the
    /// symmetric group: `k·S_k(z) = Σ_{i=1}^{k} A(z^i)·S_{k-i}(z)`.
    pub fn set_exactly_unlabeled(&self, k: usize) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.order();
        let mut sets: Vec<Self> = vec![Self::one(order)];
        let powers: Vec<Self> = (1..=k).map(|i| self.substitute_power(i)).collect();
        for j in 1..=k {
            let mut acc = Self::zero(order);
            for i in 1..=j {
                acc = acc.add_signed(&powers[i - 1].mul(&sets[j - i]), Sign::Plus);
            }
            sets.push(acc.map(|c| c.div_u64(j as u64)));
        }
        Ok(sets.pop().expect("k+1 entries"))
    }
}

impl<T: Field> Series<T> {
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0].is_zero() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let order = self.order();
        let a0_inv = T::one() / self.coeffs[0].clone();
        let mut r = vec![T::zero(); order + 1];
        r[0] = a0_inv.clone();
        for n in 1..=order {
            let s = T::dot_rev(&self.coeffs[1..=n], &r[..n]);
            r[n] = -(s.mul_ref(&a0_inv));
        }
        Ok(Series { coeffs: r })
    }

    /// `exp(A)` for `A(0) = 0`, via `n·e_n = Σ_{k=1}^{n} k·a_k·e_{n-k}`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let order = self.order();
        let weighted: Vec<T> = self.coeffs.iter().enumerate().map(|(k, a)| a.mul_ref(&T::from_u64(k as u64))).collect();
        let mut e = vec![T::zero(); order + 1];
        e[0] = T::one();
        for n in 1..=order {
            e[n] = T::dot_rev(&weighted[1..=n], &e[..n]).div_u64(n as u64);
        }
        Ok(Series { coeffs: e })
    }
}

impl<T: Scalar> Add for &Series<T> {
    type Output = Series<T>;

    fn add(self, rhs: Self) -> Series<T> {
        self.add_signed(rhs, Sign::Plus)
    }
}

impl<T: Scalar> Sub for &Series<T> {
    type Output = Series<T>;

    fn sub(self, rhs: Self) -> Series<T> {
        self.add_signed(rhs, Sign::Minus)
    }
}

impl<T: Scalar> Neg for &Series<T> {
    type Output = Series<T>;

    fn neg(self) -> Series<T> {
        self.map(|c| -c.clone())
    }
}
