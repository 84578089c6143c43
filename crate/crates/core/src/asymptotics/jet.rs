//! Truncated bivariate Taylor expansions.
//!
//! A [`Jet`] is a polynomial in `(u, v)` of total degree at most
//! [`DEGREE`], standing for a function near a base point `(z0, y0)` with
//! `z = z0 + u`, `y = y0 + v`. Evaluating a closed-form expression on jets
//! yields all its partial derivatives up to that order exactly, up to
//! rounding, with no finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::Real;

pub const DEGREE: usize = 4;
const W: usize = DEGREE + 1;

#[derive(Clone, Debug)]
pub struct Jet<R> {
    /// `c[i][j]` multiplies `u^i v^j`; entries with `i + j > DEGREE` are
    /// zero.
    c: [[R; W]; W],
}

impl<R: Real> Jet<R> {
    pub fn constant(x: R) -> Self {
        let mut c: [[R; W]; W] = std::array::from_fn(|_| std::array::from_fn(|_| R::zero()));
        c[0][0] = x;
        Jet { c }
    }

    /// The first variable, `z0 + u`.
    pub fn var_z(z0: R) -> Self {
        let mut j = Self::constant(z0);
        j.c[1][0] = R::one();
        j
    }

    /// The second variable, `y0 + v`.
    pub fn var_y(y0: R) -> Self {
        let mut j = Self::constant(y0);
        j.c[0][1] = R::one();
        j
    }

    /// A function of `z` alone, from its Taylor coefficients at `z0`.
    pub fn from_z_taylor(t: &[R; W]) -> Self {
        let mut j = Self::constant(R::zero());
        for (i, x) in t.iter().enumerate() {
            j.c[i][0] = x.clone();
        }
        j
    }

    pub fn value(&self) -> &R {
        &self.c[0][0]
    }

    /// Taylor coefficient of `u^i v^j`.
    pub fn coeff(&self, i: usize, j: usize) -> &R {
        &self.c[i][j]
    }

    /// `∂^{i+j} / ∂z^i ∂y^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> R {
        let fact = |k: usize| (1..=k as i64).product::<i64>();
        self.c[i][j].clone() * R::from_i64(fact(i) * fact(j))
    }

    pub fn scale(&self, k: &R) -> Self {
        let mut out = self.clone();
        for row in out.c.iter_mut() {
            for x in row.iter_mut() {
                *x = x.clone() * k.clone();
            }
        }
        out
    }

    fn nilpotent_part(&self) -> Self {
        let mut h = self.clone();
        h.c[0][0] = R::zero();
        h
    }

    /// `Σ_k a_k h^k` for the nilpotent part `h` of `self`, with `a_k`
    /// supplied by `coeffs` for `k = 0..=DEGREE`.
    fn compose(&self, coeffs: [R; W]) -> Self {
        let h = self.nilpotent_part();
        let mut acc = Self::constant(coeffs[DEGREE].clone());
        for k in (0..DEGREE).rev() {
            acc = acc * h.clone() + Self::constant(coeffs[k].clone());
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let e0 = self.value().exp();
        let mut coeffs: [R; W] = std::array::from_fn(|_| R::zero());
        let mut fact = 1i64;
        for (k, c) in coeffs.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as i64;
            }
            *c = e0.clone() / R::from_i64(fact);
        }
        self.compose(coeffs)
    }

    pub fn recip(&self) -> Self {
        let inv = R::one() / self.value().clone();
        let mut coeffs: [R; W] = std::array::from_fn(|_| R::zero());
        let mut p = inv.clone();
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = if k % 2 == 0 { p.clone() } else { -p.clone() };
            p = p * inv.clone();
        }
        self.compose(coeffs)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::constant(R::one());
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl<R: Real> Add for Jet<R> {
    type Output = Jet<R>;

    fn add(mut self, rhs: Jet<R>) -> Jet<R> {
        for i in 0..W {
            for j in 0..W - i {
                self.c[i][j] = self.c[i][j].clone() + rhs.c[i][j].clone();
            }
        }
        self
    }
}

impl<R: Real> Sub for Jet<R> {
    type Output = Jet<R>;

    fn sub(self, rhs: Jet<R>) -> Jet<R> {
        self + (-rhs)
    }
}

impl<R: Real> Neg for Jet<R> {
    type Output = Jet<R>;

    fn neg(mut self) -> Jet<R> {
        for row in self.c.iter_mut() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        self
    }
}

impl<R: Real> Mul for Jet<R> {
    type Output = Jet<R>;

    fn mul(self, rhs: Jet<R>) -> Jet<R> {
        let mut out = Jet::constant(R::zero());
        for i1 in 0..W {
            for j1 in 0..W - i1 {
                if self.c[i1][j1].is_zero() {
                    continue;
                }
                for i2 in 0..W - i1 - j1 {
                    for j2 in 0..W - i1 - j1 - i2 {
                        if rhs.c[i2][j2].is_zero() {
                            continue;
                        }
                        let t = self.c[i1][j1].clone() * rhs.c[i2][j2].clone();
                        out.c[i1 + i2][j1 + j2] = out.c[i1 + i2][j1 + j2].clone() + t;
                    }
                }
            }
        }
        out
    }
}

impl<R: Real> Div for Jet<R> {
    type Output = Jet<R>;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet<R>) -> Jet<R> {
        self * rhs.recip()
    }
}

/// Taylor coefficients at `w0` of the polynomial with coefficients `p`
/// (constant term first), up to `(w - w0)^DEGREE`.
pub fn polynomial_taylor<R: Real>(p: &[R], w0: &R) -> [R; W] {
    // Repeated synthetic division by (w - w0).
    let mut work: Vec<R> = p.to_vec();
    std::array::from_fn(|_| {
        if work.is_empty() {
            return R::zero();
        }
        let mut acc = R::zero();
        let mut quotient = Vec::with_capacity(work.len().saturating_sub(1));
        for c in work.iter().rev() {
            acc = acc * w0.clone() + c.clone();
            quotient.push(acc.clone());
        }
        let remainder = quotient.pop().unwrap_or_else(R::zero);
        quotient.reverse();
        work = quotient;
        remainder
    })
}

/// Taylor coefficients of `(z0 + u)^i` in `u`.
pub fn power_taylor<R: Real>(z0: &R, i: u32) -> [R; W] {
    std::array::from_fn(|k| {
        let k = k as u32;
        if k > i {
            return R::zero();
        }
        let binom = (0..k).fold(1i64, |b, t| b * (i - t) as i64 / (t as i64 + 1));
        R::from_i64(binom) * z0.powi(i - k)
    })
}

/// `P(w(u))` for a polynomial `P` and a series `w` in `u`, both truncated.
pub fn compose_polynomial<R: Real>(p: &[R], w: &[R; W]) -> [R; W] {
    let taylor = polynomial_taylor(p, &w[0]);
    let mut delta = w.clone();
    delta[0] = R::zero();
    let mut out: [R; W] = std::array::from_fn(|_| R::zero());
    // power = delta^k
    let mut power: [R; W] = std::array::from_fn(|k| if k == 0 { R::one() } else { R::zero() });
    for coeff in taylor.iter() {
        for (o, x) in out.iter_mut().zip(&power) {
            *o = o.clone() + coeff.clone() * x.clone();
        }
        power = mul_series(&power, &delta);
    }
    out
}

pub fn mul_series<R: Real>(a: &[R; W], b: &[R; W]) -> [R; W] {
    std::array::from_fn(|n| (0..=n).fold(R::zero(), |acc, k| acc + a[k].clone() * b[n - k].clone()))
}
