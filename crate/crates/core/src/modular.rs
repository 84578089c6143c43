//! Arithmetic modulo word-sized primes and Chinese-remainder reconstruction.
//!
//! Large enumerations run the same grammar once per prime with [`ModP`]
//! coefficients. The integers are then rebuilt with [`Reconstruction`]. No a
//! priori size bound is needed: primes keep being added until every
//! coefficient is unchanged by two further primes.

use std::cell::{Cell, RefCell};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::{Field, Scalar};

/// Moduli stay below 2^62 so that sixteen products fit a `u128`.
pub const PRIME_CEILING: u64 = 1 << 62;

thread_local! {
    static MODULUS: Cell<u64> = const { Cell::new(0) };
    static INVERSES: RefCell<Vec<u64>> = const { RefCell::new(Vec::new()) };
}

#[inline]
fn modulus() -> u64 {
    let p = MODULUS.with(Cell::get);
    debug_assert!(p != 0, "no modulus installed on this thread");
    p
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert_eq!(r0, 1, "{a} is not invertible modulo {p}");
    t0.rem_euclid(p as i128) as u64
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(small) {
            return n == small;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below [`PRIME_CEILING`] in decreasing order.
pub fn primes_descending() -> impl Iterator<Item = u64> {
    (1..PRIME_CEILING / 2).map(|k| PRIME_CEILING - 2 * k + 1).filter(|&n| is_prime(n))
}

/// Installs `p` as the modulus for [`ModP`] on the current thread and
/// precomputes the inverses of `1..=inverse_limit`. The previous modulus is
/// restored when the guard drops.
pub struct ModulusGuard {
    previous: u64,
    previous_inverses: Vec<u64>,
}

impl ModulusGuard {
    pub fn install(p: u64, inverse_limit: usize) -> Self {
        assert!(is_prime(p) && p < PRIME_CEILING, "{p} is not a usable prime modulus");
        assert!((inverse_limit as u64) < p);
        let mut inv = vec![0u64; inverse_limit + 1];
        if inverse_limit >= 1 {
            inv[1] = 1;
        }
        for i in 2..=inverse_limit {
            let i64_ = i as u64;
            inv[i] = mul_mod(p - p / i64_, inv[(p % i64_) as usize], p);
        }
        let previous = MODULUS.with(|m| m.replace(p));
        let previous_inverses = INVERSES.with(|t| std::mem::replace(&mut *t.borrow_mut(), inv));
        ModulusGuard { previous, previous_inverses }
    }
}

impl Drop for ModulusGuard {
    fn drop(&mut self) {
        MODULUS.with(|m| m.set(self.previous));
        let old = std::mem::take(&mut self.previous_inverses);
        INVERSES.with(|t| *t.borrow_mut() = old);
    }
}

/// An element of Z/pZ for the prime installed on the current thread.
/// Values are kept canonical in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[repr(transparent)]
pub struct ModP(u64);

impl ModP {
    pub fn new(v: u64) -> Self {
        ModP(v % modulus())
    }

    pub fn residue(self) -> u64 {
        self.0
    }

    pub fn inverse(self) -> Self {
        ModP(inv_mod(self.0, modulus()))
    }
}

impl Zero for ModP {
    fn zero() -> Self {
        ModP(0)
    }

    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for ModP {
    fn one() -> Self {
        ModP(1)
    }
}

impl Add for ModP {
    type Output = ModP;

    #[inline]
    fn add(self, rhs: ModP) -> ModP {
        let p = modulus();
        let s = self.0 + rhs.0;
        ModP(if s >= p { s - p } else { s })
    }
}

impl Sub for ModP {
    type Output = ModP;

    #[inline]
    fn sub(self, rhs: ModP) -> ModP {
        if self.0 >= rhs.0 {
            ModP(self.0 - rhs.0)
        } else {
            ModP(self.0 + modulus() - rhs.0)
        }
    }
}

impl Neg for ModP {
    type Output = ModP;

    fn neg(self) -> ModP {
        if self.0 == 0 {
            self
        } else {
            ModP(modulus() - self.0)
        }
    }
}

impl Mul for ModP {
    type Output = ModP;

    #[inline]
    fn mul(self, rhs: ModP) -> ModP {
        ModP(mul_mod(self.0, rhs.0, modulus()))
    }
}

impl Div for ModP {
    type Output = ModP;

    fn div(self, rhs: ModP) -> ModP {
        assert!(!rhs.is_zero(), "division by zero modulo a prime");
        self * rhs.inverse()
    }
}

impl AddAssign<&ModP> for ModP {
    #[inline]
    fn add_assign(&mut self, rhs: &ModP) {
        *self = *self + *rhs;
    }
}

impl SubAssign<&ModP> for ModP {
    #[inline]
    fn sub_assign(&mut self, rhs: &ModP) {
        *self = *self - *rhs;
    }
}

impl Scalar for ModP {
    fn from_u64(n: u64) -> Self {
        ModP::new(n)
    }

    fn from_bigint(n: &BigInt) -> Self {
        let p = modulus();
        let r = n.mod_floor(&BigInt::from(p));
        ModP(r.to_u64().expect("residue fits a word"))
    }

    fn mul_ref(&self, other: &Self) -> Self {
        *self * *other
    }

    fn div_u64(&self, d: u64) -> Self {
        let p = modulus();
        let inv = INVERSES.with(|t| t.borrow().get(d as usize).copied());
        let inv = match inv {
            Some(v) if v != 0 => v,
            _ => inv_mod(d, p),
        };
        ModP(mul_mod(self.0, inv, p))
    }

    /// Products are accumulated unreduced: the low and high words of each
    /// 128-bit product go to separate accumulators, so nothing overflows
    /// for any realistic length.
    #[inline]
    fn dot<'a, I>(pairs: I) -> Self
    where
        I: Iterator<Item = (&'a Self, &'a Self)>,
    {
        let mut lo: u128 = 0;
        let mut hi: u128 = 0;
        for (x, y) in pairs {
            let prod = x.0 as u128 * y.0 as u128;
            lo += prod as u64 as u128;
            hi += prod >> 64;
        }
        ModP(fold_words(lo, hi, modulus()))
    }

    /// Sixteen products below `p^2 < 2^124` fit a `u128`, so blocks of
    /// sixteen are summed with plain adds before splitting into words.
    fn dot_rev(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let n = a.len();
        let mut lo: u128 = 0;
        let mut hi: u128 = 0;
        let mut i = 0;
        while i + 16 <= n {
            let bb = &b[n - i - 16..n - i];
            let aa = &a[i..i + 16];
            let mut acc: u128 = 0;
            for k in 0..16 {
                acc = acc.wrapping_add(aa[k].0 as u128 * bb[15 - k].0 as u128);
            }
            lo += acc as u64 as u128;
            hi += acc >> 64;
            i += 16;
        }
        for k in i..n {
            let prod = a[k].0 as u128 * b[n - 1 - k].0 as u128;
            lo += prod as u64 as u128;
            hi += prod >> 64;
        }
        ModP(fold_words(lo, hi, modulus()))
    }
}

/// `(hi·2^64 + lo) mod p`.
#[inline]
fn fold_words(lo: u128, hi: u128, p: u64) -> u64 {
    let p128 = p as u128;
    let two64 = ((1u128 << 64) % p128) as u64;
    let hi = mul_mod((hi % p128) as u64, two64, p);
    ((lo % p128 + hi as u128) % p128) as u64
}

/// `Σ x_i·y_i mod p` over raw residues, reduced once.
fn dot_raw(xs: &[u64], ys: &[u64], p: u64) -> u64 {
    let mut lo: u128 = 0;
    let mut hi: u128 = 0;
    for (x, y) in xs.iter().zip(ys) {
        let prod = *x as u128 * *y as u128;
        lo += prod as u64 as u128;
        hi += prod >> 64;
    }
    fold_words(lo, hi, p)
}

impl Field for ModP {}

struct CoefficientState {
    /// Mixed-radix digits with respect to the primes used so far.
    digits: Vec<u64>,
    /// Digit class observed since the value stopped changing: `Some(false)`
    /// for trailing zeros (nonnegative value), `Some(true)` for trailing
    /// `p - 1` digits (negative value).
    tail: Option<bool>,
    confirmations: u8,
    settled_at: usize,
}

/// Incremental Garner reconstruction of a vector of signed integers from
/// their residues modulo successive primes.
pub struct Reconstruction {
    primes: Vec<u64>,
    coefficients: Vec<CoefficientState>,
    confirmations_needed: u8,
}

impl Reconstruction {
    pub fn new(len: usize) -> Self {
        Reconstruction {
            primes: Vec::new(),
            coefficients: (0..len)
                .map(|_| CoefficientState { digits: Vec::new(), tail: None, confirmations: 0, settled_at: 0 })
                .collect(),
            confirmations_needed: 2,
        }
    }

    pub fn primes_used(&self) -> usize {
        self.primes.len()
    }

    /// Feeds one residue vector. Returns true once every coefficient is
    /// settled.
    pub fn push(&mut self, p: u64, residues: &[u64]) -> bool {
        assert_eq!(residues.len(), self.coefficients.len());
        assert!(!self.primes.contains(&p), "prime {p} fed twice");
        // prefix[i] = p_0 * ... * p_{i-1} mod p
        let mut prefix = Vec::with_capacity(self.primes.len() + 1);
        let mut acc = 1 % p;
        for &q in &self.primes {
            prefix.push(acc);
            acc = mul_mod(acc, q % p, p);
        }
        let inv_product = inv_mod(acc, p);
        let needed = self.confirmations_needed;
        for (state, &r) in self.coefficients.iter_mut().zip(residues) {
            if state.confirmations >= needed {
                continue;
            }
            // Earlier digits are below earlier (larger) primes, and fit the
            // accumulator unreduced.
            let partial = dot_raw(&state.digits, &prefix, p);
            let diff = (r % p + p - partial) % p;
            let digit = mul_mod(diff, inv_product, p);
            let class = if digit == 0 {
                Some(false)
            } else if digit == p - 1 {
                Some(true)
            } else {
                None
            };
            match (class, state.tail) {
                (Some(c), Some(t)) if c == t && state.confirmations > 0 => {
                    state.confirmations += 1;
                }
                (Some(c), _) => {
                    state.tail = Some(c);
                    state.confirmations = 1;
                    state.settled_at = state.digits.len();
                }
                (None, _) => {
                    state.tail = None;
                    state.confirmations = 0;
                }
            }
            state.digits.push(digit);
        }
        self.primes.push(p);
        self.is_settled()
    }

    pub fn is_settled(&self) -> bool {
        self.coefficients.iter().all(|s| s.confirmations >= self.confirmations_needed)
    }

    /// The reconstructed integers. Panics if called before [`is_settled`].
    ///
    /// [`is_settled`]: Reconstruction::is_settled
    pub fn values(&self) -> Vec<BigInt> {
        assert!(self.is_settled(), "reconstruction has not converged");
        self.coefficients
            .iter()
            .map(|s| {
                let k = s.settled_at;
                let mut x = BigInt::zero();
                for i in (0..k).rev() {
                    x = x * self.primes[i] + s.digits[i];
                }
                if s.tail == Some(true) {
                    let modulus: BigInt = self.primes[..k].iter().map(|&q| BigInt::from(q)).product();
                    x -= modulus;
                }
                x
            })
            .collect()
    }
}
