//! Reference data and independent checks shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::test_runner::{Config, FileFailurePersistence, RngAlgorithm, RngSeed};

pub const DH_UNLABELED_UNROOTED: [u64; 18] = [
    1,
    1,
    2,
    6,
    18,
    73,
    308,
    1484,
    7492,
    40010,
    220676,
    1253940,
    7282316,
    43096792,
    259019070,
    1577653196,
    9720170360,
    60492629435,
];

pub const TLP_UNLABELED_UNROOTED: [u64; 20] = [
    1, 1, 2, 5, 12, 32, 82, 227, 629, 1840, 5456, 16701, 51939, 164688, 529070, 1722271, 5664786, 18813360, 62996841,
    212533216,
];

pub const TLP_LABELED_UNROOTED: [u64; 12] =
    [1, 1, 4, 35, 361, 4482, 68027, 1238841, 26416474, 646139853, 17837851021, 548713086352];

pub const DH_GROWTH: &str = "7.249751250";
pub const TLP_GROWTH: &str = "3.848442876";
pub const DH_UNROOTED_CONSTANT: &str = "0.02337516194";
pub const TLP_UNROOTED_CONSTANT: &str = "0.70955825396";

pub fn big(xs: &[u64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

/// Proptest configuration with a fixed seed and no failure files.
pub fn seeded(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_algorithm: RngAlgorithm::ChaCha,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..Config::default()
    }
}

/// Growth constant from exact coefficients `a[0..]` (with `a[k]` the count
/// at size `k + 1`) behaving like `C·γ^n·n^(-5/2)`, independent of any
/// floating-point library: the squared corrected ratios
/// `(a_{n+1}/a_n)²·((n+1)/n)⁵ = γ²(1 + O(1/n²))` are extrapolated to
/// `1/n = 0` by Neville's scheme over `points` sizes spaced `step` apart
/// and ending at `last`, all in exact rationals.
pub fn extrapolated_growth(a: &[BigInt], last: usize, points: usize, step: usize) -> f64 {
    let term = |n: usize| &a[n - 1];
    let ratio_sq = |n: usize| {
        let r = BigRational::new(term(n + 1).clone(), term(n).clone());
        let s = BigRational::new(BigInt::from(n + 1), BigInt::from(n));
        r.clone() * r * num_traits::pow(s, 5)
    };
    let ns: Vec<usize> = (0..points).map(|k| last - k * step).collect();
    let xs: Vec<BigRational> = ns.iter().map(|&n| BigRational::new(BigInt::one(), BigInt::from(n))).collect();
    let mut p: Vec<BigRational> = ns.iter().map(|&n| ratio_sq(n)).collect();
    for level in 1..points {
        for i in 0..points - level {
            let j = i + level;
            // value at x = 0 of the interpolant through points i..=j
            let num = xs[j].clone() * p[i].clone() - xs[i].clone() * p[i + 1].clone();
            p[i] = num / (xs[j].clone() - xs[i].clone());
        }
    }
    rational_to_f64(&p[0]).sqrt()
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    let shift = q.numer().bits() as i64 - q.denom().bits() as i64 - 60;
    let scaled = if shift >= 0 {
        BigRational::new(q.numer().clone(), q.denom() << shift as usize)
    } else {
        BigRational::new(q.numer() << (-shift) as usize, q.denom().clone())
    };
    let int = scaled.numer() / scaled.denom();
    int.to_f64().unwrap() * 2f64.powi(shift as i32)
}

/// Whether `value` begins with the digits of the truncated decimal `printed`.
pub fn matches_printed_digits(value: &str, printed: &str) -> bool {
    value.starts_with(printed)
}

/// Naive Pólya exponential `Π_k (1 - z^k)^(-a_k)` via binomial series, for
/// nonnegative integer `a` with `a[0] = 0`.
pub fn naive_polya_exp(a: &[BigInt]) -> Vec<BigInt> {
    let order = a.len() - 1;
    let mut acc = vec![BigInt::zero(); order + 1];
    acc[0] = BigInt::one();
    for k in 1..=order {
        if a[k].is_zero() {
            continue;
        }
        // (1 - z^k)^(-m) = Σ_j C(m + j - 1, j) z^(kj)
        let m = &a[k];
        let mut factor = vec![BigInt::zero(); order + 1];
        let mut c = BigInt::one();
        for j in 0..=order / k {
            factor[k * j] = c.clone();
            c = c * (m + BigInt::from(j)) / BigInt::from(j + 1);
        }
        let mut next = vec![BigInt::zero(); order + 1];
        for (i, x) in acc.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, f) in factor.iter().enumerate().take(order + 1 - i) {
                next[i + j] += x * f;
            }
        }
        acc = next;
    }
    acc
}
