//! Singularity analysis of the unlabeled generating functions.
//!
//! The rooted series `y(z)` (the parallel series class for 3-leaf powers,
//! the clique class for distance-hereditary graphs) satisfies `y = F(z, y)`
//! with `F` built from closed forms and an analytic correction `B(z)` that
//! only involves `y` at `z^i`, `i ≥ 2`. Replacing those terms by the
//! degree-`m` truncation of the exact series gives a system that is solved
//! for the branch point `(ρ, τ)` where `F_y = 1`. Near it,
//!
//! ```text
//! y(z) = τ - c·Z + d·Z² + e·Z³ + O(Z⁴),   Z = √(1 - z/ρ),
//! ```
//!
//! and the unrooted series `U(z) = G(z, y(z))` loses its `Z` term, so its
//! coefficients decay like `n^(-5/2)` with constant `3e′/(4√π)`.

pub mod jet;
pub mod real;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::grammars::{build_grammar, CountTable, GraphClass, Rooting, Variant};
use crate::species::{translate_unlabeled, SpeciesError};
pub use jet::Jet;
use jet::{compose_polynomial, mul_series, power_taylor, DEGREE};
pub use real::{format_rational, format_rational_with, HighPrecision, Real, Rounding, DEFAULT_DIGITS, MIN_DIGITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("evaluation point crosses the pole 1 - z - 2y = 0")]
    PoleCrossed,
    #[error("Newton iteration did not converge; last iterate z = {z}, y = {y}")]
    NewtonDiverged { z: f64, y: f64 },
    #[error("F_yy vanishes at the branch point")]
    DegenerateBranch,
    #[error("square-root term of the unrooted expansion does not cancel: c′ = {c_prime}")]
    CancellationFailed { c_prime: String },
    #[error("truncation {m} is too small; at least 5 is required")]
    TruncationTooSmall { m: usize },
    #[error("branch point did not stabilize up to truncation {m}")]
    NotStabilized { m: usize },
    #[error(transparent)]
    Species(#[from] SpeciesError),
}

/// Exact unlabeled series feeding the characteristic equation of a class.
#[derive(Debug, Clone)]
pub struct ClassSeries {
    pub class: GraphClass,
    /// Coefficients of `y(z)`.
    pub y: Vec<BigInt>,
    /// Coefficients of the polynomial substituted at `z^i`, `i ≥ 2`, in
    /// `B`: `y` itself for 3-leaf powers, `z + K + S_X` for
    /// distance-hereditary graphs.
    pub aux: Vec<BigInt>,
}

impl ClassSeries {
    pub fn compute(class: GraphClass, order: usize) -> Result<Self, AsymptoticsError> {
        let g = build_grammar(class, Rooting::Rooted, Variant::Default).expect("default grammar");
        let s = translate_unlabeled::<BigInt>(&g.system, order)?;
        let (y, aux) = match class {
            GraphClass::ThreeLeafPower => {
                let y = s["S_X"].coeffs().to_vec();
                (y.clone(), y)
            }
            GraphClass::DistanceHereditary => {
                let y = s["K"].coeffs().to_vec();
                let mut aux: Vec<BigInt> = y.iter().zip(s["S_X"].coeffs()).map(|(k, x)| k + x).collect();
                aux[1] += 1;
                (y, aux)
            }
        };
        Ok(ClassSeries { class, y, aux })
    }

    pub fn order(&self) -> usize {
        self.y.len() - 1
    }

    /// Seed for Newton: the ratio estimate of `ρ` at index `n`, corrected
    /// for the `n^(-3/2)` factor, and the partial sum of `y` there.
    pub fn seed<R: Real>(&self, n: usize) -> (R, R) {
        let n = n.min(self.order() - 1);
        let z0 = ratio_estimate(&self.y, n);
        let z = R::from_f64(z0);
        let mut y = R::zero();
        let mut p = R::one();
        for a in &self.y[..=n] {
            y = y + R::from_bigint(a) * p.clone();
            p = p * z.clone();
        }
        (z, y)
    }
}

/// `a_n / a_{n+1} · (1 + 1/n)^(-3/2)`, which tends to `ρ` with error
/// `O(1/n²)` for coefficients behaving like `C·ρ^(-n)·n^(-3/2)`.
pub fn ratio_estimate(a: &[BigInt], n: usize) -> f64 {
    let ratio = (ln_bigint(&a[n]) - ln_bigint(&a[n + 1])).exp();
    ratio * (1.0 + 1.0 / n as f64).powf(-1.5)
}

/// Natural logarithm of a positive integer, to double precision.
pub fn ln_bigint(a: &BigInt) -> f64 {
    assert!(a.is_positive(), "logarithm of a non-positive integer");
    let bits = a.bits();
    if bits <= 64 {
        return a.to_f64().expect("small").ln();
    }
    let shift = bits - 64;
    let top = (a >> shift).to_f64().expect("64 bits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `y = F(z, y)` with the `z^i`, `i ≥ 2` contributions truncated to degree
/// `m`.
#[derive(Debug, Clone)]
pub struct CharacteristicEquation<R> {
    pub class: GraphClass,
    pub truncation: usize,
    aux: Vec<R>,
}

pub fn build_characteristic_equation<R: Real>(
    series: &ClassSeries,
    m: usize,
) -> Result<CharacteristicEquation<R>, AsymptoticsError> {
    if m < 5 {
        return Err(AsymptoticsError::TruncationTooSmall { m });
    }
    assert!(series.order() >= m, "series known to order {} < {m}", series.order());
    Ok(CharacteristicEquation {
        class: series.class,
        truncation: m,
        aux: series.aux[..=m].iter().map(R::from_bigint).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct BranchPoint<R> {
    pub rho: R,
    pub tau: R,
    /// `|F - y|` and `|F_y - 1|` at `(ρ, τ)`.
    pub residuals: (R, R),
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SingularExpansion<R> {
    pub tau: R,
    pub c: R,
    pub d: R,
    pub e: R,
    /// Largest coefficient of `F(z(Z), y(Z)) - y(Z)` through `Z³`.
    pub residual: R,
}

#[derive(Debug, Clone)]
pub struct UnrootedExpansion<R> {
    pub tau_prime: R,
    pub c_prime: R,
    pub d_prime: R,
    pub e_prime: R,
    /// `G_y(ρ, τ)`, which vanishes identically.
    pub g_y: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyExponent {
    MinusThreeHalves,
    MinusFiveHalves,
}

impl PolyExponent {
    pub fn value(self) -> f64 {
        match self {
            PolyExponent::MinusThreeHalves => -1.5,
            PolyExponent::MinusFiveHalves => -2.5,
        }
    }
}

/// `a_n ≈ constant · growth^n · n^exponent`.
#[derive(Debug, Clone)]
pub struct AsymptoticEstimate<R> {
    pub growth: R,
    pub exponent: PolyExponent,
    pub constant: R,
}

impl<R: Real> CharacteristicEquation<R> {
    /// Number of plethystic terms `z^i` kept around `z0`: enough for the
    /// value and its first `DEGREE` derivatives to be negligible at the
    /// working precision.
    fn plethysm_terms(z0: &R) -> u32 {
        let z = z0.to_f64();
        if !(z > 0.0 && z < 1.0) {
            return DEGREE as u32 + 1;
        }
        let digits = R::working_digits() as f64 + 5.0;
        let base = (digits * std::f64::consts::LN_10 / -z.ln()).ceil();
        // derivatives of z^i grow like i^DEGREE
        let margin = (DEGREE as f64 * base.max(2.0).ln() / -z.ln()).ceil();
        (base + margin) as u32 + DEGREE as u32
    }

    /// `B(z)` as a jet in `z` around `z0`.
    pub fn b_jet(&self, z0: &R) -> Jet<R> {
        let top = Self::plethysm_terms(z0);
        let mut acc = Jet::constant(R::zero());
        for i in 1..=top {
            let w = power_taylor(z0, i);
            let mut term = Jet::constant(R::zero());
            if i >= 2 {
                term = term + Jet::from_z_taylor(&compose_polynomial(&self.aux, &w));
            }
            if self.class == GraphClass::ThreeLeafPower {
                let wj = Jet::from_z_taylor(&w);
                term = term + wj.clone() / (Jet::constant(R::one()) - wj);
            }
            acc = acc + term.scale(&(R::one() / R::from_i64(i as i64)));
        }
        acc
    }

    /// `F` as a jet around `(z0, y0)`.
    pub fn f_jet(&self, z0: &R, y0: &R) -> Result<Jet<R>, AsymptoticsError> {
        let z = Jet::var_z(z0.clone());
        let y = Jet::var_y(y0.clone());
        let one = || Jet::constant(R::one());
        let b = self.b_jet(z0);
        match self.class {
            GraphClass::ThreeLeafPower => {
                let l = z.clone() / (one() - z);
                Ok(l * ((y + b).exp() - one()))
            }
            GraphClass::DistanceHereditary => {
                let den = one() - z.clone() - y.scale(&R::from_i64(2));
                if *den.value() <= R::zero() {
                    return Err(AsymptoticsError::PoleCrossed);
                }
                let lin = z.clone() + y.scale(&R::from_i64(2));
                let r = z + y + lin.clone() * lin / den;
                Ok((r.clone() + b).exp() - one() - r)
            }
        }
    }

    /// The function `G` with `U(z) = G(z, y(z))`, as a jet around `(z0, y0)`.
    pub fn g_jet(&self, z0: &R, y0: &R) -> Result<Jet<R>, AsymptoticsError> {
        let z = Jet::var_z(z0.clone());
        let y = Jet::var_y(y0.clone());
        let one = || Jet::constant(R::one());
        match self.class {
            GraphClass::ThreeLeafPower => {
                let l = z.clone() / (one() - z.clone());
                let cube = z.clone().powi(3) / (one() - z);
                let at_square = Jet::from_z_taylor(&compose_polynomial(&self.aux, &power_taylor(z0, 2)));
                let half = R::one() / R::from_i64(2);
                Ok(cube + at_square.scale(&half) + y.clone()
                    - l.clone() * (l + y.clone())
                    - (y.clone() * y).scale(&half))
            }
            GraphClass::DistanceHereditary => {
                let den = one() - z.clone() - y.scale(&R::from_i64(2));
                if *den.value() <= R::zero() {
                    return Err(AsymptoticsError::PoleCrossed);
                }
                let lin = z.clone() + y.scale(&R::from_i64(2));
                Ok(y - z.clone() * z - lin.powi(3) / den.powi(2))
            }
        }
    }

    /// Two-dimensional Newton iteration on `{F - y = 0, F_y - 1 = 0}`.
    /// Steps that leave the domain are halved.
    pub fn solve_branch_point(&self, seed: (R, R)) -> Result<BranchPoint<R>, AsymptoticsError> {
        let digits = R::working_digits() as i32;
        // ten guard digits at high precision, a third of them in double
        let tol = R::from_f64(10f64.powi(-(digits - (digits / 3).min(10))));
        let (mut z, mut y) = seed;
        let residuals = |j: &Jet<R>, y: &R| (j.value().clone() - y.clone(), j.partial(0, 1) - R::one());
        let mut current = self.f_jet(&z, &y)?;
        for iteration in 0..200 {
            let (r1, r2) = residuals(&current, &y);
            if r1.abs() < tol && r2.abs() < tol {
                return Ok(BranchPoint { rho: z, tau: y, residuals: (r1.abs(), r2.abs()), iterations: iteration });
            }
            let (a11, a12) = (current.partial(1, 0), current.partial(0, 1) - R::one());
            let (a21, a22) = (current.partial(1, 1), current.partial(0, 2));
            let det = a11.clone() * a22.clone() - a12.clone() * a21.clone();
            if det.is_zero() || !det.is_finite() {
                break;
            }
            let dz = (r1.clone() * a22 - a12 * r2.clone()) / det.clone();
            let dy = (a11 * r2 - a21 * r1) / det;
            let mut scale = R::one();
            let mut accepted = None;
            for _ in 0..60 {
                let nz = z.clone() - dz.clone() * scale.clone();
                let ny = y.clone() - dy.clone() * scale.clone();
                if nz > R::zero() && nz < R::one() {
                    match self.f_jet(&nz, &ny) {
                        Ok(j) if j.value().is_finite() => {
                            accepted = Some((nz, ny, j));
                            break;
                        }
                        Ok(_) | Err(AsymptoticsError::PoleCrossed) => {}
                        Err(e) => return Err(e),
                    }
                }
                scale = scale / R::from_i64(2);
            }
            match accepted {
                Some((nz, ny, j)) => {
                    z = nz;
                    y = ny;
                    current = j;
                }
                None => {
                    return Err(if self.class == GraphClass::DistanceHereditary {
                        AsymptoticsError::PoleCrossed
                    } else {
                        AsymptoticsError::NewtonDiverged { z: z.to_f64(), y: y.to_f64() }
                    })
                }
            }
        }
        Err(AsymptoticsError::NewtonDiverged { z: z.to_f64(), y: y.to_f64() })
    }

    /// Coefficients of `y = τ - cZ + dZ² + eZ³` from matching powers of `Z`
    /// in `y = F(ρ(1 - Z²), y)`.
    pub fn singular_expansion(&self, bp: &BranchPoint<R>) -> Result<SingularExpansion<R>, AsymptoticsError> {
        let f = self.f_jet(&bp.rho, &bp.tau)?;
        let f_yy = f.partial(0, 2);
        if f_yy.is_zero() {
            return Err(AsymptoticsError::DegenerateBranch);
        }
        let c_sq = R::from_i64(2) * bp.rho.clone() * f.partial(1, 0) / f_yy;
        if c_sq <= R::zero() {
            return Err(AsymptoticsError::DegenerateBranch);
        }
        let c = c_sq.sqrt();
        let u = z_displacement(&bp.rho);
        let residual = |d: &R, e: &R| {
            let v = y_displacement(&c, d, e);
            let composed = compose_jet(&f, &u, &v);
            let mut r: [R; DEGREE + 1] = std::array::from_fn(|k| composed[k].clone() - v[k].clone());
            r[0] = r[0].clone() - bp.tau.clone();
            r
        };
        // Each coefficient is affine in the unknown it determines.
        let zero = R::zero();
        let one = R::one();
        let (r0, r1) = (residual(&zero, &zero)[3].clone(), residual(&one, &zero)[3].clone());
        let d = -r0.clone() / (r1 - r0);
        let (r0, r1) = (residual(&d, &zero)[4].clone(), residual(&d, &one)[4].clone());
        let e = -r0.clone() / (r1 - r0);
        let check = residual(&d, &e);
        let worst = check[..=3].iter().map(|x| x.abs()).fold(R::zero(), |a, b| if b > a { b } else { a });
        Ok(SingularExpansion { tau: bp.tau.clone(), c, d, e, residual: worst })
    }

    /// Expansion of `U(z) = G(z, y(z))` at the branch point.
    pub fn unrooted_expansion(
        &self,
        bp: &BranchPoint<R>,
        se: &SingularExpansion<R>,
    ) -> Result<UnrootedExpansion<R>, AsymptoticsError> {
        let g = self.g_jet(&bp.rho, &bp.tau)?;
        let u = z_displacement(&bp.rho);
        let v = y_displacement(&se.c, &se.d, &se.e);
        let w = compose_jet(&g, &u, &v);
        Ok(UnrootedExpansion {
            tau_prime: w[0].clone(),
            c_prime: -w[1].clone(),
            d_prime: w[2].clone(),
            e_prime: w[3].clone(),
            g_y: g.partial(0, 1),
        })
    }

    /// The polynomial whose vanishing at the branch point expresses
    /// `G_y(ρ, τ) = 0` in closed form: `1 - y - z/(1-z)` for 3-leaf powers,
    /// `4y² + 4zy + z² - 8y - 4z + 1` for distance-hereditary graphs.
    pub fn cancellation_identity(&self, bp: &BranchPoint<R>) -> R {
        let (z, y) = (bp.rho.clone(), bp.tau.clone());
        let one = R::one();
        match self.class {
            GraphClass::ThreeLeafPower => one.clone() - y - z.clone() / (one - z),
            GraphClass::DistanceHereditary => {
                let i = |k: i64| R::from_i64(k);
                i(4) * y.clone() * y.clone() + i(4) * z.clone() * y.clone() + z.clone() * z.clone()
                    - i(8) * y
                    - i(4) * z
                    + one
            }
        }
    }
}

/// `z - ρ = -ρZ²`.
fn z_displacement<R: Real>(rho: &R) -> [R; DEGREE + 1] {
    std::array::from_fn(|k| if k == 2 { -rho.clone() } else { R::zero() })
}

/// `y - τ = -cZ + dZ² + eZ³`.
fn y_displacement<R: Real>(c: &R, d: &R, e: &R) -> [R; DEGREE + 1] {
    std::array::from_fn(|k| match k {
        1 => -c.clone(),
        2 => d.clone(),
        3 => e.clone(),
        _ => R::zero(),
    })
}

/// `Σ c_ij u^i v^j` for series `u`, `v` in `Z` without constant terms.
fn compose_jet<R: Real>(f: &Jet<R>, u: &[R; DEGREE + 1], v: &[R; DEGREE + 1]) -> [R; DEGREE + 1] {
    let unit: [R; DEGREE + 1] = std::array::from_fn(|k| if k == 0 { R::one() } else { R::zero() });
    let mut u_pow = vec![unit.clone()];
    let mut v_pow = vec![unit];
    for k in 1..=DEGREE {
        u_pow.push(mul_series(&u_pow[k - 1], u));
        v_pow.push(mul_series(&v_pow[k - 1], v));
    }
    let mut out: [R; DEGREE + 1] = std::array::from_fn(|_| R::zero());
    for (i, ui) in u_pow.iter().enumerate() {
        for (j, vj) in v_pow.iter().enumerate().take(DEGREE + 1 - i) {
            let term = mul_series(ui, vj);
            for (o, t) in out.iter_mut().zip(term) {
                *o = o.clone() + f.coeff(i, j).clone() * t;
            }
        }
    }
    out
}

/// Transfer of `-cZ`: `[zⁿ] y ≈ c/(2√π) · ρ^(-n) · n^(-3/2)`.
pub fn rooted_estimate<R: Real>(bp: &BranchPoint<R>, se: &SingularExpansion<R>) -> AsymptoticEstimate<R> {
    AsymptoticEstimate {
        growth: R::one() / bp.rho.clone(),
        exponent: PolyExponent::MinusThreeHalves,
        constant: se.c.clone() / (R::from_i64(2) * R::pi().sqrt()),
    }
}

/// Transfer of `e′Z³`: `[zⁿ] U ≈ 3e′/(4√π) · ρ^(-n) · n^(-5/2)`.
pub fn unrooted_estimate<R: Real>(bp: &BranchPoint<R>, ue: &UnrootedExpansion<R>) -> AsymptoticEstimate<R> {
    AsymptoticEstimate {
        growth: R::one() / bp.rho.clone(),
        exponent: PolyExponent::MinusFiveHalves,
        constant: R::from_i64(3) * ue.e_prime.clone() / (R::from_i64(4) * R::pi().sqrt()),
    }
}

/// `|a_n / (constant · growth^n · n^α) - 1|`, evaluated in logarithms.
pub fn empirical_fit<R: Real>(term: &BigInt, est: &AsymptoticEstimate<R>, n: usize) -> f64 {
    let predicted_ln =
        est.constant.ln().to_f64() + n as f64 * est.growth.ln().to_f64() + est.exponent.value() * (n as f64).ln();
    (ln_bigint(term) - predicted_ln).exp_m1().abs()
}

/// [`empirical_fit`] against the `n`th entry of a count table.
pub fn empirical_fit_table<R: Real>(table: &CountTable, est: &AsymptoticEstimate<R>, n: usize) -> f64 {
    empirical_fit(table.term(n), est, n)
}

/// Everything the analysis of one class produces.
#[derive(Debug, Clone)]
pub struct AsymptoticReport<R> {
    pub class: GraphClass,
    pub digits: usize,
    /// Truncation at which `ρ` agreed with the previous truncation.
    pub stable_m: usize,
    /// `(m, ρ^[m])` for every truncation tried.
    pub history: Vec<(usize, R)>,
    pub branch: BranchPoint<R>,
    pub rooted: SingularExpansion<R>,
    pub unrooted: UnrootedExpansion<R>,
    pub identity_residual: R,
    pub rooted_estimate: AsymptoticEstimate<R>,
    pub unrooted_estimate: AsymptoticEstimate<R>,
}

pub const M_START: usize = 20;
pub const M_STEP: usize = 10;
pub const M_MAX: usize = 400;
pub const SEED_INDEX: usize = 200;
pub const CANCELLATION_TOLERANCE: f64 = 1e-30;

/// Bound on `|c′|`: [`CANCELLATION_TOLERANCE`] once there are 45 working
/// digits, two thirds of the working digits below that.
pub fn cancellation_tolerance<R: Real>() -> f64 {
    let digits = (2 * R::working_digits() / 3) as i32;
    CANCELLATION_TOLERANCE.max(10f64.powi(-digits))
}

/// Full analysis at `digits` working digits: the truncation is raised in
/// steps of [`M_STEP`] until `ρ` agrees with the previous truncation to
/// `digits - 10` digits.
pub fn analyze(class: GraphClass, digits: usize) -> Result<AsymptoticReport<HighPrecision>, AsymptoticsError> {
    HighPrecision::with_digits(digits, || {
        let mut series = ClassSeries::compute(class, SEED_INDEX + 1)?;
        analyze_with::<HighPrecision>(&mut series)
    })
}

/// [`analyze`] over any [`Real`], at its current working precision.
pub fn analyze_with<R: Real>(series: &mut ClassSeries) -> Result<AsymptoticReport<R>, AsymptoticsError> {
    let class = series.class;
    let digits = R::working_digits();
    let stable_tol = R::from_f64(10f64.powi(-(digits as i32 - (digits as i32 / 3).min(10))));
    let mut seed = series.seed::<R>(SEED_INDEX);
    let mut history: Vec<(usize, R)> = Vec::new();
    let mut m = M_START;
    loop {
        if m > M_MAX {
            return Err(AsymptoticsError::NotStabilized { m: M_MAX });
        }
        if series.order() < m {
            *series = ClassSeries::compute(class, m.max(SEED_INDEX + 1))?;
        }
        let eq = build_characteristic_equation::<R>(series, m)?;
        let bp = eq.solve_branch_point(seed.clone())?;
        seed = (bp.rho.clone(), bp.tau.clone());
        let stable = history.last().is_some_and(|(_, prev): &(usize, R)| {
            (bp.rho.clone() - prev.clone()).abs() < stable_tol.clone() * bp.rho.clone()
        });
        history.push((m, bp.rho.clone()));
        if stable {
            let rooted = eq.singular_expansion(&bp)?;
            let unrooted = eq.unrooted_expansion(&bp, &rooted)?;
            if unrooted.c_prime.abs().partial_cmp(&R::from_f64(cancellation_tolerance::<R>()))
                != Some(std::cmp::Ordering::Less)
            {
                return Err(AsymptoticsError::CancellationFailed { c_prime: unrooted.c_prime.to_decimal(5) });
            }
            let identity_residual = eq.cancellation_identity(&bp).abs();
            return Ok(AsymptoticReport {
                class,
                digits,
                stable_m: m,
                rooted_estimate: rooted_estimate(&bp, &rooted),
                unrooted_estimate: unrooted_estimate(&bp, &unrooted),
                history,
                branch: bp,
                rooted,
                unrooted,
                identity_residual,
            });
        }
        m += M_STEP;
    }
}

/// Relative agreement of `a` and `b`, for reports.
pub fn relative_difference<R: Real>(a: &R, b: &R) -> R {
    if b.is_zero() {
        return a.abs();
    }
    ((a.clone() - b.clone()) / b.clone()).abs()
}
