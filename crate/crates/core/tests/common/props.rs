//! Seeded property suites, shared by the property tests and the
//! acceptance run.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use splitcount::oracle::{automorphism_count, canonicalize, SmallGraph};
use splitcount::species::{translate_labeled, translate_unlabeled};
use splitcount::{ClassExpr, GrammarSystem, IntegerSeries, RationalSeries, Series};

use super::{naive_polya_exp, seeded};

const ORDER: usize = 12;

fn int_series(max: i64) -> impl Strategy<Value = IntegerSeries> {
    proptest::collection::vec(-max..=max, ORDER + 1)
        .prop_map(|v| Series::from_coeffs(v.into_iter().map(BigInt::from).collect()))
}

fn natural_series_without_constant(max: u64) -> impl Strategy<Value = IntegerSeries> {
    proptest::collection::vec(0..=max, ORDER).prop_map(|v| {
        let mut c = vec![BigInt::zero()];
        c.extend(v.into_iter().map(BigInt::from));
        Series::from_coeffs(c)
    })
}

fn to_rational(s: &IntegerSeries) -> RationalSeries {
    s.map(|x| BigRational::from_integer(x.clone()))
}

fn run<S: Strategy>(
    seed: u64,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(seeded(cases, seed));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn multiplication_is_a_commutative_ring_law() -> Result<(), String> {
    run(11, 64, (int_series(40), int_series(40), int_series(40)), |(a, b, c)| {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&(&b + &c)), &a.mul(&b) + &a.mul(&c));
        prop_assert_eq!(&a + &(-&a), Series::zero(ORDER));
        prop_assert_eq!(a.mul(&Series::one(ORDER)), a.clone());
        Ok(())
    })
}

pub fn reciprocal_inverts_units() -> Result<(), String> {
    run(12, 48, (int_series(20), prop_oneof![Just(1i64), Just(-1), Just(3)]), |(a, unit)| {
        let mut c = a.into_coeffs();
        c[0] = BigInt::from(unit);
        let a = to_rational(&Series::from_coeffs(c));
        prop_assert_eq!(a.mul(&a.reciprocal().unwrap()), Series::one(ORDER));
        Ok(())
    })
}

pub fn exponential_turns_sums_into_products() -> Result<(), String> {
    run(13, 32, (int_series(6), int_series(6)), |(a, b)| {
        let strip = |s: IntegerSeries| {
            let mut c = s.into_coeffs();
            c[0] = BigInt::zero();
            to_rational(&Series::from_coeffs(c))
        };
        let (a, b) = (strip(a), strip(b));
        prop_assert_eq!((&a + &b).exp().unwrap(), a.exp().unwrap().mul(&b.exp().unwrap()));
        Ok(())
    })
}

pub fn polya_exponential_is_multiplicative_and_integral() -> Result<(), String> {
    run(14, 48, (natural_series_without_constant(5), natural_series_without_constant(5)), |(a, b)| {
        let pa = a.polya_exp().unwrap();
        prop_assert_eq!((&a + &b).polya_exp().unwrap(), pa.mul(&b.polya_exp().unwrap()));
        prop_assert_eq!(pa.coeffs(), &naive_polya_exp(a.coeffs())[..]);
        // over the rationals the Euler transform still lands on integers
        let q = to_rational(&a).polya_exp().unwrap();
        prop_assert!(q.coeffs().iter().all(|x| x.is_integer()));
        Ok(())
    })
}

/// `Σ_k c_k Z^k` as a class expression.
fn polynomial_class(c: &[u8]) -> ClassExpr {
    let mut terms = Vec::new();
    for (k, &m) in c.iter().enumerate() {
        for _ in 0..m {
            terms.push(ClassExpr::product(std::iter::repeat_n(ClassExpr::atom(), k + 1)));
        }
    }
    ClassExpr::sum(terms)
}

fn polynomial_series(c: &[u8]) -> IntegerSeries {
    let mut v = vec![BigInt::zero(); ORDER + 1];
    for (k, &m) in c.iter().enumerate() {
        v[k + 1] = BigInt::from(m);
    }
    Series::from_coeffs(v)
}

fn small_polynomial() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..3, 4).prop_filter("nonzero", |c| c.iter().any(|&x| x > 0))
}

pub fn set_and_sequence_constructions_match_closed_forms() -> Result<(), String> {
    run(15, 40, small_polynomial(), |c| {
        let mut sys = GrammarSystem::new();
        sys.define("A", polynomial_class(&c))
            .define("Seq", ClassExpr::seq_at_least(1, ClassExpr::reference("A")))
            .define("Pair", ClassExpr::set_exactly(2, ClassExpr::reference("A")))
            .define("Set3", ClassExpr::set_exactly(3, ClassExpr::reference("A")))
            .define("Big", ClassExpr::set_at_least(4, ClassExpr::reference("A")))
            .define("All", ClassExpr::set_at_least(1, ClassExpr::reference("A")))
            .output("Seq");
        let a = polynomial_series(&c);
        let u = translate_unlabeled::<BigInt>(&sys, ORDER).unwrap();
        // Seq≥1(A)·(1 - A) = A
        prop_assert_eq!(u["Seq"].mul(&(&Series::one(ORDER) - &a)), a.clone());
        // unordered pairs: (A² + A(z²)) / 2
        let pair2 = &a.mul(&a) + &a.substitute_power(2);
        prop_assert_eq!(u["Pair"].scale(&BigInt::from(2)), pair2);
        // sets by size add up to the Pólya exponential
        let sum = &(&(&(&a + &u["Pair"]) + &u["Set3"]) + &u["Big"]) + &Series::one(ORDER);
        prop_assert_eq!(sum, a.polya_exp().unwrap());
        prop_assert_eq!(&u["All"] + &Series::one(ORDER), a.polya_exp().unwrap());
        // labeled: sets of size three are A³/3!
        let l = translate_labeled::<BigRational>(&sys, ORDER).unwrap();
        let q = to_rational(&a);
        let cube = q.mul(&q).mul(&q).scale(&BigRational::new(BigInt::one(), BigInt::from(6)));
        prop_assert_eq!(&l["Set3"], &cube);
        Ok(())
    })
}

fn random_graph() -> impl Strategy<Value = SmallGraph> {
    (1usize..=6).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = SmallGraph::empty(n);
            let mut i = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[i] {
                        g.add_edge(u, v);
                    }
                    i += 1;
                }
            }
            g
        })
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn relabel(g: &SmallGraph, p: &[usize]) -> SmallGraph {
    let mut h = SmallGraph::empty(g.n());
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if g.has_edge(u, v) {
                h.add_edge(p[u], p[v]);
            }
        }
    }
    h
}

pub fn orbit_sizes_follow_from_automorphism_counts() -> Result<(), String> {
    run(16, 64, random_graph(), |g| {
        let n = g.n();
        let fact: u64 = (1..=n as u64).product();
        let aut = automorphism_count(&g).unwrap();
        prop_assert!(aut >= 1 && aut <= fact && fact.is_multiple_of(aut));
        let perms = permutations(n);
        let orbit: HashSet<String> = perms.iter().map(|p| relabel(&g, p).upper_triangle()).collect();
        prop_assert_eq!(orbit.len() as u64, fact / aut);
        let key = canonicalize(&g).unwrap();
        for p in perms.iter().step_by(7) {
            prop_assert_eq!(canonicalize(&relabel(&g, p)).unwrap(), key);
        }
        Ok(())
    })
}

/// Every suite with its name, in a fixed order.
pub type Suite = fn() -> Result<(), String>;

pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("multiplication_is_a_commutative_ring_law", multiplication_is_a_commutative_ring_law),
        ("reciprocal_inverts_units", reciprocal_inverts_units),
        ("exponential_turns_sums_into_products", exponential_turns_sums_into_products),
        ("polya_exponential_is_multiplicative_and_integral", polya_exponential_is_multiplicative_and_integral),
        ("set_and_sequence_constructions_match_closed_forms", set_and_sequence_constructions_match_closed_forms),
        ("orbit_sizes_follow_from_automorphism_counts", orbit_sizes_follow_from_automorphism_counts),
    ]
}
