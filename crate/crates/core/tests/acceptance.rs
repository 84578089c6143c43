//! One pass/fail line per acceptance criterion.
//!
//! Criteria run concurrently; lines are printed in criterion order. The
//! process fails if any criterion fails other than those listed in
//! `KNOWN_FAILURES`, which are still reported as FAIL.

mod common;

use std::time::{Duration, Instant};

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use splitcount::asymptotics::{self, AsymptoticReport, ClassSeries, HighPrecision, Real};
use splitcount::oracle::{self, LabeledMode};
use splitcount::species::{translate_labeled, translate_unlabeled};
use splitcount::{build_grammar, dissymmetry_check_labeled, enumerate, Flavor, GraphClass, Rooting, Variant};

/// The printed distance-hereditary growth constant ends in ...250, while
/// the branch point and an independent extrapolation of exact coefficient
/// ratios both give 7.2497512490271...; no 10-digit rendering of the true
/// value reproduces the printed one.
const KNOWN_FAILURES: &[usize] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

const CLASSES: [GraphClass; 2] = [GraphClass::DistanceHereditary, GraphClass::ThreeLeafPower];

fn sequence(class: GraphClass, flavor: Flavor, printed: &[u64], limit: Option<Duration>) -> Outcome {
    let (table, took) = timed(|| enumerate(class, flavor, Rooting::Unrooted, printed.len()).unwrap());
    let exact = table.terms() == &big(printed)[..];
    let fast = limit.is_none_or(|l| took < l);
    outcome(
        exact && fast,
        format!(
            "{class} {flavor} unrooted: {} terms {}, last {}, {:.3} s",
            printed.len(),
            if exact { "exact" } else { "DIFFER" },
            table.terms().last().unwrap(),
            took.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let n = 10_000;
    let (table, took) = timed(|| enumerate(GraphClass::DistanceHereditary, Flavor::Unlabeled, Rooting::Unrooted, n));
    match table {
        Ok(t) => {
            let positive = t.terms().len() == n && t.terms().iter().all(|x| x > &BigInt::from(0));
            let fast = took < Duration::from_secs(600);
            outcome(
                positive && fast,
                format!(
                    "dh unlabeled unrooted: {n} terms in {:.1} s, all positive: {positive}, a(n) has {} digits",
                    took.as_secs_f64(),
                    t.term(n).to_string().len()
                ),
            )
        }
        Err(e) => outcome(false, format!("enumeration failed: {e}")),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut comparisons = 0;
    let mut mismatches = Vec::new();
    let mut labeled = 0;
    for class in CLASSES {
        let grammar = enumerate(class, Flavor::Unlabeled, Rooting::Unrooted, 8).unwrap();
        let grammar_labeled = enumerate(class, Flavor::Labeled, Rooting::Unrooted, 6).unwrap();
        for n in 1..=8 {
            comparisons += 1;
            let count = oracle::generate_all(class, n).unwrap().len();
            if BigInt::from(count) != *grammar.term(n) {
                mismatches.push(format!("{class} n={n}"));
            }
        }
        for n in 1..=6 {
            labeled += 1;
            if oracle::count_labeled(class, n, LabeledMode::Exhaustive).unwrap() != *grammar_labeled.term(n) {
                mismatches.push(format!("{class} labeled n={n}"));
            }
        }
    }
    let took = start.elapsed();
    outcome(
        mismatches.is_empty() && comparisons == 16 && took < Duration::from_secs(600),
        format!(
            "{comparisons} unlabeled and {labeled} labeled comparisons, mismatches {:?}, {:.1} s",
            mismatches,
            took.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    const ORDER: usize = 200;
    let dh = |rooting, variant| build_grammar(GraphClass::DistanceHereditary, rooting, variant).unwrap();
    let default = dh(Rooting::Rooted, Variant::Default);
    let u = translate_unlabeled::<BigInt>(&default.system, ORDER).unwrap();
    let l = translate_labeled::<BigRational>(&default.system, ORDER).unwrap();
    let clique_is_parallel = u["K"] == u["S_C"] && l["K"] == l["S_C"];

    let product = dh(Rooting::Rooted, Variant::Product);
    let p = translate_unlabeled::<BigInt>(&product.system, ORDER).unwrap();
    let product_matches = p["S_X"] == u["S_X"];

    let merged = dh(Rooting::Rooted, Variant::Merged);
    let m = translate_unlabeled::<BigInt>(&merged.system, ORDER).unwrap();
    let merged_matches = m["D_root"] == u["D_root"];

    let dissymmetry = CLASSES.iter().all(|&c| dissymmetry_check_labeled(c, 50));
    outcome(
        clique_is_parallel && product_matches && merged_matches && dissymmetry,
        format!(
            "K = S_C: {clique_is_parallel}; product S_X: {product_matches}; merged D_root: {merged_matches}; \
             dissymmetry to 50: {dissymmetry}"
        ),
    )
}

fn criterion_7(reports: &[AsymptoticReport<HighPrecision>]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, printed) in reports.iter().zip([DH_GROWTH, TLP_GROWTH]) {
        HighPrecision::with_digits(r.digits, || {
            let shown = r.rooted_estimate.growth.to_decimal(10);
            let long = r.rooted_estimate.growth.to_decimal(14);
            let n = r.history.len();
            let stable = n >= 2 && {
                let (prev, last) = (&r.history[n - 2].1, &r.history[n - 1].1);
                let gp = HighPrecision::one() / prev.clone();
                let gl = HighPrecision::one() / last.clone();
                gp.to_decimal(10) == gl.to_decimal(10)
            };
            let digits_ok = matches_printed_digits(&long, printed);
            pass &= digits_ok && stable;
            let table = enumerate(r.class, Flavor::Unlabeled, Rooting::Unrooted, 1001).unwrap();
            let ratios = extrapolated_growth(table.terms(), 1000, 12, 40);
            parts.push(format!(
                "{} 1/rho = {shown} ({long}..., extrapolated ratios {ratios:.13}) vs printed {printed}: {}, stable m={}..{}",
                r.class,
                if digits_ok { "match" } else { "DIFFER" },
                r.stable_m - asymptotics::M_STEP,
                r.stable_m
            ));
        });
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8(reports: &[AsymptoticReport<HighPrecision>]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in reports {
        HighPrecision::with_digits(r.digits, || {
            let gy = r.unrooted.g_y.abs().to_f64();
            let cp = r.unrooted.c_prime.abs().to_f64();
            let ep = r.unrooted.e_prime.abs().to_f64();
            pass &= gy < 1e-30 && cp < 1e-30 && ep > 1e-10;
            parts.push(format!("{} |G_y| = {gy:.1e}, |c'| = {cp:.1e}, |e'| = {ep:.4}", r.class));
        });
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9(reports: &[AsymptoticReport<HighPrecision>]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, printed) in reports.iter().zip([DH_UNROOTED_CONSTANT, TLP_UNROOTED_CONSTANT]) {
        let unrooted = enumerate(r.class, Flavor::Unlabeled, Rooting::Unrooted, 2000).unwrap();
        let rooted = ClassSeries::compute(r.class, 2000).unwrap();
        HighPrecision::with_digits(r.digits, || {
            let long = r.unrooted_estimate.constant.to_decimal(16);
            let digits_ok = matches_printed_digits(&long, printed);
            let fit_u = asymptotics::empirical_fit_table(&unrooted, &r.unrooted_estimate, 2000);
            let fit_r = asymptotics::empirical_fit(&rooted.y[2000], &r.rooted_estimate, 2000);
            pass &= digits_ok && fit_u < 0.01 && fit_r < 0.01;
            parts.push(format!(
                "{} 3e'/(4 sqrt pi) = {long} vs printed {printed}: {}, fit at 2000 unrooted {:.2e} rooted {:.2e}",
                r.class,
                if digits_ok { "match" } else { "DIFFER" },
                fit_u,
                fit_r
            ));
        });
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let r = oracle::recognizer_agreement(7).unwrap();
    let total: usize = r.graphs.values().sum();
    outcome(
        r.disagreements.is_empty() && total == 996,
        format!("{total} connected graphs with n <= 7, {} disagreements", r.disagreements.len()),
    )
}

fn criterion_11() -> Outcome {
    let mut failed = Vec::new();
    let suites = props::suites();
    for (name, suite) in &suites {
        if let Err(e) = suite() {
            failed.push(format!("{name}: {e}"));
        }
    }
    outcome(failed.is_empty(), format!("{} seeded suites, failures {:?}", suites.len(), failed))
}

fn main() {
    let start = Instant::now();
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let scale = s.spawn(criterion_4);
        let oracle_run = s.spawn(criterion_5);
        let identities = s.spawn(criterion_6);
        let asymptotic = s.spawn(|| {
            let reports: Vec<_> =
                CLASSES.iter().map(|&c| asymptotics::analyze(c, asymptotics::DEFAULT_DIGITS).unwrap()).collect();
            (criterion_7(&reports), criterion_8(&reports), criterion_9(&reports))
        });
        let c1 = sequence(
            GraphClass::DistanceHereditary,
            Flavor::Unlabeled,
            &DH_UNLABELED_UNROOTED,
            Some(Duration::from_secs(1)),
        );
        let c2 = sequence(
            GraphClass::ThreeLeafPower,
            Flavor::Unlabeled,
            &TLP_UNLABELED_UNROOTED,
            Some(Duration::from_secs(1)),
        );
        let c3 = sequence(GraphClass::ThreeLeafPower, Flavor::Labeled, &TLP_LABELED_UNROOTED, None);
        let c10 = criterion_10();
        let c11 = criterion_11();
        let (c7, c8, c9) = asymptotic.join().unwrap();
        vec![
            c1,
            c2,
            c3,
            scale.join().unwrap(),
            oracle_run.join().unwrap(),
            identities.join().unwrap(),
            c7,
            c8,
            c9,
            c10,
            c11,
        ]
    });
    let mut unexpected = 0;
    for (i, o) in outcomes.iter().enumerate() {
        let k = i + 1;
        let known = KNOWN_FAILURES.contains(&k);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {k:>2}  {tag:<12}  {}", o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "{passed} of {} criteria pass; {unexpected} unexpected failures; {:.1} s",
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
