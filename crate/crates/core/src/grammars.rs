//! The split-decomposition grammars and the counting sequences they produce.
//!
//! Each class has a vertex-rooted grammar and an unrooted one. The unrooted
//! grammar comes from the dissymmetry theorem, as a signed combination of
//! classes. It is used for unlabeled counts. Labeled unrooted counts are
//! rooted counts divided by `n`, and the labeled dissymmetry combination
//! serves as a cross-check.
//!
//! The grammars miscount graphs on one and two vertices. Every table is
//! therefore passed through [`patch_initial_terms`] before it is returned.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::modular::{primes_descending, ModP, ModulusGuard, Reconstruction};
use crate::powerseries::{Series, Sign};
use crate::scalar::{rational_to_integer, Scalar};
use crate::species::{translate_labeled, translate_unlabeled, ClassExpr, GrammarSystem, SeriesMap, SpeciesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphClass {
    DistanceHereditary,
    ThreeLeafPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Labeled,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rooting {
    Rooted,
    Unrooted,
}

/// Alternative but equivalent grammars, plus one deliberately wrong grammar
/// used to show that the cross-checks catch errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    Default,
    /// Distance-hereditary series nodes written as a product with a set,
    /// before simplification to a sequence.
    Product,
    /// Distance-hereditary rooted grammar with the clique and parallel
    /// series classes merged, as they share a generating function.
    Merged,
    /// Distance-hereditary series nodes built with `Set` instead of `Seq`.
    /// This grammar is wrong.
    SeriesAsSet,
}

macro_rules! string_forms {
    ($t:ty { $($variant:path => $s:literal),+ $(,)? }) => {
        impl $t {
            pub fn id(self) -> &'static str {
                match self { $($variant => $s),+ }
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.id())
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($variant),)+
                    _ => Err(format!("unknown {}: {s}", stringify!($t))),
                }
            }
        }
    };
}

string_forms!(GraphClass { GraphClass::DistanceHereditary => "dh", GraphClass::ThreeLeafPower => "3lp" });
string_forms!(Flavor { Flavor::Labeled => "labeled", Flavor::Unlabeled => "unlabeled" });
string_forms!(Rooting { Rooting::Rooted => "rooted", Rooting::Unrooted => "unrooted" });
string_forms!(Variant {
    Variant::Default => "default",
    Variant::Product => "product",
    Variant::Merged => "merged",
    Variant::SeriesAsSet => "mutant-sx-set",
});

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("variant `{variant}` is not defined for {class} {rooting} grammars")]
    UnknownVariant { class: GraphClass, rooting: Rooting, variant: Variant },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("the number of terms must be at least 1")]
    EmptyRange,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error("coefficient {n} is not an integer")]
    NonIntegral { n: usize },
    #[error("multi-modular reconstruction did not settle after {primes} primes")]
    ReconstructionFailed { primes: usize },
}

/// A grammar system together with the signed combination of its classes
/// that yields the counted class.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub class: GraphClass,
    pub rooting: Rooting,
    pub variant: Variant,
    pub system: GrammarSystem,
    pub assembly: Vec<(Sign, String)>,
}

impl Grammar {
    pub fn assemble<T: Scalar>(&self, series: &SeriesMap<T>) -> Series<T> {
        let order = series.values().map(Series::order).min().unwrap_or(0);
        self.assembly
            .iter()
            .fold(Series::zero(order), |acc, (sign, name)| acc.add_signed(&series[name.as_str()], *sign))
    }
}

fn z() -> ClassExpr {
    ClassExpr::atom()
}

fn r(name: &str) -> ClassExpr {
    ClassExpr::reference(name)
}

fn sum<const N: usize>(xs: [ClassExpr; N]) -> ClassExpr {
    ClassExpr::sum(xs)
}

fn prod<const N: usize>(xs: [ClassExpr; N]) -> ClassExpr {
    ClassExpr::product(xs)
}

pub fn build_grammar(class: GraphClass, rooting: Rooting, variant: Variant) -> Result<Grammar, GrammarError> {
    let unknown = Err(GrammarError::UnknownVariant { class, rooting, variant });
    let mut sys = GrammarSystem::new();
    let assembly: Vec<(Sign, String)>;
    match class {
        GraphClass::ThreeLeafPower => {
            if variant != Variant::Default {
                return unknown;
            }
            sys.define("L", sum([z(), ClassExpr::set_at_least(2, z())]))
                .define("S_C", ClassExpr::set_at_least(2, sum([r("L"), r("S_X")])))
                .define("S_X", prod([r("L"), ClassExpr::set_at_least(1, sum([r("L"), r("S_X")]))]))
                .declare_recursive("S_X");
            match rooting {
                Rooting::Rooted => {
                    sys.define("L_root", sum([z(), prod([z(), ClassExpr::set_at_least(1, z())])]))
                        .define("K_root", prod([z(), ClassExpr::set_at_least(2, z())]))
                        .define("T_root", sum([prod([r("L_root"), sum([r("S_C"), r("S_X")])]), r("K_root")]))
                        .output("T_root");
                    assembly = vec![(Sign::Plus, "T_root".into())];
                }
                Rooting::Unrooted => {
                    sys.define("K", ClassExpr::set_at_least(3, z()))
                        .define("T_S", prod([r("L"), r("S_C")]))
                        .define("T_SS", ClassExpr::set_exactly(2, r("S_X")))
                        .define("T_StoS", prod([r("S_X"), r("S_X")]));
                    assembly = vec![
                        (Sign::Plus, "K".into()),
                        (Sign::Plus, "T_S".into()),
                        (Sign::Plus, "T_SS".into()),
                        (Sign::Minus, "T_StoS".into()),
                    ];
                }
            }
        }
        GraphClass::DistanceHereditary => {
            if variant == Variant::Merged {
                if rooting != Rooting::Rooted {
                    return unknown;
                }
                sys.define("K", ClassExpr::set_at_least(2, sum([z(), r("K"), r("S")])))
                    .define("S", ClassExpr::seq_at_least(2, sum([z(), r("K"), r("K")])))
                    .define("D_root", prod([z(), sum([r("K"), r("K"), r("S")])]))
                    .declare_recursive("K")
                    .declare_recursive("S")
                    .output("D_root");
                return Ok(Grammar {
                    class,
                    rooting,
                    variant,
                    system: sys,
                    assembly: vec![(Sign::Plus, "D_root".into())],
                });
            }
            let series_node = match variant {
                Variant::Default => ClassExpr::seq_at_least(2, sum([z(), r("K"), r("S_C")])),
                Variant::Product => {
                    prod([sum([z(), r("K"), r("S_C")]), ClassExpr::set_at_least(1, sum([z(), r("K"), r("S_X")]))])
                }
                Variant::SeriesAsSet => ClassExpr::set_at_least(2, sum([z(), r("K"), r("S_C")])),
                Variant::Merged => unreachable!(),
            };
            sys.define("K", ClassExpr::set_at_least(2, sum([z(), r("S_C"), r("S_X")])))
                .define("S_C", ClassExpr::set_at_least(2, sum([z(), r("K"), r("S_X")])))
                .define("S_X", series_node)
                .declare_recursive("K")
                .declare_recursive("S_C")
                .declare_recursive("S_X");
            match rooting {
                Rooting::Rooted => {
                    sys.define("D_root", prod([z(), sum([r("K"), r("S_C"), r("S_X")])])).output("D_root");
                    assembly = vec![(Sign::Plus, "D_root".into())];
                }
                Rooting::Unrooted => {
                    sys.define("T_K", ClassExpr::set_at_least(3, sum([z(), r("S_C"), r("S_X")])))
                        .define("T_S", prod([sum([z(), r("K"), r("S_C")]), r("S_C")]))
                        .define("T_KS", prod([r("K"), sum([r("S_C"), r("S_X")])]))
                        .define("T_SS", sum([ClassExpr::set_exactly(2, r("S_C")), ClassExpr::set_exactly(2, r("S_X"))]))
                        .define("T_StoS", sum([prod([r("S_C"), r("S_C")]), prod([r("S_X"), r("S_X")])]));
                    assembly = vec![
                        (Sign::Plus, "T_K".into()),
                        (Sign::Plus, "T_S".into()),
                        (Sign::Plus, "T_SS".into()),
                        (Sign::Minus, "T_KS".into()),
                        (Sign::Minus, "T_StoS".into()),
                    ];
                }
            }
        }
    }
    for (_, name) in &assembly {
        sys.output(name);
    }
    Ok(Grammar { class, rooting, variant, system: sys, assembly })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMeta {
    pub order: usize,
    pub variant: Variant,
    pub patched: bool,
}

/// Counts of connected graphs on `n = 1..=order` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub class: GraphClass,
    pub flavor: Flavor,
    pub rooting: Rooting,
    terms: Vec<BigInt>,
    pub meta: TableMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BfileError {
    #[error("line {line}: expected `n a(n)`")]
    Malformed { line: usize },
    #[error("line {line}: expected index {expected}")]
    OutOfSequence { line: usize, expected: usize },
}

impl CountTable {
    pub fn new(class: GraphClass, flavor: Flavor, rooting: Rooting, terms: Vec<BigInt>, meta: TableMeta) -> Self {
        CountTable { class, flavor, rooting, terms, meta }
    }

    /// The count for `n` vertices, `1 ≤ n ≤ order`.
    pub fn term(&self, n: usize) -> &BigInt {
        &self.terms[n - 1]
    }

    /// Terms for `n = 1, 2, …`.
    pub fn terms(&self) -> &[BigInt] {
        &self.terms
    }

    pub fn to_bfile(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("{} {}\n", i + 1, t));
        }
        out
    }

    /// Parses terms written by [`to_bfile`](CountTable::to_bfile). Blank
    /// lines and `#` comments are skipped.
    pub fn parse_bfile(text: &str) -> Result<Vec<BigInt>, BfileError> {
        let mut terms = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(n), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(BfileError::Malformed { line: line_no });
            };
            let n: usize = n.parse().map_err(|_| BfileError::Malformed { line: line_no })?;
            let v: BigInt = v.parse().map_err(|_| BfileError::Malformed { line: line_no })?;
            if n != terms.len() + 1 {
                return Err(BfileError::OutOfSequence { line: line_no, expected: terms.len() + 1 });
            }
            terms.push(v);
        }
        Ok(terms)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "class": self.class.id(),
            "flavor": self.flavor.id(),
            "rooting": self.rooting.id(),
            "terms": self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Overwrites the counts for one and two vertices with 1: the single vertex
/// and the single edge are the only connected graphs of those sizes, in
/// every flavor.
pub fn patch_initial_terms(mut table: CountTable) -> CountTable {
    for t in table.terms.iter_mut().take(2) {
        *t = BigInt::one();
    }
    table.meta.patched = true;
    table
}

/// How coefficients are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Exact integers or rationals throughout.
    Exact,
    /// One run per word-sized prime, then Chinese remaindering.
    Modular,
    /// Exact for short tables, modular beyond [`MODULAR_THRESHOLD`] terms.
    #[default]
    Auto,
}

pub const MODULAR_THRESHOLD: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnumerationOptions {
    pub variant: Variant,
    pub arithmetic: Arithmetic,
}

pub fn enumerate(
    class: GraphClass,
    flavor: Flavor,
    rooting: Rooting,
    n: usize,
) -> Result<CountTable, EnumerationError> {
    enumerate_with(class, flavor, rooting, n, EnumerationOptions::default())
}

pub fn enumerate_with(
    class: GraphClass,
    flavor: Flavor,
    rooting: Rooting,
    n: usize,
    options: EnumerationOptions,
) -> Result<CountTable, EnumerationError> {
    if n == 0 {
        return Err(EnumerationError::EmptyRange);
    }
    // Labeled unrooted counts are derived from the rooted grammar.
    let grammar_rooting = match flavor {
        Flavor::Labeled => Rooting::Rooted,
        Flavor::Unlabeled => rooting,
    };
    let grammar = build_grammar(class, grammar_rooting, options.variant)?;
    let modular = match options.arithmetic {
        Arithmetic::Exact => false,
        Arithmetic::Modular => true,
        Arithmetic::Auto => n > MODULAR_THRESHOLD,
    };
    let terms =
        if modular { modular_terms(&grammar, flavor, rooting, n)? } else { exact_terms(&grammar, flavor, rooting, n)? };
    let table = CountTable::new(
        class,
        flavor,
        rooting,
        terms,
        TableMeta { order: n, variant: options.variant, patched: false },
    );
    Ok(patch_initial_terms(table))
}

/// Multiplies the `n`th coefficient of an exponential generating function by
/// `n!` (rooted) or `(n-1)!` (unrooted), for `n = 1..=order`.
fn scale_factorials<T: Scalar>(egf: &Series<T>, rooting: Rooting) -> Vec<T> {
    let mut fact = T::one();
    (1..=egf.order())
        .map(|n| {
            if rooting == Rooting::Rooted || n > 1 {
                let k = if rooting == Rooting::Rooted { n } else { n - 1 };
                fact = fact.mul_ref(&T::from_u64(k as u64));
            }
            egf.coeff(n).mul_ref(&fact)
        })
        .collect()
}

fn exact_terms(grammar: &Grammar, flavor: Flavor, rooting: Rooting, n: usize) -> Result<Vec<BigInt>, EnumerationError> {
    match flavor {
        Flavor::Unlabeled => {
            let series = translate_unlabeled::<BigInt>(&grammar.system, n)?;
            Ok(grammar.assemble(&series).coeffs()[1..].to_vec())
        }
        Flavor::Labeled => {
            let series = translate_labeled::<BigRational>(&grammar.system, n)?;
            scale_factorials(&grammar.assemble(&series), rooting)
                .iter()
                .enumerate()
                .map(|(i, q)| rational_to_integer(q).ok_or(EnumerationError::NonIntegral { n: i + 1 }))
                .collect()
        }
    }
}

fn modular_terms(
    grammar: &Grammar,
    flavor: Flavor,
    rooting: Rooting,
    n: usize,
) -> Result<Vec<BigInt>, EnumerationError> {
    // Enough primes for n! · 8^n with room to spare.
    let bits = n * (usize::BITS - n.leading_zeros() + 4) as usize;
    let max_primes = bits / 61 + 16;
    let mut rec = Reconstruction::new(n);
    for p in primes_descending() {
        if rec.primes_used() >= max_primes {
            return Err(EnumerationError::ReconstructionFailed { primes: rec.primes_used() });
        }
        let _guard = ModulusGuard::install(p, n + 2);
        let residues: Vec<ModP> = match flavor {
            Flavor::Unlabeled => {
                let series = translate_unlabeled::<ModP>(&grammar.system, n)?;
                grammar.assemble(&series).coeffs()[1..].to_vec()
            }
            Flavor::Labeled => {
                let series = translate_labeled::<ModP>(&grammar.system, n)?;
                scale_factorials(&grammar.assemble(&series), rooting)
            }
        };
        let raw: Vec<u64> = residues.iter().map(|r| r.residue()).collect();
        if rec.push(p, &raw) {
            return Ok(rec.values());
        }
    }
    unreachable!("the prime supply below 2^62 is effectively unbounded")
}

/// Checks the dissymmetry theorem in labeled semantics: the unrooted
/// combination must equal the rooted series divided by `n`, for
/// `3 ≤ n ≤ order`.
pub fn dissymmetry_check_labeled(class: GraphClass, order: usize) -> bool {
    let rooted = build_grammar(class, Rooting::Rooted, Variant::Default).expect("default grammar");
    let unrooted = build_grammar(class, Rooting::Unrooted, Variant::Default).expect("default grammar");
    dissymmetry_holds(&rooted, &unrooted, order).unwrap_or(false)
}

/// [`dissymmetry_check_labeled`] for arbitrary, possibly corrupted, grammars.
pub fn dissymmetry_holds(rooted: &Grammar, unrooted: &Grammar, order: usize) -> Result<bool, SpeciesError> {
    let r = rooted.assemble(&translate_labeled::<BigRational>(&rooted.system, order)?);
    let u = unrooted.assemble(&translate_labeled::<BigRational>(&unrooted.system, order)?);
    Ok((3..=order).all(|n| {
        let expected = r.coeff(n) / BigRational::from_integer(BigInt::from(n));
        u.coeff(n) == &expected
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_i64(t: &CountTable) -> Vec<i64> {
        t.terms().iter().map(|x| i64::try_from(x).unwrap()).collect()
    }

    #[test]
    fn every_default_grammar_validates() {
        for class in [GraphClass::DistanceHereditary, GraphClass::ThreeLeafPower] {
            for rooting in [Rooting::Rooted, Rooting::Unrooted] {
                let g = build_grammar(class, rooting, Variant::Default).unwrap();
                assert!(g.system.validate().is_valid(), "{class} {rooting}: {}", g.system.validate());
            }
        }
    }

    #[test]
    fn equation_counts() {
        let dh = build_grammar(GraphClass::DistanceHereditary, Rooting::Rooted, Variant::Default).unwrap();
        assert_eq!(dh.system.equations().len(), 4);
        let tlp = build_grammar(GraphClass::ThreeLeafPower, Rooting::Unrooted, Variant::Default).unwrap();
        assert_eq!(tlp.system.equations().len(), 7);
        assert_eq!(tlp.assembly.len(), 4);
    }

    #[test]
    fn variants_are_restricted() {
        assert!(build_grammar(GraphClass::ThreeLeafPower, Rooting::Rooted, Variant::Merged).is_err());
        assert!(build_grammar(GraphClass::DistanceHereditary, Rooting::Unrooted, Variant::Merged).is_err());
        assert!(build_grammar(GraphClass::DistanceHereditary, Rooting::Unrooted, Variant::Product).is_ok());
    }

    #[test]
    fn raw_and_patched_initial_terms() {
        let g = build_grammar(GraphClass::DistanceHereditary, Rooting::Unrooted, Variant::Default).unwrap();
        let raw = exact_terms(&g, Flavor::Unlabeled, Rooting::Unrooted, 4).unwrap();
        assert_eq!(raw[2], BigInt::from(2));
        let table = CountTable::new(
            GraphClass::DistanceHereditary,
            Flavor::Unlabeled,
            Rooting::Unrooted,
            raw,
            TableMeta { order: 4, variant: Variant::Default, patched: false },
        );
        let once = patch_initial_terms(table);
        assert_eq!(as_i64(&once), vec![1, 1, 2, 6]);
        assert_eq!(patch_initial_terms(once.clone()), once);
    }

    #[test]
    fn bfile_round_trip() {
        let t = enumerate(GraphClass::ThreeLeafPower, Flavor::Unlabeled, Rooting::Unrooted, 10).unwrap();
        assert_eq!(CountTable::parse_bfile(&t.to_bfile()).unwrap(), t.terms());
        assert!(matches!(CountTable::parse_bfile("1 1\n3 2\n"), Err(BfileError::OutOfSequence { .. })));
    }

    #[test]
    fn empty_range_is_rejected() {
        assert_eq!(
            enumerate(GraphClass::ThreeLeafPower, Flavor::Unlabeled, Rooting::Unrooted, 0),
            Err(EnumerationError::EmptyRange)
        );
    }

    #[test]
    fn modular_and_exact_agree() {
        for class in [GraphClass::DistanceHereditary, GraphClass::ThreeLeafPower] {
            for flavor in [Flavor::Labeled, Flavor::Unlabeled] {
                for rooting in [Rooting::Rooted, Rooting::Unrooted] {
                    let run = |arithmetic| {
                        enumerate_with(
                            class,
                            flavor,
                            rooting,
                            60,
                            EnumerationOptions { variant: Variant::Default, arithmetic },
                        )
                        .unwrap()
                    };
                    assert_eq!(run(Arithmetic::Exact), run(Arithmetic::Modular), "{class} {flavor} {rooting}");
                }
            }
        }
    }
}
