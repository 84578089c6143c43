//! Exact enumeration and asymptotics for distance-hereditary graphs and
//! 3-leaf power graphs, derived from split-decomposition grammars.
//!
//! The crate is layered bottom-up:
//!
//! * [`powerseries`]: truncated formal power series over any [`Scalar`].
//! * [`species`]: class expressions, validation, and the labeled and
//!   unlabeled translations to generating functions.
//! * [`grammars`]: the concrete grammars and the enumeration entry points.
//! * [`asymptotics`]: branch point and singular expansions at high precision.
//! * [`oracle`]: brute-force generation of small graphs, for cross-checks.

pub mod asymptotics;
pub mod grammars;
pub mod modular;
pub mod oracle;
pub mod powerseries;
pub mod scalar;
pub mod species;

pub use grammars::{
    build_grammar, dissymmetry_check_labeled, enumerate, enumerate_with, patch_initial_terms, Arithmetic, CountTable,
    EnumerationError, EnumerationOptions, Flavor, Grammar, GraphClass, Rooting, Variant,
};
pub use modular::ModP;
pub use powerseries::{Series, SeriesError, Sign};
pub use scalar::{Field, Scalar};
pub use species::{ClassExpr, GrammarSystem, Semantics, SeriesMap, SpeciesError, ValidationReport, Violation};

/// Exact rational series, used for exponential generating functions.
pub type RationalSeries = Series<num_rational::BigRational>;
/// Exact integer series, used for ordinary generating functions.
pub type IntegerSeries = Series<num_bigint::BigInt>;
pub type FloatSeries = Series<f64>;
pub type Float32Series = Series<f32>;
pub type ModularSeries = Series<ModP>;
