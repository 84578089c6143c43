//! `splitcount`: enumeration tables, asymptotic constants and oracle
//! cross-checks from the command line.
//!
//! Exit codes: 0 on success, 1 on a failed check or internal error, 2 on
//! invalid flags. Output is a pure function of the flags.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::json;
use splitcount::asymptotics::{self, HighPrecision, Real};
use splitcount::oracle::{self, LabeledMode};
use splitcount::{enumerate_with, Arithmetic, EnumerationOptions, Flavor, GraphClass, Rooting, Variant};

#[derive(Parser, Debug)]
#[command(name = "splitcount", version, about = "Count distance-hereditary graphs and 3-leaf powers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the first N terms of a counting sequence.
    Enumerate(EnumerateArgs),
    /// Locate the dominant singularity and print the asymptotic constants.
    Asymptotics(AsymptoticsArgs),
    /// Compare grammar counts with brute-force oracle counts.
    Crosscheck(CrosscheckArgs),
    /// Dump every unlabeled graph of a class on n vertices.
    Export(ExportArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ClassArg {
    Dh,
    #[value(name = "3lp")]
    Tlp,
}

impl From<ClassArg> for GraphClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Dh => GraphClass::DistanceHereditary,
            ClassArg::Tlp => GraphClass::ThreeLeafPower,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FlavorArg {
    Labeled,
    Unlabeled,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RootingArg {
    Rooted,
    Unrooted,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    Default,
    Product,
    Merged,
    #[value(name = "mutant-sx-set")]
    MutantSxSet,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Default => Variant::Default,
            VariantArg::Product => Variant::Product,
            VariantArg::Merged => Variant::Merged,
            VariantArg::MutantSxSet => Variant::SeriesAsSet,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ArithmeticArg {
    Exact,
    Modular,
    Auto,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
    Bfile,
}

#[derive(Args, Debug)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value = "plain")]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    #[arg(long, value_enum, default_value = "unlabeled")]
    flavor: FlavorArg,
    #[arg(long, value_enum, default_value = "unrooted")]
    rooting: RootingArg,
    /// Number of terms, starting at n = 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1_000_000))]
    n: u64,
    #[arg(long, value_enum, default_value = "default")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "auto")]
    arithmetic: ArithmeticArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct AsymptoticsArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    /// Significant digits printed for each constant, truncated.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=200))]
    digits: u64,
    /// Working precision; at least 30, and at least 20 above --digits.
    #[arg(long, value_parser = clap::value_parser!(u64).range(30..=1000))]
    working_digits: Option<u64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct CrosscheckArgs {
    /// Largest graph size compared.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=oracle::GENERATION_CAP as u64))]
    max_n: u64,
    /// Grammar variant used for the distance-hereditary counts.
    #[arg(long, value_enum, default_value = "default")]
    variant: VariantArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long, value_enum)]
    class: ClassArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=oracle::GENERATION_CAP as u64))]
    n: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Text produced by a command and whether every check in it passed.
struct Report {
    text: String,
    ok: bool,
}

/// Parses the arguments; usage errors also print the usage of the
/// subcommand involved and exit with 2.
fn parse() -> Cli {
    use clap::CommandFactory;
    match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                let mut cmd = Cli::command();
                cmd.build();
                let name = std::env::args().nth(1).unwrap_or_default();
                let usage = match cmd.find_subcommand_mut(&name) {
                    Some(sub) => sub.render_usage(),
                    None => cmd.render_usage(),
                };
                eprintln!("\n{usage}");
            }
            std::process::exit(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = parse();
    let (result, target) = match cli.command {
        Command::Enumerate(a) => {
            let t = a.out.output.clone();
            (run_enumerate(&a), t)
        }
        Command::Asymptotics(a) => {
            let t = a.out.output.clone();
            (run_asymptotics(&a), t)
        }
        Command::Crosscheck(a) => {
            let t = a.out.output.clone();
            (run_crosscheck(&a), t)
        }
        Command::Export(a) => {
            let t = a.output.clone();
            (run_export(&a), t)
        }
    };
    match result.and_then(|r| emit(&r.text, target.as_ref()).map(|_| r.ok)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(text: &str, target: Option<&PathBuf>) -> Result<()> {
    match target {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn usage_error(msg: &str) -> ! {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    cmd.build();
    let name = std::env::args().nth(1).unwrap_or_default();
    let usage = cmd.find_subcommand_mut(&name).map(|s| s.render_usage().to_string()).unwrap_or_default();
    eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try '--help'.");
    std::process::exit(2)
}

fn run_enumerate(a: &EnumerateArgs) -> Result<Report> {
    let flavor = match a.flavor {
        FlavorArg::Labeled => Flavor::Labeled,
        FlavorArg::Unlabeled => Flavor::Unlabeled,
    };
    let rooting = match a.rooting {
        RootingArg::Rooted => Rooting::Rooted,
        RootingArg::Unrooted => Rooting::Unrooted,
    };
    let arithmetic = match a.arithmetic {
        ArithmeticArg::Exact => Arithmetic::Exact,
        ArithmeticArg::Modular => Arithmetic::Modular,
        ArithmeticArg::Auto => Arithmetic::Auto,
    };
    let class = GraphClass::from(a.class);
    let variant = Variant::from(a.variant);
    if splitcount::build_grammar(class, rooting, variant).is_err() {
        usage_error(&format!("variant {variant} is not available for {class} {rooting}"));
    }
    let options = EnumerationOptions { variant, arithmetic };
    let table = enumerate_with(class, flavor, rooting, a.n as usize, options)?;
    let text = match a.out.format {
        Format::Bfile => table.to_bfile(),
        Format::Json => format!("{}\n", table.to_json()),
        Format::Plain => table.terms().iter().map(|t| format!("{t}\n")).collect(),
    };
    Ok(Report { text, ok: true })
}

fn run_asymptotics(a: &AsymptoticsArgs) -> Result<Report> {
    if a.out.format == Format::Bfile {
        usage_error("asymptotics supports plain and json output");
    }
    let digits = a.digits as usize;
    let working = a.working_digits.map(|w| w as usize).unwrap_or(asymptotics::DEFAULT_DIGITS.max(digits + 20));
    if working < digits + 20 {
        usage_error("--working-digits must exceed --digits by at least 20");
    }
    let class = GraphClass::from(a.class);
    let report = match asymptotics::analyze(class, working) {
        Ok(r) => r,
        Err(e @ asymptotics::AsymptoticsError::CancellationFailed { .. }) => {
            return Ok(Report { text: format!("cancellation check failed: {e}\n"), ok: false })
        }
        Err(e) => return Err(e.into()),
    };
    let text = HighPrecision::with_digits(working, || {
        let v = |x: &HighPrecision| x.to_decimal_truncated(digits);
        let small = |x: &HighPrecision| x.to_decimal(3);
        let r = &report;
        let fields: Vec<(&str, String)> = vec![
            ("gamma", v(&r.rooted_estimate.growth)),
            ("rho", v(&r.branch.rho)),
            ("tau", v(&r.branch.tau)),
            ("c", v(&r.rooted.c)),
            ("d", v(&r.rooted.d)),
            ("e", v(&r.rooted.e)),
            ("tau_prime", v(&r.unrooted.tau_prime)),
            ("c_prime", small(&r.unrooted.c_prime)),
            ("d_prime", v(&r.unrooted.d_prime)),
            ("e_prime", v(&r.unrooted.e_prime)),
            ("rooted_constant", v(&r.rooted_estimate.constant)),
            ("unrooted_constant", v(&r.unrooted_estimate.constant)),
            ("residual_f", small(&r.branch.residuals.0)),
            ("residual_f_y", small(&r.branch.residuals.1)),
            ("residual_expansion", small(&r.rooted.residual)),
            ("g_y", small(&r.unrooted.g_y)),
            ("identity_residual", small(&r.identity_residual)),
        ];
        match a.out.format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                obj.insert("class".into(), json!(class.id()));
                obj.insert("digits".into(), json!(digits));
                obj.insert("working_digits".into(), json!(working));
                obj.insert("stable_m".into(), json!(r.stable_m));
                for (k, val) in &fields {
                    obj.insert((*k).into(), json!(val));
                }
                format!("{}\n", serde_json::Value::Object(obj))
            }
            _ => {
                let mut s = String::new();
                writeln!(s, "class {}", class.id()).unwrap();
                writeln!(s, "digits {digits}").unwrap();
                writeln!(s, "working_digits {working}").unwrap();
                writeln!(s, "stable_m {}", r.stable_m).unwrap();
                for (k, val) in &fields {
                    writeln!(s, "{k} {val}").unwrap();
                }
                s
            }
        }
    });
    Ok(Report { text, ok: true })
}

struct Row {
    label: String,
    n: usize,
    oracle: BigInt,
    grammar: BigInt,
}

fn run_crosscheck(a: &CrosscheckArgs) -> Result<Report> {
    if a.out.format == Format::Bfile {
        usage_error("crosscheck supports plain and json output");
    }
    let max_n = a.max_n as usize;
    let variant = Variant::from(a.variant);
    if splitcount::build_grammar(GraphClass::DistanceHereditary, Rooting::Unrooted, variant).is_err() {
        usage_error(&format!("variant {variant} has no unrooted grammar"));
    }
    let mut rows = Vec::new();
    for class in [GraphClass::DistanceHereditary, GraphClass::ThreeLeafPower] {
        let v = if class == GraphClass::DistanceHereditary { variant } else { Variant::Default };
        let options = EnumerationOptions { variant: v, arithmetic: Arithmetic::Exact };
        let unlabeled = enumerate_with(class, Flavor::Unlabeled, Rooting::Unrooted, max_n, options)?;
        let labeled = enumerate_with(class, Flavor::Labeled, Rooting::Unrooted, max_n, options)?;
        for n in 1..=max_n {
            let count = oracle::generate_all(class, n)?.len();
            rows.push(Row {
                label: format!("{} unlabeled", class.id()),
                n,
                oracle: BigInt::from(count),
                grammar: unlabeled.term(n).clone(),
            });
        }
        for n in 1..=max_n.min(oracle::EXHAUSTIVE_CAP) {
            rows.push(Row {
                label: format!("{} labeled", class.id()),
                n,
                oracle: oracle::count_labeled(class, n, LabeledMode::Exhaustive)?,
                grammar: labeled.term(n).clone(),
            });
        }
    }
    let agreement = oracle::recognizer_agreement(max_n.min(7))?;
    let mismatches: Vec<&Row> = rows.iter().filter(|r| r.oracle != r.grammar).collect();
    let ok = mismatches.is_empty() && agreement.disagreements.is_empty();
    let examined: usize = agreement.graphs.values().sum();
    let status = |r: &Row| if r.oracle == r.grammar { "MATCH" } else { "MISMATCH" };
    let text = match a.out.format {
        Format::Json => {
            let rows_json: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({"check": r.label, "n": r.n, "oracle": r.oracle.to_string(),
                           "grammar": r.grammar.to_string(), "status": status(r)})
                })
                .collect();
            let value = json!({
                "variant": variant.id(),
                "rows": rows_json,
                "first_mismatch": mismatches.first().map(|r| json!({"check": r.label, "n": r.n})),
                "recognizers": {"max_n": max_n.min(7), "graphs": examined,
                                "disagreements": agreement.disagreements.len()},
                "ok": ok,
            });
            format!("{value}\n")
        }
        _ => {
            let mut s = String::new();
            writeln!(s, "{:<14} {:>2} {:>12} {:>12}  status", "check", "n", "oracle", "grammar").unwrap();
            for r in &rows {
                writeln!(s, "{:<14} {:>2} {:>12} {:>12}  {}", r.label, r.n, r.oracle, r.grammar, status(r)).unwrap();
            }
            writeln!(
                s,
                "recognizers agree on {} of {} connected graphs with n <= {}",
                examined - agreement.disagreements.len(),
                examined,
                max_n.min(7)
            )
            .unwrap();
            match mismatches.first() {
                Some(r) => writeln!(s, "first mismatch: {} at n={}", r.label, r.n).unwrap(),
                None => writeln!(s, "all rows MATCH").unwrap(),
            }
            s
        }
    };
    Ok(Report { text, ok })
}

fn run_export(a: &ExportArgs) -> Result<Report> {
    let keys = oracle::generate_all(GraphClass::from(a.class), a.n as usize)?;
    Ok(Report { text: oracle::export_graphs(&keys), ok: true })
}
