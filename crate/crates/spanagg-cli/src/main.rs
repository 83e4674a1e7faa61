//! Batch command-line front end over the spanagg library.
//!
//! Subcommands: `eval` computes an aggregate, `check` reports structural
//! properties of a spanner, `gen` emits generated test instances, `dag`
//! dumps the product DAG. Exit codes: 0 success, 2 domain or empty-relation
//! errors, 3 capacity, 4 unsupported, 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use spanagg::aggregates::{
    AggregateKind, AggregateRequest, Engine, Instance, Mode, DEFAULT_GUARD,
};
use spanagg::automata::{
    automaton_from_json, automaton_to_json, compile_regex, parse_regex, remove_epsilon,
    VsetAutomaton,
};
use spanagg::dag::{build_dag, dag_to_json};
use spanagg::generators::{encode_cnf_sum, running_example, spanner_with_k_tuples, CnfFormula};
use spanagg::oracle::{oracle_aggregate, outcomes_agree};
use spanagg::semiring::{format_rational, parse_rational};
use spanagg::spans::{Alphabet, Document, Var};
use spanagg::weights::{weight_from_json, weight_to_json, WeightFunction, WeightLimits};
use spanagg::Error;

#[derive(Parser)]
#[command(name = "spanagg", about = "Aggregate queries over document spanners", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an aggregate over a spanner on a document.
    Eval(EvalArgs),
    /// Report whether a spanner is functional, order-respecting, unambiguous.
    Check(CheckArgs),
    /// Emit generated instances with known ground truth.
    Gen(GenArgs),
    /// Dump the product DAG of a spanner (optionally with weights) on a document.
    Dag(DagArgs),
}

#[derive(Args)]
struct SpannerSource {
    /// Automaton JSON file.
    #[arg(long, conflicts_with = "regex")]
    spanner: Option<PathBuf>,
    /// Regex formula with capture variables.
    #[arg(long)]
    regex: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Document file (raw text, decoded as UTF-8).
    #[arg(long)]
    doc: PathBuf,
    /// Pins the alphabet to the code points of this string.
    #[arg(long)]
    alphabet: Option<String>,
    #[command(flatten)]
    spanner: SpannerSource,
    /// Weight function JSON file.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// count | min | max | sum | avg | quantile | count-below
    #[arg(long)]
    agg: String,
    /// Quantile position (rational in [0,1]).
    #[arg(long)]
    q: Option<String>,
    /// Threshold for count-below (rational).
    #[arg(long)]
    k: Option<String>,
    /// Strict comparison for count-below (< instead of <=).
    #[arg(long)]
    strict: bool,
    /// exact | approx
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Positional tolerance for approximate quantiles (rational in (0,1]).
    #[arg(long)]
    delta: Option<String>,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum tuples any materializing step may produce.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: u64,
    /// Cross-check against the brute-force oracle; exit nonzero on mismatch.
    #[arg(long)]
    oracle: bool,
    /// Print the machine-readable result record.
    #[arg(long)]
    json: bool,
    /// Force a specific evaluation strategy by tag.
    #[arg(long)]
    algorithm: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    spanner: SpannerSource,
    /// Document file; its code points become the alphabet for `--regex`.
    #[arg(long)]
    doc: Option<PathBuf>,
    /// Explicit alphabet for `--regex`.
    #[arg(long)]
    alphabet: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
}

#[derive(Subcommand)]
enum GenCommand {
    /// A spanner extracting exactly k tuples from a derived document.
    KTuples {
        /// Number of capture variables.
        #[arg(long)]
        vars: usize,
        /// Base document text.
        #[arg(long)]
        doc_text: String,
        /// Requested tuple count.
        #[arg(long)]
        k: String,
        /// Output directory for spanner.json and doc.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// A Sum instance whose value counts the satisfying assignments of a CNF.
    CnfSum {
        /// Number of propositional variables.
        #[arg(long)]
        vars: usize,
        /// Clauses as comma-separated lists of signed literals, e.g. "1 3 -4, -2".
        #[arg(long)]
        clauses: String,
        /// Output directory for spanner.json, weights.json and doc.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// The packaged events-per-location example.
    FigExample {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DagArgs {
    #[arg(long)]
    doc: PathBuf,
    #[arg(long)]
    alphabet: Option<String>,
    #[command(flatten)]
    spanner: SpannerSource,
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::EmptyRelation => 2,
        Error::Capacity(_) => 3,
        Error::Unsupported(_) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Eval(args) => eval(args),
        Command::Check(args) => check(args),
        Command::Gen(args) => gen(args),
        Command::Dag(args) => dag(args),
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_document(path: &Path, alphabet: &Option<String>) -> Result<Document, Error> {
    let text = read_to_string(path)?;
    match alphabet {
        Some(symbols) => Document::new(&text, Alphabet::of_text(symbols)),
        None => Ok(Document::from_text(&text)),
    }
}

fn load_spanner(source: &SpannerSource, alphabet: &Alphabet) -> Result<VsetAutomaton, Error> {
    match (&source.spanner, &source.regex) {
        (Some(path), None) => {
            let value: serde_json::Value = serde_json::from_str(&read_to_string(path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            automaton_from_json(&value)
        }
        (None, Some(regex)) => compile_regex(&parse_regex(regex)?, alphabet),
        _ => Err(Error::Parse("provide exactly one of --spanner or --regex".to_string())),
    }
}

fn load_weights(path: &Option<PathBuf>) -> Result<Option<WeightFunction>, Error> {
    match path {
        None => Ok(None),
        Some(path) => {
            let value: serde_json::Value = serde_json::from_str(&read_to_string(path)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            Ok(Some(weight_from_json(&value, &WeightLimits::default())?))
        }
    }
}

fn parse_aggregate(args: &EvalArgs) -> Result<AggregateKind, Error> {
    Ok(match args.agg.as_str() {
        "count" => AggregateKind::Count,
        "min" => AggregateKind::Min,
        "max" => AggregateKind::Max,
        "sum" => AggregateKind::Sum,
        "avg" => AggregateKind::Avg,
        "quantile" => {
            let q = args
                .q
                .as_deref()
                .ok_or_else(|| Error::Parse("quantile needs --q".to_string()))?;
            AggregateKind::Quantile(parse_rational(q)?)
        }
        "count-below" => {
            let k = args
                .k
                .as_deref()
                .ok_or_else(|| Error::Parse("count-below needs --k".to_string()))?;
            AggregateKind::CountBelow { threshold: parse_rational(k)?, strict: args.strict }
        }
        other => return Err(Error::Parse(format!("unknown aggregate {other:?}"))),
    })
}

fn eval(args: EvalArgs) -> Result<(), Error> {
    let doc = load_document(&args.doc, &args.alphabet)?;
    let spanner = load_spanner(&args.spanner, doc.alphabet())?;
    let weight = load_weights(&args.weights)?;
    let kind = parse_aggregate(&args)?;
    let mode = match args.mode.as_str() {
        "exact" => Mode::Exact,
        "approx" => Mode::Approx,
        other => return Err(Error::Parse(format!("unknown mode {other:?}"))),
    };
    let request = AggregateRequest {
        kind: kind.clone(),
        mode,
        guard: args.guard,
        delta: args.delta.as_deref().map(parse_rational).transpose()?,
        seed: args.seed,
    };
    let instance = Instance::new(spanner, doc, weight)?;
    let engine = Engine::new();
    let outcome = match &args.algorithm {
        Some(tag) => engine.evaluate_forced(&instance, &request, tag),
        None => engine.evaluate(&instance, &request),
    };

    if args.oracle {
        let reference = oracle_aggregate(
            instance.spanner(),
            instance.doc(),
            instance.weight(),
            &kind,
            args.guard,
        );
        let engine_outcome = outcome.as_ref().map(|e| e.value.clone()).map_err(|e| e.clone());
        if !outcomes_agree(&engine_outcome, &reference) {
            eprintln!("oracle mismatch:");
            eprintln!("  engine: {engine_outcome:?}");
            eprintln!("  oracle: {reference:?}");
            return Err(Error::Structure("engine and oracle disagree".to_string()));
        }
    }

    let outcome = outcome?;
    if args.json {
        let mut record = serde_json::json!({
            "value": outcome.value.to_string(),
            "algorithm": outcome.plan.algorithm,
            "exact": outcome.exact,
        });
        if let Some(samples) = outcome.samples {
            record["samples"] = serde_json::json!(samples);
        }
        if let Some(delta) = &outcome.delta {
            record["delta"] = serde_json::json!(format_rational(delta));
        }
        println!("{record}");
    } else {
        println!("{}", outcome.value);
    }
    Ok(())
}

fn check(args: CheckArgs) -> Result<(), Error> {
    let alphabet = match (&args.alphabet, &args.doc) {
        (Some(symbols), _) => Alphabet::of_text(symbols),
        (None, Some(path)) => Alphabet::of_text(&read_to_string(path)?),
        (None, None) => Alphabet::new([]),
    };
    let spanner = load_spanner(&args.spanner, &alphabet)?;
    let spanner = remove_epsilon(&spanner)?;
    let functional = spanner.is_functional();
    let voc = spanner.check_voc();
    let unambiguous = spanner.is_unambiguous();
    println!("functional: {functional}");
    println!("voc: {voc}");
    println!("unambiguous: {unambiguous}");
    Ok(())
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn gen(args: GenArgs) -> Result<(), Error> {
    match args.what {
        GenCommand::KTuples { vars, doc_text, k, out } => {
            if vars == 0 {
                return Err(Error::Range("--vars must be at least 1".to_string()));
            }
            let k: BigUint = k
                .parse()
                .map_err(|_| Error::Parse(format!("invalid natural number {k:?}")))?;
            let variables: Vec<Var> =
                (1..=vars).map(|i| Var::new(format!("x{i}"))).collect();
            let base = Document::from_text(&doc_text);
            let (spanner, doc) = spanner_with_k_tuples(&variables, &base, &k)?;
            write_file(&out, "spanner.json", &pretty(&automaton_to_json(&spanner)))?;
            write_file(&out, "doc.txt", &doc.text())?;
            println!("expected count: {k}");
        }
        GenCommand::CnfSum { vars, clauses, out } => {
            let parsed: Result<Vec<Vec<i64>>, Error> = clauses
                .split(',')
                .map(|clause| {
                    clause
                        .split_whitespace()
                        .map(|lit| {
                            lit.parse::<i64>().map_err(|_| {
                                Error::Parse(format!("invalid literal {lit:?}"))
                            })
                        })
                        .collect()
                })
                .collect();
            let formula = CnfFormula::new(vars, parsed?)?;
            let expected = formula.count_satisfying();
            let (spanner, doc, weights) = encode_cnf_sum(&formula)?;
            write_file(&out, "spanner.json", &pretty(&automaton_to_json(&spanner)))?;
            write_file(
                &out,
                "weights.json",
                &pretty(&weight_to_json(&WeightFunction::CWidth(weights))?),
            )?;
            write_file(&out, "doc.txt", &doc.text())?;
            println!("expected sum (satisfying assignments): {expected}");
        }
        GenCommand::FigExample { out } => {
            let ex = running_example()?;
            write_file(&out, "doc.txt", &ex.doc.text())?;
            write_file(&out, "spanner_lower.json", &pretty(&automaton_to_json(&ex.lower)))?;
            write_file(&out, "spanner_upper.json", &pretty(&automaton_to_json(&ex.upper)))?;
            write_file(
                &out,
                "weights.json",
                &pretty(&weight_to_json(&WeightFunction::CWidth(ex.weights))?),
            )?;
        }
    }
    Ok(())
}

fn dag(args: DagArgs) -> Result<(), Error> {
    let doc = load_document(&args.doc, &args.alphabet)?;
    let spanner = load_spanner(&args.spanner, doc.alphabet())?;
    let weight = load_weights(&args.weights)?;
    let instance = Instance::new(spanner, doc, weight)?;
    let reg_weight = match instance.weight() {
        Some(WeightFunction::Reg(r)) => Some(r),
        Some(_) => {
            return Err(Error::Unsupported(
                "the dag dump takes a regular weight automaton".to_string(),
            ))
        }
        None => None,
    };
    let dag = build_dag(instance.spanner(), reg_weight, instance.doc())?;
    println!("{}", pretty(&dag_to_json(&dag)));
    Ok(())
}
