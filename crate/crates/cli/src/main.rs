use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use steenrod_cli::ast::{ClassKind, Flag, Ident, ObstructKind, OpText, Query, QueryKind, Span};
use steenrod_cli::corpus::{self, EntryStatus, ScenarioReport};
use steenrod_cli::{parse, parse_poly, Outcome, Session};
use steenrod_core::Prime;

#[derive(Parser)]
#[command(name = "stcalc", version, about = "Steenrod operations on twisted mod-l cohomology rings")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Degree bound for consistency checks and operation sweeps.
    #[arg(long, global = true)]
    max_degree: Option<u32>,
    /// Prime for `adem` when the operation is not tied to a ring.
    #[arg(long, global = true)]
    prime: Option<u32>,
    /// Extra definition files loaded before the command runs.
    #[arg(long = "load", global = true)]
    load: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every query of one or more files.
    Run { files: Vec<PathBuf> },
    /// Apply a Steenrod operation to a class.
    Apply {
        op: String,
        poly: String,
        #[arg(long)]
        ring: String,
    },
    /// Normal form of a polynomial expression.
    Normalize {
        poly: String,
        #[arg(long)]
        ring: String,
    },
    /// Admissible form of an operation.
    Adem { op: String },
    /// Run an algebraicity obstruction.
    Obstruct {
        #[arg(value_enum)]
        kind: KindArg,
        poly: String,
        #[arg(long)]
        ring: String,
        #[arg(long)]
        codim: Option<i64>,
        #[arg(long)]
        which: Option<i64>,
        #[arg(long)]
        q: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        twist: Option<i64>,
    },
    /// Check the relative Wu formula on a projective bundle over a ring.
    WuCheck {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        ring: String,
        /// Base class; every base monomial up to the degree bound when omitted.
        poly: Option<String>,
    },
    /// Characteristic classes of a declared bundle.
    Charclass {
        #[arg(value_enum)]
        which: ClassArg,
        bundle: String,
    },
    /// Consistency of the declared action data of a ring.
    Check { ring: String },
    /// Built-in scenarios.
    Corpus {
        #[command(subcommand)]
        action: CorpusCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Odd,
    Weird,
    Frobenius,
    Hs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    W,
    Wet,
    Wetchow,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// List the scenarios.
    List,
    /// Run one scenario, or `all`.
    Run { name: String },
    /// Write the built-in scenarios as data files.
    Export { dir: PathBuf },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn ident(name: &str) -> Ident {
    Ident { name: name.to_string(), span: Span::default() }
}

fn op_text(text: &str) -> OpText {
    OpText { text: text.to_string(), span: Span::default() }
}

fn flags(pairs: &[(&str, Option<i64>)]) -> Vec<Flag> {
    pairs
        .iter()
        .filter_map(|(n, v)| v.map(|value| Flag { name: n.to_string(), value, span: Span::default() }))
        .collect()
}

fn poly_arg(src: &str) -> Result<steenrod_cli::ast::Poly, Failure> {
    parse_poly(src).map_err(|e| Failure(format!("in `{src}`: {e}")))
}

fn print_outcomes(outcomes: &[Outcome], format: Format, with_query: bool) {
    match format {
        Format::Text => {
            for o in outcomes {
                println!("{}", o.text(with_query));
            }
        }
        Format::Json => {
            let v: Vec<Value> = outcomes.iter().map(Outcome::to_json).collect();
            let v = if with_query { Value::Array(v) } else { v.into_iter().next().unwrap_or(Value::Null) };
            println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
        }
    }
}

fn report_json(r: &ScenarioReport) -> Value {
    let entries: Vec<Value> = r
        .entries
        .iter()
        .map(|(q, s)| match s {
            EntryStatus::Pass => json!({ "query": q, "status": "pass" }),
            EntryStatus::Fail(d) => json!({ "query": q, "status": "fail", "detail": d }),
            EntryStatus::Error(d) => json!({ "query": q, "status": "error", "detail": d }),
        })
        .collect();
    json!({ "scenario": r.name, "passed": r.passed(), "entries": entries })
}

fn run_corpus(action: &CorpusCommand, format: Format) -> Result<bool, Failure> {
    match action {
        CorpusCommand::List => {
            let all = corpus::shipped()?;
            match format {
                Format::Text => {
                    for s in &all {
                        println!("{:<20} {}", s.name, s.description);
                    }
                }
                Format::Json => {
                    let v: Vec<Value> = all
                        .iter()
                        .map(|s| json!({ "name": s.name, "description": s.description, "rings": s.rings() }))
                        .collect();
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
            }
            Ok(true)
        }
        CorpusCommand::Run { name } => {
            let all = corpus::shipped()?;
            let chosen: Vec<_> = all.iter().filter(|s| name == "all" || s.name == *name).collect();
            if chosen.is_empty() {
                return Err(Failure(format!("unknown scenario `{name}`")));
            }
            let reports: Vec<ScenarioReport> = std::thread::scope(|scope| {
                let handles: Vec<_> = chosen.iter().map(|s| scope.spawn(|| corpus::run_scenario(s))).collect();
                handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
            });
            match format {
                Format::Text => {
                    for r in &reports {
                        println!("{}", r.summary());
                        for f in r.failures() {
                            println!("  {f}");
                        }
                    }
                }
                Format::Json => {
                    let v: Vec<Value> = reports.iter().map(report_json).collect();
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
            }
            Ok(reports.iter().all(ScenarioReport::passed))
        }
        CorpusCommand::Export { dir } => {
            corpus::export(dir)?;
            Ok(true)
        }
    }
}

fn single_query(cmd: &Command) -> Result<Query, Failure> {
    let kind = match cmd {
        Command::Apply { op, poly, ring } => {
            QueryKind::Apply { op: op_text(op), target: poly_arg(poly)?, ring: ident(ring) }
        }
        Command::Normalize { poly, ring } => QueryKind::Normalize { target: poly_arg(poly)?, ring: ident(ring) },
        Command::Adem { op } => QueryKind::Adem { flags: Vec::new(), op: op_text(op) },
        Command::Obstruct { kind, poly, ring, codim, which, q, twist } => QueryKind::Obstruct {
            kind: match kind {
                KindArg::Odd => ObstructKind::Odd,
                KindArg::Weird => ObstructKind::Weird,
                KindArg::Frobenius => ObstructKind::Frobenius,
                KindArg::Hs => ObstructKind::Hs,
            },
            flags: match kind {
                KindArg::Odd => flags(&[("codim", *codim)]),
                KindArg::Weird => flags(&[("codim", *codim), ("which", *which)]),
                KindArg::Frobenius | KindArg::Hs => flags(&[("q", *q), ("twist", *twist)]),
            },
            target: poly_arg(poly)?,
            ring: ident(ring),
        },
        Command::WuCheck { n, m, ring, poly } => QueryKind::WuCheck {
            flags: flags(&[("n", Some(*n)), ("m", Some(*m))]),
            target: poly.as_deref().map(poly_arg).transpose()?,
            ring: ident(ring),
        },
        Command::Charclass { which, bundle } => QueryKind::CharClass {
            kind: match which {
                ClassArg::W => ClassKind::W,
                ClassArg::Wet => ClassKind::Wet,
                ClassArg::Wetchow => ClassKind::WetChow,
            },
            bundle: ident(bundle),
        },
        Command::Check { ring } => QueryKind::Check { flags: Vec::new(), ring: ident(ring) },
        Command::Run { .. } | Command::Corpus { .. } => unreachable!("handled separately"),
    };
    Ok(Query { kind, expect: Vec::new(), span: Span::default() })
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    if let Command::Corpus { action } = &cli.command {
        return run_corpus(action, cli.format);
    }
    let mut session = Session::with_builtins()?;
    if let Some(d) = cli.max_degree {
        session.default_max_degree = d;
    }
    if let Some(p) = cli.prime {
        session.default_prime = Prime::new(p)?;
    }
    for path in &cli.load {
        let src = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let file = parse(&src).map_err(|e| Failure(format!("{}:{e}", path.display())))?;
        let outcomes = session.run(&file).map_err(|e| Failure(format!("{}:{e}", path.display())))?;
        if !outcomes.is_empty() {
            return Err(Failure(format!("{}: --load files may only contain definitions", path.display())));
        }
    }
    let outcomes = match &cli.command {
        Command::Run { files } => {
            let mut all = Vec::new();
            for path in files {
                let src = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                let file = parse(&src).map_err(|e| Failure(format!("{}:{e}", path.display())))?;
                all.extend(session.run(&file).map_err(|e| Failure(format!("{}:{e}", path.display())))?);
            }
            print_outcomes(&all, cli.format, true);
            all
        }
        cmd => {
            let q = single_query(cmd)?;
            let o = session.query(&q)?;
            print_outcomes(std::slice::from_ref(&o), cli.format, false);
            vec![o]
        }
    };
    Ok(!outcomes.iter().any(Outcome::is_failure))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
