//! `stickel`: compute Stickelberger elements, run verification sweeps, and
//! drive the splitting simulator from scenario documents.
//!
//! Exit codes: 0 when every check passes (N/A counts as passing), 1 when a
//! check fails, 2 for usage or input errors.

mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use stickelberger::checks::Check;
use stickelberger::cyclotomic_galois::{w_n_brute_force, AbelianFieldQ};
use stickelberger::euler_system::build_family;
use stickelberger::exact_arith::{format_rational, unit_group};
use stickelberger::partial_zeta::{zeta_q, PartialZetaTable};
use stickelberger::splitting_sim::{generate_scenario, ScenarioSpec, SimError};
use stickelberger::stickelberger::{
    character_check, check_congruence, check_integrality, AuxiliaryClass, CongruenceGate, CongruenceScope,
    GroupRingElement, StickContext,
};

use report::{Batch, RunReport};

#[derive(Debug, Parser)]
#[command(name = "stickel", version, about = "Exact higher Stickelberger elements and their identities")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized work; recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Include elapsed time in reports (off by default so reports are byte-stable).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Θ_n(b, f) over G(F/Q) with F = Q(μ_f)^H, or over an ingested table.
    Theta {
        #[arg(long)]
        f: Option<u64>,
        /// Generators of H, separated by commas or spaces.
        #[arg(long, default_value = "")]
        subgroup: String,
        /// Norm of the auxiliary ideal; with --table, an auxiliary prime label.
        #[arg(long)]
        b: String,
        #[arg(long)]
        n: u32,
        /// Ingested zeta-table document.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Print `label,coefficient` rows.
        #[arg(long)]
        csv: bool,
    },
    /// ζ_f(a, −n) over Q, for one class or all of them.
    Zeta {
        #[arg(long)]
        f: u64,
        #[arg(long)]
        a: Option<u64>,
        #[arg(long)]
        n: u32,
        /// Print the table for twists 0..=n in the ingestion format.
        #[arg(long)]
        document: bool,
    },
    /// w_n(F) for F = Q(μ_f)^H.
    Wn {
        #[arg(long)]
        f: u64,
        #[arg(long, default_value = "")]
        subgroup: String,
        #[arg(long)]
        n: u64,
        /// Cross-check against a search over all m up to this bound.
        #[arg(long)]
        brute: Option<u64>,
    },
    /// Run a verification suite over a parameter range.
    Verify(verify::VerifyArgs),
    /// Run the splitting or Euler-system suite on a scenario document.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = SimSuite::Splitting)]
        suite: SimSuite,
    },
    /// Validate an ingested zeta table and run the checks it supports.
    IngestCheck {
        #[arg(long)]
        table: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SimSuite {
    Splitting,
    Euler,
}

/// An input problem: bad flags, unreadable files, rejected documents.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

enum Output {
    Text(String),
    Json(serde_json::Value),
    Report(RunReport),
}

fn parse_list(text: &str) -> Result<Vec<u64>, InputError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u64>().map_err(|_| InputError(format!("expected an integer in the list, got {s:?}"))))
        .collect()
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn coefficient_rows(theta: &GroupRingElement) -> Vec<(String, String)> {
    let group = theta.group();
    (0..group.order()).map(|s| (group.label(s).to_string(), format_rational(theta.coefficient(s)))).collect()
}

fn cmd_theta(
    f: Option<u64>,
    subgroup: &str,
    b: &str,
    n: u32,
    table: Option<&Path>,
    csv: bool,
    json_out: bool,
) -> Result<Output, InputError> {
    let theta = match (table, f) {
        (Some(path), _) => {
            let table = PartialZetaTable::from_document(&read(path)?)?;
            let prime = table
                .aux_prime(b)
                .ok_or_else(|| InputError(format!("the table lists no auxiliary prime labelled {b:?}")))?;
            let aux = AuxiliaryClass { class: prime.class, norm: prime.norm };
            StickContext::ingested(Arc::new(table), aux, n).theta()?
        }
        (None, Some(f)) => {
            let b: u64 = b.parse().map_err(|_| InputError(format!("--b must be an integer, got {b:?}")))?;
            let field = AbelianFieldQ::new(f, &parse_list(subgroup)?)?;
            StickContext::over_q(&field, f, b, n)?.theta()?
        }
        (None, None) => return Err(InputError("theta needs --f or --table".into())),
    };
    let rows = coefficient_rows(&theta);
    Ok(if json_out {
        let coefficients: Vec<_> = rows.iter().map(|(g, c)| json!({ "element": g, "coefficient": c })).collect();
        Output::Json(json!({ "n": n, "coefficients": coefficients }))
    } else if csv {
        let body: String = rows.iter().map(|(g, c)| format!("{g},{c}\n")).collect();
        Output::Text(format!("element,coefficient\n{body}"))
    } else {
        Output::Text(format!("{theta}\n"))
    })
}

fn cmd_zeta(f: u64, a: Option<u64>, n: u32, document: bool, json_out: bool) -> Result<Output, InputError> {
    if document {
        return Ok(Output::Text(PartialZetaTable::build_q(f, n)?.to_document()));
    }
    let classes = match a {
        Some(a) => vec![a],
        None => unit_group(f),
    };
    let values = classes
        .into_iter()
        .map(|a| Ok((a, format_rational(&zeta_q(f, a, n)?))))
        .collect::<Result<Vec<_>, InputError>>()?;
    Ok(if json_out {
        let rows: Vec<_> = values.iter().map(|(a, v)| json!({ "a": a, "value": v })).collect();
        Output::Json(json!({ "f": f, "n": n, "values": rows }))
    } else {
        Output::Text(values.iter().map(|(a, v)| format!("ζ_{f}({a}, -{n}) = {v}\n")).collect())
    })
}

fn cmd_wn(f: u64, subgroup: &str, n: u64, brute: Option<u64>, json_out: bool) -> Result<Output, InputError> {
    if n == 0 {
        return Err(InputError("--n must be at least 1".into()));
    }
    let field = AbelianFieldQ::new(f, &parse_list(subgroup)?)?;
    let w = field.w_n(n);
    let searched = brute.map(|bound| (bound, w_n_brute_force(&field, n, bound)));
    if json_out {
        let mut value = json!({ "f": f, "n": n, "w": w });
        if let Some((bound, s)) = searched {
            value["search"] = json!({ "bound": bound, "largest": s });
        }
        return Ok(Output::Json(value));
    }
    let mut text = format!("w_{n} = {w}\n");
    if let Some((bound, s)) = searched {
        text += &format!("largest admissible m ≤ {bound}: {s}\n");
    }
    Ok(Output::Text(text))
}

fn cmd_simulate(path: &Path, suite: SimSuite, seed: u64) -> Result<Vec<Batch>, InputError> {
    let spec = ScenarioSpec::parse(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let report = match suite {
        SimSuite::Splitting => generate_scenario(&spec, seed).map(|s| s.run_suite()),
        SimSuite::Euler => build_family(&spec, seed).map(|f| f.run_suite()),
    };
    let report = report.map_err(|e: SimError| InputError(format!("{}: {e}", path.display())))?;
    let suite_name = match suite {
        SimSuite::Splitting => "splitting",
        SimSuite::Euler => "euler",
    };
    let command = format!("stickel simulate --spec {} --suite {suite_name} --seed {seed}", path.display());
    Ok(vec![Batch::new(command, report.checks)])
}

/// Parsing validates the group axioms and completeness; then integrality,
/// the characters and the supplied-w congruences for every auxiliary prime.
fn cmd_ingest_check(path: &Path) -> Result<Vec<Batch>, InputError> {
    let table = Arc::new(PartialZetaTable::from_document(&read(path)?)?);
    let command = format!("stickel ingest-check --table {}", path.display());
    let twists = table.twists();
    let mut checks = vec![Check::pass(
        "table parses",
        format!("{}: {} classes, twists {:?}", table.description(), table.group().order(), twists),
    )];
    let primes: Vec<(String, AuxiliaryClass)> = table
        .aux_primes()
        .map(|(label, p)| (label.to_string(), AuxiliaryClass { class: p.class, norm: p.norm }))
        .collect();
    if primes.is_empty() {
        checks.push(Check::not_applicable("Stickelberger checks", "the table lists no auxiliary primes"));
    }
    for (label, aux) in primes {
        for &n in &twists {
            let ctx = StickContext::ingested(Arc::clone(&table), aux, n);
            let tag = |c: Check| Check { name: format!("b={label}: {}", c.name), ..c };
            match check_integrality(&ctx, n) {
                Ok(c) => checks.push(tag(c)),
                Err(e) => checks.push(Check::fail(format!("b={label}: integrality n={n}"), "error", e.to_string())),
            }
            match character_check(&ctx) {
                Ok(r) => checks.extend(r.checks.into_iter().map(tag)),
                Err(e) => checks.push(Check::fail(format!("b={label}: characters n={n}"), "error", e.to_string())),
            }
            if n >= 1 && table.w_value(n).is_some() {
                match check_congruence(&ctx, n, 0, CongruenceGate::Modulus, CongruenceScope::Full) {
                    Ok(c) => checks.push(tag(c)),
                    Err(e) => checks.push(Check::not_applicable(format!("b={label}: congruence n={n}"), e.to_string())),
                }
            }
        }
    }
    Ok(vec![Batch::new(command, checks)])
}

fn run(cli: &Cli) -> Result<Output, InputError> {
    let start = Instant::now();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let command = format!("stickel {}", args.join(" "));
    let (parameters, batches) = match &cli.command {
        Command::Theta { f, subgroup, b, n, table, csv } => {
            return cmd_theta(*f, subgroup, b, *n, table.as_deref(), *csv, cli.json)
        }
        Command::Zeta { f, a, n, document } => return cmd_zeta(*f, *a, *n, *document, cli.json),
        Command::Wn { f, subgroup, n, brute } => return cmd_wn(*f, subgroup, *n, *brute, cli.json),
        Command::Verify(args) => (serde_json::to_value(args)?, verify::run(args)),
        Command::Simulate { spec, suite } => {
            (json!({ "spec": spec, "suite": suite }), cmd_simulate(spec, *suite, cli.seed)?)
        }
        Command::IngestCheck { table } => (json!({ "table": table }), cmd_ingest_check(table)?),
    };
    let report = RunReport::new(command, parameters, cli.seed, batches).with_timing(cli.timing.then(|| start.elapsed()));
    Ok(Output::Report(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("stickel: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Output::Text(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Output::Json(value)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("values serialize"));
            ExitCode::SUCCESS
        }
        Ok(Output::Report(report)) => {
            print!("{}", if cli.json { report.render_json() } else { report.render_text() });
            if report.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(InputError(message)) => {
            eprintln!("stickel: {message}");
            ExitCode::from(2)
        }
    }
}
