//! `gdp`: generalized deletion propagation from the command line.
//!
//! JSON results go to stdout; diagnostics go to stderr. Exit codes: 0 on
//! success, 1 when the instance is infeasible, 2 on usage errors, 3 on
//! internal errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gdp_core::bench::experiment::{run_experiment, summarize, write_csv, write_summary, ExperimentConfig};
use gdp_core::bench::gen::{gen_random, GenProfile};
use gdp_core::gdp::{load_instance, make_variant, verify, GdpInstance, Variant};
use gdp_core::ilp::{lp_relaxation, model_stats, BuildOptions, Mode};
use gdp_core::oracle::{brute_force, DEFAULT_CAP};
use gdp_core::pipeline::{build_instance, solve_instance, Backend, Outcome, SolveOptions};
use gdp_core::query::{parse_query, Query};
use gdp_core::relcore::{load_database_with, write_database, LoadOptions, Semantics, TupleRef, Value};
use gdp_core::solve::external::SOLVER_ENV;
use gdp_core::solve::lpfile::export_lp_file;
use gdp_core::solve::SolverConfig;
use gdp_core::structure::{classify, classify_instance};

#[derive(Parser)]
#[command(name = "gdp", version, about = "Generalized deletion propagation via integer programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and verify the resulting deletions.
    Solve(SolveArgs),
    /// Solve the LP relaxation only.
    Lp(SolveArgs),
    /// Structural tractability report for a query or instance.
    Analyze(AnalyzeArgs),
    /// Exhaustive optimum for a small instance.
    Oracle(OracleArgs),
    /// Generate a random database for a query's schema.
    Gen(GenArgs),
    /// Run an experiment config and write CSV and summary files.
    Bench(BenchArgs),
    /// Check a set of deletions against an instance.
    Verify(VerifyArgs),
    /// Write the model in LP file format.
    ExportLp(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Dpss,
    Dpvs,
    Adpss,
    Swp,
    Res,
    /// Use the views of `--instance` as given.
    Generic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Wildcard,
    Smoothed,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Naive => Mode::Naive,
            ModeArg::Wildcard => Mode::Wildcard,
            ModeArg::Smoothed => Mode::Smoothed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Set,
    Bag,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Semantics {
        match s {
            SemanticsArg::Set => Semantics::Set,
            SemanticsArg::Bag => Semantics::Bag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum SolverArg {
    Embedded,
    External,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance config (JSON).
    #[arg(long, conflicts_with_all = ["db", "query"])]
    instance: Option<PathBuf>,
    /// Database manifest (JSON).
    #[arg(long, requires = "query")]
    db: Option<PathBuf>,
    /// Query text, or `@path` to read it from a file.
    #[arg(long)]
    query: Option<String>,
    /// CSV files start with a header line.
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value = "generic")]
    variant: VariantArg,
    /// Comma-separated answer to delete (DP variants); defaults to the
    /// answer with the median number of witnesses.
    #[arg(long)]
    target: Option<String>,
    /// Number of answers to delete (ADP-SS); defaults to ceil(10%).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value = "smoothed")]
    mode: ModeArg,
    /// Solve the LP relaxation instead of the integer program.
    #[arg(long)]
    relax: bool,
    #[arg(long, value_enum, default_value = "embedded")]
    solver: SolverArg,
    /// External solver command with `{lp}` and `{sol}` placeholders.
    #[arg(long, env = SOLVER_ENV)]
    solver_cmd: Option<String>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    feasibility_tol: Option<f64>,
    #[arg(long)]
    integrality_tol: Option<f64>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Query text or `@path`.
    #[arg(long, conflicts_with = "instance")]
    query: Option<String>,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "set")]
    semantics: SemanticsArg,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct GenArgs {
    /// Query text or `@path`; its relations form the schema.
    #[arg(long)]
    query: String,
    #[arg(long)]
    n_tuples: usize,
    #[arg(long, default_value_t = 1000)]
    max_domain: u64,
    #[arg(long, value_enum, default_value = "set")]
    semantics: SemanticsArg,
    #[arg(long, default_value_t = 10)]
    max_bag: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the manifest and CSV files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for runs.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed for every cell.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// JSON list of tuples, or a `solve` report containing `gamma`.
    #[arg(long)]
    gamma: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value = "smoothed")]
    mode: ModeArg,
    #[arg(long)]
    relax: bool,
    #[arg(long)]
    out: PathBuf,
}

/// A failure that maps to a specific exit code.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("{msg}").context(Exit(2))
}

fn read_query(arg: &str) -> Result<Query> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading query file {path}"))?,
        None => arg.to_string(),
    };
    parse_query(&text).map_err(|e| usage(format!("query: {e}")))
}

fn load(args: &InstanceArgs) -> Result<GdpInstance> {
    match (&args.instance, &args.db, &args.query) {
        (Some(path), _, _) => {
            if !matches!(args.variant, VariantArg::Generic) {
                return Err(usage("--variant applies to --db/--query input, not --instance"));
            }
            Ok(load_instance(path)?)
        }
        (None, Some(db), Some(q)) => {
            let db = load_database_with(db, LoadOptions { header: args.header })?;
            let q = read_query(q)?;
            let variant = match args.variant {
                VariantArg::Dpss => Variant::Dpss,
                VariantArg::Dpvs => Variant::Dpvs,
                VariantArg::Adpss => Variant::Adpss,
                VariantArg::Swp => Variant::Swp,
                VariantArg::Res => Variant::Res,
                VariantArg::Generic => return Err(usage("--db/--query input needs a --variant")),
            };
            let target: Option<Vec<Value>> =
                args.target.as_deref().map(|t| t.split(',').map(|v| Value::parse_token(v.trim())).collect());
            Ok(make_variant(&db, &q, variant, target.as_deref(), args.k)?)
        }
        _ => Err(usage("give either --instance or --db with --query")),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(p) = out {
        fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{text}");
    Ok(())
}

fn solver_config(a: &SolveArgs) -> SolverConfig {
    let mut c = SolverConfig::default();
    if let Some(n) = a.max_nodes {
        c.max_nodes = n;
    }
    if let Some(t) = a.time_limit {
        c.time_limit = Some(Duration::from_secs_f64(t));
    }
    if let Some(t) = a.feasibility_tol {
        c.feasibility_tol = t;
    }
    if let Some(t) = a.integrality_tol {
        c.integrality_tol = t;
    }
    c
}

fn cmd_solve(a: SolveArgs, relax: bool) -> Result<u8> {
    let inst = load(&a.inst)?;
    let backend = match (a.solver, &a.solver_cmd) {
        (SolverArg::Embedded, _) => Backend::Embedded,
        (SolverArg::External, Some(cmd)) => Backend::External(cmd.clone()),
        (SolverArg::External, None) => return Err(usage(format!("--solver external needs --solver-cmd or {SOLVER_ENV}"))),
    };
    let opts = SolveOptions {
        mode: a.mode.into(),
        relax: relax || a.relax,
        build: BuildOptions::default(),
        solver: solver_config(&a),
        backend,
    };
    let report = solve_instance(&inst, &opts)?;
    emit(&report, a.out.as_deref())?;
    Ok(match report.status {
        Outcome::Optimal | Outcome::Budget => 0,
        Outcome::Infeasible => 1,
        Outcome::Unbounded | Outcome::NumericalFailure => 3,
    })
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<u8> {
    match (&a.query, &a.instance) {
        (Some(q), None) => emit(&classify(&read_query(q)?, a.semantics.into()), None)?,
        (None, Some(p)) => {
            let inst = load_instance(p)?;
            let reports: Vec<serde_json::Value> = classify_instance(&inst)
                .into_iter()
                .map(|(id, r)| serde_json::json!({ "view": id, "report": r }))
                .collect();
            emit(&reports, None)?;
        }
        _ => return Err(usage("give --query or --instance")),
    }
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Result<u8> {
    let inst = load(&a.inst)?;
    let r = brute_force(&inst, a.cap).map_err(usage)?;
    emit(&r, None)?;
    Ok(if r.is_feasible() { 0 } else { 1 })
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    let profile = GenProfile {
        query: read_query(&a.query)?,
        n_tuples: a.n_tuples,
        max_domain: a.max_domain,
        semantics: a.semantics.into(),
        max_bag: a.max_bag,
        seed: a.seed,
    };
    let db = gen_random(&profile).map_err(usage)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let manifest = write_database(&db, &a.out)?;
    emit(&serde_json::json!({ "manifest": manifest, "tuples": db.tuple_count(), "seed": a.seed }), None)?;
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        for c in &mut cfg.cells {
            c.seed = s;
        }
    }
    let records = run_experiment(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_csv(&records, &a.out.join("runs.csv"))?;
    let buckets = summarize(&records);
    write_summary(&buckets, &a.out.join("summary.json"))?;
    emit(&buckets, None)?;
    Ok(0)
}

fn read_gamma(path: &Path) -> Result<Vec<TupleRef>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let list = match v {
        serde_json::Value::Object(mut o) => o.remove("gamma").ok_or_else(|| usage("report has no `gamma` field"))?,
        other => other,
    };
    serde_json::from_value(list).map_err(|e| usage(format!("gamma: {e}")))
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let inst = load(&a.inst)?;
    let gamma = read_gamma(&a.gamma)?;
    let r = verify(&inst, &gamma)?;
    emit(&r, None)?;
    Ok(if r.feasible { 0 } else { 1 })
}

fn cmd_export(a: ExportArgs) -> Result<u8> {
    let inst = load(&a.inst)?;
    let (model, _, _) = build_instance(&inst, a.mode.into(), BuildOptions::default())?;
    let model = if a.relax { lp_relaxation(&model) } else { model };
    export_lp_file(&model, &a.out)?;
    emit(&serde_json::json!({ "path": a.out, "stats": model_stats(&model) }), None)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a, false),
        Command::Lp(a) => cmd_solve(a, true),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ExportLp(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<Exit>().map_or(3, |x| x.0);
            eprintln!("gdp: {}", e.root_cause());
            if code == 3 {
                for cause in e.chain().skip(1) {
                    eprintln!("  caused by: {cause}");
                }
            }
            ExitCode::from(code)
        }
    }
}
