//! Command-line front end. Exit codes: 0 success, 1 bad input, 2 runtime
//! failure (budget, oracle disagreement, I/O while writing results).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qeu::bench::{run_bench, BenchConfig};
use qeu::estimator::{rank_partners, EstimateResult, Estimator, Partner, PredictedOutcome};
use qeu::model::{validate_case_base, CaseBase, CaseBaseDocument, EstimatorConfig, Query, UtilityDocument, UtilityModel};
use qeu::oracle::{self, OracleOptions, Parallelism, PessimisticMode};
use qeu::possibility::PossibilityModel;

const DEFAULT_SEED: u64 = 42;
const BUDGET_ENV: &str = "QEU_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "qeu", version, about = "Qualitative expected utility from possibilistic case-based reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate α₀ and the predicted outcomes by frontier descent.
    Estimate(EstimateArgs),
    /// Rank partners (one case-base file each) by estimated α₀.
    Rank(RankArgs),
    /// Brute-force lattice evaluation of the qualitative criteria.
    Oracle(OracleArgs),
    /// Emit α-cut geometry or frontier vertices.
    Cut(CutArgs),
    /// Time the lattice pipeline against the descent estimator.
    Bench(BenchArgs),
}

#[derive(Debug, clap::Args)]
struct DescentArgs {
    /// Descent step Δα.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Bisection width below Δα; 0 disables refinement.
    #[arg(long, default_value_t = 1e-6)]
    refine: f64,
}

impl DescentArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            step: self.step,
            refine_tolerance: self.refine,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Debug, clap::Args)]
struct EstimateArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    utility: PathBuf,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the (α, h) trace as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct RankArgs {
    /// Directory of per-partner case-base files (*.json).
    #[arg(long)]
    partners: PathBuf,
    #[arg(long)]
    utility: PathBuf,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Criterion {
    Optimistic,
    Pessimistic,
    PessimisticNegated,
}

#[derive(Debug, clap::Args)]
struct OracleArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    utility: PathBuf,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, value_enum, default_value_t = Criterion::Optimistic)]
    criterion: Criterion,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the discretized distribution as CSV.
    #[arg(long)]
    dump_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Density,
    Distribution,
    Frontier,
}

#[derive(Debug, clap::Args)]
struct CutArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Which::Distribution)]
    which: Which,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// Attribute counts as LO..HI (inclusive).
    #[arg(long, default_value = "2..5")]
    attrs: String,
    #[arg(long, default_value_t = 30)]
    cases: usize,
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed run and the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Library errors split by cause: bad inputs versus resource limits.
fn classify(e: qeu::Error) -> Failure {
    match e {
        qeu::Error::BudgetExceeded { .. } | qeu::Error::OracleDisagreement { .. } => runtime(e),
        other => input(other),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: &'static str,
    inputs: Vec<String>,
    config: Value,
    output: Option<String>,
    exit_status: i32,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn manifest(subcommand: &'static str, inputs: &[&Path], config: Value, out: Option<&PathBuf>) -> RunManifest {
    RunManifest {
        subcommand,
        inputs: inputs.iter().map(|p| path_str(p)).collect(),
        config,
        output: out.map(|p| path_str(p)),
        exit_status: 0,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed JSON in {}", path.display()))
        .map_err(input)
}

fn load_case_base(path: &Path) -> CliResult<(CaseBase, Query)> {
    let doc: CaseBaseDocument = read_json(path)?;
    validate_case_base(&doc)
        .with_context(|| format!("invalid case base {}", path.display()))
        .map_err(input)
}

fn load_utility(path: &Path, dims: usize) -> CliResult<UtilityModel> {
    let doc: UtilityDocument = read_json(path)?;
    let model = doc
        .into_model()
        .with_context(|| format!("invalid utility {}", path.display()))
        .map_err(input)?;
    if model.dim() != dims {
        return Err(input(anyhow!(
            "{} has {} weights but the case base has {} outcome attributes",
            path.display(),
            model.dim(),
            dims
        )));
    }
    Ok(model)
}

fn budget() -> CliResult<u64> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{BUDGET_ENV}={v} is not a non-negative integer"))
            .map_err(input),
        Err(_) => Ok(oracle::DEFAULT_BUDGET),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(input(anyhow!("--threads must be at least 1"))),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(runtime)?;
            Ok(pool.install(f))
        }
    }
}

fn emit_text(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(runtime),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(runtime)
        }
    }
}

fn emit_json(out: Option<&PathBuf>, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    emit_text(out, &text)
}

#[derive(Serialize)]
struct OutcomeOut<'a> {
    #[serde(flatten)]
    outcome: &'a PredictedOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    original_coords: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EstimateOut<'a> {
    manifest: RunManifest,
    alpha0: f64,
    outcomes: Vec<OutcomeOut<'a>>,
    trace: &'a [(f64, Option<f64>)],
    refined: bool,
}

fn estimate_out<'a>(manifest: RunManifest, case_base: &CaseBase, r: &'a EstimateResult) -> EstimateOut<'a> {
    EstimateOut {
        manifest,
        alpha0: r.alpha0,
        outcomes: r
            .outcomes
            .iter()
            .map(|o| OutcomeOut {
                outcome: o,
                original_coords: case_base
                    .has_outcome_maps()
                    .then(|| case_base.to_original_units(&o.coords)),
            })
            .collect(),
        trace: &r.trace,
        refined: r.refined,
    }
}

fn descent_config_json(c: &EstimatorConfig) -> Value {
    json!({
        "step": c.step,
        "refine": c.refine_tolerance,
        "tie_tolerance": c.tie_tolerance,
        "seed": DEFAULT_SEED,
    })
}

fn cmd_estimate(args: &EstimateArgs) -> CliResult<()> {
    let config = args.descent.config();
    config.validate().map_err(classify)?;
    let (case_base, query) = load_case_base(&args.cases)?;
    let utility = load_utility(&args.utility, case_base.outcome_dim())?;
    let pol = case_base.polarities();
    let result = Estimator::new(&case_base, &query, &pol, &utility)
        .and_then(|e| e.estimate(&config))
        .map_err(classify)?;

    if let Some(path) = &args.trace_csv {
        let file = fs::File::create(path)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(runtime)?;
        result.write_trace_csv(file).map_err(runtime)?;
    }
    let m = manifest(
        "estimate",
        &[&args.cases, &args.utility],
        descent_config_json(&config),
        args.out.as_ref(),
    );
    emit_json(args.out.as_ref(), &estimate_out(m, &case_base, &result))
}

fn cmd_rank(args: &RankArgs) -> CliResult<()> {
    let config = args.descent.config();
    config.validate().map_err(classify)?;
    let entries = fs::read_dir(&args.partners)
        .with_context(|| format!("cannot read partner directory {}", args.partners.display()))
        .map_err(input)?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(input(anyhow!("no partners found in {}", args.partners.display())));
    }

    let mut partners = Vec::with_capacity(files.len());
    for path in &files {
        let (case_base, query) = load_case_base(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        partners.push(Partner { id, case_base, query });
    }
    let pol = partners[0].case_base.polarities();
    let utility = load_utility(&args.utility, pol.len())?;
    let ranking = with_pool(args.threads, || rank_partners(&partners, &pol, &utility, &config))?
        .map_err(classify)?;

    let mut cfg = descent_config_json(&config);
    cfg["threads"] = json!(args.threads);
    let mut inputs: Vec<&Path> = vec![&args.partners];
    inputs.extend(files.iter().map(PathBuf::as_path));
    inputs.push(&args.utility);
    let m = manifest("rank", &inputs, cfg, args.out.as_ref());
    emit_json(args.out.as_ref(), &json!({ "manifest": m, "ranking": ranking }))
}

fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let (case_base, query) = load_case_base(&args.cases)?;
    let utility = load_utility(&args.utility, case_base.outcome_dim())?;
    let pol = case_base.polarities();
    let grid = args.grid as usize;
    let options = OracleOptions {
        budget: budget()?,
        parallelism: if args.threads.is_some() {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        },
    };
    // fail on the budget before any allocation
    oracle::lattice_size(grid, case_base.outcome_dim(), options.budget).map_err(classify)?;

    let model = PossibilityModel::new(&case_base, &query, &pol).map_err(classify)?;
    let (pi, u, distr_s, calcul_s, value, agreement, outcomes) = with_pool(args.threads, || {
        let start = std::time::Instant::now();
        let pi = oracle::grid_distribution(&model, grid, &options)?;
        let distr_s = start.elapsed().as_secs_f64();
        let start = std::time::Instant::now();
        let u = oracle::grid_utility(&utility, &pol, grid, &options)?;
        let value = match args.criterion {
            Criterion::Optimistic => oracle::qu_optimistic(&pi, &u)?.0,
            Criterion::Pessimistic => oracle::qu_pessimistic(&pi, &u, PessimisticMode::AsPrinted)?,
            Criterion::PessimisticNegated => oracle::qu_pessimistic(&pi, &u, PessimisticMode::Negated)?,
        };
        let (agreement, outcomes) = oracle::argmax_sets(&pi, &u)?;
        let calcul_s = start.elapsed().as_secs_f64();
        Ok::<_, qeu::Error>((pi, u, distr_s, calcul_s, value, agreement, outcomes))
    })?
    .map_err(classify)?;

    if let Some(path) = &args.dump_csv {
        let file = fs::File::create(path)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(runtime)?;
        pi.write_csv(file).map_err(runtime)?;
    }
    let criterion = args
        .criterion
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let m = manifest(
        "oracle",
        &[&args.cases, &args.utility],
        json!({
            "grid": grid,
            "criterion": criterion,
            "budget": options.budget,
            "threads": args.threads,
            "seed": DEFAULT_SEED,
        }),
        args.out.as_ref(),
    );
    let points = |idx: &[usize]| idx.iter().map(|&j| u.point(j)).collect::<Vec<_>>();
    emit_json(
        args.out.as_ref(),
        &json!({
            "manifest": m,
            "criterion": criterion,
            "value": value,
            "P_points": points(&agreement),
            "O_points": points(&outcomes),
            "timings": { "distr_s": distr_s, "calcul_s": calcul_s },
        }),
    )
}

fn cmd_cut(args: &CutArgs) -> CliResult<()> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(input(anyhow!("--alpha must lie in (0, 1], got {}", args.alpha)));
    }
    let (case_base, query) = load_case_base(&args.cases)?;
    let pol = case_base.polarities();
    let model = PossibilityModel::new(&case_base, &query, &pol).map_err(classify)?;
    let which = args
        .which
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let m = manifest(
        "cut",
        &[&args.cases],
        json!({ "alpha": args.alpha, "which": which, "seed": DEFAULT_SEED }),
        args.out.as_ref(),
    );
    let body = match args.which {
        Which::Density => serde_json::to_value(model.density_cut(args.alpha)),
        Which::Distribution => serde_json::to_value(model.distribution_cut(args.alpha)),
        Which::Frontier => Ok(json!({ "level": args.alpha, "points": model.frontier(args.alpha) })),
    }
    .map_err(runtime)?;
    let mut out = json!({ "manifest": m });
    if let (Value::Object(dst), Value::Object(src)) = (&mut out, body) {
        dst.extend(src);
    }
    emit_json(args.out.as_ref(), &out)
}

fn parse_range(spec: &str) -> CliResult<std::ops::RangeInclusive<usize>> {
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| input(anyhow!("--attrs expects LO..HI, got {spec:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| input(anyhow!("--attrs expects LO..HI, got {spec:?}")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo == 0 || lo > hi {
        return Err(input(anyhow!("--attrs range {spec:?} must satisfy 1 <= LO <= HI")));
    }
    Ok(lo..=hi)
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let attrs = parse_range(&args.attrs)?;
    if args.reps < 3 {
        return Err(input(anyhow!("--reps must be at least 3, got {}", args.reps)));
    }
    let config = BenchConfig {
        attrs,
        cases: args.cases,
        grid: args.grid as usize,
        seed: args.seed,
        repetitions: args.reps,
        oracle: OracleOptions {
            budget: budget()?,
            parallelism: if args.threads.is_some() {
                Parallelism::Parallel
            } else {
                Parallelism::Sequential
            },
        },
        ..BenchConfig::default()
    };
    let report = with_pool(args.threads, || run_bench(&config))?.map_err(classify)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(runtime)?;
    let text = String::from_utf8(buf).map_err(runtime)?;
    emit_text(args.out.as_ref(), &text)?;
    eprintln!("seed={} host={} threads={}", report.seed, report.host, report.threads);
    Ok(())
}

/// Parses `args` and runs the chosen subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Cut(a) => cmd_cut(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            let code = f.code();
            let (Failure::Input(e) | Failure::Runtime(e)) = f;
            eprintln!("error: {e:#}");
            code
        }
    }
}
