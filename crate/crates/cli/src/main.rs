use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use ttb_core::ensembles::{CertifyKind, DEFAULT_STAT_SAMPLES};
use ttb_core::functions::ScalarFn;
use ttb_core::majorization::Variant;
use ttb_core::norms::GaugeSpec;
use ttb_core::tail::{PrintedConvexity, DEFAULT_GRID_POINTS};
use ttb_core::tensor::Shape;

mod commands;

/// Exit status for a detected mathematical violation.
const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "ttb", version, about = "Ky Fan tail bounds for sums of random Hermitian tensors")]
struct Cli {
    /// Worker threads for Monte Carlo; TTB_WORKERS takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized checks of the tensor inequalities.
    #[command(subcommand)]
    Verify(Verify),
    /// Evaluate and optimize a tail-bound curve.
    #[command(subcommand)]
    Bound(Bound),
    /// Monte Carlo tail estimates for an ensemble.
    Montecarlo(MonteCarloArgs),
    /// Compare an analytic bound against Monte Carlo over a θ grid.
    Certify(CertifyArgs),
    /// Tail bound for the covariance of a two-tap hypergraph filter.
    HgspCov(HgspArgs),
    /// Run the acceptance suite and print one line per criterion.
    Acceptance(AcceptanceArgs),
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Multivariate norm inequalities with the β₀-weighted integral.
    GoldenThompson(GoldenThompsonArgs),
    /// Convergence of the Lie product formula.
    LieTrotter(LieTrotterArgs),
    /// Integral-average (log-)majorization verifiers.
    Majorization(MajorizationArgs),
    /// Ky Fan product and sum inequalities.
    Lemmas(LemmaArgs),
}

#[derive(Subcommand, Debug)]
enum Bound {
    /// Bounded positive semidefinite summands.
    Chernoff(ChernoffArgs),
    /// Zero-mean subexponential summands.
    Bernstein(BernsteinArgs),
    /// Empirical moment generating function of an ensemble.
    Generic(GenericArgs),
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    let dims = s.split(',').map(|d| d.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    Shape::new(dims).map_err(|e| e.to_string())
}

fn parse_fn(s: &str) -> Result<ScalarFn, String> {
    s.parse().map_err(|e: ttb_core::Error| e.to_string())
}

fn parse_gauge(s: &str) -> Result<GaugeSpec, String> {
    s.parse().map_err(|e: ttb_core::Error| e.to_string())
}

/// Enum values by their serialized names.
fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    parse_serde(s)
}

fn parse_kind(s: &str) -> Result<CertifyKind, String> {
    parse_serde(s)
}

fn parse_printed(s: &str) -> Result<PrintedConvexity, String> {
    parse_serde(s)
}

#[derive(Args, Debug, Serialize)]
struct GoldenThompsonArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Number of factors per instance.
    #[arg(long, default_value_t = 3)]
    factors: usize,
    #[arg(long, value_parser = parse_shape, default_value = "2,2")]
    shape: Shape,
    /// Eigenvalue range of the random positive definite factors.
    #[arg(long, default_value_t = 0.3)]
    lo: f64,
    #[arg(long, default_value_t = 2.0)]
    hi: f64,
    #[arg(long, value_parser = parse_fn, value_delimiter = ',', default_value = "x,pow:2,exp")]
    functions: Vec<ScalarFn>,
    #[arg(long, value_parser = parse_gauge, value_delimiter = ',', default_value = "kyfan:1,kyfan:2,schatten:1,schatten:2")]
    gauges: Vec<GaugeSpec>,
    /// JSON file with explicit instances: an array of arrays of tensor literals.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Slack for the inequality sides.
    #[arg(long, default_value_t = ttb_core::multivariate::MULTIVARIATE_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct LieTrotterArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    #[arg(long, value_parser = parse_shape, default_value = "2,2")]
    shape: Shape,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    steps: Vec<usize>,
    /// Scale applied to each random Hermitian factor.
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
}

#[derive(Args, Debug, Serialize)]
struct MajorizationArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, value_parser = parse_variant, default_value = "full")]
    variant: Variant,
    /// Log-majorization instead of majorization.
    #[arg(long)]
    log: bool,
    #[arg(long, value_parser = parse_shape, default_value = "2,2")]
    shape: Shape,
    #[arg(long, default_value_t = 3)]
    members: usize,
    #[arg(long, value_parser = parse_gauge, value_delimiter = ',', default_value = "kyfan:1,kyfan:2,schatten:1,schatten:2,operator")]
    gauges: Vec<GaugeSpec>,
    /// Also look for reverse-direction counterexamples (plain averages only).
    #[arg(long)]
    reverse: bool,
}

#[derive(Args, Debug, Serialize)]
struct LemmaArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, value_parser = parse_shape, default_value = "2,2")]
    shape: Shape,
}

/// Polynomial `g(x) = (Σ a_l x^l)^s`.
#[derive(Args, Debug, Serialize, Clone)]
struct PolyArgs {
    /// Coefficients a₀, a₁, …
    #[arg(long = "g", value_delimiter = ',', default_value = "0,1")]
    coefficients: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
}

#[derive(Args, Debug, Serialize)]
struct CurveOutput {
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Write the sampled curve as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ChernoffArgs {
    /// Almost-sure eigenvalue cap.
    #[arg(long = "R")]
    r: f64,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    c_latala: f64,
    /// σ̄₁ per summand, or one value for all.
    #[arg(long, value_delimiter = ',')]
    sigma1_bar: Vec<f64>,
    /// Ξ per summand, or one value for all.
    #[arg(long, value_delimiter = ',')]
    xi: Vec<f64>,
    #[command(flatten)]
    g: PolyArgs,
    #[command(flatten)]
    curve: CurveOutput,
}

#[derive(Args, Debug, Serialize)]
struct BernsteinArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    c_latala: f64,
    /// σ₁(A_j²) per summand, or one value for all.
    #[arg(long, value_delimiter = ',')]
    sigma1_a_sq: Vec<f64>,
    /// Υ per summand, or one value for all.
    #[arg(long, value_delimiter = ',')]
    upsilon: Vec<f64>,
    #[arg(long, value_parser = parse_printed, default_value = "last-slot-b3")]
    printed_convexity: PrintedConvexity,
    #[command(flatten)]
    g: PolyArgs,
    #[command(flatten)]
    curve: CurveOutput,
}

#[derive(Args, Debug, Serialize)]
struct GenericArgs {
    /// Ensemble spec (JSON).
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STAT_SAMPLES)]
    stat_samples: usize,
    #[command(flatten)]
    g: PolyArgs,
    #[command(flatten)]
    curve: CurveOutput,
}

#[derive(Args, Debug, Serialize)]
struct MonteCarloArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also report how often `g(S) ⪯ e^{tS}` holds at this t.
    #[arg(long)]
    condition_t: Option<f64>,
    #[command(flatten)]
    g: PolyArgs,
}

#[derive(Args, Debug, Serialize)]
struct CertifyArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    kind: CertifyKind,
    /// θ values; omitted picks five admissible values automatically.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    c_latala: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STAT_SAMPLES)]
    stat_samples: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, value_parser = parse_printed, default_value = "last-slot-b3")]
    printed_convexity: PrintedConvexity,
    #[command(flatten)]
    g: PolyArgs,
}

#[derive(Args, Debug, Serialize)]
struct HgspArgs {
    /// Ensemble spec for the draws X_j (JSON); the sum uses X_j/m.
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    h0: f64,
    #[arg(long, default_value_t = 0.5)]
    h1: f64,
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random symmetric shifts for the dual-path covariance check.
    #[arg(long, default_value_t = 100)]
    shifts: usize,
}

#[derive(Args, Debug, Serialize)]
struct AcceptanceArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Failure modes of a command.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] ttb_core::Error),
    #[error("{path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Outcome of a command that ran to completion.
struct Finished {
    json: String,
    /// Human-readable summary printed instead of the JSON when there is no `--out`.
    text: Option<String>,
    violations: usize,
}

fn resolve_workers(flag: usize) -> CliResult<usize> {
    let workers = match std::env::var("TTB_WORKERS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("TTB_WORKERS={v:?} is not a count")))?,
        Err(_) => flag,
    };
    if workers == 0 {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(workers)
}

fn dispatch(cli: Cli) -> CliResult<Finished> {
    let workers = resolve_workers(cli.workers)?;
    match cli.command {
        Command::Verify(Verify::GoldenThompson(a)) => commands::golden_thompson(&a),
        Command::Verify(Verify::LieTrotter(a)) => commands::lie_trotter(&a),
        Command::Verify(Verify::Majorization(a)) => commands::majorization(&a),
        Command::Verify(Verify::Lemmas(a)) => commands::lemmas(&a),
        Command::Bound(Bound::Chernoff(a)) => commands::bound_chernoff(&a),
        Command::Bound(Bound::Bernstein(a)) => commands::bound_bernstein(&a),
        Command::Bound(Bound::Generic(a)) => commands::bound_generic(&a),
        Command::Montecarlo(a) => commands::montecarlo(&a, workers),
        Command::Certify(a) => commands::certify(&a, workers),
        Command::HgspCov(a) => commands::hgsp_cov(&a, workers),
        Command::Acceptance(a) => commands::acceptance(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let out = cli.out.clone();
    match dispatch(cli) {
        Ok(done) => {
            let written = match &out {
                Some(p) => std::fs::write(p, &done.json).map_err(|e| format!("{}: {e}", p.display())),
                None => Ok(()),
            };
            match (&out, &done.text) {
                (_, Some(text)) => print!("{text}"),
                (None, None) => print!("{}", done.json),
                (Some(_), None) => {}
            }
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            if done.violations > 0 {
                eprintln!("{} violation(s) detected", done.violations);
                ExitCode::from(EXIT_VIOLATION)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
