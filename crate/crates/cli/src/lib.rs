//! The `doors` command line: planning, exact evaluation, simulation, the
//! two-door solver and price reports.
//!
//! Data goes to the output stream, diagnostics to the error stream. Exit codes:
//! 0 on success, 1 for invalid input, 2 when a numeric procedure fails
//! (divergence, caps, non-convergence, simulation timeouts).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use doors_core::configurations::{format_knocks, parse_knocks, ConfigSpec, DoorConfiguration, KnockSequence};
use doors_core::distributions::{DistributionKind, FundamentalDistribution};
use doors_core::evaluator::{self, EvalOptions};
use doors_core::planner;
use doors_core::price::price_report;
use doors_core::simulator::{estimate_expected_time, SimOptions};
use doors_core::twodoor::{self, TwoDoorParams};
use doors_core::Error;

#[derive(Debug, Parser)]
#[command(name = "doors", version, about = "Knock sequences for stochastic doors without feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the first knocks of a planned sequence.
    Plan(PlanArgs),
    /// Exact expected completion time of a sequence.
    Evaluate(EvaluateArgs),
    /// Monte Carlo estimate of the expected completion time.
    Simulate(SimulateArgs),
    /// Semi-fractional optimum, rounded plan and bounds for two cascading geometric doors.
    TwoDoor(TwoDoorArgs),
    /// Price of lacking feedback for similar doors, as CSV rows.
    Price(PriceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Round robin 1, 2, ..., d repeated.
    Simple,
    /// Optimal sorted prefixes of lengths 2, 4, 8, ... concatenated.
    Doubling,
    /// Phase n knocks 2^n times on each door.
    Phase,
    /// The optimal sorted prefix of length --knocks (finite).
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Lines,
    Csv,
}

#[derive(Debug, Args)]
struct SequenceArgs {
    /// Finite sequence of 1-based door indices, e.g. 1,2,1,2.
    #[arg(long, group = "source")]
    sequence: Option<String>,
    /// Block of 1-based door indices repeated forever.
    #[arg(long, group = "source")]
    repeat: Option<String>,
    /// Sequence produced by a planner.
    #[arg(long, value_enum, group = "source")]
    algorithm: Option<Algorithm>,
    /// Length of the optimal prefix for --algorithm optimal.
    #[arg(long, default_value_t = 16)]
    knocks: usize,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Doubling)]
    algorithm: Algorithm,
    /// Number of knocks to print.
    #[arg(long, default_value_t = 16)]
    knocks: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    sequence: SequenceArgs,
    /// Truncation tolerance; required for infinite sequences.
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on the evaluation horizon in knocks.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    sequence: SequenceArgs,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Knocks per trial before it counts as a timeout.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct TwoDoorArgs {
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    p2: f64,
    /// Duration of a knock on door 2.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Knocks of the rounded plan to print; 2-knock rows in CSV output.
    #[arg(long, default_value_t = 20)]
    knocks: usize,
    /// Also run value iteration on a belief grid of this size.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct PriceArgs {
    /// Configuration whose doors all share one distribution.
    #[arg(long, group = "dist_source", required_unless_present = "dist")]
    config: Option<PathBuf>,
    /// Distribution as JSON, e.g. {"kind":"geometric","p":0.1}.
    #[arg(long, group = "dist_source")]
    dist: Option<String>,
    /// Comma-separated door counts.
    #[arg(long, default_value = "1,2,4,8,16,32,64,128,256,512,1024")]
    d: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Invalid(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let numeric = e.is_numeric();
        let msg = match e {
            Error::InvalidConfiguration(violations) => {
                let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
                format!("invalid configuration:\n{}", lines.join("\n"))
            }
            other => other.to_string(),
        };
        if numeric {
            Failure::Numeric(msg)
        } else {
            Failure::Invalid(msg)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("output error: {e}"))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Plan(a) => plan(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::TwoDoor(a) => two_door(a, out),
        Command::Price(a) => price(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Numeric(msg)) => {
            let _ = writeln!(err, "numeric failure: {msg}");
            2
        }
    }
}

/// Nine significant digits, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{v:.8e}");
    }
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn load_config(path: &Path) -> CliResult<DoorConfiguration> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(ConfigSpec::from_json(&text)?.build()?)
}

fn check_tol(tol: f64) -> CliResult {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

fn planned(config: &DoorConfiguration, algorithm: Algorithm, knocks: usize) -> CliResult<KnockSequence> {
    let d = config.door_count();
    Ok(match algorithm {
        Algorithm::Simple => planner::a_simp(d)?,
        Algorithm::Doubling => planner::doubling_sequence(config),
        Algorithm::Phase => planner::phase_doubling(d),
        Algorithm::Optimal => planner::optimal_prefix(config, knocks)?,
    })
}

fn sequence(config: &DoorConfiguration, args: &SequenceArgs) -> CliResult<KnockSequence> {
    let d = config.door_count();
    if let Some(text) = &args.sequence {
        return Ok(KnockSequence::finite(d, parse_knocks(text)?)?);
    }
    if let Some(text) = &args.repeat {
        return Ok(KnockSequence::repeat(d, parse_knocks(text)?)?);
    }
    match args.algorithm {
        Some(a) => planned(config, a, args.knocks),
        None => Err(Failure::Invalid(
            "give a sequence with --sequence, --repeat or --algorithm".into(),
        )),
    }
}

fn plan(args: PlanArgs, out: &mut dyn Write) -> CliResult {
    let config = load_config(&args.config)?;
    if config.door_count() < 2 && args.algorithm != Algorithm::Simple {
        return Err(Failure::Invalid("planning needs at least 2 doors".into()));
    }
    let seq = planned(&config, args.algorithm, args.knocks)?;
    let knocks = seq.prefix(args.knocks);
    match args.format {
        Format::Lines => writeln!(out, "{}", format_knocks(&knocks))?,
        Format::Csv => {
            writeln!(out, "t,door")?;
            for (t, k) in knocks.iter().enumerate() {
                writeln!(out, "{},{}", t + 1, k + 1)?;
            }
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let config = load_config(&args.config)?;
    let seq = sequence(&config, &args.sequence)?;
    let mut opts = if config.is_independent() {
        EvalOptions::independent()
    } else {
        EvalOptions::cascading()
    };
    match args.tol {
        Some(tol) => {
            check_tol(tol)?;
            opts.tol = tol;
        }
        None if !seq.is_finite() => {
            return Err(Failure::Invalid("infinite sequences need an explicit --tol".into()));
        }
        None => {}
    }
    if let Some(h) = args.horizon {
        opts.horizon_cap = h;
    }
    let value = evaluator::expected_time(&config, &seq, &opts)?;
    let baseline = evaluator::feedback_baseline(&config);
    let ratio = value / baseline;
    match args.format {
        Format::Lines => {
            writeln!(out, "dependency={}", config.dependency().name())?;
            writeln!(out, "sequence={}", seq.label())?;
            writeln!(out, "expected_time={}", fmt_num(value))?;
            writeln!(out, "feedback_baseline={}", fmt_num(baseline))?;
            writeln!(out, "ratio={}", fmt_num(ratio))?;
        }
        Format::Csv => {
            writeln!(out, "dependency,expected_time,feedback_baseline,ratio")?;
            writeln!(
                out,
                "{},{},{},{}",
                config.dependency().name(),
                fmt_num(value),
                fmt_num(baseline),
                fmt_num(ratio)
            )?;
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> CliResult {
    let config = load_config(&args.config)?;
    let seq = sequence(&config, &args.sequence)?;
    let mut opts = SimOptions::new();
    opts.threads = args.threads;
    if let Some(h) = args.horizon {
        opts.cap = h;
    }
    let est = estimate_expected_time(&config, &seq, args.trials, args.seed, &opts)?;
    match args.format {
        Format::Lines => {
            writeln!(out, "mean={}", fmt_num(est.mean))?;
            writeln!(out, "ci99={}", fmt_num(est.ci99))?;
            writeln!(out, "trials={}", est.trials)?;
            writeln!(out, "timeout_rate={}", fmt_num(est.timeout_rate))?;
        }
        Format::Csv => {
            writeln!(out, "mean,ci99,trials,timeout_rate")?;
            writeln!(
                out,
                "{},{},{},{}",
                fmt_num(est.mean),
                fmt_num(est.ci99),
                est.trials,
                fmt_num(est.timeout_rate)
            )?;
        }
    }
    Ok(())
}

fn two_door(args: TwoDoorArgs, out: &mut dyn Write) -> CliResult {
    let params = TwoDoorParams::new(args.p1, args.p2, args.c)?;
    check_tol(args.tol)?;
    let plan = twodoor::solve_semifractional(&params, args.tol)?;
    let rounded = twodoor::rounded_plan(&plan);
    if args.format == Format::Csv {
        writeln!(out, "i,pi,pi_rounded")?;
        for i in 1..=args.knocks {
            let exact = plan.s + (i - 1) as f64 * plan.t;
            writeln!(out, "{i},{},{}", fmt_num(exact), fmt_num(rounded.pi(i).unwrap()))?;
        }
        return Ok(());
    }
    let rounded_value = twodoor::expected_time_two_door(&params, &rounded, args.tol)?;
    let approx = twodoor::approx_value(&params);
    let prefix = rounded.knock_pattern(args.knocks)?;
    let pattern: Vec<String> = prefix.iter().map(|k| k.to_string()).collect();
    writeln!(out, "p1={}", fmt_num(params.p1))?;
    writeln!(out, "p2={}", fmt_num(params.p2))?;
    writeln!(out, "c={}", fmt_num(params.c))?;
    writeln!(out, "z_star={}", fmt_num(plan.z_star))?;
    writeln!(out, "s={}", fmt_num(plan.s))?;
    writeln!(out, "t={}", fmt_num(plan.t))?;
    writeln!(out, "semifractional_value={}", fmt_num(plan.value))?;
    writeln!(out, "approx_theta={}", fmt_num(approx.theta))?;
    writeln!(out, "approx_psi={}", fmt_num(approx.psi))?;
    writeln!(out, "approx_lower={}", fmt_num(approx.lo))?;
    writeln!(out, "approx_upper={}", fmt_num(approx.hi))?;
    writeln!(out, "rounded_value={}", fmt_num(rounded_value))?;
    writeln!(out, "rounded_prefix={}", pattern.join(","))?;
    if let Some(grid) = args.grid {
        let vf = twodoor::value_iteration(&params, grid, 1e-10)?;
        let policy: Vec<String> = vf.policy_prefix(args.knocks).iter().map(|k| k.to_string()).collect();
        writeln!(out, "value_iteration={}", fmt_num(vf.value()))?;
        writeln!(out, "policy_prefix={}", policy.join(","))?;
    }
    Ok(())
}

fn price_distribution(args: &PriceArgs) -> CliResult<FundamentalDistribution> {
    if let Some(text) = &args.dist {
        let kind: DistributionKind = serde_json::from_str(text)
            .map_err(|e| Failure::Invalid(format!("cannot parse --dist: {e}")))?;
        return Ok(FundamentalDistribution::new(kind)?);
    }
    let path = args.config.as_ref().expect("clap enforces a source");
    let config = load_config(path)?;
    let first = config.door(0).clone();
    if config.doors().iter().any(|d| d != &first) {
        return Err(Failure::Invalid(
            "price reports need similar doors: every door must have the same distribution".into(),
        ));
    }
    Ok(first)
}

fn price(args: PriceArgs, out: &mut dyn Write) -> CliResult {
    check_tol(args.tol)?;
    let dist = price_distribution(&args)?;
    let counts: Vec<u64> = args
        .d
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Invalid(format!("--d must be a comma-separated list of counts: {e}")))?;
    writeln!(out, "d,e_single,e_max,kappa,bound,price")?;
    for d in counts {
        let r = price_report(&dist, d, args.tol)?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.d,
            fmt_num(r.e_single),
            fmt_num(r.e_max),
            r.kappa,
            fmt_num(r.lm_max_bound),
            fmt_num(r.price)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(5.747141283), "5.74714128");
        assert_eq!(fmt_num(6.0), "6");
        assert_eq!(fmt_num(356.7537321), "356.753732");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(123456789.4), "123456789");
        assert_eq!(fmt_num(1.5e-7), "1.50000000e-7");
    }
}
