//! Command-line surface: every library operation as a subcommand.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or validation error,
//! 4 resource or calibration failure. Randomized subcommands require
//! --seed. Reports go to --out (or stdout) as structured JSON; with --out,
//! flat tables land alongside as `<base>.table.csv` and `<base>.plot.csv`.
//! Output is byte-identical across reruns and worker counts; pass --timing
//! to record wall-clock seconds in the metadata at the cost of that.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bootstrap::{
    bootstrap_rank_intervals, location_stat, top_set_probability, ItemDataset, StatKind,
};
use crate::diagnostics::{fit_stretched_exp, hill_estimator, qq_points};
use crate::error::{Error, Result};
use crate::io::{
    parse_binomial, parse_replicates, parse_two_class, Cell, ReportBundle, RunMeta, Table,
};
use crate::rates::{
    classify_bounded_support, critical_rate_exponential, regime_report_exponential,
    regime_report_polynomial,
};
use crate::sim::{
    calibrate_noise, required_sample_size, run_rank_experiment, Direction, ExperimentConfig,
    Mode, NoiseMode, SizeSpec,
};
use crate::tail::TailModel;

#[derive(Parser)]
#[command(
    name = "rankvar",
    version,
    about = "How far down a noisy ranking can you trust? Monte Carlo, critical rates, \
             bootstrap rank intervals, and tail diagnostics."
)]
struct Cli {
    /// Worker threads (default: all cores; RANKVAR_WORKERS overrides).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Record wall-clock seconds in report metadata. Off by default so that
    /// reruns emit byte-identical reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate rank-correctness probabilities by Monte Carlo.
    Simulate(SimulateArgs),
    /// Closed-form critical ranking depths for a tail regime.
    Rates(RatesArgs),
    /// Percentile bootstrap intervals for item ranks on a dataset.
    Bootstrap(BootstrapArgs),
    /// Probability that the top-j item set survives resampling.
    Topset(TopsetArgs),
    /// Find the noise level that hits a target correctness probability.
    Calibrate(CalibrateArgs),
    /// Smallest sample size per item reaching a target probability.
    RequiredN(RequiredNArgs),
    /// Fit a tail model to data (Hill index or stretched exponential).
    Tailfit(TailfitArgs),
    /// Observed-versus-model quantile pairs for external plotting.
    Qq(QqArgs),
}

// ----- flag vocabularies -----

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TailFamilyArg {
    Exponential,
    Pareto,
    Bounded,
    Normal,
    Stretched,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RateFamilyArg {
    Exponential,
    Polynomial,
    Bounded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Prefix,
    Set,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Prefix => Mode::Prefix,
            ModeArg::Set => Mode::Set,
            ModeArg::Both => Mode::Both,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Ascending,
    Descending,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Ascending => Direction::Ascending,
            DirectionArg::Descending => Direction::Descending,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Replicates,
    #[value(name = "twoclass")]
    TwoClass,
    Binomial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatArg {
    Mean,
    Median,
    Proportion,
    #[value(name = "mannwhitney")]
    MannWhitney,
}

impl From<StatArg> for StatKind {
    fn from(s: StatArg) -> StatKind {
        match s {
            StatArg::Mean => StatKind::Mean,
            StatArg::Median => StatKind::Median,
            StatArg::Proportion => StatKind::Proportion,
            StatArg::MannWhitney => StatKind::MannWhitney,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Hill,
    #[value(name = "stretchedexp")]
    StretchedExp,
}

// ----- shared argument groups -----

#[derive(Args, Clone)]
struct TailArgs {
    /// Attribute distribution family.
    #[arg(long, value_enum)]
    tail: TailFamilyArg,
    /// Rate of the exponential family.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Tail exponent (required by the pareto and bounded families).
    #[arg(long)]
    alpha: Option<f64>,
    /// Mean of the normal family.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    /// Standard deviation of the normal family.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Rate of the stretched exponential family.
    #[arg(long)]
    lambda: Option<f64>,
    /// Stretch exponent of the stretched exponential family.
    #[arg(long)]
    gamma: Option<f64>,
    /// Left endpoint of the stretched exponential family.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
}

impl TailArgs {
    fn build(&self) -> TailModel {
        match self.tail {
            TailFamilyArg::Exponential => TailModel::Exponential { rate: self.rate },
            TailFamilyArg::Pareto => TailModel::Pareto {
                alpha: require(self.alpha, "--tail pareto requires --alpha"),
            },
            TailFamilyArg::Bounded => TailModel::BoundedPower {
                alpha: require(self.alpha, "--tail bounded requires --alpha"),
            },
            TailFamilyArg::Normal => TailModel::Normal { mu: self.mu, sigma: self.sigma },
            TailFamilyArg::Stretched => TailModel::StretchedExp {
                lambda: require(self.lambda, "--tail stretched requires --lambda"),
                gamma: require(self.gamma, "--tail stretched requires --gamma"),
                shift: self.shift,
            },
        }
    }
}

#[derive(Args, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    tail: TailArgs,
    /// Observations averaged per item.
    #[arg(long)]
    n: u64,
    /// Item count p as a literal.
    #[arg(long, conflicts_with = "p_rule", required_unless_present = "p_rule")]
    p: Option<u64>,
    /// Item count p as a rule in n, e.g. 0.0005*n^2.
    #[arg(long = "p-rule")]
    p_rule: Option<String>,
    /// Standard deviation of one raw noise observation.
    #[arg(long = "noise-sd")]
    noise_sd: f64,
    /// Monte Carlo replicates.
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// Ranking depth, literal or rule in n like n^0.25. Repeatable.
    #[arg(long = "j0", required = true)]
    j0: Vec<String>,
    /// Correctness notion to estimate.
    #[arg(long, value_enum, default_value_t = ModeArg::Prefix)]
    mode: ModeArg,
    /// Whether rank 1 is the largest (descending) or smallest attribute.
    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    direction: DirectionArg,
    /// RNG seed (no silent entropy).
    #[arg(long)]
    seed: u64,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RatesArgs {
    /// Tail regime of the attribute distribution.
    #[arg(long, value_enum)]
    family: RateFamilyArg,
    /// Observations averaged per item.
    #[arg(long)]
    n: u64,
    /// Item count (required by the polynomial and bounded families).
    #[arg(long)]
    p: Option<u64>,
    /// Tail exponent.
    #[arg(long)]
    alpha: f64,
    /// Ranking depth for the boundary diagnostic of the bounded family.
    #[arg(long = "j0")]
    j0: Option<u64>,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BootstrapArgs {
    /// Input CSV path.
    #[arg(long)]
    input: PathBuf,
    /// Input schema.
    #[arg(long, value_enum)]
    format: FormatArg,
    /// Per-item statistic to rank by.
    #[arg(long, value_enum)]
    stat: StatArg,
    /// Bootstrap resamples.
    #[arg(long = "B", default_value_t = 1000)]
    b: u64,
    /// Two-sided coverage of the rank intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Resample size override (m-out-of-n bootstrap).
    #[arg(long)]
    m: Option<u64>,
    /// Whether rank 1 is the largest (descending) or smallest statistic.
    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    direction: DirectionArg,
    /// RNG seed (no silent entropy).
    #[arg(long)]
    seed: u64,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TopsetArgs {
    /// Input CSV path.
    #[arg(long)]
    input: PathBuf,
    /// Input schema.
    #[arg(long, value_enum, default_value_t = FormatArg::TwoClass)]
    format: FormatArg,
    /// Per-item statistic to rank by.
    #[arg(long, value_enum, default_value_t = StatArg::MannWhitney)]
    stat: StatArg,
    /// Set depth j to check. Repeatable.
    #[arg(long = "j", required = true)]
    j: Vec<u64>,
    /// Bootstrap resamples.
    #[arg(long = "B", default_value_t = 1000)]
    b: u64,
    /// Resample size override (stratified for two-class data).
    #[arg(long)]
    nprime: Option<u64>,
    /// Whether rank 1 is the largest (descending) or smallest statistic.
    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    direction: DirectionArg,
    /// RNG seed (no silent entropy).
    #[arg(long)]
    seed: u64,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CalibrateArgs {
    #[command(flatten)]
    tail: TailArgs,
    /// Observations averaged per item.
    #[arg(long)]
    n: u64,
    /// Item count p as a literal.
    #[arg(long, conflicts_with = "p_rule", required_unless_present = "p_rule")]
    p: Option<u64>,
    /// Item count p as a rule in n, e.g. 0.0005*n^2.
    #[arg(long = "p-rule")]
    p_rule: Option<String>,
    /// Starting noise level; replaced by the calibrated value.
    #[arg(long = "noise-sd", default_value_t = 1.0)]
    noise_sd: f64,
    /// Monte Carlo replicates per probe.
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// Ranking depth the target applies to. Repeatable; the first is used.
    #[arg(long = "j0", required = true)]
    j0: Vec<String>,
    /// Correctness notion to calibrate.
    #[arg(long, value_enum, default_value_t = ModeArg::Prefix)]
    mode: ModeArg,
    /// Whether rank 1 is the largest (descending) or smallest attribute.
    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    direction: DirectionArg,
    /// RNG seed (no silent entropy).
    #[arg(long)]
    seed: u64,
    /// Target correctness probability.
    #[arg(long)]
    target: f64,
    /// Acceptable distance from the target.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    /// Lower end of the noise search bracket.
    #[arg(long = "sd-lo", default_value_t = 0.0)]
    sd_lo: f64,
    /// Upper end of the noise search bracket.
    #[arg(long = "sd-hi", default_value_t = 100.0)]
    sd_hi: f64,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RequiredNArgs {
    #[command(flatten)]
    tail: TailArgs,
    /// Item count p as a literal.
    #[arg(long, conflicts_with = "p_rule", required_unless_present = "p_rule")]
    p: Option<u64>,
    /// Item count p as a rule in n, e.g. 0.0005*n^2.
    #[arg(long = "p-rule")]
    p_rule: Option<String>,
    /// Standard deviation of one raw noise observation.
    #[arg(long = "noise-sd")]
    noise_sd: f64,
    /// Monte Carlo replicates per grid point.
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// Ranking depth to require. Repeatable; each is searched separately.
    #[arg(long = "j0", required = true)]
    j0: Vec<u64>,
    /// Whether rank 1 is the largest (descending) or smallest attribute.
    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    direction: DirectionArg,
    /// RNG seed (no silent entropy).
    #[arg(long)]
    seed: u64,
    /// Target prefix-correctness probability.
    #[arg(long)]
    target: f64,
    /// Sample sizes to walk, comma separated and increasing.
    #[arg(long = "n-grid", value_delimiter = ',', required = true)]
    n_grid: Vec<u64>,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TailfitArgs {
    /// Input CSV path (replicates schema; items reduce to their means).
    #[arg(long)]
    input: PathBuf,
    /// Fitting method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Top order statistics for the Hill fit (default: sqrt of item count).
    #[arg(long)]
    k: Option<usize>,
    /// Left endpoint for the stretched exponential fit.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct QqArgs {
    /// Input CSV path (replicates schema; items reduce to their means).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    tail: TailArgs,
    /// Report path; tables land alongside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ----- helpers -----

/// Reports a usage problem the flag parser cannot see and exits with 2.
fn usage(message: String) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::InvalidValue, message)
        .exit()
}

fn require<T>(value: Option<T>, message: &str) -> T {
    match value {
        Some(v) => v,
        None => usage(message.into()),
    }
}

fn parse_size_spec(text: &str, flag: &str) -> SizeSpec {
    match text.parse() {
        Ok(spec) => spec,
        Err(e) => usage(format!("{flag}: {e}")),
    }
}

fn items_spec(p: Option<u64>, p_rule: &Option<String>) -> SizeSpec {
    match (p, p_rule) {
        (Some(count), None) => SizeSpec::Count(count),
        (None, Some(rule)) => parse_size_spec(rule, "--p-rule"),
        _ => usage("exactly one of --p and --p-rule is required".into()),
    }
}

fn depth_specs(texts: &[String]) -> Vec<SizeSpec> {
    texts.iter().map(|t| parse_size_spec(t, "--j0")).collect()
}

fn load_dataset(path: &Path, format: FormatArg) -> Result<ItemDataset> {
    let file = File::open(path).map_err(|e| {
        Error::Validation(format!("cannot open --input {}: {e}", path.display()))
    })?;
    match format {
        FormatArg::Replicates => parse_replicates(file),
        FormatArg::TwoClass => parse_two_class(file),
        FormatArg::Binomial => parse_binomial(file),
    }
}

/// Per-item mean scores from a replicates file, for the tail diagnostics.
fn item_scores(path: &Path) -> Result<Vec<f64>> {
    let data = load_dataset(path, FormatArg::Replicates)?;
    let ItemDataset::Replicates { values, .. } = &data else { unreachable!() };
    values.iter().map(|vs| location_stat(vs, StatKind::Mean)).collect()
}

struct Ctx {
    timing: bool,
    start: Instant,
}

impl Ctx {
    fn wall(&self) -> Option<f64> {
        self.timing.then(|| self.start.elapsed().as_secs_f64())
    }
}

fn base_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("")
    } else {
        out.to_path_buf()
    }
}

fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit<P: Serialize>(
    ctx: &Ctx,
    command: &str,
    seed: Option<u64>,
    payload: P,
    out: Option<&Path>,
    table: Option<Table>,
    plot: Option<Table>,
) -> Result<()> {
    let bundle = ReportBundle {
        meta: RunMeta {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            wall_clock_seconds: ctx.wall(),
        },
        payload,
    };
    let json = bundle.to_pretty_json()?;
    match out {
        None => print!("{json}"),
        Some(path) => {
            std::fs::write(path, &json)?;
            let base = base_path(path);
            if let Some(t) = table {
                let mut file = File::create(sibling(&base, ".table.csv"))?;
                t.write_csv(&mut file)?;
            }
            if let Some(pl) = plot {
                let mut file = File::create(sibling(&base, ".plot.csv"))?;
                pl.write_csv(&mut file)?;
            }
        }
    }
    Ok(())
}

// ----- subcommand bodies -----

fn run_simulate(ctx: &Ctx, args: &SimulateArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        tail: args.tail.build(),
        n: args.n,
        items: items_spec(args.p, &args.p_rule),
        noise_sd: args.noise_sd,
        reps: args.reps,
        depths: depth_specs(&args.j0),
        mode: args.mode.into(),
        direction: args.direction.into(),
        seed: args.seed,
        obs_counts: None,
        attributes: None,
        noise_mode: NoiseMode::Direct,
    };
    let report = run_rank_experiment(&cfg)?;

    let mut table = Table::new(vec![
        "depth_spec",
        "depth",
        "prefix_probability",
        "prefix_std_error",
        "set_probability",
        "set_std_error",
    ]);
    let mut plot = Table::new(vec!["depth", "prefix_probability", "set_probability"]);
    for o in &report.outcomes {
        table.push(vec![
            Cell::from(o.spec.clone()),
            Cell::from(o.depth),
            Cell::from(o.prefix.map(|e| e.probability)),
            Cell::from(o.prefix.map(|e| e.std_error)),
            Cell::from(o.set.map(|e| e.probability)),
            Cell::from(o.set.map(|e| e.std_error)),
        ])?;
        plot.push(vec![
            Cell::from(o.depth),
            Cell::from(o.prefix.map(|e| e.probability)),
            Cell::from(o.set.map(|e| e.probability)),
        ])?;
    }
    emit(ctx, "simulate", Some(args.seed), report, args.out.as_deref(), Some(table), Some(plot))
}

fn run_rates(ctx: &Ctx, args: &RatesArgs) -> Result<()> {
    let report = match args.family {
        RateFamilyArg::Exponential => regime_report_exponential(args.n, args.alpha)?,
        RateFamilyArg::Polynomial => {
            let p = require(args.p, "--family polynomial requires --p");
            regime_report_polynomial(args.n, p, args.alpha)?
        }
        RateFamilyArg::Bounded => {
            let p = require(args.p, "--family bounded requires --p");
            classify_bounded_support(args.n, p, args.alpha, args.j0)?
        }
    };
    let mut table = Table::new(vec![
        "family",
        "n",
        "p",
        "alpha",
        "depth",
        "rate",
        "size_ratio",
        "rank_threshold",
        "log_depth_term",
        "degenerate",
    ]);
    table.push(vec![
        Cell::from(format!("{:?}", report.family).to_lowercase()),
        Cell::from(report.n),
        Cell::from(report.p),
        Cell::from(report.alpha),
        Cell::from(report.depth),
        Cell::from(report.rate),
        Cell::from(report.diagnostics.size_ratio),
        Cell::from(report.diagnostics.rank_threshold),
        Cell::from(report.diagnostics.log_depth_term),
        Cell::Text(report.diagnostics.degenerate.to_string()),
    ])?;
    emit(ctx, "rates", None, report, args.out.as_deref(), Some(table), None)
}

#[derive(Serialize)]
struct BootstrapPayload<'a> {
    /// max/min of the per-item observation counts, when meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    count_ratio: Option<f64>,
    #[serde(flatten)]
    report: &'a crate::bootstrap::BootstrapReport,
}

fn run_bootstrap(ctx: &Ctx, args: &BootstrapArgs) -> Result<()> {
    if args.b < 100 {
        eprintln!(
            "warning: --B {} is small; percentile interval endpoints will be coarse",
            args.b
        );
    }
    let data = load_dataset(&args.input, args.format)?;
    let report = bootstrap_rank_intervals(
        &data,
        args.stat.into(),
        args.b,
        args.level,
        args.m,
        args.direction.into(),
        args.seed,
    )?;

    let mut table =
        Table::new(vec!["item", "point_stat", "point_rank", "lower", "upper"]);
    for iv in &report.intervals {
        table.push(vec![
            Cell::from(iv.item.clone()),
            Cell::from(iv.point_stat),
            Cell::from(iv.point_rank),
            Cell::from(iv.lower),
            Cell::from(iv.upper),
        ])?;
    }
    // Rank versus interval endpoints, in two orderings: by the full-data
    // rank and by the interval lower endpoint.
    let mut plot = Table::new(vec![
        "position",
        "item_by_point",
        "lower_by_point",
        "upper_by_point",
        "item_by_lower",
        "lower_by_lower",
        "upper_by_lower",
    ]);
    let mut by_point: Vec<usize> = (0..report.intervals.len()).collect();
    by_point.sort_by_key(|&i| report.intervals[i].point_rank);
    let mut by_lower: Vec<usize> = (0..report.intervals.len()).collect();
    by_lower.sort_by(|&a, &b| {
        let ia = &report.intervals[a];
        let ib = &report.intervals[b];
        (ia.lower, ia.upper, ia.point_rank).cmp(&(ib.lower, ib.upper, ib.point_rank))
    });
    for (pos, (&a, &b)) in by_point.iter().zip(&by_lower).enumerate() {
        let (pa, pb) = (&report.intervals[a], &report.intervals[b]);
        plot.push(vec![
            Cell::from(pos as u64 + 1),
            Cell::from(pa.item.clone()),
            Cell::from(pa.lower),
            Cell::from(pa.upper),
            Cell::from(pb.item.clone()),
            Cell::from(pb.lower),
            Cell::from(pb.upper),
        ])?;
    }
    let payload = BootstrapPayload { count_ratio: data.count_ratio(), report: &report };
    emit(ctx, "bootstrap", Some(args.seed), payload, args.out.as_deref(), Some(table), Some(plot))
}

fn run_topset(ctx: &Ctx, args: &TopsetArgs) -> Result<()> {
    let data = load_dataset(&args.input, args.format)?;
    let report = top_set_probability(
        &data,
        args.stat.into(),
        &args.j,
        args.b,
        args.nprime,
        args.direction.into(),
        args.seed,
    )?;
    let mut table = Table::new(vec!["depth", "probability", "std_error", "reference_set"]);
    let mut plot = Table::new(vec!["depth", "probability"]);
    for o in &report.outcomes {
        table.push(vec![
            Cell::from(o.depth),
            Cell::from(o.probability),
            Cell::from(o.std_error),
            Cell::from(o.reference.join("|")),
        ])?;
        plot.push(vec![Cell::from(o.depth), Cell::from(o.probability)])?;
    }
    emit(ctx, "topset", Some(args.seed), report, args.out.as_deref(), Some(table), Some(plot))
}

#[derive(Serialize)]
struct CalibratePayload {
    noise_sd: f64,
    achieved_probability: f64,
    target: f64,
    tol: f64,
    sd_lo: f64,
    sd_hi: f64,
    /// Rerunning this configuration reproduces the achieved probability.
    config: ExperimentConfig,
}

fn run_calibrate(ctx: &Ctx, args: &CalibrateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig {
        tail: args.tail.build(),
        n: args.n,
        items: items_spec(args.p, &args.p_rule),
        noise_sd: args.noise_sd,
        reps: args.reps,
        depths: depth_specs(&args.j0),
        mode: args.mode.into(),
        direction: args.direction.into(),
        seed: args.seed,
        obs_counts: None,
        attributes: None,
        noise_mode: NoiseMode::Direct,
    };
    let (sd, achieved) = calibrate_noise(&cfg, args.target, args.tol, (args.sd_lo, args.sd_hi))?;
    cfg.noise_sd = sd;
    let payload = CalibratePayload {
        noise_sd: sd,
        achieved_probability: achieved,
        target: args.target,
        tol: args.tol,
        sd_lo: args.sd_lo,
        sd_hi: args.sd_hi,
        config: cfg,
    };
    let mut table = Table::new(vec!["noise_sd", "achieved_probability", "target", "tol"]);
    table.push(vec![
        Cell::from(sd),
        Cell::from(achieved),
        Cell::from(args.target),
        Cell::from(args.tol),
    ])?;
    emit(ctx, "calibrate", Some(args.seed), payload, args.out.as_deref(), Some(table), None)
}

#[derive(Serialize)]
struct RequiredNSearch {
    depth: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    required: Option<u64>,
    /// Light-tail critical ranking depth at the required n, when the tail
    /// family has an exponential-type exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_rate: Option<f64>,
    evaluated: Vec<(u64, f64)>,
}

#[derive(Serialize)]
struct RequiredNPayload {
    target: f64,
    n_grid: Vec<u64>,
    searches: Vec<RequiredNSearch>,
    config: ExperimentConfig,
}

fn run_required_n(ctx: &Ctx, args: &RequiredNArgs) -> Result<()> {
    let template = ExperimentConfig {
        tail: args.tail.build(),
        n: *args.n_grid.first().unwrap_or(&1),
        items: items_spec(args.p, &args.p_rule),
        noise_sd: args.noise_sd,
        reps: args.reps,
        depths: vec![SizeSpec::Count(1)],
        mode: Mode::Prefix,
        direction: args.direction.into(),
        seed: args.seed,
        obs_counts: None,
        attributes: None,
        noise_mode: NoiseMode::Direct,
    };
    let light_exponent = template.tail.light_tail_exponent();

    let mut searches = Vec::with_capacity(args.j0.len());
    let mut table = Table::new(vec!["j0", "n", "estimate"]);
    let mut plot = Table::new(vec!["j0", "required_n", "critical_rate"]);
    for &depth in &args.j0 {
        let search = required_sample_size(&template, depth, args.target, &args.n_grid)?;
        for &(n, estimate) in &search.evaluated {
            table.push(vec![Cell::from(depth), Cell::from(n), Cell::from(estimate)])?;
        }
        let critical_rate = match (search.required, light_exponent) {
            (Some(n), Some(alpha)) if n >= 2 => Some(critical_rate_exponential(n, alpha)?),
            _ => None,
        };
        plot.push(vec![
            Cell::from(depth),
            Cell::from(search.required),
            Cell::from(critical_rate),
        ])?;
        searches.push(RequiredNSearch {
            depth,
            required: search.required,
            critical_rate,
            evaluated: search.evaluated,
        });
    }
    let payload = RequiredNPayload {
        target: args.target,
        n_grid: args.n_grid.clone(),
        searches,
        config: template,
    };
    emit(ctx, "required-n", Some(args.seed), payload, args.out.as_deref(), Some(table), Some(plot))
}

#[derive(Serialize)]
#[serde(untagged)]
enum TailfitPayload {
    Hill(crate::diagnostics::HillFit),
    Stretched(crate::diagnostics::StretchedExpFit),
}

fn run_tailfit(ctx: &Ctx, args: &TailfitArgs) -> Result<()> {
    let scores = item_scores(&args.input)?;
    match args.method {
        MethodArg::Hill => {
            let k = args.k.unwrap_or_else(|| {
                ((scores.len() as f64).sqrt().round() as usize).clamp(1, scores.len() - 1)
            });
            let fit = hill_estimator(&scores, k)?;
            let mut table = Table::new(vec!["depth", "alpha"]);
            for (depth, alpha) in fit.trace.iter().enumerate() {
                table.push(vec![Cell::from(depth as u64 + 1), Cell::from(*alpha)])?;
            }
            let plot = table.clone();
            emit(
                ctx,
                "tailfit",
                None,
                TailfitPayload::Hill(fit),
                args.out.as_deref(),
                Some(table),
                Some(plot),
            )
        }
        MethodArg::StretchedExp => {
            let fit = fit_stretched_exp(&scores, args.shift)?;
            let mut table =
                Table::new(vec!["gamma", "lambda", "shift", "r_squared", "points"]);
            table.push(vec![
                Cell::from(fit.gamma),
                Cell::from(fit.lambda),
                Cell::from(fit.shift),
                Cell::from(fit.r_squared),
                Cell::from(fit.points as u64),
            ])?;
            // Regression-scale pairs for plotting the fit.
            let mut sorted = scores.clone();
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mut plot = Table::new(vec!["log_shifted_value", "log_neg_log_survival"]);
            let n = sorted.len();
            for (i, &x) in sorted.iter().enumerate() {
                let q = (i + 1) as f64 / (n + 1) as f64;
                plot.push(vec![
                    Cell::from((x - fit.shift).ln()),
                    Cell::from((-(-q).ln_1p()).ln()),
                ])?;
            }
            emit(
                ctx,
                "tailfit",
                None,
                TailfitPayload::Stretched(fit),
                args.out.as_deref(),
                Some(table),
                Some(plot),
            )
        }
    }
}

#[derive(Serialize)]
struct QqPayload {
    model: TailModel,
    points: usize,
}

fn run_qq(ctx: &Ctx, args: &QqArgs) -> Result<()> {
    let scores = item_scores(&args.input)?;
    let model = args.tail.build();
    let pairs = qq_points(&scores, &model)?;
    let mut table = Table::new(vec!["observed", "theoretical"]);
    for &(observed, theoretical) in &pairs {
        table.push(vec![Cell::from(observed), Cell::from(theoretical)])?;
    }
    let plot = table.clone();
    let payload = QqPayload { model, points: pairs.len() };
    emit(ctx, "qq", None, payload, args.out.as_deref(), Some(table), Some(plot))
}

// ----- entry point -----

fn configure_workers(flag: Option<usize>) {
    let from_env = match std::env::var("RANKVAR_WORKERS") {
        Ok(text) => match text.parse::<usize>() {
            Ok(w) if w >= 1 => Some(w),
            _ => usage(format!(
                "RANKVAR_WORKERS must be a positive integer, got '{text}'"
            )),
        },
        Err(_) => None,
    };
    if let Some(workers) = from_env.or(flag) {
        // Ignore the error from a pool that is already initialized.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
}

/// Parses argv, dispatches, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    configure_workers(cli.workers);
    let ctx = Ctx { timing: cli.timing, start: Instant::now() };
    let result = match &cli.command {
        Command::Simulate(args) => run_simulate(&ctx, args),
        Command::Rates(args) => run_rates(&ctx, args),
        Command::Bootstrap(args) => run_bootstrap(&ctx, args),
        Command::Topset(args) => run_topset(&ctx, args),
        Command::Calibrate(args) => run_calibrate(&ctx, args),
        Command::RequiredN(args) => run_required_n(&ctx, args),
        Command::Tailfit(args) => run_tailfit(&ctx, args),
        Command::Qq(args) => run_qq(&ctx, args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
