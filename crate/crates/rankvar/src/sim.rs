//! Monte Carlo engine for rank-correctness experiments.
//!
//! Each replicate draws p latent attributes from the configured tail model,
//! perturbs every attribute with averaged normal noise (the observed score
//! for item j is its attribute plus noise with standard deviation
//! noise_sd / sqrt(n_j)), ranks both vectors, and records how deep the
//! observed ranking agrees with the true one. Replicates are independent
//! work units keyed by (seed, replicate index), so reports are bit-identical
//! at any worker count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stream::substream;
use crate::tail::TailModel;

/// Item count or ranking depth, either a literal or a power law in n.
///
/// Expressions take the form `c*n^k` (`c` and `k` may be decimals or
/// fractions like `(4/9)`; both are optional) and resolve by rounding to the
/// nearest integer with a minimum of 1. The rounding rule is part of the
/// config echo so results can be reproduced exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SizeSpec {
    Count(u64),
    Scaled { coeff: f64, exponent: f64 },
}

impl SizeSpec {
    /// Evaluates the spec at sample size `n`.
    pub fn resolve(&self, n: u64) -> Result<u64> {
        match *self {
            SizeSpec::Count(c) => {
                if c == 0 {
                    Err(Error::Argument("size 0 is not allowed; counts start at 1".into()))
                } else {
                    Ok(c)
                }
            }
            SizeSpec::Scaled { coeff, exponent } => {
                let v = coeff * (n as f64).powf(exponent);
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "size expression {self} does not evaluate to a finite value at n={n}"
                    )));
                }
                Ok(v.round().max(1.0) as u64)
            }
        }
    }
}

/// Parses a decimal, a fraction `a/b`, or either wrapped in parentheses.
fn parse_real(s: &str, what: &str) -> Result<f64> {
    let mut t = s.trim();
    if t.starts_with('(') && t.ends_with(')') && t.len() >= 2 {
        t = t[1..t.len() - 1].trim();
    }
    let bad = || Error::Argument(format!("cannot parse {what} '{s}' as a number or fraction"));
    let v = if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad())?;
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(Error::Argument(format!("{what} '{s}' divides by zero")));
        }
        n / d
    } else {
        t.parse().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

impl FromStr for SizeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Argument("empty size expression".into()));
        }
        let Some(pos) = t.find('n') else {
            return t.parse::<u64>().map(SizeSpec::Count).map_err(|_| {
                Error::Argument(format!(
                    "'{t}' is neither a positive integer nor an expression like c*n^k"
                ))
            });
        };
        let (left, right) = (t[..pos].trim(), t[pos + 1..].trim());
        let coeff = if left.is_empty() {
            1.0
        } else {
            let left = left.strip_suffix('*').unwrap_or(left).trim();
            if left.is_empty() {
                1.0
            } else {
                parse_real(left, "coefficient")?
            }
        };
        if coeff <= 0.0 || coeff.is_nan() {
            return Err(Error::Argument(format!(
                "coefficient in '{t}' must be positive"
            )));
        }
        let exponent = if right.is_empty() {
            1.0
        } else if let Some(rest) = right.strip_prefix('^') {
            parse_real(rest, "exponent")?
        } else {
            return Err(Error::Argument(format!(
                "expected '^exponent' after n in '{t}'"
            )));
        };
        Ok(SizeSpec::Scaled { coeff, exponent })
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SizeSpec::Count(c) => write!(f, "{c}"),
            SizeSpec::Scaled { coeff, exponent } => {
                if coeff != 1.0 {
                    write!(f, "{coeff}*")?;
                }
                write!(f, "n")?;
                if exponent != 1.0 {
                    write!(f, "^{exponent}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for SizeSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SizeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which correctness notion(s) a run estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The first j0 observed ranks match the true ranks exactly.
    Prefix,
    /// The set of top-j0 items matches, ignoring internal order.
    Set,
    /// Estimate both notions from the same realizations.
    Both,
}

impl Mode {
    fn wants_prefix(self) -> bool {
        matches!(self, Mode::Prefix | Mode::Both)
    }
    fn wants_set(self) -> bool {
        matches!(self, Mode::Set | Mode::Both)
    }
}

/// Whether rank 1 is the smallest or the largest value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

/// How the averaged noise is realized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Draw the noise mean directly as Normal(0, noise_sd^2 / n_j).
    /// Exact in distribution and O(p) per replicate.
    #[default]
    Direct,
    /// Average n_j raw Normal(0, noise_sd^2) draws per item. O(n p) per
    /// replicate; the hook for future non-normal raw noise.
    RawAverage,
}

/// Full description of one Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub tail: TailModel,
    /// Observations averaged per item (the default n_j for every item).
    pub n: u64,
    /// Number of items p, literal or a rule in n.
    pub items: SizeSpec,
    /// Standard deviation of one raw noise observation.
    pub noise_sd: f64,
    pub reps: u64,
    /// Ranking depths j0 to evaluate, literals or rules in n.
    pub depths: Vec<SizeSpec>,
    pub mode: Mode,
    pub direction: Direction,
    pub seed: u64,
    /// Per-item observation counts overriding `n` (ragged designs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_counts: Option<Vec<u64>>,
    /// Fixed attribute vector instead of sampling from `tail`. Used to pin
    /// configurations with a closed-form answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Vec<f64>>,
    #[serde(default)]
    pub noise_mode: NoiseMode,
}

/// One simulated draw: attributes, observed scores, and both rankings.
/// `true_order[r]` is the item holding rank r+1 (ties broken by item index).
#[derive(Clone, Debug, PartialEq)]
pub struct RankRealization {
    pub attributes: Vec<f64>,
    pub observed: Vec<f64>,
    pub true_order: Vec<u32>,
    pub observed_order: Vec<u32>,
}

impl RankRealization {
    pub fn new(attributes: Vec<f64>, observed: Vec<f64>, direction: Direction) -> Result<Self> {
        if attributes.is_empty() || attributes.len() != observed.len() {
            return Err(Error::Argument(format!(
                "attribute and observation vectors must be nonempty and equal length \
                 (got {} and {})",
                attributes.len(),
                observed.len()
            )));
        }
        if attributes.iter().chain(observed.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("all values must be finite".into()));
        }
        let mut true_order: Vec<u32> = (0..attributes.len() as u32).collect();
        let mut observed_order = true_order.clone();
        sort_prefix(&attributes, direction, attributes.len(), &mut true_order);
        sort_prefix(&observed, direction, observed.len(), &mut observed_order);
        Ok(RankRealization { attributes, observed, true_order, observed_order })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

/// Largest d such that the observed and true rankings agree at every rank
/// 1..=d. Zero when even the first rank differs.
pub fn prefix_correct_depth(real: &RankRealization) -> usize {
    real.true_order
        .iter()
        .zip(&real.observed_order)
        .take_while(|(t, x)| t == x)
        .count()
}

/// For each requested depth j, whether the top-j item sets agree (order
/// inside the set ignored). Depths must satisfy 1 <= j <= p.
pub fn set_correct_flags(real: &RankRealization, depths: &[usize]) -> Result<Vec<bool>> {
    let p = real.len();
    depths
        .iter()
        .map(|&j| {
            if j == 0 || j > p {
                return Err(Error::Argument(format!(
                    "set depth {j} outside the valid range 1..={p}"
                )));
            }
            let mut a = real.true_order[..j].to_vec();
            let mut b = real.observed_order[..j].to_vec();
            a.sort_unstable();
            b.sort_unstable();
            Ok(a == b)
        })
        .collect()
}

/// Probability estimate with its Monte Carlo standard error
/// sqrt(p_hat (1 - p_hat) / reps).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub std_error: f64,
}

impl ProbabilityEstimate {
    fn from_hits(hits: u64, reps: u64) -> Self {
        let p = hits as f64 / reps as f64;
        ProbabilityEstimate { probability: p, std_error: (p * (1.0 - p) / reps as f64).sqrt() }
    }
}

/// Estimates for one requested depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthOutcome {
    /// The depth specification as given (literal or rule).
    pub spec: String,
    /// The resolved integer depth j0.
    pub depth: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<ProbabilityEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<ProbabilityEstimate>,
}

/// Aggregated result of `run_rank_experiment`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCorrectnessReport {
    /// One entry per requested depth, in request order.
    pub outcomes: Vec<DepthOutcome>,
    pub reps: u64,
    /// Resolved item count p.
    pub items: u64,
    /// max(n_j) / min(n_j) when per-item counts were overridden.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs_count_ratio: Option<f64>,
    /// The exact configuration; rerunning it reproduces this report.
    pub config: ExperimentConfig,
    /// Wall-clock seconds; excluded from serialized output so that emitted
    /// reports are byte-identical across reruns.
    #[serde(skip)]
    pub wall_seconds: f64,
}

enum NoisePlan {
    DirectUniform(f64),
    DirectPerItem(Vec<f64>),
    RawUniform { sd: f64, count: u64 },
    RawPerItem { sd: f64, counts: Vec<u64> },
}

struct ResolvedExperiment {
    p: usize,
    /// (resolved depth, slot in cfg.depths), sorted by depth.
    depth_schedule: Vec<(usize, usize)>,
    depths: Vec<u64>,
    jmax: usize,
    noise: NoisePlan,
    obs_ratio: Option<f64>,
}

const MAX_ITEMS: u64 = 100_000_000;

fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedExperiment> {
    cfg.tail.validate()?;
    if cfg.n < 1 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    if cfg.reps < 1 {
        return Err(Error::Argument("reps must be at least 1".into()));
    }
    if !(cfg.noise_sd.is_finite() && cfg.noise_sd >= 0.0) {
        return Err(Error::Domain(format!(
            "noise_sd={} must be finite and nonnegative",
            cfg.noise_sd
        )));
    }
    let p64 = cfg.items.resolve(cfg.n)?;
    if p64 > MAX_ITEMS {
        return Err(Error::Resource(format!(
            "item count {p64} exceeds the cap of {MAX_ITEMS}"
        )));
    }
    let p = p64 as usize;
    let mut depths = Vec::with_capacity(cfg.depths.len());
    for spec in &cfg.depths {
        let d = spec.resolve(cfg.n)?;
        if d > p64 {
            return Err(Error::Argument(format!(
                "depth {spec} resolves to {d}, which exceeds the item count {p64}"
            )));
        }
        depths.push(d);
    }
    let mut depth_schedule: Vec<(usize, usize)> =
        depths.iter().enumerate().map(|(slot, &d)| (d as usize, slot)).collect();
    depth_schedule.sort_unstable();
    let jmax = depth_schedule.last().map_or(0, |&(d, _)| d);

    if let Some(attrs) = &cfg.attributes {
        if attrs.len() != p {
            return Err(Error::Argument(format!(
                "attribute override has length {}, expected the item count {p}",
                attrs.len()
            )));
        }
        if attrs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("attribute override contains non-finite values".into()));
        }
    }

    let (noise, obs_ratio) = match (&cfg.obs_counts, cfg.noise_mode) {
        (None, NoiseMode::Direct) => {
            (NoisePlan::DirectUniform(cfg.noise_sd / (cfg.n as f64).sqrt()), None)
        }
        (None, NoiseMode::RawAverage) => {
            (NoisePlan::RawUniform { sd: cfg.noise_sd, count: cfg.n }, None)
        }
        (Some(counts), mode) => {
            if counts.len() != p {
                return Err(Error::Argument(format!(
                    "obs_counts has length {}, expected the item count {p}",
                    counts.len()
                )));
            }
            if counts.contains(&0) {
                return Err(Error::Argument("every per-item count must be at least 1".into()));
            }
            let max = *counts.iter().max().unwrap() as f64;
            let min = *counts.iter().min().unwrap() as f64;
            let plan = match mode {
                NoiseMode::Direct => NoisePlan::DirectPerItem(
                    counts.iter().map(|&c| cfg.noise_sd / (c as f64).sqrt()).collect(),
                ),
                NoiseMode::RawAverage => {
                    NoisePlan::RawPerItem { sd: cfg.noise_sd, counts: counts.clone() }
                }
            };
            (plan, Some(max / min))
        }
    };

    Ok(ResolvedExperiment { p, depth_schedule, depths, jmax, noise, obs_ratio })
}

/// Sorts the first `jmax` positions of `idx` by the values they point to.
/// Ties break toward the smaller item index in both directions.
fn sort_prefix(values: &[f64], direction: Direction, jmax: usize, idx: &mut [u32]) {
    let cmp = |a: &u32, b: &u32| {
        let va = values[*a as usize];
        let vb = values[*b as usize];
        let ord = va.partial_cmp(&vb).expect("values are finite");
        let ord = match direction {
            Direction::Ascending => ord,
            Direction::Descending => ord.reverse(),
        };
        ord.then_with(|| a.cmp(b))
    };
    if jmax < idx.len() {
        idx.select_nth_unstable_by(jmax, cmp);
    }
    idx[..jmax].sort_unstable_by(cmp);
}

struct Scratch {
    theta: Vec<f64>,
    xbar: Vec<f64>,
    t_idx: Vec<u32>,
    x_idx: Vec<u32>,
    mark: Vec<i8>,
    set_flags: Vec<bool>,
}

impl Scratch {
    fn new(p: usize, n_depths: usize) -> Self {
        Scratch {
            theta: Vec::with_capacity(p),
            xbar: Vec::with_capacity(p),
            t_idx: Vec::with_capacity(p),
            x_idx: Vec::with_capacity(p),
            mark: vec![0; p],
            set_flags: vec![false; n_depths],
        }
    }
}

/// Simulates one replicate into `s` and returns the agreement depth (capped
/// at jmax) plus per-depth set flags in `s.set_flags`.
fn simulate_rep(
    cfg: &ExperimentConfig,
    res: &ResolvedExperiment,
    rep: u64,
    s: &mut Scratch,
) -> usize {
    let mut rng = substream(cfg.seed, &[rep]);
    let p = res.p;

    s.theta.clear();
    match &cfg.attributes {
        Some(fixed) => s.theta.extend_from_slice(fixed),
        None => cfg.tail.fill_iid(&mut s.theta, p, &mut rng),
    }

    s.xbar.clear();
    match &res.noise {
        NoisePlan::DirectUniform(scale) => {
            for j in 0..p {
                let z: f64 = rng.sample(StandardNormal);
                s.xbar.push(s.theta[j] + scale * z);
            }
        }
        NoisePlan::DirectPerItem(scales) => {
            for (&theta, &scale) in s.theta.iter().zip(scales) {
                let z: f64 = rng.sample(StandardNormal);
                s.xbar.push(theta + scale * z);
            }
        }
        NoisePlan::RawUniform { sd, count } => {
            for j in 0..p {
                let mut sum = 0.0;
                for _ in 0..*count {
                    let z: f64 = rng.sample(StandardNormal);
                    sum += z;
                }
                s.xbar.push(s.theta[j] + sd * sum / *count as f64);
            }
        }
        NoisePlan::RawPerItem { sd, counts } => {
            for (&theta, &count) in s.theta.iter().zip(counts) {
                let mut sum = 0.0;
                for _ in 0..count {
                    let z: f64 = rng.sample(StandardNormal);
                    sum += z;
                }
                s.xbar.push(theta + sd * sum / count as f64);
            }
        }
    }

    s.t_idx.clear();
    s.t_idx.extend(0..p as u32);
    s.x_idx.clear();
    s.x_idx.extend(0..p as u32);
    sort_prefix(&s.theta, cfg.direction, res.jmax, &mut s.t_idx);
    sort_prefix(&s.xbar, cfg.direction, res.jmax, &mut s.x_idx);

    let t = &s.t_idx[..res.jmax];
    let x = &s.x_idx[..res.jmax];

    let mut depth = res.jmax;
    for j in 0..res.jmax {
        if t[j] != x[j] {
            depth = j;
            break;
        }
    }

    if cfg.mode.wants_set() {
        // Walk both prefixes in parallel, tracking how many items are in one
        // top-j set but not the other; the sets agree exactly when the count
        // is zero.
        let mut mismatched = 0usize;
        let mut di = 0usize;
        for j in 0..res.jmax {
            let a = t[j] as usize;
            let b = x[j] as usize;
            if a != b {
                if s.mark[a] == -1 {
                    mismatched -= 1;
                    s.mark[a] = 0;
                } else {
                    mismatched += 1;
                    s.mark[a] = 1;
                }
                if s.mark[b] == 1 {
                    mismatched -= 1;
                    s.mark[b] = 0;
                } else {
                    mismatched += 1;
                    s.mark[b] = -1;
                }
            }
            while di < res.depth_schedule.len() && res.depth_schedule[di].0 == j + 1 {
                s.set_flags[res.depth_schedule[di].1] = mismatched == 0;
                di += 1;
            }
        }
        for j in 0..res.jmax {
            s.mark[t[j] as usize] = 0;
            s.mark[x[j] as usize] = 0;
        }
    }

    depth
}

/// Runs the configured experiment and aggregates correctness probabilities.
///
/// Per replicate, the draw order is fixed: attributes first (one uniform per
/// item via the inverse CDF), then one standard normal per item in index
/// order (or n_j of them in raw-average mode). The replicate's generator is
/// derived from (seed, replicate index) alone, so reports do not depend on
/// thread scheduling.
pub fn run_rank_experiment(cfg: &ExperimentConfig) -> Result<RankCorrectnessReport> {
    let res = resolve(cfg)?;
    let start = Instant::now();
    let n_depths = cfg.depths.len();

    let reps = usize::try_from(cfg.reps)
        .map_err(|_| Error::Resource(format!("reps={} does not fit in memory", cfg.reps)))?;
    let chunk = (reps / (8 * rayon::current_num_threads().max(1))).max(1);
    let (prefix_hits, set_hits) = (0..reps)
        .into_par_iter()
        .with_min_len(chunk)
        .fold(
            || (vec![0u64; n_depths], vec![0u64; n_depths], Scratch::new(res.p, n_depths)),
            |(mut prefix, mut set, mut scratch), rep| {
                let depth = simulate_rep(cfg, &res, rep as u64, &mut scratch);
                if cfg.mode.wants_prefix() {
                    for (slot, &d) in res.depths.iter().enumerate() {
                        if depth as u64 >= d {
                            prefix[slot] += 1;
                        }
                    }
                }
                if cfg.mode.wants_set() {
                    for (slot, &flag) in scratch.set_flags.iter().enumerate() {
                        if flag {
                            set[slot] += 1;
                        }
                    }
                }
                (prefix, set, scratch)
            },
        )
        .map(|(prefix, set, _)| (prefix, set))
        .reduce(
            || (vec![0u64; n_depths], vec![0u64; n_depths]),
            |(mut pa, mut sa), (pb, sb)| {
                for (a, b) in pa.iter_mut().zip(&pb) {
                    *a += b;
                }
                for (a, b) in sa.iter_mut().zip(&sb) {
                    *a += b;
                }
                (pa, sa)
            },
        );

    let outcomes = cfg
        .depths
        .iter()
        .enumerate()
        .map(|(slot, spec)| DepthOutcome {
            spec: spec.to_string(),
            depth: res.depths[slot],
            prefix: cfg
                .mode
                .wants_prefix()
                .then(|| ProbabilityEstimate::from_hits(prefix_hits[slot], cfg.reps)),
            set: cfg
                .mode
                .wants_set()
                .then(|| ProbabilityEstimate::from_hits(set_hits[slot], cfg.reps)),
        })
        .collect();

    Ok(RankCorrectnessReport {
        outcomes,
        reps: cfg.reps,
        items: res.p as u64,
        obs_count_ratio: res.obs_ratio,
        config: cfg.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Exact probability that two items whose attributes differ by `delta` keep
/// their true order after averaging `n` noise draws of standard deviation
/// `sigma` each: Phi(delta sqrt(n) / (sigma sqrt(2))).
pub fn two_item_order_probability(delta: f64, sigma: f64, n: u64) -> Result<f64> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::Domain(format!("delta={delta} must be nonnegative and finite")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma={sigma} must be positive and finite")));
    }
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    Ok(std_normal.cdf(delta * (n as f64).sqrt() / (sigma * std::f64::consts::SQRT_2)))
}

fn first_outcome_probability(report: &RankCorrectnessReport) -> Result<f64> {
    let outcome = report
        .outcomes
        .first()
        .ok_or_else(|| Error::Argument("config must request at least one depth".into()))?;
    Ok(outcome
        .prefix
        .as_ref()
        .or(outcome.set.as_ref())
        .expect("at least one mode is always estimated")
        .probability)
}

/// Finds a noise level whose estimated correctness probability at the first
/// configured depth hits `target` within `tol`.
///
/// Bisection over `sd_bounds`, at most 40 iterations, re-running the
/// experiment with the config's own seed at each step. Reusing one seed makes
/// the estimate a deterministic, effectively monotone decreasing function of
/// sd, so the search is reproducible. Returns (noise_sd, achieved).
pub fn calibrate_noise(
    cfg: &ExperimentConfig,
    target: f64,
    tol: f64,
    sd_bounds: (f64, f64),
) -> Result<(f64, f64)> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Domain(format!("target={target} must lie in (0, 1]")));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tol={tol} must be nonnegative")));
    }
    let (mut lo, mut hi) = sd_bounds;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::Argument(format!(
            "sd bounds ({lo}, {hi}) must satisfy 0 <= lo < hi"
        )));
    }

    let eval = |sd: f64| -> Result<f64> {
        let mut trial = cfg.clone();
        trial.noise_sd = sd;
        first_outcome_probability(&run_rank_experiment(&trial)?)
    };

    let mut p_lo = eval(lo)?;
    if (p_lo - target).abs() <= tol {
        return Ok((lo, p_lo));
    }
    let mut p_hi = eval(hi)?;
    if (p_hi - target).abs() <= tol {
        return Ok((hi, p_hi));
    }
    let fail = |message: String, lo: f64, hi: f64, p_lo: f64, p_hi: f64| Error::Calibration {
        message,
        sd_lo: lo,
        sd_hi: hi,
        prob_at_lo: p_lo,
        prob_at_hi: p_hi,
    };
    if target > p_lo {
        return Err(fail(
            format!(
                "target {target} exceeds the probability {p_lo:.6} achieved at the \
                 smallest allowed noise level"
            ),
            lo,
            hi,
            p_lo,
            p_hi,
        ));
    }
    if target < p_hi {
        return Err(fail(
            format!(
                "target {target} is below the probability {p_hi:.6} achieved at the \
                 largest allowed noise level"
            ),
            lo,
            hi,
            p_lo,
            p_hi,
        ));
    }

    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let p_mid = eval(mid)?;
        if (p_mid - target).abs() <= tol {
            return Ok((mid, p_mid));
        }
        if p_mid > target {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
            p_hi = p_mid;
        }
    }
    Err(fail(
        format!(
            "no noise level within tolerance {tol} of target {target} after 40 \
             bisection steps; the Monte Carlo grid may be coarser than tol"
        ),
        lo,
        hi,
        p_lo,
        p_hi,
    ))
}

/// Result of a required-sample-size search over an n grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequiredSampleSearch {
    /// Smallest grid n whose estimate reached the target, if any.
    pub required: Option<u64>,
    /// (n, estimated probability) for every grid point evaluated, in order.
    /// The search stops at the first success.
    pub evaluated: Vec<(u64, f64)>,
}

/// Walks `n_grid` in increasing order and returns the smallest n whose
/// estimated prefix-correctness probability at `depth` reaches `target`.
///
/// The template's `items` rule is re-resolved at every grid point; its
/// depths and mode are replaced by the requested prefix depth.
pub fn required_sample_size(
    cfg: &ExperimentConfig,
    depth: u64,
    target: f64,
    n_grid: &[u64],
) -> Result<RequiredSampleSearch> {
    if n_grid.is_empty() {
        return Err(Error::Argument("n_grid must be nonempty".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("n_grid must be strictly increasing".into()));
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Domain(format!("target={target} must lie in (0, 1]")));
    }
    let mut evaluated = Vec::new();
    for &n in n_grid {
        let mut trial = cfg.clone();
        trial.n = n;
        trial.depths = vec![SizeSpec::Count(depth)];
        trial.mode = Mode::Prefix;
        let report = run_rank_experiment(&trial)?;
        let estimate = first_outcome_probability(&report)?;
        evaluated.push((n, estimate));
        if estimate >= target {
            return Ok(RequiredSampleSearch { required: Some(n), evaluated });
        }
    }
    Ok(RequiredSampleSearch { required: None, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            tail: TailModel::Exponential { rate: 1.0 },
            n: 100,
            items: SizeSpec::Count(20),
            noise_sd: 1.0,
            reps: 200,
            depths: vec![SizeSpec::Count(1), SizeSpec::Count(3)],
            mode: Mode::Both,
            direction: Direction::Descending,
            seed: 42,
            obs_counts: None,
            attributes: None,
            noise_mode: NoiseMode::Direct,
        }
    }

    // ----- size specs -----

    #[test]
    fn size_spec_parses_literals_and_power_laws() {
        let cases: Vec<(&str, u64, u64)> = vec![
            ("125", 500, 125),
            ("0.0005*n^2", 500, 125),
            ("0.0005*n^2", 2000, 2000),
            ("n^0.25", 500, 5),   // 4.7287 rounds up
            ("(1/5)*n^(4/9)", 500, 3), // 3.166 rounds down
            ("2*n^0.5", 500, 45), // 44.72 rounds up
            ("n", 7, 7),
            ("2*n", 10, 20),
            ("0.001*n", 100, 1), // 0.1 clamps to the minimum
        ];
        for (text, n, expect) in cases {
            let spec: SizeSpec = text.parse().unwrap();
            assert_eq!(spec.resolve(n).unwrap(), expect, "{text} at n={n}");
        }
    }

    #[test]
    fn size_spec_rejects_malformed_expressions() {
        for bad in ["", "abc", "n^", "-2*n", "0*n^2", "n^(1/0)", "2x*n", "1.5"] {
            assert!(bad.parse::<SizeSpec>().is_err(), "'{bad}' should not parse");
        }
    }

    #[test]
    fn size_spec_zero_count_is_rejected_at_resolution() {
        assert!(SizeSpec::Count(0).resolve(10).is_err());
    }

    #[test]
    fn size_spec_display_round_trips() {
        for text in ["125", "0.0005*n^2", "n^0.25", "n", "2*n"] {
            let spec: SizeSpec = text.parse().unwrap();
            let again: SizeSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again, "{text}");
        }
    }

    // ----- realizations -----

    fn realization(attrs: &[f64], obs: &[f64]) -> RankRealization {
        RankRealization::new(attrs.to_vec(), obs.to_vec(), Direction::Ascending).unwrap()
    }

    #[test]
    fn depth_is_full_length_under_zero_noise() {
        let r = realization(&[3.0, 1.0, 2.0], &[3.0, 1.0, 2.0]);
        assert_eq!(prefix_correct_depth(&r), 3);
    }

    #[test]
    fn depth_stops_at_the_first_disagreement() {
        let r = realization(&[1.0, 2.0, 3.0], &[1.0, 3.1, 2.0]);
        assert_eq!(prefix_correct_depth(&r), 1);
        let r = realization(&[2.0, 1.0], &[1.4, 1.5]);
        assert_eq!(prefix_correct_depth(&r), 0);
    }

    #[test]
    fn set_flags_ignore_order_inside_the_top_group() {
        let r = realization(&[1.0, 2.0, 3.0], &[2.0, 1.9, 3.0]);
        assert_eq!(set_correct_flags(&r, &[1, 2, 3]).unwrap(), vec![false, true, true]);
        assert!(set_correct_flags(&r, &[4]).is_err());
        assert!(set_correct_flags(&r, &[0]).is_err());
    }

    #[test]
    fn ties_break_by_item_index_in_both_directions() {
        for direction in [Direction::Ascending, Direction::Descending] {
            let r = RankRealization::new(vec![5.0, 5.0, 5.0], vec![5.0, 5.0, 5.0], direction)
                .unwrap();
            assert_eq!(r.true_order, vec![0, 1, 2]);
            assert_eq!(r.observed_order, vec![0, 1, 2]);
        }
    }

    // ----- the oracle -----

    #[test]
    fn two_item_probability_matches_the_normal_table() {
        let p = two_item_order_probability(1.0, 1.0, 2).unwrap();
        assert!((p - 0.8413447460685429).abs() < 1e-10, "got {p}");
        assert!((two_item_order_probability(0.0, 1.0, 5).unwrap() - 0.5).abs() < 1e-15);
        assert!((two_item_order_probability(1e6, 0.1, 100).unwrap() - 1.0).abs() < 1e-12);
        assert!(two_item_order_probability(-1.0, 1.0, 5).is_err());
        assert!(two_item_order_probability(1.0, 0.0, 5).is_err());
    }

    fn two_item_config(delta: f64, sigma: f64, n: u64, reps: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            tail: TailModel::Normal { mu: 0.0, sigma: 1.0 },
            n,
            items: SizeSpec::Count(2),
            noise_sd: sigma,
            reps,
            depths: vec![SizeSpec::Count(1)],
            mode: Mode::Prefix,
            direction: Direction::Ascending,
            seed,
            obs_counts: None,
            attributes: Some(vec![0.0, delta]),
            noise_mode: NoiseMode::Direct,
        }
    }

    #[test]
    fn monte_carlo_agrees_with_the_two_item_oracle() {
        let (delta, sigma, n, reps) = (0.15, 1.0, 100, 4000);
        let report = run_rank_experiment(&two_item_config(delta, sigma, n, reps, 7)).unwrap();
        let estimate = report.outcomes[0].prefix.unwrap();
        let oracle = two_item_order_probability(delta, sigma, n).unwrap();
        assert!(
            (estimate.probability - oracle).abs() <= 3.0 * estimate.std_error,
            "estimate {} vs oracle {oracle} (se {})",
            estimate.probability,
            estimate.std_error
        );
    }

    // ----- the engine -----

    #[test]
    fn zero_noise_gives_probability_one_exactly() {
        let mut cfg = base_config();
        cfg.noise_sd = 0.0;
        cfg.depths = vec![SizeSpec::Count(1), SizeSpec::Count(10), SizeSpec::Count(20)];
        let report = run_rank_experiment(&cfg).unwrap();
        for outcome in &report.outcomes {
            assert_eq!(outcome.prefix.unwrap().probability, 1.0);
            assert_eq!(outcome.set.unwrap().probability, 1.0);
        }
    }

    #[test]
    fn reports_are_identical_across_runs_and_worker_counts() {
        let cfg = base_config();
        let a = run_rank_experiment(&cfg).unwrap();
        let b = run_rank_experiment(&cfg).unwrap();
        assert_eq!(a.outcomes, b.outcomes);

        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let c = single.install(|| run_rank_experiment(&cfg)).unwrap();
        let d = many.install(|| run_rank_experiment(&cfg)).unwrap();
        assert_eq!(c.outcomes, d.outcomes);
        assert_eq!(a.outcomes, c.outcomes);
    }

    #[test]
    fn depth_beyond_item_count_fails_before_sampling() {
        let mut cfg = base_config();
        cfg.depths = vec![SizeSpec::Count(21)];
        let err = run_rank_experiment(&cfg).unwrap_err();
        assert!(err.to_string().contains("exceeds the item count"), "{err}");
    }

    #[test]
    fn prefix_probability_is_nonincreasing_and_set_dominates_prefix() {
        let mut cfg = base_config();
        cfg.depths = (1..=10).map(SizeSpec::Count).collect();
        cfg.reps = 400;
        cfg.noise_sd = 0.8;
        let report = run_rank_experiment(&cfg).unwrap();
        let mut prev = f64::INFINITY;
        for outcome in &report.outcomes {
            let prefix = outcome.prefix.unwrap().probability;
            let set = outcome.set.unwrap().probability;
            assert!(prefix <= prev + 1e-15, "prefix probability increased");
            assert!(set >= prefix, "set {set} below prefix {prefix} at depth {}", outcome.depth);
            prev = prefix;
        }
    }

    #[test]
    fn engine_matches_the_realization_path_rep_by_rep() {
        // Re-derive each replicate through the public RankRealization path
        // and compare against single-rep engine runs.
        for seed in [1u64, 2, 3] {
            for direction in [Direction::Ascending, Direction::Descending] {
                let mut cfg = base_config();
                cfg.items = SizeSpec::Count(9);
                cfg.noise_sd = 0.5;
                cfg.seed = seed;
                cfg.direction = direction;
                cfg.depths = vec![SizeSpec::Count(2), SizeSpec::Count(5), SizeSpec::Count(9)];
                cfg.reps = 1;
                let report = run_rank_experiment(&cfg).unwrap();

                let mut rng = substream(seed, &[0]);
                let theta = cfg.tail.sample_iid(9, &mut rng).unwrap();
                let scale = cfg.noise_sd / (cfg.n as f64).sqrt();
                let xbar: Vec<f64> = theta
                    .iter()
                    .map(|&t| {
                        let z: f64 = rng.sample(StandardNormal);
                        t + scale * z
                    })
                    .collect();
                let real = RankRealization::new(theta, xbar, direction).unwrap();
                let depth = prefix_correct_depth(&real);
                let flags = set_correct_flags(&real, &[2, 5, 9]).unwrap();

                for (i, outcome) in report.outcomes.iter().enumerate() {
                    let expect_prefix = if depth as u64 >= outcome.depth { 1.0 } else { 0.0 };
                    let expect_set = if flags[i] { 1.0 } else { 0.0 };
                    assert_eq!(outcome.prefix.unwrap().probability, expect_prefix);
                    assert_eq!(outcome.set.unwrap().probability, expect_set);
                }
            }
        }
    }

    #[test]
    fn equal_attributes_with_zero_noise_rank_by_index() {
        let mut cfg = base_config();
        cfg.items = SizeSpec::Count(5);
        cfg.attributes = Some(vec![2.0; 5]);
        cfg.noise_sd = 0.0;
        cfg.depths = vec![SizeSpec::Count(5)];
        cfg.reps = 10;
        let report = run_rank_experiment(&cfg).unwrap();
        assert_eq!(report.outcomes[0].prefix.unwrap().probability, 1.0);
    }

    #[test]
    fn ragged_observation_counts_are_validated_and_reported() {
        let mut cfg = base_config();
        cfg.items = SizeSpec::Count(2);
        cfg.depths = vec![SizeSpec::Count(1)];
        cfg.obs_counts = Some(vec![1, 100]);
        let report = run_rank_experiment(&cfg).unwrap();
        assert_eq!(report.obs_count_ratio, Some(100.0));

        cfg.obs_counts = Some(vec![1, 2, 3]);
        assert!(run_rank_experiment(&cfg).is_err());
        cfg.obs_counts = Some(vec![0, 5]);
        assert!(run_rank_experiment(&cfg).is_err());
    }

    #[test]
    fn raw_average_noise_agrees_with_direct_noise_in_distribution() {
        let direct = two_item_config(0.3, 1.0, 25, 3000, 11);
        let mut raw = direct.clone();
        raw.noise_mode = NoiseMode::RawAverage;
        raw.seed = 12;
        let p_direct = run_rank_experiment(&direct).unwrap().outcomes[0]
            .prefix
            .unwrap()
            .probability;
        let p_raw = run_rank_experiment(&raw).unwrap().outcomes[0].prefix.unwrap().probability;
        // Same distribution, independent streams: allow 4 combined standard
        // errors around equality.
        let se = (0.5 * 0.5 / 3000.0f64).sqrt() * std::f64::consts::SQRT_2;
        assert!(
            (p_direct - p_raw).abs() <= 4.0 * se,
            "direct {p_direct} vs raw {p_raw}"
        );
    }

    #[test]
    fn config_serialization_round_trips() {
        let mut cfg = base_config();
        cfg.items = "0.0005*n^2".parse().unwrap();
        cfg.depths = vec!["n^0.25".parse().unwrap(), SizeSpec::Count(1)];
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    // ----- calibration and required-n -----

    #[test]
    fn calibration_inverts_the_two_item_oracle() {
        let (delta, n) = (0.2, 50u64);
        let cfg = two_item_config(delta, 1.0, n, 20_000, 3);
        let (sd, achieved) = calibrate_noise(&cfg, 0.9, 0.004, (1e-3, 10.0)).unwrap();
        let quantile_09 = 1.2815515655446004; // standard normal quantile at 0.9
        let analytic = delta * (n as f64).sqrt() / (std::f64::consts::SQRT_2 * quantile_09);
        assert!(
            (sd - analytic).abs() / analytic < 0.05,
            "calibrated {sd}, analytic {analytic}, achieved {achieved}"
        );
        assert!((achieved - 0.9).abs() <= 0.004);
    }

    #[test]
    fn calibration_reports_the_bracket_when_the_target_is_unreachable() {
        let cfg = two_item_config(0.2, 1.0, 50, 2000, 3);
        let err = calibrate_noise(&cfg, 0.999, 0.001, (0.5, 10.0)).unwrap_err();
        match err {
            Error::Calibration { sd_lo, sd_hi, prob_at_lo, .. } => {
                assert_eq!(sd_lo, 0.5);
                assert_eq!(sd_hi, 10.0);
                assert!(prob_at_lo < 0.999, "prob at lo {prob_at_lo}");
            }
            other => panic!("expected a calibration error, got {other:?}"),
        }
    }

    #[test]
    fn calibration_accepts_an_exactly_reachable_boundary_target() {
        let cfg = two_item_config(0.2, 1.0, 50, 500, 3);
        let (sd, achieved) = calibrate_noise(&cfg, 1.0, 0.0, (0.0, 10.0)).unwrap();
        assert_eq!(sd, 0.0);
        assert_eq!(achieved, 1.0);
    }

    #[test]
    fn required_n_is_the_first_grid_point_under_zero_noise() {
        let mut cfg = base_config();
        cfg.noise_sd = 0.0;
        let search = required_sample_size(&cfg, 3, 0.9, &[10, 20, 40]).unwrap();
        assert_eq!(search.required, Some(10));
        assert_eq!(search.evaluated, vec![(10, 1.0)]);
    }

    #[test]
    fn required_n_matches_the_two_item_analytic_threshold() {
        let cfg = two_item_config(0.2, 1.0, 1, 4000, 5);
        // True probability crosses 0.9 at n = 2 (1.2816 / 0.2)^2, about 82.
        let search = required_sample_size(&cfg, 1, 0.9, &[16, 48, 96, 144]).unwrap();
        assert_eq!(search.required, Some(96), "evaluated: {:?}", search.evaluated);
    }

    #[test]
    fn required_n_rejects_a_disordered_grid() {
        let cfg = base_config();
        assert!(required_sample_size(&cfg, 1, 0.9, &[10, 10]).is_err());
        assert!(required_sample_size(&cfg, 1, 0.9, &[]).is_err());
    }

    // ----- properties -----

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_maps_leave_rankings_unchanged(
            values in proptest::collection::vec(-50.0f64..50.0, 2..20),
            noise in proptest::collection::vec(-1.0f64..1.0, 20),
            a in 0.01f64..100.0,
            b in -100.0f64..100.0,
            descending in proptest::bool::ANY,
        ) {
            let direction =
                if descending { Direction::Descending } else { Direction::Ascending };
            let obs: Vec<f64> =
                values.iter().zip(&noise).map(|(v, e)| v + e).collect();
            let base = RankRealization::new(values.clone(), obs.clone(), direction).unwrap();
            let mapped = RankRealization::new(
                values.iter().map(|v| a * v + b).collect(),
                obs.iter().map(|v| a * v + b).collect(),
                direction,
            )
            .unwrap();
            prop_assert_eq!(&base.true_order, &mapped.true_order);
            prop_assert_eq!(&base.observed_order, &mapped.observed_order);
            prop_assert_eq!(prefix_correct_depth(&base), prefix_correct_depth(&mapped));
        }

        #[test]
        fn prefix_correct_implies_set_correct(
            values in proptest::collection::vec(-50.0f64..50.0, 2..15),
            noise in proptest::collection::vec(-2.0f64..2.0, 15),
        ) {
            let obs: Vec<f64> = values.iter().zip(&noise).map(|(v, e)| v + e).collect();
            let real =
                RankRealization::new(values.clone(), obs, Direction::Ascending).unwrap();
            let depth = prefix_correct_depth(&real);
            let all: Vec<usize> = (1..=real.len()).collect();
            let flags = set_correct_flags(&real, &all).unwrap();
            for j in 1..=depth {
                prop_assert!(flags[j - 1], "prefix-correct depth {j} but set flag false");
            }
        }
    }
}
