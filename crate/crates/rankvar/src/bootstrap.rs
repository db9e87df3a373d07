//! Bootstrap rank intervals and top-set stability for real datasets.
//!
//! Items are ranked by a per-item statistic; resampling the raw data and
//! re-ranking yields a distribution over each item's rank, summarized by
//! percentile intervals. Small replicate datasets can be enumerated
//! exhaustively instead of sampled.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Direction;
use crate::stream::substream;

/// A dataset keyed by item, in one of three shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemDataset {
    /// Repeated measurements per item; items may have different counts.
    Replicates { ids: Vec<String>, values: Vec<Vec<f64>> },
    /// A row per respondent: a class label plus one value per item.
    /// Exactly two distinct labels are required.
    TwoClass { ids: Vec<String>, labels: Vec<String>, rows: Vec<Vec<f64>> },
    /// Success/trial counts per item.
    Binomial { ids: Vec<String>, successes: Vec<u64>, trials: Vec<u64> },
}

impl ItemDataset {
    pub fn ids(&self) -> &[String] {
        match self {
            ItemDataset::Replicates { ids, .. }
            | ItemDataset::TwoClass { ids, .. }
            | ItemDataset::Binomial { ids, .. } => ids,
        }
    }

    /// Number of items.
    pub fn len(&self) -> usize {
        self.ids().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// max/min of the per-item observation counts, the raggedness
    /// diagnostic. None for two-class data, where rows are shared.
    pub fn count_ratio(&self) -> Option<f64> {
        let counts: Vec<u64> = match self {
            ItemDataset::Replicates { values, .. } => {
                values.iter().map(|v| v.len() as u64).collect()
            }
            ItemDataset::Binomial { trials, .. } => trials.clone(),
            ItemDataset::TwoClass { .. } => return None,
        };
        let max = *counts.iter().max()?;
        let min = *counts.iter().min()?;
        (min > 0).then(|| max as f64 / min as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let ids = self.ids();
        if ids.is_empty() {
            return Err(Error::Validation("dataset has no items".into()));
        }
        let mut seen = ids.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate item ids".into()));
        }
        match self {
            ItemDataset::Replicates { ids, values } => {
                if values.len() != ids.len() {
                    return Err(Error::Validation(format!(
                        "{} ids but {} value groups",
                        ids.len(),
                        values.len()
                    )));
                }
                for (id, vs) in ids.iter().zip(values) {
                    if vs.is_empty() {
                        return Err(Error::Validation(format!("item {id} has no values")));
                    }
                    if vs.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Validation(format!(
                            "item {id} has a non-finite value"
                        )));
                    }
                }
            }
            ItemDataset::TwoClass { ids, labels, rows } => {
                if labels.len() != rows.len() {
                    return Err(Error::Validation(format!(
                        "{} labels but {} rows",
                        labels.len(),
                        rows.len()
                    )));
                }
                let mut distinct: Vec<&String> = labels.iter().collect();
                distinct.sort_unstable();
                distinct.dedup();
                if distinct.len() != 2 {
                    return Err(Error::Validation(format!(
                        "two-class data needs exactly 2 distinct labels, found {}",
                        distinct.len()
                    )));
                }
                for row in rows {
                    if row.len() != ids.len() {
                        return Err(Error::Validation(format!(
                            "row has {} values, expected {}",
                            row.len(),
                            ids.len()
                        )));
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Validation("row has a non-finite value".into()));
                    }
                }
            }
            ItemDataset::Binomial { ids, successes, trials } => {
                if successes.len() != ids.len() || trials.len() != ids.len() {
                    return Err(Error::Validation(
                        "success and trial columns must match the id count".into(),
                    ));
                }
                for ((id, &s), &t) in ids.iter().zip(successes).zip(trials) {
                    if t == 0 {
                        return Err(Error::Validation(format!("item {id} has zero trials")));
                    }
                    if s > t {
                        return Err(Error::Validation(format!(
                            "item {id} has {s} successes out of {t} trials"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-item statistic used to rank items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Mean,
    Median,
    Proportion,
    MannWhitney,
}

impl StatKind {
    fn check_compatible(self, data: &ItemDataset) -> Result<()> {
        let ok = matches!(
            (self, data),
            (StatKind::Mean | StatKind::Median, ItemDataset::Replicates { .. })
                | (StatKind::Proportion, ItemDataset::Binomial { .. })
                | (StatKind::MannWhitney, ItemDataset::TwoClass { .. })
        );
        if ok {
            Ok(())
        } else {
            let kind = match data {
                ItemDataset::Replicates { .. } => "replicate",
                ItemDataset::TwoClass { .. } => "two-class",
                ItemDataset::Binomial { .. } => "binomial",
            };
            Err(Error::Argument(format!("statistic {self:?} does not apply to {kind} data")))
        }
    }
}

/// Mean, or the median with the lower-middle convention for even lengths.
pub fn location_stat(values: &[f64], kind: StatKind) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("cannot take a statistic of no values".into()));
    }
    match kind {
        StatKind::Mean => Ok(values.iter().sum::<f64>() / values.len() as f64),
        StatKind::Median => {
            let mut v = values.to_vec();
            let mid = (v.len() - 1) / 2;
            let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
            Ok(*m)
        }
        other => Err(Error::Argument(format!("{other:?} is not a location statistic"))),
    }
}

/// Two-sample Mann-Whitney count, in the larger-of-both-directions form:
/// max(#{(x, y): x < y}, #{(x, y): x > y}). Ties count toward neither side.
pub fn mann_whitney(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Argument("both samples must be nonempty".into()));
    }
    let mut below = 0u64;
    let mut above = 0u64;
    for &x in xs {
        for &y in ys {
            if x < y {
                below += 1;
            } else if x > y {
                above += 1;
            }
        }
    }
    Ok(below.max(above) as f64)
}

/// Ranks items 1..=p by their statistics. Rank 1 is the smallest value when
/// ascending and the largest when descending; ties break toward the smaller
/// item index.
pub fn rank_items(stats: &[f64], direction: Direction) -> Result<Vec<u64>> {
    if stats.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("statistics must be finite to rank".into()));
    }
    let mut order: Vec<u32> = (0..stats.len() as u32).collect();
    order.sort_unstable_by(|a, b| {
        let ord = stats[*a as usize].partial_cmp(&stats[*b as usize]).expect("finite");
        let ord = match direction {
            Direction::Ascending => ord,
            Direction::Descending => ord.reverse(),
        };
        ord.then_with(|| a.cmp(b))
    });
    let mut ranks = vec![0u64; stats.len()];
    for (pos, &item) in order.iter().enumerate() {
        ranks[item as usize] = pos as u64 + 1;
    }
    Ok(ranks)
}

/// Percentile interval for one item's rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankInterval {
    pub item: String,
    /// Statistic on the full dataset.
    pub point_stat: f64,
    /// Rank on the full dataset.
    pub point_rank: u64,
    pub lower: u64,
    pub upper: u64,
}

/// Result of `bootstrap_rank_intervals` or `exhaustive_rank_intervals`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// One interval per item, in dataset order.
    pub intervals: Vec<RankInterval>,
    /// Bootstrap resamples, or the total outcome count in exhaustive mode.
    pub resamples: u64,
    pub level: f64,
    pub stat: StatKind,
    pub direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resample size when overriding the natural one (m-out-of-n bootstrap).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<u64>,
    pub exhaustive: bool,
}

/// Point statistics on the full dataset, one per item.
pub fn point_stats(data: &ItemDataset, stat: StatKind) -> Result<Vec<f64>> {
    data.validate()?;
    stat.check_compatible(data)?;
    match data {
        ItemDataset::Replicates { values, .. } => {
            values.iter().map(|vs| location_stat(vs, stat)).collect()
        }
        ItemDataset::Binomial { successes, trials, .. } => Ok(successes
            .iter()
            .zip(trials)
            .map(|(&s, &t)| s as f64 / t as f64)
            .collect()),
        ItemDataset::TwoClass { ids, labels, rows } => {
            let (a_rows, b_rows) = class_partition(labels);
            let mut out = Vec::with_capacity(ids.len());
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for j in 0..ids.len() {
                gather_column(&mut xs, rows, &a_rows, j);
                gather_column(&mut ys, rows, &b_rows, j);
                out.push(mann_whitney(&xs, &ys)?);
            }
            Ok(out)
        }
    }
}

/// Fills `buf` with column `j` of `rows`, taking rows in `picks` order.
fn gather_column(buf: &mut Vec<f64>, rows: &[Vec<f64>], picks: &[usize], j: usize) {
    buf.clear();
    buf.extend(picks.iter().map(|&r| rows[r][j]));
}

/// Row indices of each class, classes ordered by label sort order.
fn class_partition(labels: &[String]) -> (Vec<usize>, Vec<usize>) {
    let mut distinct: Vec<&String> = labels.iter().collect();
    distinct.sort_unstable();
    distinct.dedup();
    let first = distinct[0];
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (r, label) in labels.iter().enumerate() {
        if label == first {
            a.push(r);
        } else {
            b.push(r);
        }
    }
    (a, b)
}

/// Splits a subsample of size `n_prime` across classes proportionally to
/// `counts`, by largest remainder, with at least one draw per class.
pub(crate) fn allocate_stratified(n_prime: u64, counts: &[u64]) -> Result<Vec<u64>> {
    let total: u64 = counts.iter().sum();
    let k = counts.len() as u64;
    if n_prime < k {
        return Err(Error::Argument(format!(
            "subsample {n_prime} is smaller than the number of classes {k}"
        )));
    }
    let mut alloc: Vec<u64> = Vec::with_capacity(counts.len());
    let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(counts.len());
    let mut used = 0u64;
    for (i, &c) in counts.iter().enumerate() {
        let share = n_prime as f64 * c as f64 / total as f64;
        let base = share.floor() as u64;
        alloc.push(base);
        used += base;
        fracs.push((share - base as f64, i));
    }
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut left = n_prime - used;
    for &(_, i) in &fracs {
        if left == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
    }
    // Guarantee a draw per class, taking from the largest allocations.
    for i in 0..alloc.len() {
        while alloc[i] == 0 {
            let donor = (0..alloc.len()).max_by_key(|&j| alloc[j]).unwrap();
            if alloc[donor] <= 1 {
                return Err(Error::Argument(format!(
                    "subsample {n_prime} cannot cover every class"
                )));
            }
            alloc[donor] -= 1;
            alloc[i] += 1;
        }
    }
    Ok(alloc)
}

/// Per-item statistics for one bootstrap resample.
///
/// Replicate and binomial items resample independently on the substream
/// (seed, b, item); two-class data resamples whole rows within each class on
/// the substream (seed, b), keeping row coherence across items.
fn resample_stats(
    data: &ItemDataset,
    stat: StatKind,
    seed: u64,
    b: u64,
    subsample: Option<u64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    match data {
        ItemDataset::Replicates { values, .. } => {
            let mut buf = Vec::new();
            for (j, vs) in values.iter().enumerate() {
                let mut rng = substream(seed, &[b, j as u64]);
                let take = subsample.unwrap_or(vs.len() as u64) as usize;
                buf.clear();
                for _ in 0..take {
                    buf.push(vs[rng.random_range(0..vs.len())]);
                }
                out.push(location_stat(&buf, stat)?);
            }
        }
        ItemDataset::Binomial { successes, trials, .. } => {
            for (j, (&s, &t)) in successes.iter().zip(trials).enumerate() {
                let mut rng = substream(seed, &[b, j as u64]);
                let draws = subsample.unwrap_or(t);
                let dist = Binomial::new(draws, s as f64 / t as f64)
                    .map_err(|e| Error::Domain(e.to_string()))?;
                out.push(dist.sample(&mut rng) as f64 / draws as f64);
            }
        }
        ItemDataset::TwoClass { ids, labels, rows } => {
            let mut rng = substream(seed, &[b]);
            let (a_rows, b_rows) = class_partition(labels);
            let (take_a, take_b) = match subsample {
                None => (a_rows.len() as u64, b_rows.len() as u64),
                Some(np) => {
                    let alloc =
                        allocate_stratified(np, &[a_rows.len() as u64, b_rows.len() as u64])?;
                    (alloc[0], alloc[1])
                }
            };
            let pick_a: Vec<usize> =
                (0..take_a).map(|_| a_rows[rng.random_range(0..a_rows.len())]).collect();
            let pick_b: Vec<usize> =
                (0..take_b).map(|_| b_rows[rng.random_range(0..b_rows.len())]).collect();
            let mut xs = Vec::with_capacity(pick_a.len());
            let mut ys = Vec::with_capacity(pick_b.len());
            for j in 0..ids.len() {
                gather_column(&mut xs, rows, &pick_a, j);
                gather_column(&mut ys, rows, &pick_b, j);
                out.push(mann_whitney(&xs, &ys)?);
            }
        }
    }
    Ok(())
}

/// Percentile index pair (1-indexed) for a sorted sample of size `b`.
fn percentile_indices(b: u64, level: f64) -> (usize, usize) {
    let alpha = 1.0 - level;
    let lo = ((alpha / 2.0) * b as f64).ceil().max(1.0) as usize;
    let hi = ((1.0 - alpha / 2.0) * b as f64).ceil() as usize;
    (lo, hi.min(b as usize))
}

fn intervals_from_rank_samples(
    data: &ItemDataset,
    stat: StatKind,
    direction: Direction,
    per_item_ranks: &mut [Vec<u64>],
    level: f64,
) -> Result<Vec<RankInterval>> {
    let points = point_stats(data, stat)?;
    let point_ranks = rank_items(&points, direction)?;
    let total = per_item_ranks[0].len() as u64;
    let (lo_idx, hi_idx) = percentile_indices(total, level);
    Ok(data
        .ids()
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let ranks = &mut per_item_ranks[j];
            ranks.sort_unstable();
            RankInterval {
                item: id.clone(),
                point_stat: points[j],
                point_rank: point_ranks[j],
                lower: ranks[lo_idx - 1],
                upper: ranks[hi_idx - 1],
            }
        })
        .collect())
}

const MAX_RANK_SAMPLES: u64 = 200_000_000;

/// Percentile bootstrap intervals for every item's rank.
///
/// `level` is the two-sided coverage (e.g. 0.95); the interval endpoints are
/// the ceil((alpha/2) B)-th and ceil((1 - alpha/2) B)-th order statistics of
/// the B resampled ranks, 1-indexed.
pub fn bootstrap_rank_intervals(
    data: &ItemDataset,
    stat: StatKind,
    b: u64,
    level: f64,
    subsample: Option<u64>,
    direction: Direction,
    seed: u64,
) -> Result<BootstrapReport> {
    data.validate()?;
    stat.check_compatible(data)?;
    if b == 0 {
        return Err(Error::Argument("need at least one bootstrap resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level={level} must lie in (0, 1)")));
    }
    if let Some(np) = subsample {
        if np == 0 {
            return Err(Error::Argument("subsample size must be at least 1".into()));
        }
    }
    let p = data.len() as u64;
    if b.saturating_mul(p) > MAX_RANK_SAMPLES {
        return Err(Error::Resource(format!(
            "{b} resamples of {p} items need more rank storage than the cap allows"
        )));
    }

    let rank_rows: Vec<Vec<u64>> = (0..b as usize)
        .into_par_iter()
        .map(|bi| {
            let mut stats = Vec::with_capacity(p as usize);
            resample_stats(data, stat, seed, bi as u64, subsample, &mut stats)?;
            rank_items(&stats, direction)
        })
        .collect::<Result<_>>()?;

    let mut per_item: Vec<Vec<u64>> = vec![Vec::with_capacity(b as usize); p as usize];
    for row in &rank_rows {
        for (j, &r) in row.iter().enumerate() {
            per_item[j].push(r);
        }
    }
    let intervals = intervals_from_rank_samples(data, stat, direction, &mut per_item, level)?;
    Ok(BootstrapReport {
        intervals,
        resamples: b,
        level,
        stat,
        direction,
        seed: Some(seed),
        subsample,
        exhaustive: false,
    })
}

const MAX_EXHAUSTIVE_OUTCOMES: u64 = 1_000_000;

/// All per-item resample statistics, one vector per item, for replicate data.
/// Item j with n_j values contributes n_j^(n_j) equally likely statistics.
fn per_item_exhaustive_stats(values: &[Vec<f64>], stat: StatKind) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(values.len());
    for vs in values {
        let n = vs.len();
        let count = (n as u64)
            .checked_pow(n as u32)
            .filter(|&c| c <= MAX_EXHAUSTIVE_OUTCOMES)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "item with {n} values has too many resamples to enumerate"
                ))
            })?;
        let mut stats = Vec::with_capacity(count as usize);
        let mut idx = vec![0usize; n];
        let mut buf = vec![0.0; n];
        'outer: loop {
            for (slot, &i) in idx.iter().enumerate() {
                buf[slot] = vs[i];
            }
            stats.push(location_stat(&buf, stat)?);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == n {
                    break 'outer;
                }
            }
        }
        out.push(stats);
    }
    Ok(out)
}

/// Every item's rank under every joint resample, exhaustively enumerated.
/// Returns one vector per item, aligned with dataset order, each of length
/// equal to the product of per-item resample counts.
pub fn exhaustive_rank_samples(
    data: &ItemDataset,
    stat: StatKind,
    direction: Direction,
) -> Result<Vec<Vec<u64>>> {
    data.validate()?;
    stat.check_compatible(data)?;
    let ItemDataset::Replicates { values, .. } = data else {
        return Err(Error::Argument(
            "exhaustive enumeration applies to replicate data only".into(),
        ));
    };
    let per_item = per_item_exhaustive_stats(values, stat)?;
    let mut total = 1u64;
    for stats in &per_item {
        total = total
            .checked_mul(stats.len() as u64)
            .filter(|&t| t <= MAX_EXHAUSTIVE_OUTCOMES)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "joint resample space exceeds {MAX_EXHAUSTIVE_OUTCOMES} outcomes"
                ))
            })?;
    }
    let p = per_item.len();
    let mut ranks: Vec<Vec<u64>> = vec![Vec::with_capacity(total as usize); p];
    let mut pick = vec![0usize; p];
    let mut stats = vec![0.0; p];
    for _ in 0..total {
        for j in 0..p {
            stats[j] = per_item[j][pick[j]];
        }
        let r = rank_items(&stats, direction)?;
        for j in 0..p {
            ranks[j].push(r[j]);
        }
        let mut k = 0;
        while k < p {
            pick[k] += 1;
            if pick[k] < per_item[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
    Ok(ranks)
}

/// Exact rank intervals from full enumeration of the resample space.
pub fn exhaustive_rank_intervals(
    data: &ItemDataset,
    stat: StatKind,
    level: f64,
    direction: Direction,
) -> Result<BootstrapReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level={level} must lie in (0, 1)")));
    }
    let mut per_item = exhaustive_rank_samples(data, stat, direction)?;
    let total = per_item[0].len() as u64;
    let intervals = intervals_from_rank_samples(data, stat, direction, &mut per_item, level)?;
    Ok(BootstrapReport {
        intervals,
        resamples: total,
        level,
        stat,
        direction,
        seed: None,
        subsample: None,
        exhaustive: true,
    })
}

/// Stability of the top-j identity under resampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopSetOutcome {
    pub depth: u64,
    /// Item ids of the top-j set on the full data, in rank order.
    pub reference: Vec<String>,
    /// Fraction of resamples whose top-j set equals the reference.
    pub probability: f64,
    pub std_error: f64,
}

/// Result of `top_set_probability`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopSetReport {
    pub outcomes: Vec<TopSetOutcome>,
    pub resamples: u64,
    pub stat: StatKind,
    pub direction: Direction,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<u64>,
}

/// Estimates, for each requested depth j, the probability that a resampled
/// dataset reproduces the full-data top-j item set (order ignored).
pub fn top_set_probability(
    data: &ItemDataset,
    stat: StatKind,
    depths: &[u64],
    b: u64,
    subsample: Option<u64>,
    direction: Direction,
    seed: u64,
) -> Result<TopSetReport> {
    data.validate()?;
    stat.check_compatible(data)?;
    if b == 0 {
        return Err(Error::Argument("need at least one bootstrap resample".into()));
    }
    if depths.is_empty() {
        return Err(Error::Argument("need at least one depth".into()));
    }
    let p = data.len() as u64;
    for &d in depths {
        if d == 0 || d > p {
            return Err(Error::Argument(format!(
                "depth {d} outside the valid range 1..={p}"
            )));
        }
    }

    let points = point_stats(data, stat)?;
    let point_ranks = rank_items(&points, direction)?;
    // order[r] is the item at rank r+1.
    let mut order = vec![0usize; p as usize];
    for (j, &r) in point_ranks.iter().enumerate() {
        order[r as usize - 1] = j;
    }
    let reference_sets: Vec<Vec<usize>> = depths
        .iter()
        .map(|&d| {
            let mut set = order[..d as usize].to_vec();
            set.sort_unstable();
            set
        })
        .collect();

    let hits: Vec<u64> = (0..b as usize)
        .into_par_iter()
        .map(|bi| -> Result<Vec<u64>> {
            let mut stats = Vec::with_capacity(p as usize);
            resample_stats(data, stat, seed, bi as u64, subsample, &mut stats)?;
            let ranks = rank_items(&stats, direction)?;
            let mut resample_order = vec![0usize; p as usize];
            for (j, &r) in ranks.iter().enumerate() {
                resample_order[r as usize - 1] = j;
            }
            let mut flags = vec![0u64; depths.len()];
            for (slot, (&d, reference)) in depths.iter().zip(&reference_sets).enumerate() {
                let mut set = resample_order[..d as usize].to_vec();
                set.sort_unstable();
                flags[slot] = (&set == reference) as u64;
            }
            Ok(flags)
        })
        .try_reduce(
            || vec![0u64; depths.len()],
            |mut acc, flags| -> Result<Vec<u64>> {
                for (a, f) in acc.iter_mut().zip(&flags) {
                    *a += f;
                }
                Ok(acc)
            },
        )?;

    let ids = data.ids();
    let outcomes = depths
        .iter()
        .zip(&reference_sets)
        .zip(&hits)
        .map(|((&depth, _), &h)| {
            let prob = h as f64 / b as f64;
            TopSetOutcome {
                depth,
                reference: order[..depth as usize].iter().map(|&j| ids[j].clone()).collect(),
                probability: prob,
                std_error: (prob * (1.0 - prob) / b as f64).sqrt(),
            }
        })
        .collect();

    Ok(TopSetReport {
        outcomes,
        resamples: b,
        stat,
        direction,
        seed,
        subsample,
    })
}
