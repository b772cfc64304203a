//! A12 effect size, bootstrap significance and Scott-Knott ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsConfig {
    pub resamples: usize,
    pub alpha: f64,
    /// Smallest A12 counted as a non-small effect.
    pub a12_threshold: f64,
    pub seed: u64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            resamples: 1000,
            alpha: 0.05,
            a12_threshold: 0.56,
            seed: 0,
        }
    }
}

impl StatsConfig {
    pub fn with_seed(seed: u64) -> Self {
        StatsConfig {
            seed,
            ..Self::default()
        }
    }
}

/// Probability that a value drawn from `xs` exceeds one drawn from `ys`,
/// ties counting half.
pub fn a12(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("A12 needs two non-empty lists".into()));
    }
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for x in xs {
        let below = sorted.partition_point(|y| y < x);
        let not_above = sorted.partition_point(|y| y <= x);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (xs.len() * ys.len()) as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Mean-shift bootstrap test of equal means. Both groups are shifted onto the
/// pooled mean and resampled with replacement; the test fires when fewer than
/// `alpha` of the resampled mean gaps reach the observed gap.
pub fn bootstrap_sig(xs: &[f64], ys: &[f64], resamples: usize, alpha: f64, seed: u64) -> bool {
    if xs.is_empty() || ys.is_empty() || resamples == 0 {
        return false;
    }
    let (xs, ys) = if lex_cmp(xs, ys) == Ordering::Greater { (ys, xs) } else { (xs, ys) };
    let (mx, my) = (mean(xs), mean(ys));
    let observed = (mx - my).abs();
    if observed == 0.0 {
        return false;
    }
    let pooled = (mx * xs.len() as f64 + my * ys.len() as f64) / (xs.len() + ys.len()) as f64;
    let x0: Vec<f64> = xs.iter().map(|x| x - mx + pooled).collect();
    let y0: Vec<f64> = ys.iter().map(|y| y - my + pooled).collect();
    let mut rng = seeds::rng(seed);
    let mut resampled_mean = |v: &[f64]| {
        let mut s = 0.0;
        for _ in 0..v.len() {
            s += v[rng.gen_range(0..v.len())];
        }
        s / v.len() as f64
    };
    let mut extreme = 0usize;
    for _ in 0..resamples {
        let gap = (resampled_mean(&x0) - resampled_mean(&y0)).abs();
        if gap >= observed {
            extreme += 1;
        }
    }
    (extreme as f64 / resamples as f64) < alpha
}

/// Significant and not a small effect.
pub fn distinguishable(xs: &[f64], ys: &[f64], config: &StatsConfig) -> bool {
    let effect = match (a12(xs, ys), a12(ys, xs)) {
        (Ok(a), Ok(b)) => a.max(b),
        _ => return false,
    };
    effect >= config.a12_threshold
        && bootstrap_sig(xs, ys, config.resamples, config.alpha, config.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentScores {
    pub name: String,
    pub scores: Vec<f64>,
    pub orientation: Orientation,
}

impl TreatmentScores {
    pub fn new(name: impl Into<String>, scores: Vec<f64>, orientation: Orientation) -> Self {
        TreatmentScores {
            name: name.into(),
            scores,
            orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankResult {
    /// Treatment names from best to worst median.
    pub order: Vec<String>,
    pub medians: Vec<f64>,
    /// Rank of each entry of `order`, 1 = best.
    pub ranks: Vec<usize>,
}

impl RankResult {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.order.iter().position(|n| n == name).map(|i| self.ranks[i])
    }

    pub fn members(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (name, rank) in self.order.iter().zip(&self.ranks) {
            out.entry(*rank).or_default().push(name.clone());
        }
        out
    }

    pub fn n_ranks(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }
}

/// Top-down bi-clustering of treatments sorted by median.
pub fn scott_knott(groups: &[TreatmentScores], config: &StatsConfig) -> Result<RankResult> {
    let first = groups
        .first()
        .ok_or_else(|| Error::InvalidArgument("Scott-Knott needs at least one group".into()))?;
    let orientation = first.orientation;
    let mut sorted = Vec::with_capacity(groups.len());
    for g in groups {
        if g.orientation != orientation {
            return Err(Error::InvalidArgument("groups mix score orientations".into()));
        }
        let clean: Vec<f64> = g.scores.iter().copied().filter(|v| v.is_finite()).collect();
        if clean.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "treatment {} has no finite scores",
                g.name
            )));
        }
        let median = crate::metrics::aggregate(&clean)?;
        sorted.push((g.name.clone(), median, clean));
    }
    sorted.sort_by(|a, b| {
        let by_median = match orientation {
            Orientation::LowerBetter => a.1.total_cmp(&b.1),
            Orientation::HigherBetter => b.1.total_cmp(&a.1),
        };
        by_median.then_with(|| a.0.cmp(&b.0))
    });

    let scores: Vec<&[f64]> = sorted.iter().map(|g| g.2.as_slice()).collect();
    let mut labels = vec![0usize; sorted.len()];
    let mut next = 0usize;
    divide(&scores, 0, scores.len(), config, &mut labels, &mut next);

    Ok(RankResult {
        order: sorted.iter().map(|g| g.0.clone()).collect(),
        medians: sorted.iter().map(|g| g.1).collect(),
        ranks: labels.into_iter().map(|l| l + 1).collect(),
    })
}

fn divide(
    scores: &[&[f64]],
    lo: usize,
    hi: usize,
    config: &StatsConfig,
    labels: &mut [usize],
    next: &mut usize,
) {
    if let Some(cut) = best_cut(&scores[lo..hi]).map(|c| lo + c) {
        let left: Vec<f64> = scores[lo..cut].iter().flat_map(|s| s.iter().copied()).collect();
        let right: Vec<f64> = scores[cut..hi].iter().flat_map(|s| s.iter().copied()).collect();
        if distinguishable(&left, &right, config) {
            divide(scores, lo, cut, config, labels, next);
            divide(scores, cut, hi, config, labels, next);
            return;
        }
    }
    for l in &mut labels[lo..hi] {
        *l = *next;
    }
    *next += 1;
}

/// Cut index (1..len) maximizing the between-part sum of squares.
fn best_cut(span: &[&[f64]]) -> Option<usize> {
    if span.len() < 2 {
        return None;
    }
    let sums: Vec<(f64, usize)> = span.iter().map(|s| (s.iter().sum(), s.len())).collect();
    let (total, count) = sums
        .iter()
        .fold((0.0, 0usize), |(t, c), (s, n)| (t + s, c + n));
    let mu = total / count as f64;
    let mut best: Option<(usize, f64)> = None;
    let (mut ls, mut ln) = (0.0, 0usize);
    for (cut, (s, n)) in sums.iter().enumerate().take(span.len() - 1) {
        ls += s;
        ln += n;
        let (rs, rn) = (total - ls, count - ln);
        let score = ln as f64 * (ls / ln as f64 - mu).powi(2) + rn as f64 * (rs / rn as f64 - mu).powi(2);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((cut + 1, score));
        }
    }
    best.map(|(c, _)| c)
}
