use std::collections::{BTreeMap, BTreeSet};

use super::{ExperimentResult, MetricRow, Treatment};
use crate::datasets::Provenance;
use crate::error::{Error, Result};
use crate::metrics::{self, Metric};
use crate::seeds;
use crate::stats::{scott_knott, RankResult, StatsConfig, TreatmentScores};

/// Datasets on which each treatment holds rank 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WinTally {
    pub metric: Metric,
    pub wins: BTreeMap<String, usize>,
    pub denominator: usize,
}

impl WinTally {
    pub fn wins_of(&self, treatment: &str) -> usize {
        self.wins.get(treatment).copied().unwrap_or(0)
    }
}

/// Scott-Knott ranks per dataset over per-fold scores, plus rank-1 counts.
///
/// Treatments without a single finite score on a dataset are left out of
/// that dataset's ranking.
pub fn rank_metric_rows(rows: &[MetricRow], metric: Metric, seed: u64) -> Result<(Vec<(String, RankResult)>, WinTally)> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut scores: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        scores.entry((&r.dataset, &r.treatment)).or_default().push(r.value);
    }
    if datasets.is_empty() {
        return Err(Error::InvalidArgument(format!("no `{metric}` rows to rank")));
    }

    let mut ranks = Vec::with_capacity(datasets.len());
    let mut wins: BTreeMap<String, usize> = BTreeMap::new();
    for dataset in &datasets {
        let groups: Vec<TreatmentScores> = scores
            .iter()
            .filter(|((d, _), s)| d == dataset && s.iter().any(|v| v.is_finite()))
            .map(|((_, t), s)| TreatmentScores::new(*t, s.clone(), metric.orientation()))
            .collect();
        for ((d, t), _) in &scores {
            if d == dataset {
                wins.entry(t.to_string()).or_insert(0);
            }
        }
        if groups.is_empty() {
            continue;
        }
        let config = StatsConfig::with_seed(seeds::derive(seed, &[&"rank", dataset, &metric.name()]));
        let rank = scott_knott(&groups, &config)?;
        for (name, r) in rank.order.iter().zip(&rank.ranks) {
            if *r == 1 {
                *wins.entry(name.clone()).or_insert(0) += 1;
            }
        }
        ranks.push((dataset.to_string(), rank));
    }
    Ok((
        ranks,
        WinTally {
            metric,
            wins,
            denominator: datasets.len(),
        },
    ))
}

pub fn rank_and_tally(result: &ExperimentResult, metric: Metric, seed: u64) -> Result<(Vec<(String, RankResult)>, WinTally)> {
    rank_metric_rows(&result.metrics, metric, seed)
}

/// Median MRE over every test prediction of a treatment on a dataset.
pub fn pooled_median_mre(result: &ExperimentResult, dataset: &str, treatment: Treatment) -> Option<f64> {
    let mres: Vec<f64> = result
        .predictions
        .iter()
        .filter(|p| p.dataset == dataset && p.treatment == treatment && p.actual > 0.0 && p.predicted.is_finite())
        .filter_map(|p| metrics::mre(p.actual, p.predicted).ok())
        .collect();
    metrics::aggregate(&mres).ok()
}

fn group_of(p: Provenance) -> &'static str {
    match p {
        Provenance::Classic | Provenance::Cocomo => "classic",
        Provenance::Contemporary => "contemporary",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub group: String,
    pub treatment: Treatment,
    pub dimension: &'static str,
    pub bin: &'static str,
    pub count: usize,
    pub percent: f64,
}

const FRACTION_BINS: [(&str, f64); 4] = [("<=0.25", 0.25), ("<=0.50", 0.5), ("<=0.75", 0.75), ("<=1.00", 1.0)];
const DEPTH_BINS: [(&str, usize); 4] = [("<=03", 3), ("<=06", 6), ("<=09", 9), ("<=12", 12)];
const SPLIT_BINS: [(&str, usize); 4] = [("<=05", 5), ("<=10", 10), ("<=15", 15), ("<=20", 20)];
const LEAF_BINS: [(&str, usize); 4] = [("<=03", 3), ("<=06", 6), ("<=09", 9), ("<=12", 12)];

fn int_bin(bins: &[(&'static str, usize); 4], v: usize) -> usize {
    bins.iter().position(|(_, hi)| v <= *hi).unwrap_or(3)
}

/// Share of tuned runs whose chosen setting falls in each bin, per dataset
/// group and tuner. An unbounded depth counts in the deepest bin.
pub fn config_histogram(result: &ExperimentResult) -> Result<Vec<HistogramRow>> {
    if result.tuned.is_empty() {
        return Err(Error::InvalidArgument("no tuned runs to summarize".into()));
    }
    let mut counts: BTreeMap<(&str, Treatment), [[usize; 4]; 4]> = BTreeMap::new();
    for run in &result.tuned {
        let c = &run.config;
        let bins = [
            FRACTION_BINS
                .iter()
                .position(|(_, hi)| c.max_features_fraction <= *hi)
                .unwrap_or(3),
            c.max_depth.map_or(3, |d| int_bin(&DEPTH_BINS, d)),
            int_bin(&SPLIT_BINS, c.min_sample_split),
            int_bin(&LEAF_BINS, c.min_samples_leaf),
        ];
        let entry = counts.entry((group_of(run.provenance), run.treatment)).or_default();
        for (dim, b) in bins.into_iter().enumerate() {
            entry[dim][b] += 1;
        }
    }
    let labels: [(&str, [&str; 4]); 4] = [
        ("max_features_fraction", FRACTION_BINS.map(|b| b.0)),
        ("max_depth", DEPTH_BINS.map(|b| b.0)),
        ("min_sample_split", SPLIT_BINS.map(|b| b.0)),
        ("min_samples_leaf", LEAF_BINS.map(|b| b.0)),
    ];
    let mut out = Vec::new();
    for ((group, treatment), dims) in counts {
        for (dim, (dimension, bins)) in labels.iter().enumerate() {
            let total: usize = dims[dim].iter().sum();
            for (b, bin) in bins.iter().enumerate() {
                out.push(HistogramRow {
                    group: group.to_string(),
                    treatment,
                    dimension,
                    bin,
                    count: dims[dim][b],
                    percent: 100.0 * dims[dim][b] as f64 / total as f64,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureUsage {
    pub group: String,
    pub treatment: Treatment,
    pub feature: String,
    /// Final tuned trees splitting on the feature at least once.
    pub trees: usize,
    pub total_trees: usize,
}

/// Lagged predictors (`feature@t-k`) count toward their base feature.
fn base_feature(name: &str) -> &str {
    name.split_once('@').map_or(name, |(base, _)| base)
}

pub fn feature_usage(result: &ExperimentResult) -> Vec<FeatureUsage> {
    let mut table: BTreeMap<(&str, Treatment), (usize, BTreeMap<&str, usize>)> = BTreeMap::new();
    for run in &result.tuned {
        let entry = table.entry((group_of(run.provenance), run.treatment)).or_default();
        entry.0 += 1;
        let names = run.tree.feature_names();
        for n in names {
            entry.1.entry(base_feature(n)).or_insert(0);
        }
        let used: BTreeSet<&str> = run.tree.features_used().into_iter().map(|j| base_feature(&names[j])).collect();
        for f in used {
            *entry.1.get_mut(f).expect("feature registered above") += 1;
        }
    }
    let mut out = Vec::new();
    for ((group, treatment), (total, features)) in table {
        let mut rows: Vec<(&str, usize)> = features.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        out.extend(rows.into_iter().map(|(feature, trees)| FeatureUsage {
            group: group.to_string(),
            treatment,
            feature: feature.to_string(),
            trees,
            total_trees: total,
        }));
    }
    out
}
