//! Hyperparameter search over [`CartConfig`].

mod de;
mod flash;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::datasets::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::learners::{CartConfig, CartTree, Estimator, DEPTH_RANGE, FRACTION_RANGE, LEAF_RANGE, SPLIT_RANGE};
use crate::metrics;
use crate::seeds;

pub use de::{de_tune, DeParams};
pub use flash::{flash_tune, FlashParams};

/// Anything that scores a configuration; lower is better.
pub trait Objective {
    fn evaluate(&mut self, config: &CartConfig) -> Result<f64>;
}

impl<F: FnMut(&CartConfig) -> f64> Objective for F {
    fn evaluate(&mut self, config: &CartConfig) -> Result<f64> {
        Ok(self(config))
    }
}

/// Median validation MRE of a CART trained on `train`.
///
/// Every configuration is trained with the same seed so that score
/// differences come from the configuration alone.
pub struct TuneObjective<'a> {
    train: &'a Dataset,
    validation: &'a Dataset,
    seed: u64,
}

impl<'a> TuneObjective<'a> {
    pub fn new(train: &'a Dataset, validation: &'a Dataset, seed: u64) -> Result<Self> {
        if train.n_features() != validation.n_features() {
            return Err(Error::DimensionMismatch {
                expected: train.n_features(),
                got: validation.n_features(),
            });
        }
        Ok(TuneObjective { train, validation, seed })
    }
}

impl Objective for TuneObjective<'_> {
    fn evaluate(&mut self, config: &CartConfig) -> Result<f64> {
        let tree = CartTree::train(self.train, config, self.seed)?;
        let mut mres = Vec::with_capacity(self.validation.n_rows());
        for i in 0..self.validation.n_rows() {
            let actual = self.validation.target(i);
            if actual > 0.0 {
                mres.push(metrics::mre(actual, tree.predict(self.validation.row(i))?)?);
            }
        }
        if mres.is_empty() {
            return Ok(f64::INFINITY);
        }
        metrics::aggregate(&mres)
    }
}

/// Splits training rows into (train', validation): the last 20% for
/// contemporary data, a seeded random 20% otherwise.
pub fn validation_split(train: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "tuning needs at least 2 training rows, got {n}"
        )));
    }
    let v = ((n as f64 * 0.2).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    if train.provenance() != Provenance::Contemporary {
        order.shuffle(&mut seeds::derived_rng(seed, &[&"validation"]));
    }
    let (fit, held) = order.split_at(n - v);
    let mut fit = fit.to_vec();
    let mut held = held.to_vec();
    fit.sort_unstable();
    held.sort_unstable();
    Ok((train.subset(&fit)?, train.subset(&held)?))
}

/// Number of tuned dimensions.
pub const DIMENSIONS: usize = 4;

/// Decodes a point of the continuous search box into a configuration.
pub fn decode(v: &[f64; DIMENSIONS]) -> CartConfig {
    let int = |x: f64, (lo, hi): (usize, usize)| x.round().clamp(lo as f64, hi as f64) as usize;
    CartConfig {
        max_features_fraction: v[0].clamp(FRACTION_RANGE.0, FRACTION_RANGE.1),
        max_depth: Some(int(v[1], DEPTH_RANGE)),
        min_sample_split: int(v[2], SPLIT_RANGE),
        min_samples_leaf: int(v[3], LEAF_RANGE),
    }
}

pub fn encode(c: &CartConfig) -> [f64; DIMENSIONS] {
    [
        c.max_features_fraction,
        c.max_depth.unwrap_or(DEPTH_RANGE.1) as f64,
        c.min_sample_split as f64,
        c.min_samples_leaf as f64,
    ]
}

pub fn bounds() -> [(f64, f64); DIMENSIONS] {
    [
        FRACTION_RANGE,
        (DEPTH_RANGE.0 as f64, DEPTH_RANGE.1 as f64),
        (SPLIT_RANGE.0 as f64, SPLIT_RANGE.1 as f64),
        (LEAF_RANGE.0 as f64, LEAF_RANGE.1 as f64),
    ]
}

fn random_config(rng: &mut seeds::Rng) -> CartConfig {
    CartConfig {
        max_features_fraction: rng.gen_range(FRACTION_RANGE.0..=FRACTION_RANGE.1),
        max_depth: Some(rng.gen_range(DEPTH_RANGE.0..=DEPTH_RANGE.1)),
        min_sample_split: rng.gen_range(SPLIT_RANGE.0..=SPLIT_RANGE.1),
        min_samples_leaf: rng.gen_range(LEAF_RANGE.0..=LEAF_RANGE.1),
    }
}

/// `n` distinct uniform samples of the tuning space.
pub fn sample_space(n: usize, seed: u64) -> Vec<CartConfig> {
    let mut rng = seeds::derived_rng(seed, &[&"space"]);
    let mut out: Vec<CartConfig> = Vec::with_capacity(n);
    while out.len() < n {
        let c = random_config(&mut rng);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub config: CartConfig,
    pub score: f64,
}

/// Evaluated configurations in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneArchive {
    entries: Vec<Evaluation>,
    budget: usize,
}

impl TuneArchive {
    pub fn new(budget: usize) -> Self {
        TuneArchive {
            entries: Vec::new(),
            budget,
        }
    }

    pub fn entries(&self) -> &[Evaluation] {
        &self.entries
    }

    pub fn consumed(&self) -> usize {
        self.entries.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.entries.len()
    }

    pub fn lookup(&self, config: &CartConfig) -> Option<f64> {
        self.entries.iter().find(|e| e.config == *config).map(|e| e.score)
    }

    /// Scores `config`, reusing an earlier evaluation of the same point.
    /// Returns `None` once the budget is spent.
    pub fn score(&mut self, objective: &mut dyn Objective, config: &CartConfig) -> Result<Option<f64>> {
        if let Some(s) = self.lookup(config) {
            return Ok(Some(s));
        }
        if self.remaining() == 0 {
            return Ok(None);
        }
        let score = objective.evaluate(config)?;
        let score = if score.is_nan() { f64::INFINITY } else { score };
        self.entries.push(Evaluation {
            config: *config,
            score,
        });
        Ok(Some(score))
    }

    /// Lowest score; ties go to the earlier evaluation.
    pub fn best(&self) -> Option<Evaluation> {
        self.entries
            .iter()
            .fold(None, |best: Option<Evaluation>, e| match best {
                Some(b) if b.score <= e.score => Some(b),
                _ => Some(*e),
            })
    }

    /// CSV with one row per evaluation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "evaluation",
            "max_features_fraction",
            "max_depth",
            "min_sample_split",
            "min_samples_leaf",
            "score",
        ])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                i.to_string(),
                e.config.max_features_fraction.to_string(),
                e.config.max_depth.map_or("none".to_string(), |d| d.to_string()),
                e.config.min_sample_split.to_string(),
                e.config.min_samples_leaf.to_string(),
                e.score.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: CartConfig,
    pub best_score: f64,
    pub archive: TuneArchive,
    /// Best score seen so far, after initialization and after each round.
    pub trace: Vec<f64>,
}

impl TuneOutcome {
    fn from_archive(archive: TuneArchive, trace: Vec<f64>) -> Result<Self> {
        let best = archive
            .best()
            .ok_or_else(|| Error::InvalidArgument("tuner evaluated nothing".into()))?;
        Ok(TuneOutcome {
            best: best.config,
            best_score: best.score,
            archive,
            trace,
        })
    }
}
