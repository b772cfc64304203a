use super::{encode, sample_space, Objective, TuneArchive, TuneOutcome};
use crate::error::{Error, Result};
use crate::learners::{CartConfig, CartTree, Estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlashParams {
    /// Total objective evaluations, initial samples included.
    pub budget: usize,
    /// Random configurations evaluated before the surrogate takes over.
    pub init: usize,
    /// Candidate pool size.
    pub pool: usize,
}

impl Default for FlashParams {
    fn default() -> Self {
        FlashParams {
            budget: 200,
            init: 20,
            pool: 10_000,
        }
    }
}

impl FlashParams {
    pub fn validate(&self) -> Result<()> {
        if self.init == 0 || self.init >= self.budget {
            return Err(Error::InvalidArgument(format!(
                "FLASH needs 0 < init < budget, got init={} budget={}",
                self.init, self.budget
            )));
        }
        if self.pool <= self.budget {
            return Err(Error::InvalidArgument(format!(
                "FLASH pool {} must exceed the budget {}",
                self.pool, self.budget
            )));
        }
        Ok(())
    }
}

const SURROGATE_FEATURES: [&str; 4] = ["max_features_fraction", "max_depth", "min_sample_split", "min_samples_leaf"];

/// Sequential model-based optimization with a regression-tree surrogate.
pub fn flash_tune(objective: &mut dyn Objective, params: &FlashParams, seed: u64) -> Result<TuneOutcome> {
    params.validate()?;
    let pool = sample_space(params.pool, seed);
    let encoded: Vec<Vec<f64>> = pool.iter().map(|c| encode(c).to_vec()).collect();
    let mut evaluated = vec![false; pool.len()];
    let mut archive = TuneArchive::new(params.budget);

    for (i, config) in pool.iter().enumerate().take(params.init) {
        archive.score(objective, config)?;
        evaluated[i] = true;
    }
    let mut trace = vec![archive.best().map_or(f64::INFINITY, |b| b.score)];
    let names: Vec<String> = SURROGATE_FEATURES.iter().map(|s| s.to_string()).collect();

    while archive.remaining() > 0 {
        let (xs, ys) = surrogate_data(&archive);
        let surrogate = CartTree::train_matrix(&xs, &ys, names.clone(), &CartConfig::default(), seed)?;
        let mut pick: Option<(usize, f64)> = None;
        for (i, row) in encoded.iter().enumerate() {
            if evaluated[i] {
                continue;
            }
            let guess = surrogate.predict(row)?;
            if pick.is_none_or(|(_, g)| guess < g) {
                pick = Some((i, guess));
            }
        }
        let Some((i, _)) = pick else {
            break;
        };
        evaluated[i] = true;
        archive.score(objective, &pool[i])?;
        trace.push(archive.best().map_or(f64::INFINITY, |b| b.score));
    }
    TuneOutcome::from_archive(archive, trace)
}

/// Archive as surrogate training data; failed evaluations get the worst
/// finite score seen.
fn surrogate_data(archive: &TuneArchive) -> (Vec<Vec<f64>>, Vec<f64>) {
    let worst = archive
        .entries()
        .iter()
        .map(|e| e.score)
        .filter(|s| s.is_finite())
        .fold(0.0f64, f64::max);
    archive
        .entries()
        .iter()
        .map(|e| {
            let y = if e.score.is_finite() { e.score } else { 2.0 * worst + 1.0 };
            (encode(&e.config).to_vec(), y)
        })
        .unzip()
}
