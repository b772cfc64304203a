//! Error measures for effort predictions.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seeds;
use crate::stats::Orientation;

/// Magnitude of relative error.
pub fn mre(actual: f64, predicted: f64) -> Result<f64> {
    if !(actual > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "MRE needs a positive actual, got {actual}"
        )));
    }
    Ok((actual - predicted).abs() / actual)
}

/// Mean absolute error over `(actual, predicted)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("MAE of an empty prediction set".into()));
    }
    Ok(pairs.iter().map(|(a, p)| (a - p).abs()).sum::<f64>() / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessMode {
    /// Closed-form expectation of uniform random guessing.
    Exact,
    Sampled { runs: usize, seed: u64 },
}

/// MAE of guessing each test actual by a uniformly drawn element of
/// `guess_source`.
pub fn rguess_mae(test_actuals: &[f64], guess_source: &[f64], mode: GuessMode) -> Result<f64> {
    if guess_source.is_empty() {
        return Err(Error::InvalidArgument("random guessing needs a non-empty source".into()));
    }
    if test_actuals.is_empty() {
        return Err(Error::InvalidArgument("random guessing needs test actuals".into()));
    }
    match mode {
        GuessMode::Exact => {
            let total: f64 = test_actuals
                .iter()
                .map(|t| guess_source.iter().map(|s| (t - s).abs()).sum::<f64>() / guess_source.len() as f64)
                .sum();
            Ok(total / test_actuals.len() as f64)
        }
        GuessMode::Sampled { runs, seed } => {
            if runs == 0 {
                return Err(Error::InvalidArgument("sampled guessing needs at least one run".into()));
            }
            let mut rng = seeds::rng(seed);
            let mut total = 0.0;
            for _ in 0..runs {
                for t in test_actuals {
                    let s = guess_source[rng.gen_range(0..guess_source.len())];
                    total += (t - s).abs();
                }
            }
            Ok(total / (runs * test_actuals.len()) as f64)
        }
    }
}

/// Standardized accuracy as a fraction; negative when worse than guessing.
pub fn sa(pairs: &[(f64, f64)], baseline_mae: f64) -> Result<f64> {
    if !(baseline_mae > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SA needs a positive baseline, got {baseline_mae}"
        )));
    }
    Ok(1.0 - mae(pairs)? / baseline_mae)
}

/// Lower median.
pub fn aggregate(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("median of an empty list".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[(sorted.len() - 1) / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Median MRE of a fold's test predictions.
    Mre,
    Sa,
    Mae,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mre, Metric::Sa, Metric::Mae];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mre => "mre",
            Metric::Sa => "sa",
            Metric::Mae => "mae",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Metric::Sa => Orientation::HigherBetter,
            Metric::Mre | Metric::Mae => Orientation::LowerBetter,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mre" => Ok(Metric::Mre),
            "sa" => Ok(Metric::Sa),
            "mae" => Ok(Metric::Mae),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

/// Per-fold scores for one (treatment, repeat, fold) prediction set.
///
/// Rows whose actual is zero have no MRE; a fold where every actual is zero
/// reports NaN MRE. SA is NaN when the guessing baseline is zero.
pub fn fold_scores(pairs: &[(f64, f64)], train_actuals: &[f64]) -> Result<[(Metric, f64); 3]> {
    let mres: Vec<f64> = pairs
        .iter()
        .filter(|(a, _)| *a > 0.0)
        .map(|(a, p)| mre(*a, *p))
        .collect::<Result<_>>()?;
    let mre_value = if mres.is_empty() { f64::NAN } else { aggregate(&mres)? };
    let actuals: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
    let baseline = rguess_mae(&actuals, train_actuals, GuessMode::Exact)?;
    let sa_value = if baseline > 0.0 { sa(pairs, baseline)? } else { f64::NAN };
    Ok([(Metric::Mre, mre_value), (Metric::Sa, sa_value), (Metric::Mae, mae(pairs)?)])
}
