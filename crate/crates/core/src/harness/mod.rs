//! End-to-end experiments: treatments × datasets × splits.

mod analysis;
mod config;
mod output;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cocomo::{CocomoModel, RatingTable};
use crate::datasets::{Dataset, Provenance, SplitPlan};
use crate::error::{Error, Result};
use crate::learners::{AtlmModel, CartConfig, CartTree, Estimator, Forest, ForestConfig, KnnModel, DEFAULT_K};
use crate::lp_solver::L1Model;
use crate::metrics::{self, Metric};
use crate::seeds;
use crate::tuners::{de_tune, flash_tune, validation_split, DeParams, FlashParams, TuneObjective};

pub use analysis::{
    config_histogram, feature_usage, pooled_median_mre, rank_and_tally, rank_metric_rows, FeatureUsage,
    HistogramRow, WinTally,
};
pub use config::{DatasetEntry, DatasetSource, ExperimentConfig};
pub use output::{
    read_metrics_csv, render_report, report_from_dir, write_outputs, write_rank_outputs, RankRow, TallyRow, OUTPUT_FILES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Treatment {
    Knn,
    Cart,
    Rf,
    Atlm,
    Lp4ee,
    CocomoII,
    CartDe,
    Rome,
}

impl Treatment {
    pub const ALL: [Treatment; 8] = [
        Treatment::Knn,
        Treatment::Cart,
        Treatment::Rf,
        Treatment::Atlm,
        Treatment::Lp4ee,
        Treatment::CocomoII,
        Treatment::CartDe,
        Treatment::Rome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Treatment::Knn => "KNN",
            Treatment::Cart => "CART",
            Treatment::Rf => "RF",
            Treatment::Atlm => "ATLM",
            Treatment::Lp4ee => "LP4EE",
            Treatment::CocomoII => "COCOMO-II",
            Treatment::CartDe => "CART_DE",
            Treatment::Rome => "ROME",
        }
    }

    pub fn is_tuned(self) -> bool {
        matches!(self, Treatment::CartDe | Treatment::Rome)
    }

    /// COCOMO-II needs the cocomo attribute layout; everything else runs anywhere.
    pub fn admissible(self, provenance: Provenance) -> bool {
        self != Treatment::CocomoII || provenance == Provenance::Cocomo
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Treatment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Treatment::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown treatment `{s}`")))
    }
}

/// Split and tuner settings shared by every dataset of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    /// M: shuffled repeats of the classic plan.
    pub repeats: usize,
    /// N: bins per repeat.
    pub folds: usize,
    /// Seeded repetitions of the chronological split.
    pub contemporary_repeats: usize,
    pub flash: FlashParams,
    pub de: DeParams,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            repeats: 20,
            folds: 3,
            contemporary_repeats: 20,
            flash: FlashParams::default(),
            de: DeParams::default(),
        }
    }
}

/// One dataset and the treatments to run on it.
#[derive(Debug, Clone)]
pub struct DatasetRun {
    pub data: Dataset,
    pub treatments: Vec<Treatment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub treatment: String,
    pub repeat: usize,
    pub fold: usize,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub dataset: String,
    pub treatment: Treatment,
    pub repeat: usize,
    pub fold: usize,
    /// Row index in the full dataset.
    pub row: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// Outcome of one tuned (treatment, repeat, fold).
#[derive(Debug, Clone, PartialEq)]
pub struct TunedRun {
    pub dataset: String,
    pub provenance: Provenance,
    pub treatment: Treatment,
    pub repeat: usize,
    pub fold: usize,
    pub config: CartConfig,
    pub validation_score: f64,
    pub evaluations: usize,
    /// Tree refit on the whole training fold with `config`.
    pub tree: CartTree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub name: String,
    pub provenance: Provenance,
    pub plan_hash: String,
    pub treatments: Vec<Treatment>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub datasets: Vec<DatasetSummary>,
    pub metrics: Vec<MetricRow>,
    pub predictions: Vec<PredictionRow>,
    pub tuned: Vec<TunedRun>,
    /// Fits that failed and were scored as NaN.
    pub notes: Vec<String>,
}

/// Test rows of a fold. Reads are counted so that a prediction step can
/// assert nothing touched the bin earlier.
struct TestBin {
    data: Dataset,
    reads: Cell<usize>,
}

impl TestBin {
    fn new(data: Dataset) -> Self {
        TestBin { data, reads: Cell::new(0) }
    }

    fn reads(&self) -> usize {
        self.reads.get()
    }

    fn predict(&self, model: &dyn Estimator) -> Result<Vec<(f64, f64)>> {
        (0..self.data.n_rows())
            .map(|i| {
                self.reads.set(self.reads.get() + 1);
                Ok((self.data.target(i), model.predict(self.data.row(i))?))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Unit {
    dataset: usize,
    treatment: Treatment,
    repeat: usize,
    fold: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

struct UnitOutput {
    pairs: Vec<(f64, f64)>,
    scores: [(Metric, f64); 3],
    tuned: Option<TunedRun>,
    note: Option<String>,
}

/// Seed for a (dataset, repeat, fold); shared by all treatments so that
/// splits coincide while each treatment gets its own stream below it.
pub fn fold_seed(seed: u64, dataset: &str, repeat: usize, fold: usize) -> u64 {
    seeds::derive(seed, &[&dataset, &repeat, &fold])
}

pub fn treatment_seed(fold_seed: u64, treatment: Treatment) -> u64 {
    seeds::derive(fold_seed, &[&treatment.name()])
}

/// Folds a dataset is evaluated on: the M×N plan for classic and cocomo
/// data, repeated last-row holdout for contemporary data.
pub fn dataset_folds(data: &Dataset, params: &PlanParams, seed: u64) -> Result<(String, Vec<(usize, usize, Vec<usize>, Vec<usize>)>)> {
    if data.provenance() == Provenance::Contemporary {
        let n = data.n_rows();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset `{}` needs at least 2 rows for a chronological split",
                data.name()
            )));
        }
        let folds = (0..params.contemporary_repeats)
            .map(|r| (r, 0, (0..n - 1).collect(), vec![n - 1]))
            .collect();
        return Ok((format!("chronological:{n}"), folds));
    }
    let plan = SplitPlan::new(data.n_rows(), params.repeats, params.folds, seeds::derive(seed, &[&"plan", &data.name()]))?;
    let folds = plan.folds().into_iter().map(|f| (f.repeat, f.fold, f.train, f.test)).collect();
    Ok((plan.hash(), folds))
}

/// Runs every treatment on every fold of every dataset.
///
/// `jobs` caps worker threads; `None` uses every core.
pub fn run_experiment(runs: &[DatasetRun], params: &PlanParams, seed: u64, jobs: Option<usize>) -> Result<ExperimentResult> {
    params.flash.validate()?;
    params.de.validate()?;
    let mut result = ExperimentResult::default();
    let mut units = Vec::new();
    for (d, run) in runs.iter().enumerate() {
        if run.data.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        for t in &run.treatments {
            if !t.admissible(run.data.provenance()) {
                return Err(Error::Inadmissible {
                    treatment: t.name().to_string(),
                    dataset: run.data.name().to_string(),
                    provenance: run.data.provenance().to_string(),
                });
            }
        }
        let mut treatments = run.treatments.clone();
        treatments.sort();
        treatments.dedup();
        let (plan_hash, folds) = dataset_folds(&run.data, params, seed)?;
        for (repeat, fold, train, test) in folds {
            for &treatment in &treatments {
                units.push(Unit {
                    dataset: d,
                    treatment,
                    repeat,
                    fold,
                    train: train.clone(),
                    test: test.clone(),
                });
            }
        }
        result.datasets.push(DatasetSummary {
            name: run.data.name().to_string(),
            provenance: run.data.provenance(),
            plan_hash,
            treatments,
        });
    }

    units.sort_by_key(|u| (u.dataset, u.treatment, u.repeat, u.fold));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outputs: Vec<Result<UnitOutput>> =
        pool.install(|| units.par_iter().map(|u| run_unit(&runs[u.dataset].data, u, params, seed)).collect());

    for (unit, out) in units.iter().zip(outputs) {
        let out = out?;
        let name = runs[unit.dataset].data.name();
        for (metric, value) in out.scores {
            result.metrics.push(MetricRow {
                dataset: name.to_string(),
                treatment: unit.treatment.name().to_string(),
                repeat: unit.repeat,
                fold: unit.fold,
                metric,
                value,
            });
        }
        for (&row, (actual, predicted)) in unit.test.iter().zip(out.pairs) {
            result.predictions.push(PredictionRow {
                dataset: name.to_string(),
                treatment: unit.treatment,
                repeat: unit.repeat,
                fold: unit.fold,
                row,
                actual,
                predicted,
            });
        }
        result.tuned.extend(out.tuned);
        result.notes.extend(out.note);
    }
    Ok(result)
}

/// Errors that mean "this learner cannot fit this fold" rather than a bug
/// or bad input.
fn is_fit_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::CollinearPredictors
            | Error::CalibrationUnderdetermined
            | Error::Infeasible
            | Error::Unbounded
            | Error::InvalidArgument(_)
    )
}

fn run_unit(data: &Dataset, unit: &Unit, params: &PlanParams, seed: u64) -> Result<UnitOutput> {
    let train = data.subset(&unit.train)?;
    let test = TestBin::new(data.subset(&unit.test)?);
    let fseed = fold_seed(seed, data.name(), unit.repeat, unit.fold);
    let tseed = treatment_seed(fseed, unit.treatment);

    let fitted = fit(unit.treatment, &train, data.provenance(), params, tseed);
    let (model, tuned) = match fitted {
        Ok(m) => m,
        Err(e) if is_fit_failure(&e) => {
            let pairs: Vec<(f64, f64)> = (0..test.data.n_rows()).map(|i| (test.data.target(i), f64::NAN)).collect();
            return Ok(UnitOutput {
                pairs,
                scores: Metric::ALL.map(|m| (m, f64::NAN)),
                tuned: None,
                note: Some(format!(
                    "{} on {} repeat {} fold {}: {e}",
                    unit.treatment,
                    data.name(),
                    unit.repeat,
                    unit.fold
                )),
            });
        }
        Err(e) => return Err(e),
    };
    assert_eq!(test.reads(), 0, "test rows read before prediction");
    let pairs = test.predict(model.as_ref())?;
    assert_eq!(test.reads(), test.data.n_rows());
    let scores = metrics::fold_scores(&pairs, train.targets())?;
    let tuned = tuned.map(|(config, validation_score, evaluations, tree)| TunedRun {
        dataset: data.name().to_string(),
        provenance: data.provenance(),
        treatment: unit.treatment,
        repeat: unit.repeat,
        fold: unit.fold,
        config,
        validation_score,
        evaluations,
        tree,
    });
    Ok(UnitOutput {
        pairs,
        scores,
        tuned,
        note: None,
    })
}

type Fitted = (Box<dyn Estimator>, Option<(CartConfig, f64, usize, CartTree)>);

fn fit(treatment: Treatment, train: &Dataset, provenance: Provenance, params: &PlanParams, seed: u64) -> Result<Fitted> {
    let model: Box<dyn Estimator> = match treatment {
        Treatment::Knn => Box::new(KnnModel::train(train, DEFAULT_K.min(train.n_rows()))?),
        Treatment::Cart => Box::new(CartTree::train(train, &CartConfig::default(), seed)?),
        Treatment::Rf => Box::new(Forest::train(train, &ForestConfig::default(), seed)?),
        Treatment::Atlm => Box::new(AtlmModel::train(train)?),
        Treatment::Lp4ee => Box::new(L1Model::train(train)?),
        Treatment::CocomoII => {
            if !treatment.admissible(provenance) {
                return Err(Error::Inadmissible {
                    treatment: treatment.name().to_string(),
                    dataset: train.name().to_string(),
                    provenance: provenance.to_string(),
                });
            }
            Box::new(CocomoModel::train(train, &RatingTable::coc2000())?)
        }
        Treatment::CartDe | Treatment::Rome => {
            let (fit_rows, validation) = validation_split(train, seed)?;
            let mut objective = TuneObjective::new(&fit_rows, &validation, seed)?;
            let outcome = if treatment == Treatment::Rome {
                flash_tune(&mut objective, &params.flash, seed)?
            } else {
                de_tune(&mut objective, &params.de, seed)?
            };
            let tree = CartTree::train(train, &outcome.best, seed)?;
            let info = (outcome.best, outcome.best_score, outcome.archive.consumed(), tree.clone());
            return Ok((Box::new(tree), Some(info)));
        }
    };
    Ok((model, None))
}
