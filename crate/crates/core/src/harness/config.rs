use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{DatasetRun, PlanParams, Treatment};
use crate::datasets::{builtin, builtin_names, builtin_series, lag_features, load_csv, Dataset, DatasetDescriptor};
use crate::error::{Error, Result};
use crate::ingest::{from_fixture, ACTIVITY_FEATURES};
use crate::metrics::Metric;
use crate::tuners::{DeParams, FlashParams};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// A table or activity series compiled into the binary.
    Builtin(String),
    /// CSV file plus its schema sidecar.
    Csv { path: PathBuf, schema: PathBuf },
    /// Monthly activity fixture, turned into lagged rows.
    Fixture(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub source: DatasetSource,
    /// Overrides the experiment-wide list; every entry must be admissible.
    pub treatments: Option<Vec<Treatment>>,
}

/// Parsed experiment definition file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: PlanParams,
    pub metrics: Vec<Metric>,
    pub treatments: Vec<Treatment>,
    /// Months of history per contemporary row.
    pub lag: usize,
    /// Activity feature predicted for contemporary data.
    pub target: String,
    pub datasets: Vec<DatasetEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    repeats: Option<usize>,
    folds: Option<usize>,
    contemporary_repeats: Option<usize>,
    budget: Option<usize>,
    flash_init: Option<usize>,
    flash_pool: Option<usize>,
    de_population: Option<usize>,
    de_generations: Option<usize>,
    lag: Option<usize>,
    target: Option<String>,
    metrics: Option<Vec<String>>,
    treatments: Option<Vec<String>>,
    #[serde(default)]
    dataset: Vec<RawDataset>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    builtin: Option<String>,
    path: Option<PathBuf>,
    schema: Option<PathBuf>,
    fixture: Option<PathBuf>,
    treatments: Option<Vec<String>>,
}

fn parse_treatments(names: &[String]) -> Result<Vec<Treatment>> {
    names.iter().map(|n| n.parse()).collect::<Result<_>>().map_err(|e| Error::Config(e.to_string()))
}

impl ExperimentConfig {
    /// Parses `text`; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let defaults = PlanParams::default();
        let flash_defaults = FlashParams::default();
        let de_defaults = DeParams::default();
        let params = PlanParams {
            repeats: raw.repeats.unwrap_or(defaults.repeats),
            folds: raw.folds.unwrap_or(defaults.folds),
            contemporary_repeats: raw.contemporary_repeats.unwrap_or(defaults.contemporary_repeats),
            flash: FlashParams {
                budget: raw.budget.unwrap_or(flash_defaults.budget),
                init: raw.flash_init.unwrap_or(flash_defaults.init),
                pool: raw.flash_pool.unwrap_or(flash_defaults.pool),
            },
            de: DeParams {
                np: raw.de_population.unwrap_or(de_defaults.np),
                generations: raw.de_generations.unwrap_or(de_defaults.generations),
                ..de_defaults
            },
        };
        params.flash.validate().map_err(|e| Error::Config(e.to_string()))?;
        params.de.validate().map_err(|e| Error::Config(e.to_string()))?;

        let metrics = match raw.metrics {
            Some(names) => names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<Metric>>>()
                .map_err(|e| Error::Config(e.to_string()))?,
            None => vec![Metric::Mre, Metric::Sa],
        };
        let treatments = match raw.treatments {
            Some(names) => parse_treatments(&names)?,
            None => Treatment::ALL.to_vec(),
        };
        let target = raw.target.unwrap_or_else(|| "monthly_commits".to_string());
        if !ACTIVITY_FEATURES.contains(&target.as_str()) {
            return Err(Error::Config(format!("unknown activity target `{target}`")));
        }
        let lag = raw.lag.unwrap_or(3);
        if lag == 0 {
            return Err(Error::Config("lag must be at least 1".into()));
        }

        if raw.dataset.is_empty() {
            return Err(Error::Config("no [[dataset]] entries".into()));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let mut datasets = Vec::with_capacity(raw.dataset.len());
        for (i, d) in raw.dataset.into_iter().enumerate() {
            let source = match (d.builtin, d.path, d.schema, d.fixture) {
                (Some(name), None, None, None) => {
                    if !builtin_names().contains(&name.as_str()) {
                        return Err(Error::Config(format!("dataset {i}: no bundled dataset `{name}`")));
                    }
                    DatasetSource::Builtin(name)
                }
                (None, Some(path), Some(schema), None) => DatasetSource::Csv {
                    path: resolve(path),
                    schema: resolve(schema),
                },
                (None, None, None, Some(fixture)) => DatasetSource::Fixture(resolve(fixture)),
                _ => {
                    return Err(Error::Config(format!(
                        "dataset {i}: give exactly one of `builtin`, `path` + `schema`, or `fixture`"
                    )))
                }
            };
            let treatments = d.treatments.as_deref().map(parse_treatments).transpose()?;
            datasets.push(DatasetEntry { source, treatments });
        }
        Ok(ExperimentConfig {
            params,
            metrics,
            treatments,
            lag,
            target,
            datasets,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn load(&self, source: &DatasetSource) -> Result<Dataset> {
        match source {
            DatasetSource::Builtin(name) => match builtin(name) {
                Ok(d) => Ok(d),
                Err(_) => lag_features(&builtin_series(name)?, self.lag, &self.target),
            },
            DatasetSource::Csv { path, schema } => load_csv(path, &DatasetDescriptor::from_file(schema)?),
            DatasetSource::Fixture(path) => lag_features(&from_fixture(path)?, self.lag, &self.target),
        }
    }

    /// Loads every dataset. Experiment-wide treatments that a dataset cannot
    /// run are dropped and reported; per-dataset lists are passed through.
    pub fn load_runs(&self) -> Result<(Vec<DatasetRun>, Vec<String>)> {
        let mut runs = Vec::with_capacity(self.datasets.len());
        let mut skipped = Vec::new();
        for entry in &self.datasets {
            let data = self.load(&entry.source)?;
            let treatments = match &entry.treatments {
                Some(list) => list.clone(),
                None => {
                    let (ok, no): (Vec<Treatment>, Vec<Treatment>) =
                        self.treatments.iter().partition(|t| t.admissible(data.provenance()));
                    for t in no {
                        skipped.push(format!("{t} not applicable to {} ({})", data.name(), data.provenance()));
                    }
                    ok
                }
            };
            runs.push(DatasetRun { data, treatments });
        }
        Ok((runs, skipped))
    }
}
