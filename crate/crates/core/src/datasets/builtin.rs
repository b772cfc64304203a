//! Datasets compiled into the binary.
//!
//! The classic and cocomo tables are synthetic stand-ins that keep the
//! column layout, row count and per-column ranges of the public datasets
//! (see `tools/make_standins.py`). `nasa10_sample` holds five real NASA10
//! projects.

use super::{read_csv, ActivitySeries, Dataset, DatasetDescriptor};
use crate::error::{Error, Result};
use crate::ingest;

/// The nine datasets of the desk-scale benchmark.
pub const CLASSIC_BENCHMARK: [&str; 9] = [
    "albrecht",
    "desharnais",
    "kemerer",
    "miyazaki",
    "maxwell",
    "kitchenham",
    "china",
    "cocomo81",
    "nasa93",
];

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../data/", $name, ".csv")),
                include_str!(concat!("../../data/", $name, ".toml")))),*]
    };
}

const TABLES: &[(&str, &str, &str)] = bundled!(
    "albrecht",
    "china",
    "cocomo81",
    "desharnais",
    "kemerer",
    "kitchenham",
    "maxwell",
    "miyazaki",
    "nasa93",
    "nasa10_sample",
);

const SERIES: &[(&str, &str)] = &[
    ("repo_alpha", include_str!("../../data/activity/repo_alpha.csv")),
    ("repo_beta", include_str!("../../data/activity/repo_beta.csv")),
    ("repo_gamma", include_str!("../../data/activity/repo_gamma.csv")),
];

pub fn builtin_names() -> Vec<&'static str> {
    TABLES
        .iter()
        .map(|(n, _, _)| *n)
        .chain(SERIES.iter().map(|(n, _)| *n))
        .collect()
}

/// Bundled table `name` as it ships: raw CSV text and its descriptor.
pub fn builtin_source(name: &str) -> Option<(&'static str, DatasetDescriptor)> {
    TABLES.iter().find(|(n, _, _)| *n == name).map(|(_, csv, toml)| {
        let desc = DatasetDescriptor::from_toml(toml)
            .unwrap_or_else(|e| panic!("bundled sidecar {name}: {e}"));
        (*csv, desc)
    })
}

pub fn builtin(name: &str) -> Result<Dataset> {
    let (csv, desc) = builtin_source(name)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled dataset `{name}`")))?;
    read_csv(csv.as_bytes(), &desc)
}

pub fn builtin_series(name: &str) -> Result<ActivitySeries> {
    let (_, text) = SERIES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled activity series `{name}`")))?;
    ingest::parse_fixture(name, text.as_bytes())
}
