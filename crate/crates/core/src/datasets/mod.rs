//! Effort datasets: schema, loading, cleaning and splitting.

mod builtin;
mod load;
mod series;
mod split;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{builtin, builtin_names, builtin_series, builtin_source, CLASSIC_BENCHMARK};
pub use load::{load_csv, read_csv, DatasetDescriptor};
pub use series::{lag_features, lagged_name, time_series_split, ActivitySeries};
pub use split::{mxn_folds, Fold, SplitPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Ordinal,
    Categorical,
    Excluded,
    Target,
}

impl ColumnKind {
    pub fn is_predictor(self) -> bool {
        matches!(
            self,
            ColumnKind::Numeric | ColumnKind::Ordinal | ColumnKind::Categorical
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column {
            name: name.into(),
            kind,
        }
    }
}

/// Declared columns of a dataset. Exactly one column is the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    columns: Vec<Column>,
    target: usize,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let targets: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Target)
            .map(|(i, _)| i)
            .collect();
        match targets.as_slice() {
            [t] => Ok(FeatureSchema {
                columns,
                target: *t,
            }),
            [] => Err(Error::Schema("no target column".into())),
            _ => Err(Error::Schema("more than one target column".into())),
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn target_name(&self) -> &str {
        &self.columns[self.target].name
    }

    /// Columns visible to estimators, in declaration order.
    pub fn predictors(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| c.kind.is_predictor())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn with_excluded(&self, names: &[&str]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                if names.contains(&c.name.as_str()) {
                    Column::new(c.name.clone(), ColumnKind::Excluded)
                } else {
                    c.clone()
                }
            })
            .collect();
        FeatureSchema {
            columns,
            target: self.target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Cocomo,
    Classic,
    Contemporary,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Cocomo => "cocomo",
            Provenance::Classic => "classic",
            Provenance::Contemporary => "contemporary",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cocomo" => Ok(Provenance::Cocomo),
            "classic" => Ok(Provenance::Classic),
            "contemporary" => Ok(Provenance::Contemporary),
            other => Err(Error::Schema(format!("unknown provenance `{other}`"))),
        }
    }
}

/// Feature matrix plus effort targets.
///
/// Rows hold one value per predictor column of the schema (excluded columns
/// and the target are not stored in the matrix). Categorical values are
/// non-negative integer codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    schema: FeatureSchema,
    provenance: Provenance,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        schema: FeatureSchema,
        provenance: Provenance,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let width = schema.predictors().count();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        for (i, &t) in targets.iter().enumerate() {
            let ok = match provenance {
                Provenance::Contemporary => t >= 0.0,
                _ => t > 0.0,
            };
            if !ok || !t.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: effort {t} is not valid for {provenance} data"
                )));
            }
        }
        Ok(Dataset {
            name: name.into(),
            schema,
            provenance,
            rows,
            targets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.schema.predictors().map(|c| c.name.as_str()).collect()
    }

    pub fn feature_kinds(&self) -> Vec<ColumnKind> {
        self.schema.predictors().map(|c| c.kind).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            provenance: self.provenance,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        })
    }
}

/// Drops the named predictor columns. Row count is unchanged.
pub fn clean(raw: &Dataset, exclusions: &[&str]) -> Result<Dataset> {
    for &name in exclusions {
        match raw.schema.column(name) {
            None => {
                return Err(Error::UnknownColumn {
                    column: name.to_string(),
                })
            }
            Some(c) if c.kind == ColumnKind::Target => {
                return Err(Error::InvalidArgument(format!(
                    "cannot exclude the target column `{name}`"
                )))
            }
            Some(_) => {}
        }
    }
    let keep: Vec<bool> = raw
        .schema
        .predictors()
        .map(|c| !exclusions.contains(&c.name.as_str()))
        .collect();
    let rows = raw
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&v, _)| v)
                .collect()
        })
        .collect();
    Ok(Dataset {
        name: raw.name.clone(),
        schema: raw.schema.with_excluded(exclusions),
        provenance: raw.provenance,
        rows,
        targets: raw.targets.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(cols: &[(&str, ColumnKind)]) -> FeatureSchema {
        FeatureSchema::new(cols.iter().map(|(n, k)| Column::new(*n, *k)).collect()).unwrap()
    }

    #[test]
    fn schema_needs_exactly_one_target() {
        let none = FeatureSchema::new(vec![Column::new("a", ColumnKind::Numeric)]);
        assert!(matches!(none, Err(Error::Schema(_))));
        let two = FeatureSchema::new(vec![
            Column::new("a", ColumnKind::Target),
            Column::new("b", ColumnKind::Target),
        ]);
        assert!(matches!(two, Err(Error::Schema(_))));
    }

    #[test]
    fn schema_rejects_duplicate_names() {
        let dup = FeatureSchema::new(vec![
            Column::new("a", ColumnKind::Numeric),
            Column::new("a", ColumnKind::Target),
        ]);
        assert!(matches!(dup, Err(Error::Schema(_))));
    }

    #[test]
    fn classic_targets_must_be_positive() {
        let s = schema(&[("x", ColumnKind::Numeric), ("y", ColumnKind::Target)]);
        let err = Dataset::new("d", s.clone(), Provenance::Classic, vec![vec![1.0]], vec![0.0]);
        assert!(err.is_err());
        let ok = Dataset::new("d", s, Provenance::Contemporary, vec![vec![1.0]], vec![0.0]);
        assert!(ok.is_ok());
    }

    #[test]
    fn clean_with_no_exclusions_is_identity() {
        let s = schema(&[
            ("a", ColumnKind::Numeric),
            ("b", ColumnKind::Numeric),
            ("y", ColumnKind::Target),
        ]);
        let d = Dataset::new(
            "d",
            s,
            Provenance::Classic,
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        assert_eq!(clean(&d, &[]).unwrap(), d);
    }

    #[test]
    fn clean_drops_columns_and_keeps_rows() {
        let s = schema(&[
            ("a", ColumnKind::Numeric),
            ("b", ColumnKind::Numeric),
            ("c", ColumnKind::Ordinal),
            ("y", ColumnKind::Target),
        ]);
        let d = Dataset::new(
            "d",
            s,
            Provenance::Classic,
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        let c = clean(&d, &["b"]).unwrap();
        assert_eq!(c.feature_names(), vec!["a", "c"]);
        assert_eq!(c.rows(), &[vec![1.0, 3.0], vec![4.0, 6.0]]);
        assert_eq!(c.targets(), d.targets());
    }

    #[test]
    fn clean_refuses_target_and_unknown_columns() {
        let s = schema(&[("a", ColumnKind::Numeric), ("y", ColumnKind::Target)]);
        let d = Dataset::new("d", s, Provenance::Classic, vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(matches!(clean(&d, &["y"]), Err(Error::InvalidArgument(_))));
        assert!(matches!(clean(&d, &["zz"]), Err(Error::UnknownColumn { .. })));
    }
}
