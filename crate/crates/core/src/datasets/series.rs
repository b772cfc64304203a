use super::{Column, ColumnKind, Dataset, FeatureSchema, Provenance};
use crate::error::{Error, Result};
use crate::ingest::{next_month_end, MonthlyActivity, ACTIVITY_FEATURES};

/// Consecutive calendar months of repository activity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivitySeries {
    repo_id: String,
    months: Vec<MonthlyActivity>,
}

impl ActivitySeries {
    pub fn new(repo_id: impl Into<String>, months: Vec<MonthlyActivity>) -> Result<Self> {
        for pair in months.windows(2) {
            if next_month_end(pair[0].month_end) != pair[1].month_end {
                return Err(Error::NonContiguousMonths {
                    prev: pair[0].month_end.to_string(),
                    next: pair[1].month_end.to_string(),
                });
            }
        }
        Ok(ActivitySeries {
            repo_id: repo_id.into(),
            months,
        })
    }

    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    pub fn months(&self) -> &[MonthlyActivity] {
        &self.months
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }
}

/// Name of the predictor holding `feature` observed `offset` months before
/// the target month.
pub fn lagged_name(feature: &str, offset: usize) -> String {
    format!("{feature}@t-{offset}")
}

/// Turns a monthly series into supervised rows.
///
/// Row for month `t` (for every `t >= lag`) has the `lag` preceding months
/// flattened oldest first, each contributing all activity features in
/// fixture order; its target is `target_feature` at month `t`.
pub fn lag_features(series: &ActivitySeries, lag: usize, target_feature: &str) -> Result<Dataset> {
    if lag == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".into()));
    }
    let target_idx = ACTIVITY_FEATURES
        .iter()
        .position(|f| *f == target_feature)
        .ok_or_else(|| Error::UnknownColumn {
            column: target_feature.to_string(),
        })?;
    if series.len() < lag + 2 {
        return Err(Error::SeriesTooShort {
            repo: series.repo_id.clone(),
            len: series.len(),
            needed: lag + 2,
        });
    }

    let mut columns = Vec::with_capacity(lag * ACTIVITY_FEATURES.len() + 1);
    for offset in (1..=lag).rev() {
        for f in ACTIVITY_FEATURES {
            columns.push(Column::new(lagged_name(f, offset), ColumnKind::Numeric));
        }
    }
    columns.push(Column::new(target_feature, ColumnKind::Target));
    let schema = FeatureSchema::new(columns)?;

    let months = &series.months;
    let mut rows = Vec::with_capacity(months.len() - lag);
    let mut targets = Vec::with_capacity(months.len() - lag);
    for t in lag..months.len() {
        let row: Vec<f64> = months[t - lag..t]
            .iter()
            .flat_map(|m| m.values())
            .collect();
        rows.push(row);
        targets.push(months[t].values()[target_idx]);
    }
    Dataset::new(
        series.repo_id.clone(),
        schema,
        Provenance::Contemporary,
        rows,
        targets,
    )
}

/// Last row is the test set; everything before it trains.
pub fn time_series_split(supervised: &Dataset) -> Result<(Dataset, Dataset)> {
    if supervised.provenance() != Provenance::Contemporary {
        return Err(Error::InvalidArgument(
            "chronological split needs contemporary data".into(),
        ));
    }
    let n = supervised.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows for a chronological split, got {n}"
        )));
    }
    let train: Vec<usize> = (0..n - 1).collect();
    Ok((supervised.subset(&train)?, supervised.subset(&[n - 1])?))
}
