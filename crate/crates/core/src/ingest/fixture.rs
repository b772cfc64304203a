use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::model::{MonthlyActivity, ACTIVITY_FEATURES};
use crate::datasets::ActivitySeries;
use crate::error::{Error, Result};

/// Reads a 15-column activity fixture (`dates` plus the activity features).
pub fn from_fixture(path: &Path) -> Result<ActivitySeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let repo = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_fixture(&repo, file)
}

pub fn parse_fixture<R: Read>(repo_id: &str, reader: R) -> Result<ActivitySeries> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(|e| Error::Fixture(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected: Vec<&str> = std::iter::once("dates").chain(ACTIVITY_FEATURES).collect();
    if header != expected {
        return Err(Error::Fixture(format!(
            "header must be `{}`",
            expected.join(",")
        )));
    }
    let mut months = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Fixture(e.to_string()))?;
        let line = i + 2;
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::Fixture(format!("line {line}: bad date `{}`: {e}", &record[0])))?;
        let mut counts = [0u64; 14];
        for (j, slot) in counts.iter_mut().enumerate() {
            let cell = &record[j + 1];
            *slot = cell.parse().map_err(|_| {
                Error::Fixture(format!(
                    "line {line}: `{cell}` in {} is not a non-negative count",
                    ACTIVITY_FEATURES[j]
                ))
            })?;
        }
        months.push(MonthlyActivity::from_counts(date, counts)?);
    }
    if months.is_empty() {
        return Err(Error::Fixture("no months".into()));
    }
    ActivitySeries::new(repo_id, months)
}

pub fn write_fixture<W: Write>(series: &ActivitySeries, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(std::iter::once("dates").chain(ACTIVITY_FEATURES))?;
    for m in series.months() {
        let mut record = vec![m.month_end.format("%Y-%m-%d").to_string()];
        record.extend(m.counts().iter().map(u64::to_string));
        csv.write_record(&record)?;
    }
    csv.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
