use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{Column, ColumnKind, Dataset, FeatureSchema, Provenance};
use crate::error::{Error, Result};

/// Schema sidecar contents: what a CSV file holds and how to read it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDescriptor {
    pub name: String,
    pub provenance: Provenance,
    pub schema: FeatureSchema,
    pub synthetic: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    name: String,
    provenance: Provenance,
    target: Option<String>,
    #[serde(default)]
    synthetic: bool,
    #[serde(default)]
    exclude: Vec<String>,
    columns: Vec<Column>,
}

impl DatasetDescriptor {
    pub fn new(name: impl Into<String>, provenance: Provenance, schema: FeatureSchema) -> Self {
        DatasetDescriptor {
            name: name.into(),
            provenance,
            schema,
            synthetic: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let sidecar: Sidecar =
            toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        let mut columns = sidecar.columns;
        for name in &sidecar.exclude {
            let col = columns
                .iter_mut()
                .find(|c| &c.name == name)
                .ok_or_else(|| Error::UnknownColumn {
                    column: name.clone(),
                })?;
            if col.kind == ColumnKind::Target {
                return Err(Error::Schema(format!("cannot exclude the target `{name}`")));
            }
            col.kind = ColumnKind::Excluded;
        }
        let schema = FeatureSchema::new(columns)?;
        if let Some(target) = &sidecar.target {
            if target != schema.target_name() {
                return Err(Error::Schema(format!(
                    "target `{target}` does not match target column `{}`",
                    schema.target_name()
                )));
            }
        }
        Ok(DatasetDescriptor {
            name: sidecar.name,
            provenance: sidecar.provenance,
            schema,
            synthetic: sidecar.synthetic,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

pub fn load_csv(path: &Path, descriptor: &DatasetDescriptor) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, descriptor)
}

/// Parses CSV text against a descriptor.
///
/// Excluded columns must be present in the header but are never parsed.
/// Categorical cells that are all non-negative integers are kept as-is;
/// otherwise every distinct label gets a code in first-appearance order.
pub fn read_csv<R: Read>(reader: R, descriptor: &DatasetDescriptor) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let position: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let schema = &descriptor.schema;
    for h in &header {
        if schema.column(h).is_none() {
            return Err(Error::UnknownColumn { column: h.clone() });
        }
    }
    let mut slots = Vec::new();
    for col in schema.columns() {
        let &idx = position.get(col.name.as_str()).ok_or_else(|| Error::MissingColumn {
            column: col.name.clone(),
        })?;
        slots.push(idx);
    }

    let predictors: Vec<(usize, &Column)> = schema
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind.is_predictor())
        .map(|(i, c)| (slots[i], c))
        .collect();
    let target_slot = slots[schema.target];

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        targets.push(parse_cell(&record[target_slot], row, schema.target_name())?);
        let mut cells = Vec::with_capacity(predictors.len());
        for (slot, col) in &predictors {
            let cell = &record[*slot];
            if is_missing(cell) {
                return Err(Error::MissingValue {
                    row,
                    column: col.name.clone(),
                });
            }
            cells.push(cell.to_string());
        }
        raw_rows.push(cells);
    }
    if raw_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut rows = vec![Vec::with_capacity(predictors.len()); raw_rows.len()];
    for (j, (_, col)) in predictors.iter().enumerate() {
        let values = if col.kind == ColumnKind::Categorical {
            encode_categorical(raw_rows.iter().map(|r| r[j].as_str()))
        } else {
            raw_rows
                .iter()
                .enumerate()
                .map(|(i, r)| parse_cell(&r[j], i + 1, &col.name))
                .collect::<Result<Vec<_>>>()?
        };
        for (row, v) in rows.iter_mut().zip(values) {
            row.push(v);
        }
    }
    Dataset::new(
        descriptor.name.clone(),
        schema.clone(),
        descriptor.provenance,
        rows,
        targets,
    )
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?" || cell.eq_ignore_ascii_case("na")
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    if is_missing(cell) {
        return Err(Error::MissingValue {
            row,
            column: column.to_string(),
        });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

fn encode_categorical<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> Vec<f64> {
    let as_codes: Option<Vec<f64>> = cells
        .clone()
        .map(|c| c.parse::<u32>().ok().map(f64::from))
        .collect();
    if let Some(codes) = as_codes {
        return codes;
    }
    let mut codes: HashMap<&str, usize> = HashMap::new();
    cells
        .map(|c| {
            let next = codes.len();
            *codes.entry(c).or_insert(next) as f64
        })
        .collect()
}
