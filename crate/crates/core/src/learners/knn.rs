use super::{check_width, Estimator};
use crate::datasets::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// K nearest neighbours on min-max normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    mins: Vec<f64>,
    spans: Vec<f64>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn train(train: &Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if k > train.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds the {} training rows",
                train.n_rows()
            )));
        }
        let f = train.n_features();
        let mut mins = vec![f64::INFINITY; f];
        let mut maxs = vec![f64::NEG_INFINITY; f];
        for r in train.rows() {
            for j in 0..f {
                mins[j] = mins[j].min(r[j]);
                maxs[j] = maxs[j].max(r[j]);
            }
        }
        let spans: Vec<f64> = mins.iter().zip(&maxs).map(|(lo, hi)| hi - lo).collect();
        let mut model = KnnModel {
            k,
            mins,
            spans,
            rows: Vec::new(),
            targets: train.targets().to_vec(),
        };
        model.rows = train.rows().iter().map(|r| model.normalize(r)).collect();
        Ok(model)
    }

    fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mins.iter().zip(&self.spans))
            .map(|(v, (lo, span))| if *span > 0.0 { (v - lo) / span } else { 0.0 })
            .collect()
    }
}

impl Estimator for KnnModel {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        check_width(self.mins.len(), row)?;
        let q = self.normalize(row);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist[..self.k].iter().map(|(_, i)| self.targets[*i]).sum::<f64>() / self.k as f64)
    }
}

pub fn knn_predict(train: &Dataset, row: &[f64], k: usize) -> Result<f64> {
    KnnModel::train(train, k)?.predict(row)
}
