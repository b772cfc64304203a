use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_width, Estimator};
use crate::datasets::{ColumnKind, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    Sqrt,
    Log,
}

/// Sample skewness `m3 / m2^1.5`; `None` for a constant column.
pub fn skewness(xs: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 1e-300) {
        return None;
    }
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    Some(m3 / m2.powf(1.5))
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Continuous {
        column: usize,
        transform: Transform,
        /// Training minimum; inputs are clamped to it.
        min: f64,
        /// Subtracted before sqrt/log when the training minimum is not positive.
        shift: f64,
    },
    Dummy {
        column: usize,
        level: f64,
    },
}

impl Term {
    fn value(&self, row: &[f64]) -> f64 {
        match *self {
            Term::Continuous {
                column,
                transform,
                min,
                shift,
            } => {
                let x = row[column];
                match transform {
                    Transform::Identity => x,
                    Transform::Sqrt => (x.max(min) - shift).sqrt(),
                    Transform::Log => {
                        let x = x.max(min);
                        if shift != 0.0 || min <= 0.0 {
                            (x - shift + 1.0).ln()
                        } else {
                            x.ln()
                        }
                    }
                }
            }
            Term::Dummy { column, level } => {
                if row[column] == level {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Transformed linear model fitted by least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlmModel {
    width: usize,
    terms: Vec<Term>,
    intercept: f64,
    coefficients: Vec<f64>,
}

fn apply(transform: Transform, xs: &[f64]) -> (Vec<f64>, f64) {
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min <= 0.0 { min } else { 0.0 };
    let term = Term::Continuous {
        column: 0,
        transform,
        min,
        shift,
    };
    (xs.iter().map(|x| term.value(&[*x])).collect(), shift)
}

impl AtlmModel {
    pub fn train(train: &Dataset) -> Result<Self> {
        Self::fit(train, None)
    }

    /// Fits with every continuous predictor left untransformed.
    pub fn train_identity(train: &Dataset) -> Result<Self> {
        Self::fit(train, Some(Transform::Identity))
    }

    fn fit(train: &Dataset, forced: Option<Transform>) -> Result<Self> {
        let kinds = train.feature_kinds();
        let mut terms = Vec::new();
        for (j, kind) in kinds.iter().enumerate() {
            let col = train.column(j);
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            if *kind == ColumnKind::Categorical {
                let mut levels = col.clone();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                for level in levels.into_iter().skip(1) {
                    terms.push(Term::Dummy { column: j, level });
                }
                continue;
            }
            let Some(_) = skewness(&col) else {
                continue;
            };
            let transform = match forced {
                Some(t) => t,
                None => {
                    let mut best = (Transform::Identity, f64::INFINITY);
                    for t in [Transform::Identity, Transform::Sqrt, Transform::Log] {
                        let (values, _) = apply(t, &col);
                        if let Some(s) = skewness(&values) {
                            if s.abs() < best.1 {
                                best = (t, s.abs());
                            }
                        }
                    }
                    best.0
                }
            };
            let (_, shift) = apply(transform, &col);
            terms.push(Term::Continuous {
                column: j,
                transform,
                min,
                shift,
            });
        }

        let n = train.n_rows();
        let p = terms.len();
        if n <= p {
            return Err(Error::InvalidArgument(format!(
                "{n} rows cannot fit {p} predictors plus an intercept"
            )));
        }
        let mut x = DMatrix::<f64>::zeros(n, p + 1);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for (k, t) in terms.iter().enumerate() {
                x[(i, k + 1)] = t.value(train.row(i));
            }
        }
        // column scaling keeps the rank test meaningful across units
        let scales: Vec<f64> = (0..=p)
            .map(|k| {
                let s = x.column(k).amax();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for (k, s) in scales.iter().enumerate() {
            x.column_mut(k).scale_mut(1.0 / s);
        }
        let y = DVector::from_column_slice(train.targets());
        let qr = x.qr();
        let r = qr.r();
        let diag_max = (0..=p).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
        if (0..=p).any(|k| r[(k, k)].abs() <= 1e-10 * diag_max) {
            return Err(Error::CollinearPredictors);
        }
        let qty = qr.q().transpose() * y;
        let beta = r
            .solve_upper_triangular(&qty)
            .ok_or(Error::CollinearPredictors)?;
        let beta: Vec<f64> = beta.iter().zip(&scales).map(|(b, s)| b / s).collect();
        Ok(AtlmModel {
            width: train.n_features(),
            terms,
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
        })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Transform chosen for each continuous predictor column that was kept.
    pub fn transforms(&self) -> Vec<(usize, Transform)> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                Term::Continuous { column, transform, .. } => Some((*column, *transform)),
                Term::Dummy { .. } => None,
            })
            .collect()
    }

    /// Number of indicator predictors produced for `column`.
    pub fn dummies_for(&self, column: usize) -> usize {
        self.terms
            .iter()
            .filter(|t| matches!(t, Term::Dummy { column: c, .. } if *c == column))
            .count()
    }
}

impl Estimator for AtlmModel {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        check_width(self.width, row)?;
        Ok(self.intercept
            + self
                .terms
                .iter()
                .zip(&self.coefficients)
                .map(|(t, b)| b * t.value(row))
                .sum::<f64>())
    }
}
