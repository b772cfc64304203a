//! Dense two-phase simplex and the least-absolute-residual estimator built on it.

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::Estimator;

const EPS: f64 = 1e-9;

/// `min c.x` subject to `A x = b`, with `x_j >= 0` wherever `nonnegative[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub nonnegative: Vec<bool>,
}

impl LinearProgram {
    /// All variables non-negative.
    pub fn standard(objective: Vec<f64>, constraints: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints,
            rhs,
            nonnegative: vec![true; n],
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} constraint rows but {} right-hand sides",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        if self.nonnegative.len() != n {
            return Err(Error::InvalidArgument("one sign marker per variable".into()));
        }
        if let Some(row) = self.constraints.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Objective after each phase-two pivot, starting with the initial basis.
    pub trace: Vec<f64>,
}

struct Tableau {
    /// m rows of (coefficients..., rhs).
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut d = cost.to_vec();
        let mut z = 0.0;
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = cost[bv];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
                z += cb * row[self.width];
            }
        }
        (d, z)
    }

    /// Bland's rule on `allowed` columns; returns false at optimality.
    fn step(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        let (d, _) = self.reduced_costs(cost);
        let scale = 1.0 + cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let Some(enter) = (0..allowed).find(|&j| d[j] < -EPS * scale && !self.basis.contains(&j)) else {
            return Ok(false);
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[enter];
            if a > EPS {
                let ratio = row[self.width] / a;
                let better = match leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < best - EPS * (1.0 + best.abs())
                            || (ratio <= best + EPS * (1.0 + best.abs()) && self.basis[i] < self.basis[l])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.ok_or(Error::Unbounded)?;
        self.pivot(r, enter);
        Ok(true)
    }
}

/// Two-phase simplex with Bland's anti-cycling rule.
pub fn simplex_solve(lp: &LinearProgram) -> Result<Solution> {
    lp.validate()?;
    // free variables become differences of two non-negative ones
    let mut columns: Vec<(usize, f64)> = Vec::new();
    for (j, &nonneg) in lp.nonnegative.iter().enumerate() {
        columns.push((j, 1.0));
        if !nonneg {
            columns.push((j, -1.0));
        }
    }
    let n = columns.len();
    let m = lp.rhs.len();
    let cost: Vec<f64> = columns.iter().map(|&(j, s)| s * lp.objective[j]).collect();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (a, &b) in lp.constraints.iter().zip(&lp.rhs) {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = columns.iter().map(|&(j, s)| sign * s * a[j]).collect();
        row.push(sign * b);
        rows.push(row);
    }

    // initial basis from unit columns, artificials elsewhere
    let mut basis = vec![usize::MAX; m];
    for j in 0..n {
        let nonzero: Vec<usize> = (0..m).filter(|&i| rows[i][j] != 0.0).collect();
        if let [i] = nonzero[..] {
            if rows[i][j] == 1.0 && basis[i] == usize::MAX {
                basis[i] = j;
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
    let width = n + artificial_rows.len();
    for row in &mut rows {
        let rhs = row.pop().unwrap();
        row.resize(width, 0.0);
        row.push(rhs);
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        rows[i][n + k] = 1.0;
        basis[i] = n + k;
    }
    let mut t = Tableau { rows, basis, width };

    if !artificial_rows.is_empty() {
        let mut phase1 = vec![0.0; width];
        for c in &mut phase1[n..] {
            *c = 1.0;
        }
        while t.step(&phase1, width)? {}
        let (_, infeasibility) = t.reduced_costs(&phase1);
        let rhs_scale = 1.0 + lp.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if infeasibility > 1e-7 * rhs_scale {
            return Err(Error::Infeasible);
        }
        // drive zero-valued artificials out; drop redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n {
                match (0..n).find(|&j| t.rows[i][j].abs() > EPS) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut phase2 = cost.clone();
    phase2.resize(width, 0.0);
    let mut trace = vec![t.reduced_costs(&phase2).1];
    while t.step(&phase2, n)? {
        trace.push(t.reduced_costs(&phase2).1);
    }

    let mut split = vec![0.0; n];
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        if bv < n {
            split[bv] = row[width];
        }
    }
    let mut x = vec![0.0; lp.objective.len()];
    for (k, &(j, s)) in columns.iter().enumerate() {
        x[j] += s * split[k];
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Solution { x, objective, trace })
}

/// Linear model `effort = sum a_j x_j` minimizing the sum of absolute residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Model {
    pub coefficients: Vec<f64>,
    /// Sum of absolute residuals on the training data.
    pub sar: f64,
}

impl L1Model {
    pub fn train(train: &Dataset) -> Result<Self> {
        Self::fit(train.rows(), train.targets())
    }

    pub fn fit(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::InvalidArgument("LP4EE needs at least one predictor".into()));
        }
        // variables: a_1..a_p (free), u_1..u_n, v_1..v_n
        let width = p + 2 * n;
        let mut objective = vec![0.0; width];
        for c in &mut objective[p..] {
            *c = 1.0;
        }
        let mut constraints = Vec::with_capacity(n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: r.len() });
            }
            let mut row = vec![0.0; width];
            row[..p].copy_from_slice(r);
            row[p + i] = 1.0;
            row[p + n + i] = -1.0;
            constraints.push(row);
        }
        let mut nonnegative = vec![true; width];
        for s in &mut nonnegative[..p] {
            *s = false;
        }
        let lp = LinearProgram {
            objective,
            constraints,
            rhs: targets.to_vec(),
            nonnegative,
        };
        let solution = simplex_solve(&lp)?;
        let coefficients = solution.x[..p].to_vec();
        let sar = sum_abs_residuals(rows, targets, &coefficients);
        Ok(L1Model { coefficients, sar })
    }
}

pub fn sum_abs_residuals(rows: &[Vec<f64>], targets: &[f64], coefficients: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(r, y)| (y - r.iter().zip(coefficients).map(|(x, a)| x * a).sum::<f64>()).abs())
        .sum()
}

impl Estimator for L1Model {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        crate::learners::check_width(self.coefficients.len(), row)?;
        Ok(row.iter().zip(&self.coefficients).map(|(x, a)| x * a).sum())
    }
}
