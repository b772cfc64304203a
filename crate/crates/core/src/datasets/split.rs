use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seeds;

/// M repeats of an N-way shuffled partition of the rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    m_repeats: usize,
    n_bins: usize,
    seed: u64,
    /// `assignments[r][i]` is the bin of row `i` in repeat `r`.
    assignments: Vec<Vec<usize>>,
}

/// One (train, test) pair of a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles the rows once per repeat and deals them into `n` bins
/// (row at shuffled position `p` goes to bin `p mod n`).
pub fn mxn_folds(data: &Dataset, m: usize, n: usize, seed: u64) -> Result<SplitPlan> {
    SplitPlan::new(data.n_rows(), m, n, seed)
}

impl SplitPlan {
    pub fn new(rows: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n}")));
        }
        if m < 1 {
            return Err(Error::InvalidArgument("need at least 1 repeat".into()));
        }
        if n > rows {
            return Err(Error::InvalidArgument(format!(
                "cannot split {rows} rows into {n} bins"
            )));
        }
        let assignments = (0..m)
            .map(|r| {
                let mut order: Vec<usize> = (0..rows).collect();
                order.shuffle(&mut seeds::derived_rng(seed, &[&"mxn", &r]));
                let mut bins = vec![0; rows];
                for (pos, &row) in order.iter().enumerate() {
                    bins[row] = pos % n;
                }
                bins
            })
            .collect();
        Ok(SplitPlan {
            m_repeats: m,
            n_bins: n,
            seed,
            assignments,
        })
    }

    pub fn m_repeats(&self) -> usize {
        self.m_repeats
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_rows(&self) -> usize {
        self.assignments[0].len()
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// All M×N folds, repeat-major.
    pub fn folds(&self) -> Vec<Fold> {
        let mut out = Vec::with_capacity(self.m_repeats * self.n_bins);
        for (repeat, bins) in self.assignments.iter().enumerate() {
            for fold in 0..self.n_bins {
                let (test, train): (Vec<usize>, Vec<usize>) =
                    (0..bins.len()).partition(|&i| bins[i] == fold);
                out.push(Fold {
                    repeat,
                    fold,
                    train,
                    test,
                });
            }
        }
        out
    }

    /// Hex SHA-256 over the plan contents.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.m_repeats as u64).to_le_bytes());
        h.update((self.n_bins as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        for bins in &self.assignments {
            for &b in bins {
                h.update((b as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
