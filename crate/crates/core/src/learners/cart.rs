use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{check_width, Estimator};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::seeds;

/// Tuning ranges.
pub const FRACTION_RANGE: (f64, f64) = (0.01, 1.0);
pub const DEPTH_RANGE: (usize, usize) = (1, 12);
pub const SPLIT_RANGE: (usize, usize) = (0, 20);
pub const LEAF_RANGE: (usize, usize) = (1, 12);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartConfig {
    pub max_features_fraction: f64,
    /// `None` grows until another stopping rule fires.
    pub max_depth: Option<usize>,
    pub min_sample_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_features_fraction: 1.0,
            max_depth: None,
            min_sample_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl CartConfig {
    pub fn validate(&self) -> Result<()> {
        let f = self.max_features_fraction;
        if !(FRACTION_RANGE.0..=FRACTION_RANGE.1).contains(&f) {
            return Err(Error::InvalidArgument(format!("max_features_fraction {f} outside [0.01, 1]")));
        }
        if let Some(d) = self.max_depth {
            if !(DEPTH_RANGE.0..=DEPTH_RANGE.1).contains(&d) {
                return Err(Error::InvalidArgument(format!("max_depth {d} outside [1, 12]")));
            }
        }
        if self.min_sample_split > SPLIT_RANGE.1 {
            return Err(Error::InvalidArgument(format!(
                "min_sample_split {} outside [0, 20]",
                self.min_sample_split
            )));
        }
        if !(LEAF_RANGE.0..=LEAF_RANGE.1).contains(&self.min_samples_leaf) {
            return Err(Error::InvalidArgument(format!(
                "min_samples_leaf {} outside [1, 12]",
                self.min_samples_leaf
            )));
        }
        Ok(())
    }

    /// Splitting fewer than two rows is undefined.
    pub fn effective_min_split(&self) -> usize {
        self.min_sample_split.max(2)
    }

    pub fn eligible_features(&self, n_features: usize) -> usize {
        ((self.max_features_fraction * n_features as f64).ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        support: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        support: usize,
    },
}

/// Regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartTree {
    nodes: Vec<Node>,
    n_features: usize,
    feature_names: Vec<String>,
}

/// Chosen root split, exposed for oracle comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

/// Weighted child spread: `(sqrt(var_l) * n_l + sqrt(var_r) * n_r) / n`,
/// with population variances.
pub fn split_criterion(left: &[f64], right: &[f64]) -> f64 {
    fn spread(v: &[f64]) -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }
    let n = (left.len() + right.len()) as f64;
    (spread(left) * left.len() as f64 + spread(right) * right.len() as f64) / n
}

/// Two scores closer than this are treated as tied.
pub fn scores_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    config: CartConfig,
    rng: seeds::Rng,
    nodes: Vec<Node>,
    n_features: usize,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.targets[i]).sum::<f64>() / n as f64;
        let constant = idx.iter().all(|&i| self.targets[i] == self.targets[idx[0]]);
        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean,
            support: n,
        });
        if constant || depth_reached || n < self.config.effective_min_split() {
            return slot;
        }
        let features = self.eligible();
        let Some(choice) = best_split(self.rows, self.targets, &idx, &features, self.config.min_samples_leaf) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][choice.feature] <= choice.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
            support: n,
        };
        slot
    }

    fn eligible(&mut self) -> Vec<usize> {
        let k = self.config.eligible_features(self.n_features);
        if k >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut chosen = sample(&mut self.rng, self.n_features, k).into_vec();
        chosen.sort_unstable();
        chosen
    }
}

/// Best (feature, threshold) over `features` (ascending) for the rows in
/// `idx`; ties go to the lower feature, then the lower threshold.
pub fn best_split(
    rows: &[Vec<f64>],
    targets: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = idx.len();
    let center = idx.iter().map(|&i| targets[i]).sum::<f64>() / n as f64;
    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let ys: Vec<f64> = order.iter().map(|&i| targets[i] - center).collect();
        let total: f64 = ys.iter().sum();
        let total_sq: f64 = ys.iter().map(|y| y * y).sum();
        let (mut s, mut sq) = (0.0, 0.0);
        for pos in 0..n - 1 {
            s += ys[pos];
            sq += ys[pos] * ys[pos];
            let (lo, hi) = (rows[order[pos]][f], rows[order[pos + 1]][f]);
            if lo == hi {
                continue;
            }
            let (nl, nr) = (pos + 1, n - pos - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let var = |s: f64, sq: f64, k: usize| ((sq - s * s / k as f64) / k as f64).max(0.0);
            let score = (var(s, sq, nl).sqrt() * nl as f64
                + var(total - s, total_sq - sq, nr).sqrt() * nr as f64)
                / n as f64;
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let better = match best {
                None => true,
                Some(b) => score < b.score && !scores_tie(score, b.score),
            };
            if better {
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

impl CartTree {
    pub fn train(train: &Dataset, config: &CartConfig, seed: u64) -> Result<Self> {
        let names = train.feature_names().into_iter().map(str::to_string).collect();
        Self::train_matrix(train.rows(), train.targets(), names, config, seed)
    }

    pub fn train_matrix(
        rows: &[Vec<f64>],
        targets: &[f64],
        feature_names: Vec<String>,
        config: &CartConfig,
        seed: u64,
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
        config.validate_for_training()?;
        let n_features = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: bad.len(),
            });
        }
        let mut builder = Builder {
            rows,
            targets,
            config: *config,
            rng: seeds::rng(seed),
            nodes: Vec::new(),
            n_features,
        };
        if n_features == 0 {
            builder.config.max_depth = Some(0);
        }
        builder.grow((0..rows.len()).collect(), 0);
        Ok(CartTree {
            nodes: builder.nodes,
            n_features,
            feature_names,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Index of the leaf that `row` routes to.
    pub fn leaf_of(&self, row: &[f64]) -> Result<usize> {
        check_width(self.n_features, row)?;
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { .. } => return Ok(at),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// Depth of the deepest leaf; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Features tested by at least one internal node.
    pub fn features_used(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    /// Indented text form, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_node(&mut out, 0, 0);
        out
    }

    fn write_node(&self, out: &mut String, at: usize, indent: usize) {
        let pad = "  ".repeat(indent);
        match &self.nodes[at] {
            Node::Leaf { value, support } => {
                let _ = writeln!(out, "{pad}leaf {value} (n={support})");
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
                support,
            } => {
                let name = &self.feature_names[*feature];
                let _ = writeln!(out, "{pad}{name} <= {threshold} (n={support})");
                self.write_node(out, *left, indent + 1);
                let _ = writeln!(out, "{pad}{name} > {threshold}");
                self.write_node(out, *right, indent + 1);
            }
        }
    }
}

impl CartConfig {
    /// Training accepts anything sensible; the tuning ranges are checked by
    /// [`CartConfig::validate`].
    fn validate_for_training(&self) -> Result<()> {
        let f = self.max_features_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidArgument(format!("max_features_fraction {f} outside (0, 1]")));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

impl Estimator for CartTree {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        match self.nodes[self.leaf_of(row)?] {
            Node::Leaf { value, .. } => Ok(value),
            Node::Split { .. } => unreachable!("routing ends at a leaf"),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::datasets::{Column, ColumnKind, FeatureSchema, Provenance};
    use proptest::prelude::*;

    pub(crate) fn dataset(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Dataset {
        let f = rows[0].len();
        let mut cols: Vec<Column> = (0..f).map(|j| Column::new(format!("x{j}"), ColumnKind::Numeric)).collect();
        cols.push(Column::new("y", ColumnKind::Target));
        Dataset::new("t", FeatureSchema::new(cols).unwrap(), Provenance::Contemporary, rows, targets).unwrap()
    }

    fn brute_root(rows: &[Vec<f64>], ys: &[f64], min_leaf: usize) -> Option<SplitChoice> {
        let f = rows[0].len();
        let mut cands = Vec::new();
        for j in 0..f {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i][j] <= t);
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let lv: Vec<f64> = l.iter().map(|&i| ys[i]).collect();
                let rv: Vec<f64> = r.iter().map(|&i| ys[i]).collect();
                cands.push(SplitChoice { feature: j, threshold: t, score: split_criterion(&lv, &rv) });
            }
        }
        let min = cands.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
        cands.into_iter().find(|c| scores_tie(c.score, min))
    }

    #[test]
    fn constant_targets_give_one_leaf() {
        let d = dataset(vec![vec![1.0], vec![2.0], vec![3.0]], vec![7.0; 3]);
        let t = CartTree::train(&d, &CartConfig::default(), 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[100.0]).unwrap(), 7.0);
    }

    #[test]
    fn four_point_example() {
        let d = dataset(vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]], vec![10.0, 10.0, 20.0, 20.0]);
        let t = CartTree::train(&d, &CartConfig::default(), 0).unwrap();
        let (f, thr) = t.root_split().unwrap();
        assert_eq!(f, 0);
        assert!(thr > 0.0 && thr < 1.0);
        assert_eq!(t.predict(&[0.0]).unwrap(), 10.0);
        assert_eq!(t.predict(&[1.0]).unwrap(), 20.0);
        assert!(t.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn min_split_above_rows_gives_mean_leaf() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let cfg = CartConfig { min_sample_split: 20, ..CartConfig::default() };
        let t = CartTree::train(&dataset(rows, ys.clone()), &cfg, 0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[3.0]).unwrap(), ys.iter().sum::<f64>() / 10.0);
    }

    #[test]
    fn split_range_zero_is_clamped() {
        let cfg = CartConfig { min_sample_split: 0, ..CartConfig::default() };
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.effective_min_split(), 2);
        assert_eq!(CartConfig { max_features_fraction: 0.01, ..cfg }.eligible_features(5), 1);
        assert!(CartConfig { max_depth: Some(13), ..cfg }.validate().is_err());
        assert!(CartConfig { min_samples_leaf: 0, ..cfg }.validate().is_err());
    }

    #[test]
    fn text_form() {
        let d = dataset(vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]], vec![10.0, 10.0, 20.0, 20.0]);
        let t = CartTree::train(&d, &CartConfig::default(), 0).unwrap();
        assert_eq!(
            t.to_text(),
            "x0 <= 0.5 (n=4)\n  leaf 10 (n=2)\nx0 > 0.5\n  leaf 20 (n=2)\n"
        );
    }

    fn arb_data() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..=4, 2usize..=40).prop_flat_map(|(f, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(0i32..8, f), n),
                proptest::collection::vec(1i32..50, n),
            )
                .prop_map(|(rows, ys)| {
                    (
                        rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect(),
                        ys.into_iter().map(f64::from).collect(),
                    )
                })
        })
    }

    fn arb_config() -> impl Strategy<Value = CartConfig> {
        (0.01f64..=1.0, proptest::option::of(1usize..=12), 0usize..=20, 1usize..=12).prop_map(|(f, d, s, l)| CartConfig {
            max_features_fraction: f,
            max_depth: d,
            min_sample_split: s,
            min_samples_leaf: l,
        })
    }

    proptest! {
        #[test]
        fn root_split_matches_exhaustive_search((rows, ys) in arb_data(), leaf in 1usize..4) {
            let d = dataset(rows.clone(), ys.clone());
            let cfg = CartConfig { min_samples_leaf: leaf, ..CartConfig::default() };
            let tree = CartTree::train(&d, &cfg, 1).unwrap();
            let constant = ys.iter().all(|y| *y == ys[0]);
            match (brute_root(&rows, &ys, leaf), tree.root_split()) {
                (Some(b), Some((f, t))) => {
                    prop_assert!(!constant);
                    prop_assert_eq!(f, b.feature);
                    prop_assert_eq!(t, b.threshold);
                }
                (None, None) => {}
                (Some(_), None) => prop_assert!(constant || rows.len() < 2),
                (None, Some(_)) => prop_assert!(false, "tree split where no candidate exists"),
            }
        }

        #[test]
        fn structural_bounds_and_leaf_means((rows, ys) in arb_data(), cfg in arb_config(), seed in 0u64..100) {
            let d = dataset(rows.clone(), ys.clone());
            let tree = CartTree::train(&d, &cfg, seed).unwrap();
            if let Some(max) = cfg.max_depth {
                prop_assert!(tree.depth() <= max);
            }
            let mut routed: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
            for (r, y) in rows.iter().zip(&ys) {
                routed.entry(tree.leaf_of(r).unwrap()).or_default().push(*y);
            }
            for (i, node) in tree.nodes().iter().enumerate() {
                match node {
                    Node::Leaf { value, support } => {
                        let got = routed.get(&i).cloned().unwrap_or_default();
                        prop_assert_eq!(got.len(), *support);
                        if i != 0 {
                            prop_assert!(*support >= cfg.min_samples_leaf);
                        }
                        let mean = got.iter().sum::<f64>() / got.len() as f64;
                        prop_assert!((mean - value).abs() < 1e-9);
                    }
                    Node::Split { left, right, support, .. } => {
                        let sl = match &tree.nodes()[*left] { Node::Leaf { support, .. } | Node::Split { support, .. } => *support };
                        let sr = match &tree.nodes()[*right] { Node::Leaf { support, .. } | Node::Split { support, .. } => *support };
                        prop_assert_eq!(sl + sr, *support);
                    }
                }
            }
            prop_assert_eq!(&tree, &CartTree::train(&d, &cfg, seed).unwrap());
        }
    }
}
