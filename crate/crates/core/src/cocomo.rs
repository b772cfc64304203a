//! COCOMO-II post-architecture effort model and local calibration.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::Estimator;

pub const SCALE_FACTORS: [&str; 5] = ["prec", "flex", "resl", "team", "pmat"];

pub const EFFORT_MULTIPLIERS: [&str; 17] = [
    "rely", "cplx", "data", "ruse", "time", "stor", "pvol", "acap", "pcap", "pcon", "aexp", "plex",
    "ltex", "tool", "sced", "site", "docu",
];

pub const SIZE_COLUMN: &str = "kloc";

/// Work hours in one person-month.
pub const HOURS_PER_MONTH: f64 = 152.0;

/// Source text of the bundled COCOMO-II.2000 rating table.
pub const COC2000_TOML: &str = include_str!("../data/cocomo/coc2000.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    version: String,
    scale_factors: BTreeMap<String, BTreeMap<i64, f64>>,
    effort_multipliers: BTreeMap<String, BTreeMap<i64, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: String,
    scale_factors: BTreeMap<String, BTreeMap<String, f64>>,
    effort_multipliers: BTreeMap<String, BTreeMap<String, f64>>,
}

impl RatingTable {
    pub fn coc2000() -> Self {
        Self::from_toml(COC2000_TOML).expect("bundled rating table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawTable = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let convert = |group: BTreeMap<String, BTreeMap<String, f64>>, expected: &[&str]| {
            let mut out = BTreeMap::new();
            for name in expected {
                let levels = group.get(*name).ok_or_else(|| Error::MissingColumn {
                    column: name.to_string(),
                })?;
                let mut mapped = BTreeMap::new();
                for (level, value) in levels {
                    let ordinal: i64 = level
                        .parse()
                        .map_err(|_| Error::Schema(format!("{name}: bad ordinal `{level}`")))?;
                    if !(1..=6).contains(&ordinal) {
                        return Err(Error::Schema(format!("{name}: ordinal {ordinal} outside 1..6")));
                    }
                    mapped.insert(ordinal, *value);
                }
                out.insert(name.to_string(), mapped);
            }
            if let Some(extra) = group.keys().find(|k| !expected.contains(&k.as_str())) {
                return Err(Error::UnknownColumn {
                    column: extra.clone(),
                });
            }
            Ok(out)
        };
        Ok(RatingTable {
            version: raw.version,
            scale_factors: convert(raw.scale_factors, &SCALE_FACTORS)?,
            effort_multipliers: convert(raw.effort_multipliers, &EFFORT_MULTIPLIERS)?,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn scale_factor(&self, name: &str, rating: i64) -> Result<f64> {
        lookup(&self.scale_factors, name, rating)
    }

    pub fn effort_multiplier(&self, name: &str, rating: i64) -> Result<f64> {
        lookup(&self.effort_multipliers, name, rating)
    }

    pub fn effort_multiplier_levels(&self, name: &str) -> Option<&BTreeMap<i64, f64>> {
        self.effort_multipliers.get(name)
    }

    pub fn scale_factor_levels(&self, name: &str) -> Option<&BTreeMap<i64, f64>> {
        self.scale_factors.get(name)
    }
}

fn lookup(group: &BTreeMap<String, BTreeMap<i64, f64>>, name: &str, rating: i64) -> Result<f64> {
    let levels = group.get(name).ok_or_else(|| Error::UnknownColumn {
        column: name.to_string(),
    })?;
    levels
        .get(&rating)
        .copied()
        .ok_or_else(|| Error::RatingOutOfDomain {
            attribute: name.to_string(),
            value: rating,
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocomoCoefficients {
    pub a: f64,
    pub b: f64,
}

impl Default for CocomoCoefficients {
    fn default() -> Self {
        CocomoCoefficients { a: 2.94, b: 0.91 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocomoProject {
    /// Ordinal ratings in [`SCALE_FACTORS`] order.
    pub scale_factors: [i64; 5],
    /// Ordinal ratings in [`EFFORT_MULTIPLIERS`] order.
    pub effort_multipliers: [i64; 17],
    pub kloc: f64,
    pub actual_months: Option<f64>,
}

impl CocomoProject {
    pub fn nominal(kloc: f64) -> Self {
        CocomoProject {
            scale_factors: [3; 5],
            effort_multipliers: [3; 17],
            kloc,
            actual_months: None,
        }
    }

    /// 0.01 times the sum of table-mapped scale factors.
    fn exponent_offset(&self, tables: &RatingTable) -> Result<f64> {
        let mut sum = 0.0;
        for (name, &r) in SCALE_FACTORS.iter().zip(&self.scale_factors) {
            sum += tables.scale_factor(name, r)?;
        }
        Ok(0.01 * sum)
    }

    fn multiplier(&self, tables: &RatingTable) -> Result<f64> {
        let mut product = 1.0;
        for (name, &r) in EFFORT_MULTIPLIERS.iter().zip(&self.effort_multipliers) {
            product *= tables.effort_multiplier(name, r)?;
        }
        Ok(product)
    }
}

pub fn estimate(project: &CocomoProject, coeffs: CocomoCoefficients, tables: &RatingTable) -> Result<f64> {
    if !(project.kloc > 0.0) {
        return Err(Error::InvalidArgument(format!("kloc must be positive, got {}", project.kloc)));
    }
    let em = project.multiplier(tables)?;
    let c = project.exponent_offset(tables)?;
    Ok(coeffs.a * em * project.kloc.powf(coeffs.b + c))
}

/// Least-squares fit of `ln a` and `b` in log space with the scale-factor
/// exponent offset held at its table value.
pub fn local_calibrate(train: &[CocomoProject], tables: &RatingTable) -> Result<CocomoCoefficients> {
    let mut xs = Vec::with_capacity(train.len());
    let mut zs = Vec::with_capacity(train.len());
    for p in train {
        let actual = p.actual_months.ok_or_else(|| {
            Error::InvalidArgument("calibration projects need actual effort".into())
        })?;
        if !(actual > 0.0) || !(p.kloc > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "calibration needs positive kloc and effort, got kloc={} effort={actual}",
                p.kloc
            )));
        }
        let x = p.kloc.ln();
        let y = actual.ln() - p.multiplier(tables)?.ln();
        xs.push(x);
        zs.push(y - p.exponent_offset(tables)? * x);
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::CalibrationUnderdetermined);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let mz = zs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxz: f64 = xs.iter().zip(&zs).map(|(x, z)| (x - mx) * (z - mz)).sum();
    if sxx <= 1e-12 * n * (1.0 + mx * mx) {
        return Err(Error::CalibrationUnderdetermined);
    }
    let b = sxz / sxx;
    let ln_a = mz - b * mx;
    Ok(CocomoCoefficients { a: ln_a.exp(), b })
}

/// Positions of the COCOMO attributes inside a feature row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocomoLayout {
    scale_factors: [usize; 5],
    effort_multipliers: [usize; 17],
    kloc: usize,
    width: usize,
}

impl CocomoLayout {
    pub fn from_names(names: &[&str]) -> Result<Self> {
        let find = |name: &str| {
            names
                .iter()
                .position(|n| n.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::MissingColumn {
                    column: name.to_string(),
                })
        };
        let mut scale_factors = [0; 5];
        for (slot, name) in scale_factors.iter_mut().zip(SCALE_FACTORS) {
            *slot = find(name)?;
        }
        let mut effort_multipliers = [0; 17];
        for (slot, name) in effort_multipliers.iter_mut().zip(EFFORT_MULTIPLIERS) {
            *slot = find(name)?;
        }
        Ok(CocomoLayout {
            scale_factors,
            effort_multipliers,
            kloc: find(SIZE_COLUMN)?,
            width: names.len(),
        })
    }

    pub fn project(&self, row: &[f64], actual: Option<f64>) -> Result<CocomoProject> {
        if row.len() != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                got: row.len(),
            });
        }
        let ordinal = |v: f64| v.round() as i64;
        Ok(CocomoProject {
            scale_factors: self.scale_factors.map(|j| ordinal(row[j])),
            effort_multipliers: self.effort_multipliers.map(|j| ordinal(row[j])),
            kloc: row[self.kloc],
            actual_months: actual,
        })
    }
}

/// Projects of a cocomo-layout dataset, with actual effort attached.
pub fn projects(data: &Dataset) -> Result<Vec<CocomoProject>> {
    let layout = CocomoLayout::from_names(&data.feature_names())?;
    (0..data.n_rows())
        .map(|i| layout.project(data.row(i), Some(data.target(i))))
        .collect()
}

/// Locally calibrated COCOMO-II bound to a dataset layout.
#[derive(Debug, Clone)]
pub struct CocomoModel {
    pub coefficients: CocomoCoefficients,
    layout: CocomoLayout,
    tables: RatingTable,
}

impl CocomoModel {
    pub fn train(data: &Dataset, tables: &RatingTable) -> Result<Self> {
        let layout = CocomoLayout::from_names(&data.feature_names())?;
        let train = projects(data)?;
        Ok(CocomoModel {
            coefficients: local_calibrate(&train, tables)?,
            layout,
            tables: tables.clone(),
        })
    }

}

impl Estimator for CocomoModel {
    fn predict(&self, row: &[f64]) -> Result<f64> {
        let project = self.layout.project(row, None)?;
        estimate(&project, self.coefficients, &self.tables)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use sha2::{Digest, Sha256};

    /// Pinned digest of data/cocomo/coc2000.toml.
    const TABLE_SHA256: &str = "c3f514feae94e21ba5eb0ffb2c6ba396061d31c8ed69689395b31216b83ee0f2";

    #[test]
    fn bundled_table_is_pinned() {
        let digest = hex::encode(Sha256::digest(COC2000_TOML.as_bytes()));
        assert_eq!(digest, TABLE_SHA256);
        assert_eq!(RatingTable::coc2000().version(), "COCOMO-II.2000");
    }

    #[test]
    fn effort_multipliers_are_bounded_and_nominal_is_one() {
        let t = RatingTable::coc2000();
        for name in EFFORT_MULTIPLIERS {
            let levels = t.effort_multiplier_levels(name).unwrap();
            assert_eq!(levels[&3], 1.0, "{name}");
            for v in levels.values() {
                assert!((0.7..=1.74).contains(v), "{name}: {v}");
            }
        }
    }

    #[test]
    fn hand_calculated_estimate() {
        // ratings chosen so the mapped scale factors sum to 10
        let mut t = RatingTable::coc2000();
        for name in SCALE_FACTORS {
            t.scale_factors.get_mut(name).unwrap().insert(3, 2.0);
        }
        let p = CocomoProject::nominal(100.0);
        let got = estimate(&p, CocomoCoefficients::default(), &t).unwrap();
        assert!((got - 2.94 * 100f64.powf(1.01)).abs() < 1e-9);
        assert!((got - 307.9).abs() < 0.05);
    }

    #[test]
    fn estimate_is_linear_in_a() {
        let t = RatingTable::coc2000();
        let mut p = CocomoProject::nominal(42.0);
        p.effort_multipliers[0] = 5;
        let base = estimate(&p, CocomoCoefficients { a: 1.5, b: 1.0 }, &t).unwrap();
        let doubled = estimate(&p, CocomoCoefficients { a: 3.0, b: 1.0 }, &t).unwrap();
        assert_eq!(doubled, 2.0 * base);
    }

    #[test]
    fn out_of_domain_rating_names_attribute() {
        let t = RatingTable::coc2000();
        let mut p = CocomoProject::nominal(10.0);
        p.effort_multipliers[4] = 1; // time has no very-low rating
        match estimate(&p, CocomoCoefficients::default(), &t) {
            Err(Error::RatingOutOfDomain { attribute, value }) => {
                assert_eq!((attribute.as_str(), value), ("time", 1));
            }
            other => panic!("{other:?}"),
        }
    }

    fn generated(coeffs: CocomoCoefficients, n: usize) -> Vec<CocomoProject> {
        let t = RatingTable::coc2000();
        (0..n)
            .map(|i| {
                let mut p = CocomoProject::nominal(2.0 + 13.7 * i as f64);
                p.scale_factors[i % 5] = 1 + (i % 6) as i64;
                let k = i % 17;
                let levels: Vec<i64> = t.effort_multiplier_levels(EFFORT_MULTIPLIERS[k]).unwrap().keys().copied().collect();
                p.effort_multipliers[k] = levels[i % levels.len()];
                p.actual_months = Some(estimate(&p, coeffs, &t).unwrap());
                p
            })
            .collect()
    }

    #[test]
    fn calibration_recovers_generating_coefficients() {
        let t = RatingTable::coc2000();
        for truth in [CocomoCoefficients { a: 2.0, b: 1.0 }, CocomoCoefficients::default()] {
            let fit = local_calibrate(&generated(truth, 12), &t).unwrap();
            assert!((fit.a - truth.a).abs() < 1e-9, "{fit:?}");
            assert!((fit.b - truth.b).abs() < 1e-9, "{fit:?}");
        }
    }

    #[test]
    fn calibration_needs_distinct_sizes() {
        let t = RatingTable::coc2000();
        let one = generated(CocomoCoefficients::default(), 1);
        assert!(matches!(local_calibrate(&one, &t), Err(Error::CalibrationUnderdetermined)));
        let mut same = generated(CocomoCoefficients::default(), 4);
        for p in &mut same {
            p.kloc = 10.0;
        }
        let err = local_calibrate(&same, &t).unwrap_err();
        assert_eq!(err.to_string(), "calibration underdetermined");
    }

    #[test]
    fn real_nasa10_rows_are_in_domain() {
        let data = crate::datasets::builtin("nasa10_sample").unwrap();
        let t = RatingTable::coc2000();
        for p in projects(&data).unwrap() {
            assert!(estimate(&p, CocomoCoefficients::default(), &t).unwrap() > 0.0);
        }
        let model = CocomoModel::train(&data, &t).unwrap();
        assert!(model.predict(data.row(0)).unwrap() > 0.0);
    }

    fn log_sse(train: &[CocomoProject], c: CocomoCoefficients, t: &RatingTable) -> f64 {
        train
            .iter()
            .map(|p| (p.actual_months.unwrap().ln() - estimate(p, c, t).unwrap().ln()).powi(2))
            .sum()
    }

    proptest! {
        #[test]
        fn doubling_kloc_scales_by_exponent(kloc in 0.5f64..500.0, sf in proptest::array::uniform5(1i64..=6)) {
            let t = RatingTable::coc2000();
            let mut p = CocomoProject::nominal(kloc);
            p.scale_factors = sf;
            let c = CocomoCoefficients::default();
            let e1 = estimate(&p, c, &t).unwrap();
            p.kloc *= 2.0;
            let e2 = estimate(&p, c, &t).unwrap();
            let expo = c.b + p.exponent_offset(&t).unwrap();
            prop_assert!((e2 / e1 - 2f64.powf(expo)).abs() < 1e-9);
        }

        #[test]
        fn estimate_increases_with_kloc_and_multipliers(kloc in 0.5f64..500.0, k in 0usize..17) {
            let t = RatingTable::coc2000();
            let c = CocomoCoefficients::default();
            let p = CocomoProject::nominal(kloc);
            let mut bigger = p;
            bigger.kloc *= 1.01;
            prop_assert!(estimate(&bigger, c, &t).unwrap() > estimate(&p, c, &t).unwrap());

            let levels = t.effort_multiplier_levels(EFFORT_MULTIPLIERS[k]).unwrap();
            let mut by_value: Vec<(f64, i64)> = levels.iter().map(|(r, v)| (*v, *r)).collect();
            by_value.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for pair in by_value.windows(2) {
                if pair[1].0 > pair[0].0 {
                    let mut lo = p;
                    lo.effort_multipliers[k] = pair[0].1;
                    let mut hi = p;
                    hi.effort_multipliers[k] = pair[1].1;
                    prop_assert!(estimate(&hi, c, &t).unwrap() > estimate(&lo, c, &t).unwrap());
                }
            }
        }

        #[test]
        fn calibration_minimizes_log_residuals(noise in proptest::collection::vec(-0.5f64..0.5, 10), delta in 0.001f64..0.2) {
            let t = RatingTable::coc2000();
            let mut train = generated(CocomoCoefficients::default(), 10);
            for (p, e) in train.iter_mut().zip(&noise) {
                p.actual_months = Some(p.actual_months.unwrap() * e.exp());
            }
            let fit = local_calibrate(&train, &t).unwrap();
            let best = log_sse(&train, fit, &t);
            for da in [-delta, 0.0, delta] {
                for db in [-delta, 0.0, delta] {
                    let c = CocomoCoefficients { a: fit.a * (1.0 + da), b: fit.b + db };
                    prop_assert!(log_sse(&train, c, &t) >= best - 1e-9);
                }
            }
        }
    }
}
