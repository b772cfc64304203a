use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::{config_histogram, feature_usage, rank_metric_rows, WinTally};
use super::{ExperimentResult, MetricRow};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::stats::{Orientation, RankResult};

/// Files written by [`write_outputs`].
pub const OUTPUT_FILES: [&str; 11] = [
    "metrics.csv",
    "predictions.csv",
    "plans.csv",
    "ranks.csv",
    "tallies.csv",
    "histogram.csv",
    "feature_usage.csv",
    "tunings.csv",
    "trees.txt",
    "notes.txt",
    "report.txt",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub metric: String,
    pub dataset: String,
    pub treatment: String,
    pub rank: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRow {
    pub metric: String,
    pub treatment: String,
    pub wins: usize,
    pub denominator: usize,
}

#[derive(Serialize, Deserialize)]
struct MetricRecord {
    dataset: String,
    treatment: String,
    repeat: usize,
    fold: usize,
    metric: String,
    value: f64,
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        let r: MetricRecord = rec?;
        out.push(MetricRow {
            dataset: r.dataset,
            treatment: r.treatment,
            repeat: r.repeat,
            fold: r.fold,
            metric: r.metric.parse()?,
            value: r.value,
        });
    }
    Ok(out)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file).deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn rank_rows(metric: Metric, ranks: &[(String, RankResult)]) -> Vec<RankRow> {
    let mut out = Vec::new();
    for (dataset, r) in ranks {
        for ((treatment, rank), median) in r.order.iter().zip(&r.ranks).zip(&r.medians) {
            out.push(RankRow {
                metric: metric.name().to_string(),
                dataset: dataset.clone(),
                treatment: treatment.clone(),
                rank: *rank,
                median: *median,
            });
        }
    }
    out
}

fn tally_rows(tally: &WinTally) -> Vec<TallyRow> {
    let mut rows: Vec<TallyRow> = tally
        .wins
        .iter()
        .map(|(t, w)| TallyRow {
            metric: tally.metric.name().to_string(),
            treatment: t.clone(),
            wins: *w,
            denominator: tally.denominator,
        })
        .collect();
    rows.sort_by(|a, b| b.wins.cmp(&a.wins).then_with(|| a.treatment.cmp(&b.treatment)));
    rows
}

/// Ranks `rows` for each metric and writes ranks.csv, tallies.csv and
/// report.txt into `out`. Returns the report text.
pub fn write_rank_outputs(rows: &[MetricRow], metrics: &[Metric], seed: u64, notes: &[String], out: &Path) -> Result<String> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut ranks = Vec::new();
    let mut tallies = Vec::new();
    for &metric in metrics {
        let (r, t) = rank_metric_rows(rows, metric, seed)?;
        ranks.extend(rank_rows(metric, &r));
        tallies.extend(tally_rows(&t));
    }
    let mut w = writer(out, "ranks.csv")?;
    for r in &ranks {
        w.serialize(r)?;
    }
    finish(w)?;
    let mut w = writer(out, "tallies.csv")?;
    for t in &tallies {
        w.serialize(t)?;
    }
    finish(w)?;
    let report = render_report(&ranks, &tallies, notes);
    write_text(out, "report.txt", &report)?;
    Ok(report)
}

/// Plain-text summary from rank and tally tables; rank-1 entries are starred.
pub fn render_report(ranks: &[RankRow], tallies: &[TallyRow], notes: &[String]) -> String {
    let mut s = String::new();
    let mut by_metric: BTreeMap<&str, Vec<&RankRow>> = BTreeMap::new();
    for r in ranks {
        by_metric.entry(&r.metric).or_default().push(r);
    }
    for (metric, rows) in &by_metric {
        let direction = match metric.parse::<Metric>().map(|m| m.orientation()) {
            Ok(Orientation::HigherBetter) => "higher is better",
            _ => "lower is better",
        };
        let _ = writeln!(s, "== {metric} ({direction}) ==");
        let mut dataset = "";
        for r in rows {
            if r.dataset != dataset {
                dataset = &r.dataset;
                let _ = writeln!(s, "\n{dataset}");
                let _ = writeln!(s, "  {:<5} {:<10} {:>10}", "rank", "treatment", "median");
            }
            let mark = if r.rank == 1 { "*" } else { " " };
            let _ = writeln!(s, "  {mark}{:<4} {:<10} {:>10.4}", r.rank, r.treatment, r.median);
        }
        let _ = writeln!(s, "\nrank-1 tally ({metric})");
        for t in tallies.iter().filter(|t| t.metric == *metric) {
            let _ = writeln!(s, "  {:<10} {:>3}/{}", t.treatment, t.wins, t.denominator);
        }
        s.push('\n');
    }
    if !notes.is_empty() {
        let _ = writeln!(s, "notes");
        for n in notes {
            let _ = writeln!(s, "  {n}");
        }
    }
    s
}

/// Re-renders report.txt from the rank and tally tables in `dir`.
pub fn report_from_dir(dir: &Path) -> Result<String> {
    let ranks: Vec<RankRow> = read_rows(&dir.join("ranks.csv"))?;
    let tallies: Vec<TallyRow> = read_rows(&dir.join("tallies.csv"))?;
    let notes_path = dir.join("notes.txt");
    let notes: Vec<String> = match fs::read_to_string(&notes_path) {
        Ok(text) => text.lines().map(str::to_string).collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(notes_path, e)),
    };
    Ok(render_report(&ranks, &tallies, &notes))
}

/// Writes every table of an experiment into `out`.
pub fn write_outputs(result: &ExperimentResult, metrics: &[Metric], seed: u64, extra_notes: &[String], out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut w = writer(out, "metrics.csv")?;
    for m in &result.metrics {
        w.serialize(MetricRecord {
            dataset: m.dataset.clone(),
            treatment: m.treatment.clone(),
            repeat: m.repeat,
            fold: m.fold,
            metric: m.metric.name().to_string(),
            value: m.value,
        })?;
    }
    finish(w)?;

    let mut w = writer(out, "predictions.csv")?;
    w.write_record(["dataset", "treatment", "repeat", "fold", "row", "actual", "predicted"])?;
    for p in &result.predictions {
        w.write_record([
            p.dataset.clone(),
            p.treatment.name().to_string(),
            p.repeat.to_string(),
            p.fold.to_string(),
            p.row.to_string(),
            p.actual.to_string(),
            p.predicted.to_string(),
        ])?;
    }
    finish(w)?;

    let mut w = writer(out, "plans.csv")?;
    w.write_record(["dataset", "provenance", "plan", "treatments"])?;
    for d in &result.datasets {
        let names: Vec<&str> = d.treatments.iter().map(|t| t.name()).collect();
        w.write_record([d.name.clone(), d.provenance.to_string(), d.plan_hash.clone(), names.join(" ")])?;
    }
    finish(w)?;

    let mut w = writer(out, "tunings.csv")?;
    w.write_record([
        "dataset",
        "treatment",
        "repeat",
        "fold",
        "max_features_fraction",
        "max_depth",
        "min_sample_split",
        "min_samples_leaf",
        "validation_mre",
        "evaluations",
    ])?;
    let mut trees = String::new();
    for t in &result.tuned {
        w.write_record([
            t.dataset.clone(),
            t.treatment.name().to_string(),
            t.repeat.to_string(),
            t.fold.to_string(),
            t.config.max_features_fraction.to_string(),
            t.config.max_depth.map_or("none".to_string(), |d| d.to_string()),
            t.config.min_sample_split.to_string(),
            t.config.min_samples_leaf.to_string(),
            t.validation_score.to_string(),
            t.evaluations.to_string(),
        ])?;
        let _ = writeln!(trees, "## {} {} repeat {} fold {}", t.dataset, t.treatment, t.repeat, t.fold);
        trees.push_str(&t.tree.to_text());
        trees.push('\n');
    }
    finish(w)?;
    write_text(out, "trees.txt", &trees)?;

    let mut w = writer(out, "histogram.csv")?;
    w.write_record(["group", "treatment", "dimension", "bin", "count", "percent"])?;
    if !result.tuned.is_empty() {
        for h in config_histogram(result)? {
            w.write_record([
                h.group,
                h.treatment.name().to_string(),
                h.dimension.to_string(),
                h.bin.to_string(),
                h.count.to_string(),
                format!("{:.2}", h.percent),
            ])?;
        }
    }
    finish(w)?;

    let mut w = writer(out, "feature_usage.csv")?;
    w.write_record(["group", "treatment", "feature", "trees", "total_trees"])?;
    for u in feature_usage(result) {
        w.write_record([
            u.group,
            u.treatment.name().to_string(),
            u.feature,
            u.trees.to_string(),
            u.total_trees.to_string(),
        ])?;
    }
    finish(w)?;

    let notes: Vec<String> = extra_notes.iter().chain(&result.notes).cloned().collect();
    let mut text = notes.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    write_text(out, "notes.txt", &text)?;

    write_rank_outputs(&result.metrics, metrics, seed, &notes, out)?;
    Ok(())
}
