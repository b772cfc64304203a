//! `effort` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 network error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::datasets::{builtin, builtin_names, builtin_series, lag_features, load_csv, Dataset, DatasetDescriptor};
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig};
use crate::ingest::{collect, write_fixture, CollectionSpec, TOKEN_ENV};
use crate::learners::CartTree;
use crate::metrics::Metric;
use crate::tuners::{de_tune, flash_tune, validation_split, DeParams, FlashParams, TuneObjective};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NETWORK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "effort", version, about = "Software effort estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment definition and write every result table
    Run(RunArgs),
    /// Scott-Knott rank a metrics table and tally rank-1 wins
    Rank(RankArgs),
    /// Tune CART on one dataset and print the chosen configuration
    Tune(TuneArgs),
    /// Collect monthly repository activity into a fixture CSV
    Collect(CollectArgs),
    /// Re-render the text report of a results directory
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment definition (TOML)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Base seed for splits, learners, tuners and ranking
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Worker threads [default: available cores]
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// metrics.csv written by `run`
    #[arg(value_name = "METRICS_CSV")]
    metrics: PathBuf,
    /// Metric to rank on
    #[arg(long, value_enum, default_value_t = MetricArg::Mre)]
    metric: MetricArg,
    /// Seed for the bootstrap tests
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "ranks")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Mre,
    Sa,
    Mae,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mre => Metric::Mre,
            MetricArg::Sa => Metric::Sa,
            MetricArg::Mae => Metric::Mae,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TunerArg {
    Flash,
    De,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// Bundled dataset name or path to a CSV file
    #[arg(value_name = "DATASET")]
    dataset: String,
    /// Schema sidecar for a CSV dataset
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,
    /// Search strategy
    #[arg(long, value_enum, default_value_t = TunerArg::Flash)]
    tuner: TunerArg,
    /// Objective evaluations for FLASH
    #[arg(long, default_value_t = 200)]
    budget: usize,
    /// Months of history per row for activity series
    #[arg(long, default_value_t = 3)]
    lag: usize,
    /// Seed for the validation split, tuner and tree
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "tuning")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Repository as owner/name
    #[arg(long)]
    repo: String,
    /// First day of the collection range (YYYY-MM-DD)
    #[arg(long, value_name = "DATE")]
    from: NaiveDate,
    /// Last day of the collection range (YYYY-MM-DD)
    #[arg(long, value_name = "DATE")]
    to: NaiveDate,
    /// Raw response cache
    #[arg(long, value_name = "DIR", default_value = ".effort-cache")]
    cache: PathBuf,
    /// Fetch missing pages from the API (token read from GITHUB_TOKEN)
    #[arg(long)]
    online: bool,
    /// Output directory for the fixture CSV
    #[arg(long, value_name = "DIR", default_value = "activity")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Results directory holding ranks.csv and tallies.csv
    #[arg(value_name = "DIR")]
    dir: PathBuf,
    /// Also write report.txt into this directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_network() {
                EXIT_NETWORK
            } else {
                EXIT_DATA
            }
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(a) => run(a),
        Command::Rank(a) => rank(a),
        Command::Tune(a) => tune(a),
        Command::Collect(a) => collect_cmd(a),
        Command::Report(a) => report(a),
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn run(a: RunArgs) -> Result<()> {
    let config = ExperimentConfig::from_file(&a.config)?;
    let (runs, skipped) = config.load_runs()?;
    for s in &skipped {
        log::info!("{s}");
    }
    log::info!("running {} datasets", runs.len());
    let result = harness::run_experiment(&runs, &config.params, a.seed, a.jobs.map(|j| j as usize))?;
    harness::write_outputs(&result, &config.metrics, a.seed, &skipped, &a.out)?;
    print(&harness::report_from_dir(&a.out)?)
}

fn rank(a: RankArgs) -> Result<()> {
    let rows = harness::read_metrics_csv(&a.metrics)?;
    let report = harness::write_rank_outputs(&rows, &[a.metric.into()], a.seed, &[], &a.out)?;
    print(&report)
}

fn load_dataset(name: &str, schema: Option<&Path>, lag: usize) -> Result<Dataset> {
    if let Some(schema) = schema {
        return load_csv(Path::new(name), &DatasetDescriptor::from_file(schema)?);
    }
    if builtin_names().contains(&name) {
        return match builtin(name) {
            Ok(d) => Ok(d),
            Err(_) => lag_features(&builtin_series(name)?, lag, "monthly_commits"),
        };
    }
    Err(Error::InvalidArgument(format!(
        "`{name}` is not a bundled dataset; pass --schema for a CSV file (bundled: {})",
        builtin_names().join(", ")
    )))
}

fn tune(a: TuneArgs) -> Result<()> {
    let data = load_dataset(&a.dataset, a.schema.as_deref(), a.lag)?;
    let (fit_rows, validation) = validation_split(&data, a.seed)?;
    let mut objective = TuneObjective::new(&fit_rows, &validation, a.seed)?;
    let outcome = match a.tuner {
        TunerArg::Flash => {
            let params = FlashParams {
                budget: a.budget,
                ..FlashParams::default()
            };
            flash_tune(&mut objective, &params, a.seed)?
        }
        TunerArg::De => de_tune(&mut objective, &DeParams::default(), a.seed)?,
    };
    let tree = CartTree::train(&data, &outcome.best, a.seed)?;

    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let archive_path = a.out.join("archive.csv");
    let file = fs::File::create(&archive_path).map_err(|e| Error::io(&archive_path, e))?;
    outcome.archive.write_csv(file)?;
    let tree_path = a.out.join("tree.txt");
    fs::write(&tree_path, tree.to_text()).map_err(|e| Error::io(&tree_path, e))?;

    let c = outcome.best;
    print(&format!(
        "dataset {}\ntuner {:?}\nevaluations {}\nvalidation_mre {}\nmax_features_fraction {}\nmax_depth {}\nmin_sample_split {}\nmin_samples_leaf {}\n\n{}",
        data.name(),
        a.tuner,
        outcome.archive.consumed(),
        outcome.best_score,
        c.max_features_fraction,
        c.max_depth.map_or("none".to_string(), |d| d.to_string()),
        c.min_sample_split,
        c.min_samples_leaf,
        tree.to_text()
    ))
}

fn collect_cmd(a: CollectArgs) -> Result<()> {
    let mut spec = CollectionSpec::new(&a.repo, a.from, a.to, &a.cache)?;
    spec.allow_network = a.online;
    if a.online && std::env::var_os(TOKEN_ENV).is_none() {
        log::warn!("{TOKEN_ENV} is not set; unauthenticated requests are heavily rate limited");
    }
    let series = collect(&spec)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let path = a.out.join(format!("{}.csv", a.repo.replace('/', "__")));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_fixture(&series, file)?;
    print(&format!("{} months written to {}\n", series.len(), path.display()))
}

fn report(a: ReportArgs) -> Result<()> {
    let text = harness::report_from_dir(&a.dir)?;
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join("report.txt");
        fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    }
    print(&text)
}
