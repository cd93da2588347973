//! Command-line front end.

mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::bicluster::PeelMode;
use crate::detector::{
    detect, load_model, save_model, train_pipeline, write_verdicts, BiclusterNorm, DetectorConfig, Gamma,
};
use crate::error::{Error, Result};
use crate::eval::{
    run_experiment, write_report, write_summary, DataSource, ExperimentReport, PreparedDataset, SplitPlan,
};
use crate::ingest::{downsample_attacks, load_datasets, read_table, write_table, DatasetSchema, FlowTable};

pub use config::{expand_csv_paths, DataConfig, ExperimentConfig, RunConfig, SplitConfig, OUT_DIR_ENV};

pub const UNSW: &str = "unsw-nb15";
pub const NSL: &str = "nsl-kdd";

#[derive(Parser, Debug)]
#[command(
    name = "insiderflow",
    version,
    about = "Flow anomaly detection by bi-clustering and a one-class SVM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse dataset CSV exports into a flow table file.
    Ingest(IngestArgs),
    /// Fit both detectors on a flow table and save the model.
    Train(TrainArgs),
    /// Score a flow table with a saved model and write per-flow verdicts.
    Detect(DetectArgs),
    /// Run the seeded multi-trial experiment and write the report.
    Evaluate(EvaluateArgs),
    /// Re-render the report table from a saved summary.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Schema id (unsw-nb15, nsl-kdd) or schema TOML path.
    #[arg(long)]
    schema: String,
    /// CSV files, or directories of CSV files.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Drop attack records until at most this fraction remains.
    #[arg(long)]
    attack_rate: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Where a command's flows come from: a flow table file, or CSVs when a
/// schema is given.
#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Read `--input` as CSV with this schema instead of a flow table file.
    #[arg(long)]
    schema: Option<String>,
}

#[derive(Args, Debug, Default)]
struct DetectorFlags {
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// threshold-stop or best-score.
    #[arg(long, value_parser = parse_kebab::<PeelMode>)]
    peel_mode: Option<PeelMode>,
    /// A positive number or `scale`.
    #[arg(long, value_parser = parse_gamma)]
    gamma: Option<Gamma>,
    /// l1-columns, l1-rows or none.
    #[arg(long, value_parser = parse_kebab::<BiclusterNorm>)]
    bicluster_norm: Option<BiclusterNorm>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    cache_mb: Option<usize>,
}

impl DetectorFlags {
    fn apply(&self, c: &mut DetectorConfig) {
        set(&mut c.nu, self.nu);
        set(&mut c.threshold, self.threshold);
        set(&mut c.peel_mode, self.peel_mode);
        set(&mut c.gamma, self.gamma);
        set(&mut c.bicluster_norm, self.bicluster_norm);
        set(&mut c.tol, self.tol);
        set(&mut c.max_iter, self.max_iter);
        set(&mut c.cache_mb, self.cache_mb);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Feature spec id or TOML path; defaults to the schema's own.
    #[arg(long)]
    feature_spec: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Verdict CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the peeling trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// unsw-nb15 and/or nsl-kdd; defaults to every dataset with data configured.
    #[arg(long, num_args = 1..)]
    dataset: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.csv, summary.json and config.toml.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    unsw_csv: Vec<PathBuf>,
    #[arg(long)]
    nsl_train: Option<PathBuf>,
    #[arg(long)]
    nsl_test: Option<PathBuf>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    attack_rate: Option<f64>,
    #[arg(long)]
    nsl_train_size: Option<usize>,
    #[arg(long)]
    nsl_test_size: Option<usize>,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// summary.json written by `evaluate`.
    #[arg(long)]
    summary: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_gamma(s: &str) -> std::result::Result<Gamma, String> {
    if s == "scale" {
        return Ok(Gamma::Scale);
    }
    match s.parse::<f64>() {
        Ok(g) if g > 0.0 && g.is_finite() => Ok(Gamma::Value(g)),
        _ => Err(format!("expected `scale` or a positive number, got `{s}`")),
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit status: 0 on success, 1 on a failed command,
/// 2 on a usage error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}

fn load_csvs(paths: &[PathBuf], schema: &str) -> Result<FlowTable> {
    let schema = DatasetSchema::resolve(schema)?;
    load_datasets(&expand_csv_paths(paths)?, &schema)
}

fn load_input(input: &InputArgs) -> Result<FlowTable> {
    match &input.schema {
        Some(s) => load_csvs(&input.input, s),
        None => {
            let [path] = input.input.as_slice() else {
                return Err(Error::InvalidParameter(
                    "a flow table input is a single file; pass --schema to read CSVs".into(),
                ));
            };
            read_table(path)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut table = load_csvs(&a.input, &a.schema)?;
    if let Some(rate) = a.attack_rate {
        table = downsample_attacks(&table, rate, a.seed)?;
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_table(&a.out, &table)?;
    println!(
        "{} records ({} attacks) -> {}",
        table.len(),
        table.attack_count(),
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?.detector;
    a.detector.apply(&mut cfg);
    if a.feature_spec.is_some() {
        cfg.feature_spec = a.feature_spec;
    }
    let table = load_input(&a.input)?;
    let model = train_pipeline(&table, &cfg)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_model(&model, &a.out)?;
    println!(
        "trained on {} flows: {} support vectors, gamma {} -> {}",
        model.ocsvm.m,
        model.ocsvm.alphas.len(),
        model.ocsvm.kernel.gamma,
        a.out.display()
    );
    Ok(())
}

fn detect_cmd(a: DetectArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let table = load_input(&a.input)?;
    let det = detect(&model, &table)?;
    let mut w = create(&a.out)?;
    write_verdicts(&det.verdicts, &mut w)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    if let Some(path) = &a.trace {
        let mut w = create(path)?;
        det.write_trace(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    let count = |f: fn(&crate::detector::Verdict) -> bool| det.verdicts.iter().filter(|v| f(v)).count();
    println!(
        "{} flows: bicluster {}, ocsvm {}, joint {} -> {}",
        det.verdicts.len(),
        count(|v| v.bicluster),
        count(|v| v.ocsvm),
        count(|v| v.joint),
        a.out.display()
    );
    Ok(())
}

fn prepare(cfg: &RunConfig, name: &str) -> Result<PreparedDataset> {
    match name {
        UNSW => {
            if cfg.data.unsw_csv.is_empty() {
                return Err(Error::Config("no UNSW-NB15 CSV configured (data.unsw_csv)".into()));
            }
            Ok(PreparedDataset {
                name: UNSW.into(),
                source: DataSource::Single(load_csvs(&cfg.data.unsw_csv, &cfg.data.unsw_schema)?),
                plan: SplitPlan::SampleThenSplit {
                    sample_size: cfg.split.sample_size,
                    train_fraction: cfg.split.train_fraction,
                },
                attack_rate: Some(cfg.split.attack_rate),
                feature_spec: Some(cfg.data.unsw_features.clone()),
            })
        }
        NSL => {
            let (Some(train), Some(test)) = (&cfg.data.nsl_train, &cfg.data.nsl_test) else {
                return Err(Error::Config(
                    "NSL-KDD needs both data.nsl_train and data.nsl_test".into(),
                ));
            };
            Ok(PreparedDataset {
                name: NSL.into(),
                source: DataSource::Split {
                    train: load_csvs(std::slice::from_ref(train), &cfg.data.nsl_schema)?,
                    test: load_csvs(std::slice::from_ref(test), &cfg.data.nsl_schema)?,
                },
                plan: SplitPlan::Predefined {
                    train_size: cfg.split.nsl_train_size,
                    test_size: cfg.split.nsl_test_size,
                },
                attack_rate: Some(cfg.split.attack_rate),
                feature_spec: Some(cfg.data.nsl_features.clone()),
            })
        }
        other => Err(Error::Config(format!(
            "unknown dataset `{other}` (expected {UNSW} or {NSL})"
        ))),
    }
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    set(&mut cfg.experiment.trials, a.trials);
    set(&mut cfg.experiment.base_seed, a.seed);
    set(&mut cfg.experiment.out_dir, a.out);
    if !a.unsw_csv.is_empty() {
        cfg.data.unsw_csv = a.unsw_csv;
    }
    if a.nsl_train.is_some() {
        cfg.data.nsl_train = a.nsl_train;
    }
    if a.nsl_test.is_some() {
        cfg.data.nsl_test = a.nsl_test;
    }
    set(&mut cfg.split.sample_size, a.sample_size);
    set(&mut cfg.split.train_fraction, a.train_fraction);
    set(&mut cfg.split.attack_rate, a.attack_rate);
    if a.nsl_train_size.is_some() {
        cfg.split.nsl_train_size = a.nsl_train_size;
    }
    set(&mut cfg.split.nsl_test_size, a.nsl_test_size);
    a.detector.apply(&mut cfg.detector);

    let names: Vec<String> = if a.dataset.is_empty() {
        let mut n = Vec::new();
        if !cfg.data.unsw_csv.is_empty() {
            n.push(UNSW.to_string());
        }
        if cfg.data.nsl_train.is_some() || cfg.data.nsl_test.is_some() {
            n.push(NSL.to_string());
        }
        if n.is_empty() {
            return Err(Error::Config("no dataset configured; see [data] or --dataset".into()));
        }
        n
    } else {
        a.dataset
    };
    let datasets = names.iter().map(|n| prepare(&cfg, n)).collect::<Result<Vec<_>>>()?;
    let report = run_experiment(
        &datasets,
        &cfg.detector,
        cfg.experiment.trials,
        cfg.experiment.base_seed,
    )?;

    let dir = &cfg.experiment.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("report.csv");
    let mut w = create(&path)?;
    write_report(&report, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let path = dir.join("summary.json");
    let mut w = create(&path)?;
    write_summary(&report, &cfg, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let path = dir.join("config.toml");
    fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))?;

    for d in &report.datasets {
        println!(
            "{}: {} trials, accuracy {}, recall {}, fp rate {}",
            d.dataset,
            d.trials,
            show(d.accuracy),
            show(d.recall),
            show(d.fp_rate)
        );
    }
    println!("report -> {}", dir.join("report.csv").display());
    Ok(())
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{:.2}%", 100.0 * x))
}

fn report(a: ReportArgs) -> Result<()> {
    #[derive(Deserialize)]
    struct Summary {
        report: ExperimentReport,
    }
    let text = fs::read_to_string(&a.summary).map_err(|e| Error::io(&a.summary, e))?;
    let s: Summary = serde_json::from_str(&text).map_err(|e| Error::Deserialization(e.to_string()))?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            write_report(&s.report, &mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => write_report(&s.report, io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(["insiderflow"]), 2);
        assert_eq!(run_cli(["insiderflow", "frobnicate"]), 2);
        assert_eq!(run_cli(["insiderflow", "evaluate", "--bogus"]), 2);
        assert_eq!(
            run_cli(["insiderflow", "train", "--input", "x", "--out", "y", "--gamma", "-1"]),
            2
        );
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run_cli(["insiderflow", "--help"]), 0);
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_kebab::<PeelMode>("best-score").unwrap(), PeelMode::BestScore);
        assert!(parse_kebab::<PeelMode>("best").is_err());
        assert_eq!(parse_gamma("scale").unwrap(), Gamma::Scale);
        assert_eq!(parse_gamma("0.25").unwrap(), Gamma::Value(0.25));
        assert!(parse_gamma("0").is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut c = DetectorConfig::default();
        DetectorFlags {
            nu: Some(0.2),
            peel_mode: Some(PeelMode::BestScore),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!(c.nu, 0.2);
        assert_eq!(c.peel_mode, PeelMode::BestScore);
        assert_eq!(c.threshold, 0.055);
    }
}
