use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, ConfusionCounts, Metrics};
use crate::detector::{detect, train_pipeline, DetectorConfig, Verdict};
use crate::error::{Error, Result};
use crate::ingest::{downsample_attack_indices, flow_indices, sample_then_split_indices, FlowTable};

// Decorrelates the train and test draws of a predefined split.
const TRAIN_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// How a trial's train and test flows are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitPlan {
    /// Draw `sample_size` flows from one table; the first `train_fraction`
    /// of the draw trains.
    SampleThenSplit { sample_size: usize, train_fraction: f64 },
    /// Separate train and test files, each subsampled per trial. Without a
    /// `train_size` the whole (downsampled) train file is used.
    Predefined {
        train_size: Option<usize>,
        test_size: usize,
    },
}

#[derive(Clone, Debug)]
pub enum DataSource {
    Single(FlowTable),
    Split { train: FlowTable, test: FlowTable },
}

#[derive(Clone, Debug)]
pub struct PreparedDataset {
    pub name: String,
    pub source: DataSource,
    pub plan: SplitPlan,
    /// Attack flows are dropped per trial until at most this fraction
    /// remains. `None` keeps the natural rate.
    pub attack_rate: Option<f64>,
    /// Feature spec id or path for this dataset, overriding the detector
    /// config's.
    pub feature_spec: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub dataset: String,
    pub trial: usize,
    pub seed: u64,
    pub train_flows: usize,
    pub test_flows: usize,
    pub test_attacks: usize,
    pub joint: ConfusionCounts,
    pub bicluster: ConfusionCounts,
    pub ocsvm: ConfusionCounts,
    pub metrics: Metrics,
    pub gamma: f64,
    pub support_vectors: usize,
    pub svm_converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeans {
    pub dataset: String,
    pub trials: usize,
    pub accuracy: Option<f64>,
    pub fp_rate: Option<f64>,
    pub fp_rate_total: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub fn_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub detector: DetectorConfig,
    pub trials: Vec<TrialResult>,
    pub datasets: Vec<DatasetMeans>,
    /// Mean over datasets of the per-dataset mean recall.
    pub cross_dataset_recall: Option<f64>,
    /// Mean over datasets of the per-dataset mean fp rate.
    pub cross_dataset_fp_rate: Option<f64>,
}

fn select_flows(table: &FlowTable, flows: &[Vec<usize>], chosen: &[usize]) -> FlowTable {
    let records: Vec<usize> = chosen.iter().flat_map(|&f| flows[f].iter().copied()).collect();
    table.select(&records)
}

fn flow_flags(table: &FlowTable, flows: &[Vec<usize>]) -> Vec<bool> {
    flows
        .iter()
        .map(|g| g.iter().any(|&i| table.records()[i].label.is_attack()))
        .collect()
}

/// Flow indices surviving attack downsampling, ascending.
fn candidate_flows(table: &FlowTable, flows: &[Vec<usize>], rate: Option<f64>, seed: u64) -> Result<Vec<usize>> {
    match rate {
        Some(r) => downsample_attack_indices(&flow_flags(table, flows), r, seed),
        None => Ok((0..flows.len()).collect()),
    }
}

fn sample_sorted(pool: &[usize], size: usize, seed: u64) -> Result<Vec<usize>> {
    let (mut picked, _) = sample_then_split_indices(pool.len(), size, 1.0, seed)?;
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}

/// The train and test tables of one seeded trial.
pub fn trial_tables(ds: &PreparedDataset, seed: u64) -> Result<(FlowTable, FlowTable)> {
    match (&ds.source, &ds.plan) {
        (
            DataSource::Single(table),
            SplitPlan::SampleThenSplit {
                sample_size,
                train_fraction,
            },
        ) => {
            let flows = flow_indices(table)?;
            let pool = candidate_flows(table, &flows, ds.attack_rate, seed)?;
            let (train, test) = sample_then_split_indices(pool.len(), *sample_size, *train_fraction, seed)?;
            let pick = |mut idx: Vec<usize>| {
                idx.sort_unstable();
                idx.into_iter().map(|i| pool[i]).collect::<Vec<_>>()
            };
            Ok((
                select_flows(table, &flows, &pick(train)),
                select_flows(table, &flows, &pick(test)),
            ))
        }
        (DataSource::Split { train, test }, SplitPlan::Predefined { train_size, test_size }) => {
            let train_seed = seed ^ TRAIN_SEED_SALT;
            let tr_flows = flow_indices(train)?;
            let mut tr_pool = candidate_flows(train, &tr_flows, ds.attack_rate, train_seed)?;
            if let Some(n) = train_size {
                tr_pool = sample_sorted(&tr_pool, *n, train_seed)?;
            }
            let te_flows = flow_indices(test)?;
            let te_pool = candidate_flows(test, &te_flows, ds.attack_rate, seed)?;
            let te_pick = sample_sorted(&te_pool, *test_size, seed)?;
            Ok((
                select_flows(train, &tr_flows, &tr_pool),
                select_flows(test, &te_flows, &te_pick),
            ))
        }
        _ => Err(Error::Config(format!(
            "dataset `{}`: split plan does not match its data files",
            ds.name
        ))),
    }
}

fn tally(verdicts: &[Verdict], vote: impl Fn(&Verdict) -> bool) -> ConfusionCounts {
    ConfusionCounts::from_pairs(verdicts.iter().map(|v| (vote(v), v.truth)))
}

/// Checks the joint vote against both detectors and the counts against the
/// test size.
pub fn check_trial(
    verdicts: &[Verdict],
    joint: &ConfusionCounts,
    bic: &ConfusionCounts,
    svm: &ConfusionCounts,
) -> Result<()> {
    if let Some(v) = verdicts.iter().find(|v| v.joint != (v.bicluster && v.ocsvm)) {
        return Err(Error::InvariantViolation(format!(
            "flow `{}`: joint vote is not the conjunction of the detectors",
            v.flow_id
        )));
    }
    if joint.fp > bic.fp.min(svm.fp) {
        return Err(Error::InvariantViolation(format!(
            "joint false positives {} exceed a detector's ({}, {})",
            joint.fp, bic.fp, svm.fp
        )));
    }
    for c in [joint, bic, svm] {
        if c.total() != verdicts.len() {
            return Err(Error::InvariantViolation(format!(
                "counts sum to {} for {} flows",
                c.total(),
                verdicts.len()
            )));
        }
    }
    Ok(())
}

pub fn run_trial(ds: &PreparedDataset, config: &DetectorConfig, trial: usize, seed: u64) -> Result<TrialResult> {
    let (train, test) = trial_tables(ds, seed)?;
    let config = match &ds.feature_spec {
        Some(spec) => &DetectorConfig {
            feature_spec: Some(spec.clone()),
            ..config.clone()
        },
        None => config,
    };
    let model = train_pipeline(&train, config)?;
    let det = detect(&model, &test)?;
    let v = &det.verdicts;
    let (joint, bicluster, ocsvm) = (tally(v, |v| v.joint), tally(v, |v| v.bicluster), tally(v, |v| v.ocsvm));
    check_trial(v, &joint, &bicluster, &ocsvm)?;
    log::info!(
        "{} trial {trial} (seed {seed}): tp {} fn {} fp {} tn {}",
        ds.name,
        joint.tp,
        joint.fn_,
        joint.fp,
        joint.tn
    );
    Ok(TrialResult {
        dataset: ds.name.clone(),
        trial,
        seed,
        train_flows: model.ocsvm.m,
        test_flows: v.len(),
        test_attacks: joint.attacks(),
        metrics: metrics(&joint)?,
        joint,
        bicluster,
        ocsvm,
        gamma: model.ocsvm.kernel.gamma,
        support_vectors: model.ocsvm.alphas.len(),
        svm_converged: model.ocsvm.converged,
    })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    let v = v?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs `trials` seeded trials per dataset; trial `t` uses seed
/// `base_seed + t`. Trials run in parallel and are reported in order.
pub fn run_experiment(
    datasets: &[PreparedDataset],
    config: &DetectorConfig,
    trials: usize,
    base_seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if datasets.is_empty() {
        return Err(Error::EmptyInput("no datasets to evaluate".into()));
    }
    config.validate()?;
    let seeds: Vec<u64> = (0..trials as u64).map(|t| base_seed.wrapping_add(t)).collect();
    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..trials).map(move |t| (d, t)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(d, t)| run_trial(&datasets[d], config, t, seeds[t]))
        .collect::<Result<_>>()?;

    let means: Vec<DatasetMeans> = datasets
        .iter()
        .map(|ds| {
            let rows: Vec<&TrialResult> = results.iter().filter(|r| r.dataset == ds.name).collect();
            let m = |f: fn(&Metrics) -> Option<f64>| mean(rows.iter().map(|r| f(&r.metrics)));
            DatasetMeans {
                dataset: ds.name.clone(),
                trials: rows.len(),
                accuracy: m(|x| Some(x.accuracy)),
                fp_rate: m(|x| x.fp_rate),
                fp_rate_total: m(|x| Some(x.fp_rate_total)),
                recall: m(|x| x.recall),
                precision: m(|x| x.precision),
                fn_rate: m(|x| x.fn_rate),
            }
        })
        .collect();
    Ok(ExperimentReport {
        base_seed,
        seeds,
        detector: config.clone(),
        trials: results,
        cross_dataset_recall: mean(means.iter().map(|m| m.recall)),
        cross_dataset_fp_rate: mean(means.iter().map(|m| m.fp_rate)),
        datasets: means,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.4}", 100.0 * x)).unwrap_or_default()
}

pub const REPORT_HEADER: [&str; 20] = [
    "dataset",
    "trial",
    "seed",
    "train_flows",
    "test_flows",
    "attacks",
    "tp",
    "fn",
    "fp",
    "tn",
    "accuracy",
    "fp_rate",
    "fp_rate_total",
    "recall",
    "precision",
    "fn_rate",
    "bicluster_flagged",
    "bicluster_fp",
    "ocsvm_flagged",
    "ocsvm_fp",
];

/// One row per trial, then one `mean` row per dataset and a final `all` row
/// with the cross-dataset recall and fp rate. Ratios are percentages with
/// four decimals; undefined ratios are left empty.
pub fn write_report<W: Write>(report: &ExperimentReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::io("<csv>", e.into());
    out.write_record(REPORT_HEADER).map_err(err)?;
    for r in &report.trials {
        let (c, m) = (&r.joint, &r.metrics);
        out.write_record([
            r.dataset.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.train_flows.to_string(),
            r.test_flows.to_string(),
            r.test_attacks.to_string(),
            c.tp.to_string(),
            c.fn_.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            pct(Some(m.accuracy)),
            pct(m.fp_rate),
            pct(Some(m.fp_rate_total)),
            pct(m.recall),
            pct(m.precision),
            pct(m.fn_rate),
            r.bicluster.flagged().to_string(),
            r.bicluster.fp.to_string(),
            r.ocsvm.flagged().to_string(),
            r.ocsvm.fp.to_string(),
        ])
        .map_err(err)?;
    }
    let blank = || vec![String::new(); 8];
    for d in &report.datasets {
        let mut row = vec![d.dataset.clone(), "mean".into()];
        row.extend(blank());
        row.extend([d.accuracy, d.fp_rate, d.fp_rate_total, d.recall, d.precision, d.fn_rate].map(pct));
        row.extend(vec![String::new(); 4]);
        out.write_record(&row).map_err(err)?;
    }
    let mut row = vec!["all".to_string(), "mean".into()];
    row.extend(blank());
    row.extend([
        String::new(),
        pct(report.cross_dataset_fp_rate),
        String::new(),
        pct(report.cross_dataset_recall),
    ]);
    row.extend(vec![String::new(); 6]);
    out.write_record(&row).map_err(err)?;
    out.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Serialize)]
struct Summary<'a, C: Serialize> {
    config: &'a C,
    report: &'a ExperimentReport,
}

/// Pretty JSON holding the run configuration next to the full report.
pub fn write_summary<W: Write, C: Serialize>(report: &ExperimentReport, config: &C, mut w: W) -> Result<()> {
    let text = serde_json::to_string_pretty(&Summary { config, report })
        .map_err(|e| Error::InvariantViolation(format!("summary serialization failed: {e}")))?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io("<summary>", e))?;
    w.write_all(b"\n").map_err(|e| Error::io("<summary>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::nsl_table;

    fn config() -> DetectorConfig {
        DetectorConfig {
            threshold: 0.1,
            ..DetectorConfig::default()
        }
    }

    fn split_dataset() -> PreparedDataset {
        PreparedDataset {
            name: "nsl-kdd".into(),
            source: DataSource::Split {
                train: nsl_table(900, 0.2, 1),
                test: nsl_table(900, 0.2, 2),
            },
            plan: SplitPlan::Predefined {
                train_size: Some(500),
                test_size: 400,
            },
            attack_rate: Some(0.034),
            feature_spec: None,
        }
    }

    #[test]
    fn predefined_trial_tables() {
        let (train, test) = trial_tables(&split_dataset(), 7).unwrap();
        assert_eq!((train.len(), test.len()), (500, 400));
        assert!(train.attack_rate() <= 0.034 + 0.01);
        assert!(test.attack_rate() <= 0.034 + 0.01);
    }

    #[test]
    fn sample_then_split_tables() {
        let ds = PreparedDataset {
            name: "x".into(),
            source: DataSource::Single(nsl_table(1000, 0.1, 3)),
            plan: SplitPlan::SampleThenSplit {
                sample_size: 400,
                train_fraction: 0.75,
            },
            attack_rate: Some(0.034),
            feature_spec: None,
        };
        let (train, test) = trial_tables(&ds, 1).unwrap();
        assert_eq!((train.len(), test.len()), (300, 100));
        let big = PreparedDataset {
            plan: SplitPlan::SampleThenSplit {
                sample_size: 5000,
                train_fraction: 0.75,
            },
            ..ds
        };
        assert_eq!(trial_tables(&big, 1).unwrap_err().name(), "InsufficientData");
    }

    #[test]
    fn report_is_consistent_and_reproducible() {
        let ds = [split_dataset()];
        let a = run_experiment(&ds, &config(), 3, 40).unwrap();
        assert_eq!(a.seeds, vec![40, 41, 42]);
        assert_eq!(a.trials.len(), 3);
        for r in &a.trials {
            assert_eq!(r.joint.total(), r.test_flows);
            assert!(r.joint.fp <= r.bicluster.fp.min(r.ocsvm.fp));
        }
        let recall = a.trials.iter().map(|r| r.metrics.recall.unwrap()).sum::<f64>() / 3.0;
        assert!((a.datasets[0].recall.unwrap() - recall).abs() < 1e-12);
        assert_eq!(a.cross_dataset_recall, a.datasets[0].recall);

        let b = run_experiment(&ds, &config(), 3, 40).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_report(&a, &mut x).unwrap();
        write_report(&b, &mut y).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 + 1 + 1);
        assert!(text.lines().all(|l| l.split(',').count() == REPORT_HEADER.len()));
    }

    #[test]
    fn summary_embeds_config() {
        let a = run_experiment(&[split_dataset()], &config(), 1, 5).unwrap();
        let mut buf = Vec::new();
        write_summary(&a, &serde_json::json!({"trials": 1}), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["config"]["trials"], 1);
        assert_eq!(v["report"]["detector"]["nu"], 0.035);
        assert_eq!(v["report"]["seeds"][0], 5);
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            run_experiment(&[split_dataset()], &config(), 0, 1).unwrap_err().name(),
            "InvalidParameter"
        );
    }
}
