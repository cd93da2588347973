mod common;

use std::sync::Arc;

use insiderflow::detector::{detect, load_model, save_model, train_pipeline, DetectorConfig};
use insiderflow::eval::{run_experiment, trial_tables, write_report, DataSource, PreparedDataset, SplitPlan};
use insiderflow::ingest::{flow_indices, read_dataset, DatasetSchema, FlowTable};

fn table(schema: &str, text: &str) -> FlowTable {
    let schema = Arc::new(DatasetSchema::builtin(schema).unwrap());
    read_dataset(text.as_bytes(), &schema).unwrap()
}

fn unsw_dataset(flows: usize, sample: usize) -> PreparedDataset {
    PreparedDataset {
        name: "unsw-nb15".into(),
        source: DataSource::Single(table("unsw-nb15", &common::unsw_csv(flows, 0.1, 11))),
        plan: SplitPlan::SampleThenSplit {
            sample_size: sample,
            train_fraction: 0.75,
        },
        attack_rate: Some(0.034),
        feature_spec: None,
    }
}

fn nsl_dataset() -> PreparedDataset {
    PreparedDataset {
        name: "nsl-kdd".into(),
        source: DataSource::Split {
            train: table("nsl-kdd", &common::nsl_csv(3000, 0.3, 21)),
            test: table("nsl-kdd", &common::nsl_csv(2000, 0.3, 22)),
        },
        plan: SplitPlan::Predefined {
            train_size: Some(1500),
            test_size: 1000,
        },
        attack_rate: Some(0.034),
        feature_spec: None,
    }
}

#[test]
fn unsw_records_group_into_flows() {
    let t = table("unsw-nb15", &common::unsw_csv(200, 0.1, 3));
    assert!(t.len() > 200);
    assert_eq!(flow_indices(&t).unwrap().len(), 200);
}

#[test]
fn trial_split_sizes_and_attack_rate() {
    let ds = unsw_dataset(3000, 2000);
    let (train, test) = trial_tables(&ds, 5).unwrap();
    let (tr, te) = (flow_indices(&train).unwrap().len(), flow_indices(&test).unwrap().len());
    assert_eq!((tr, te), (1500, 500));

    let ds = nsl_dataset();
    let (train, test) = trial_tables(&ds, 5).unwrap();
    assert_eq!((train.len(), test.len()), (1500, 1000));
    assert!(test.attack_rate() <= 0.034 + 1e-9);
}

#[test]
fn train_save_load_detect() {
    let ds = unsw_dataset(3000, 2000);
    let (train, test) = trial_tables(&ds, 1).unwrap();
    let model = train_pipeline(&train, &DetectorConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);

    let a = detect(&model, &test).unwrap();
    let b = detect(&loaded, &test).unwrap();
    assert_eq!(a.verdicts, b.verdicts);
    assert_eq!(a.verdicts.len(), 500);
    assert!(a.verdicts.iter().all(|v| v.joint == (v.bicluster && v.ocsvm)));
}

#[test]
fn experiment_over_both_datasets() {
    let report = run_experiment(
        &[unsw_dataset(4000, 3000), nsl_dataset()],
        &DetectorConfig::default(),
        2,
        7,
    )
    .unwrap();
    assert_eq!(report.trials.len(), 4);
    assert_eq!(report.seeds, vec![7, 8]);
    for t in &report.trials {
        let bic_recall = t.bicluster.tp as f64 / t.bicluster.attacks() as f64;
        println!(
            "{} trial {}: joint {:?} bicluster recall {bic_recall:.3}",
            t.dataset, t.trial, t.joint
        );
        assert!(bic_recall >= 0.9, "{} trial {}", t.dataset, t.trial);
        assert!(t.joint.tp > 0);
        assert!(t.metrics.fp_rate.unwrap() <= 0.02);
    }
    let mut buf = Vec::new();
    write_report(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 + 2 + 1);
}

#[test]
fn ocsvm_trained_on_benign_flows_flags_attacks() {
    for ds in [unsw_dataset(4000, 3000), nsl_dataset()] {
        let (train, test) = trial_tables(&ds, 7).unwrap();
        let benign: Vec<usize> = (0..train.len())
            .filter(|&i| !train.records()[i].label.is_attack())
            .collect();
        let model = train_pipeline(&train.select(&benign), &DetectorConfig::default()).unwrap();
        let v = detect(&model, &test).unwrap().verdicts;
        let attacks = v.iter().filter(|v| v.truth).count();
        let caught = v.iter().filter(|v| v.truth && v.ocsvm).count();
        assert!(caught as f64 >= 0.8 * attacks as f64, "{}: {caught}/{attacks}", ds.name);
    }
}
