//! Both detectors end to end, and the joint vote.
//!
//! Training fits every statistic on the training flows: the standardizer and
//! the one-class SVM on one path, the inversion maxima and min-max ranges on
//! the other. Bi-clustering itself needs no training; at detection time the
//! test flows are peeled on their own.

mod config;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bicluster::{build_bigraph, peel, PeelTrace, Vertex};
use crate::error::{Error, Result};
use crate::features::{
    apply_scaler, build_feature_matrix, fit_scaler, flows_from_table, invert_for_bicluster, normalize_columns_l1,
    normalize_rows, FeatureMatrix, FeatureSpec, InversionParams, Norm, ScalerKind, ScalerParams,
};
use crate::ingest::FlowTable;
use crate::ocsvm::{scale_gamma, train_ocsvm, KernelParams, OcsvmModel, TrainParams};

pub use config::{BiclusterNorm, DetectorConfig, Gamma, DEFAULT_THRESHOLD};

pub const MODEL_FORMAT: &str = "insiderflow-detector";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub schema_id: String,
    pub feature_spec: FeatureSpec,
    pub config: DetectorConfig,
    /// Standardizer for the SVM path.
    pub standardizer: ScalerParams,
    pub inversion: InversionParams,
    /// Min-max ranges of the inverted training features.
    pub minmax: ScalerParams,
    pub ocsvm: OcsvmModel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub flow_id: String,
    pub bicluster: bool,
    pub ocsvm: bool,
    pub joint: bool,
    /// Ground truth from the dataset labels.
    pub truth: bool,
}

#[derive(Clone, Debug)]
pub struct Detection {
    pub verdicts: Vec<Verdict>,
    pub decision_values: Vec<f64>,
    pub feature_names: Vec<String>,
    pub trace: PeelTrace,
}

impl Detection {
    /// Peeling trace as CSV, one line per deletion: step, kind, index, id,
    /// degree, score. Flow vertices are named by flow id.
    pub fn write_trace<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::io("<csv>", e.into());
        out.write_record(["step", "kind", "index", "id", "degree", "score"])
            .map_err(err)?;
        for (s, step) in self.trace.steps.iter().enumerate() {
            let id = match step.vertex {
                Vertex::Flow(i) => &self.verdicts[i].flow_id,
                Vertex::Feature(j) => &self.feature_names[j],
            };
            out.write_record([
                (s + 1).to_string(),
                step.vertex.kind().to_string(),
                step.vertex.index().to_string(),
                id.clone(),
                step.degree.to_string(),
                step.score_after.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))
    }
}

fn resolve_spec(table: &FlowTable, config: &DetectorConfig) -> Result<FeatureSpec> {
    let id = config
        .feature_spec
        .clone()
        .unwrap_or_else(|| table.schema().id().to_string());
    let spec = FeatureSpec::resolve(&id)?;
    if spec.dataset != table.schema().id() {
        return Err(Error::SchemaMismatch(format!(
            "feature spec is for `{}` but the data is `{}`",
            spec.dataset,
            table.schema().id()
        )));
    }
    Ok(spec)
}

fn svm_matrix(raw: &FeatureMatrix, standardizer: &ScalerParams) -> Result<FeatureMatrix> {
    normalize_rows(&apply_scaler(raw, standardizer)?, Norm::L2)
}

fn bicluster_matrix(raw: &FeatureMatrix, model: &DetectorModel) -> Result<FeatureMatrix> {
    let scaled = apply_scaler(&invert_for_bicluster(raw, &model.inversion)?, &model.minmax)?;
    match model.config.bicluster_norm {
        BiclusterNorm::L1Rows => normalize_rows(&scaled, Norm::L1),
        BiclusterNorm::L1Columns => normalize_columns_l1(&scaled),
        BiclusterNorm::None => Ok(scaled),
    }
}

pub fn train_pipeline(train: &FlowTable, config: &DetectorConfig) -> Result<DetectorModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training table has no records".into()));
    }
    let spec = resolve_spec(train, config)?;
    let flows = flows_from_table(train)?;
    let raw = build_feature_matrix(&flows, train.schema(), &spec)?;

    let standardizer = fit_scaler(&raw, ScalerKind::Standardize)?;
    let x = svm_matrix(&raw, &standardizer)?;
    let gamma = match config.gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => scale_gamma(&x)?,
    };
    let params = TrainParams {
        nu: config.nu,
        kernel: KernelParams::rbf(gamma)?,
        tol: config.tol,
        max_iter: config.max_iter,
        cache_mb: config.cache_mb,
    };
    let ocsvm = train_ocsvm(&x, &params)?;

    let inversion = InversionParams::fit(&raw, &spec)?;
    let minmax = fit_scaler(&invert_for_bicluster(&raw, &inversion)?, ScalerKind::MinMax)?;
    log::info!(
        "trained on {} flows: gamma {gamma:.4}, {} support vectors, {} SMO iterations",
        raw.n_rows(),
        ocsvm.alphas.len(),
        ocsvm.iterations
    );
    Ok(DetectorModel {
        schema_id: train.schema().id().to_string(),
        feature_spec: spec,
        config: config.clone(),
        standardizer,
        inversion,
        minmax,
        ocsvm,
    })
}

/// Scores every flow of `test` with both detectors. A flow is a joint
/// anomaly only when both flag it.
pub fn detect(model: &DetectorModel, test: &FlowTable) -> Result<Detection> {
    if test.schema().id() != model.schema_id {
        return Err(Error::SchemaMismatch(format!(
            "model was trained on `{}` but the data is `{}`",
            model.schema_id,
            test.schema().id()
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("test table has no records".into()));
    }
    let flows = flows_from_table(test)?;
    let raw = build_feature_matrix(&flows, test.schema(), &model.feature_spec)?;

    let (svm, bic) = rayon::join(
        || -> Result<Vec<f64>> { model.ocsvm.decision_values(&svm_matrix(&raw, &model.standardizer)?) },
        || -> Result<_> {
            let graph = build_bigraph(&bicluster_matrix(&raw, model)?)?;
            peel(&graph, model.config.threshold, model.config.peel_mode)
        },
    );
    let decision_values = svm?;
    let peeled = bic?;

    let mut in_cluster = vec![false; flows.len()];
    for &i in &peeled.anomalous_flows {
        in_cluster[i] = true;
    }
    let verdicts = flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let ocsvm = crate::ocsvm::is_anomaly(decision_values[i]);
            Verdict {
                flow_id: f.id.clone(),
                bicluster: in_cluster[i],
                ocsvm,
                joint: in_cluster[i] && ocsvm,
                truth: f.is_attack(),
            }
        })
        .collect();
    Ok(Detection {
        verdicts,
        decision_values,
        feature_names: raw.columns().to_vec(),
        trace: peeled.trace,
    })
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format: &'a str,
    version: u32,
    model: &'a DetectorModel,
}

#[derive(Deserialize)]
struct ModelHeader {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct ModelFileIn {
    model: DetectorModel,
}

pub fn model_to_json(model: &DetectorModel) -> Result<String> {
    serde_json::to_string(&ModelFileOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        model,
    })
    .map_err(|e| Error::InvariantViolation(format!("model serialization failed: {e}")))
}

pub fn model_from_json(text: &str) -> Result<DetectorModel> {
    let header: ModelHeader = serde_json::from_str(text).map_err(|e| Error::Deserialization(e.to_string()))?;
    if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
        return Err(Error::IncompatibleModel(format!(
            "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
            header.format, header.version
        )));
    }
    let file: ModelFileIn = serde_json::from_str(text).map_err(|e| Error::Deserialization(e.to_string()))?;
    Ok(file.model)
}

pub fn save_model(model: &DetectorModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DetectorModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

fn vote(v: bool) -> &'static str {
    if v {
        "anomaly"
    } else {
        "benign"
    }
}

/// CSV: flow_id, bicluster, ocsvm, joint, truth.
pub fn write_verdicts<W: Write>(verdicts: &[Verdict], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::io("<csv>", e.into());
    out.write_record(["flow_id", "bicluster", "ocsvm", "joint", "truth"])
        .map_err(err)?;
    for v in verdicts {
        out.write_record([
            v.flow_id.as_str(),
            vote(v.bicluster),
            vote(v.ocsvm),
            vote(v.joint),
            if v.truth { "attack" } else { "benign" },
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicluster::Peeler;
    use crate::testutil::nsl_table;

    fn small_config() -> DetectorConfig {
        DetectorConfig {
            nu: 0.05,
            threshold: 0.1,
            ..DetectorConfig::default()
        }
    }

    #[test]
    fn joint_is_the_intersection() {
        let model = train_pipeline(&nsl_table(600, 0.04, 1), &small_config()).unwrap();
        let det = detect(&model, &nsl_table(400, 0.04, 2)).unwrap();
        assert_eq!(det.verdicts.len(), 400);
        for v in &det.verdicts {
            assert_eq!(v.joint, v.bicluster && v.ocsvm);
        }
        assert!(det.verdicts.iter().any(|v| v.joint));
    }

    #[test]
    fn empty_training_table() {
        let t = nsl_table(10, 0.0, 1);
        let empty = t.select(&[]);
        assert_eq!(
            train_pipeline(&empty, &small_config()).unwrap_err().name(),
            "EmptyInput"
        );
    }

    #[test]
    fn identical_runs_give_identical_models() {
        let t = nsl_table(500, 0.04, 3);
        let a = model_to_json(&train_pipeline(&t, &small_config()).unwrap()).unwrap();
        let b = model_to_json(&train_pipeline(&t, &small_config()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn persisted_model_round_trips() {
        let model = train_pipeline(&nsl_table(500, 0.04, 4), &small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        let test = nsl_table(200, 0.04, 5);
        let (a, b) = (detect(&model, &test).unwrap(), detect(&back, &test).unwrap());
        assert_eq!(a.verdicts, b.verdicts);
        assert_eq!(a.decision_values, b.decision_values);
    }

    #[test]
    fn corrupt_and_foreign_model_files() {
        let model = train_pipeline(&nsl_table(300, 0.04, 6), &small_config()).unwrap();
        let text = model_to_json(&model).unwrap();
        let err = model_from_json(&text[..text.len() / 2]).unwrap_err();
        assert_eq!(err.name(), "DeserializationError");
        let err = model_from_json(&text.replacen("\"version\":1", "\"version\":99", 1)).unwrap_err();
        assert_eq!(err.name(), "IncompatibleModel");
    }

    #[test]
    fn schema_mismatch() {
        let model = train_pipeline(&nsl_table(300, 0.04, 7), &small_config()).unwrap();
        let mut other = model.clone();
        other.schema_id = "unsw-nb15".into();
        assert_eq!(
            detect(&other, &nsl_table(50, 0.04, 8)).unwrap_err().name(),
            "SchemaMismatch"
        );
    }

    #[test]
    fn training_outliers_grow_with_nu() {
        let t = nsl_table(1500, 0.034, 9);
        let counts: Vec<usize> = [0.01, 0.035, 0.1]
            .iter()
            .map(|&nu| {
                let cfg = DetectorConfig {
                    nu,
                    ..DetectorConfig::default()
                };
                let model = train_pipeline(&t, &cfg).unwrap();
                detect(&model, &t).unwrap().verdicts.iter().filter(|v| v.ocsvm).count()
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn row_l1_flattens_flow_degrees() {
        let t = nsl_table(200, 0.05, 10);
        let cfg = DetectorConfig {
            bicluster_norm: BiclusterNorm::L1Rows,
            ..small_config()
        };
        let model = train_pipeline(&t, &cfg).unwrap();
        let flows = flows_from_table(&t).unwrap();
        let raw = build_feature_matrix(&flows, t.schema(), &model.feature_spec).unwrap();
        let graph = build_bigraph(&bicluster_matrix(&raw, &model).unwrap()).unwrap();
        let p = Peeler::new(&graph);
        for i in 0..graph.n_flows() {
            let d = graph.linkage(Vertex::Flow(i)).unwrap();
            assert!(d == 0.0 || (d - 1.0).abs() < 1e-12, "flow {i}: {d}");
            assert_eq!(p.degree(i), d);
        }
    }

    #[test]
    fn trace_names_flows_and_features() {
        let model = train_pipeline(&nsl_table(300, 0.04, 11), &small_config()).unwrap();
        let det = detect(&model, &nsl_table(100, 0.04, 12)).unwrap();
        let mut buf = Vec::new();
        det.write_trace(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + det.trace.steps.len());
        assert!(text.lines().nth(1).unwrap().contains(",flow,") || text.contains(",feature,"));
        assert!(text.contains("row-"));
    }

    #[test]
    fn verdict_csv() {
        let v = vec![Verdict {
            flow_id: "row-0".into(),
            bicluster: true,
            ocsvm: false,
            joint: false,
            truth: true,
        }];
        let mut buf = Vec::new();
        write_verdicts(&v, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "flow_id,bicluster,ocsvm,joint,truth\nrow-0,anomaly,benign,benign,attack\n"
        );
    }
}
