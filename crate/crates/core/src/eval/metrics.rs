use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2×2 tally with attacks as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn attacks(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn benign(&self) -> usize {
        self.fp + self.tn
    }

    pub fn flagged(&self) -> usize {
        self.tp + self.fp
    }

    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (false, true) => self.fn_ += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (p, t) in pairs {
            c.add(p, t);
        }
        c
    }
}

/// Tallies `predicted` against `truth` by flow id. Both must name the same
/// flows exactly once.
pub fn confusion<S: AsRef<str>, T: AsRef<str>>(
    predicted: &[(S, bool)],
    truth: &[(T, bool)],
) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() {
        return Err(Error::Alignment(format!(
            "{} predictions for {} labeled flows",
            predicted.len(),
            truth.len()
        )));
    }
    let mut labels: HashMap<&str, bool> = HashMap::with_capacity(truth.len());
    for (id, t) in truth {
        if labels.insert(id.as_ref(), *t).is_some() {
            return Err(Error::Alignment(format!("flow `{}` labeled twice", id.as_ref())));
        }
    }
    let mut c = ConfusionCounts::default();
    for (id, p) in predicted {
        let t = labels
            .remove(id.as_ref())
            .ok_or_else(|| Error::Alignment(format!("no label for flow `{}`", id.as_ref())))?;
        c.add(*p, t);
    }
    Ok(c)
}

/// Ratios as fractions. A ratio whose denominator is zero is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// fp / (fp + tn)
    pub fp_rate: Option<f64>,
    /// fp / total flows.
    pub fp_rate_total: f64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub fn_rate: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyInput("no flows to score".into()));
    }
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        fp_rate: ratio(c.fp, c.benign()),
        fp_rate_total: c.fp as f64 / total as f64,
        recall: ratio(c.tp, c.attacks()),
        precision: ratio(c.tp, c.flagged()),
        fn_rate: ratio(c.fn_, c.attacks()),
    })
}
