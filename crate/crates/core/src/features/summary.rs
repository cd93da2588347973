use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{group_by_five_tuple, ColumnRole, DatasetSchema, FlowKey, FlowRecord, FlowTable};

/// Mean, median, minimum and maximum of one feature across a flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourPoint {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl FourPoint {
    /// `None` for an empty series. The median of an even-length series is
    /// the midpoint of the two central values.
    pub fn of(series: &[f64]) -> Option<FourPoint> {
        if series.is_empty() {
            return None;
        }
        let mut sorted = series.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let sum: f64 = series.iter().sum();
        // clamp guards the mean against rounding outside [min, max]
        let mean = (sum / n as f64).clamp(sorted[0], sorted[n - 1]);
        Some(FourPoint {
            mean,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub key: Option<FlowKey>,
    pub records: usize,
    pub sums: BTreeMap<String, f64>,
    pub four_point: BTreeMap<String, FourPoint>,
}

/// Totals and four-point summaries of every numeric column over a group of
/// records sharing one five-tuple.
pub fn summarize_flow(group: &[&FlowRecord], schema: &DatasetSchema) -> Result<FlowSummary> {
    let first = group.first().ok_or(Error::EmptyGroup)?;
    if group.iter().any(|r| r.key != first.key) {
        return Err(Error::InvalidParameter(
            "records in a flow group must share one five-tuple".into(),
        ));
    }
    let mut sums = BTreeMap::new();
    let mut four_point = BTreeMap::new();
    for (v, name) in schema.value_names().enumerate() {
        if schema.value_role(v) == ColumnRole::Categorical {
            continue;
        }
        let series: Vec<f64> = group.iter().filter_map(|r| r.numeric(v)).collect();
        sums.insert(name.to_string(), series.iter().sum());
        if let Some(fp) = FourPoint::of(&series) {
            four_point.insert(name.to_string(), fp);
        }
    }
    Ok(FlowSummary {
        key: first.key.clone(),
        records: group.len(),
        sums,
        four_point,
    })
}

/// One unit of classification: the records of a five-tuple, or a single row
/// for datasets that are already flow-separated.
#[derive(Clone, Debug)]
pub struct Flow<'a> {
    pub id: String,
    pub records: Vec<&'a FlowRecord>,
}

impl Flow<'_> {
    /// A flow counts as an attack when any of its records is one.
    pub fn is_attack(&self) -> bool {
        self.records.iter().any(|r| r.label.is_attack())
    }
}

/// Groups a table into flows according to its schema.
pub fn flows_from_table(table: &FlowTable) -> Result<Vec<Flow<'_>>> {
    if table.schema().groups_by_five_tuple() {
        Ok(group_by_five_tuple(table)?
            .into_iter()
            .map(|(key, records)| Flow {
                id: key.to_string(),
                records,
            })
            .collect())
    } else {
        Ok(table
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| Flow {
                id: format!("row-{i}"),
                records: vec![r],
            })
            .collect())
    }
}
