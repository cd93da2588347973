//! Dataset ingestion: CSV exports into typed flow records, five-tuple
//! grouping, attack-rate downsampling and train/test splitting.

mod sampling;
mod schema;
mod table_file;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sampling::{
    downsample_attack_indices, downsample_attacks, sample_then_split_indices, split_train_test, subsample, SplitMode,
};
pub use schema::{ColumnDef, ColumnRole, DatasetSchema, IdentityField, LabelRule};
pub use table_file::{read_table, write_table, TABLE_FORMAT, TABLE_VERSION};

/// Source IP, destination IP, source port, destination port, protocol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey {
    pub src_ip: String,
    pub dst_ip: String,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: String,
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}->{}:{}/{}",
            self.src_ip, self.src_port, self.dst_ip, self.dst_port, self.protocol
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }
}

/// Ground truth. The category is kept for reporting only; detectors never
/// look at labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Attack(String),
}

impl Label {
    pub fn is_attack(&self) -> bool {
        matches!(self, Label::Attack(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// Absent for datasets that ship one row per flow.
    pub key: Option<FlowKey>,
    /// Value columns in schema order, see [`DatasetSchema::value_index`].
    pub values: Vec<Value>,
    pub label: Label,
}

impl FlowRecord {
    pub fn numeric(&self, value_idx: usize) -> Option<f64> {
        self.values.get(value_idx).and_then(Value::as_f64)
    }
}

/// An ordered, immutable collection of records under one schema.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTable {
    schema: Arc<DatasetSchema>,
    records: Vec<FlowRecord>,
}

impl FlowTable {
    pub fn new(schema: Arc<DatasetSchema>, records: Vec<FlowRecord>) -> Self {
        FlowTable { schema, records }
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attack_count(&self) -> usize {
        self.records.iter().filter(|r| r.label.is_attack()).count()
    }

    /// Fraction of attack records; 0 for an empty table.
    pub fn attack_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.attack_count() as f64 / self.records.len() as f64
        }
    }

    /// A new table with the records at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FlowTable {
        FlowTable {
            schema: Arc::clone(&self.schema),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Appends another table's records. Schemas must match.
    pub fn concat(mut self, other: FlowTable) -> Result<FlowTable> {
        if self.schema.id() != other.schema.id() {
            return Err(Error::SchemaMismatch(format!(
                "cannot concatenate `{}` and `{}` tables",
                self.schema.id(),
                other.schema.id()
            )));
        }
        self.records.extend(other.records);
        Ok(self)
    }
}

/// Reads one CSV export into a [`FlowTable`], preserving row order.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<FlowTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, schema)
}

/// Loads several files that share a schema (the UNSW export is split in four).
pub fn load_datasets<P: AsRef<Path>>(paths: &[P], schema: &DatasetSchema) -> Result<FlowTable> {
    let mut out: Option<FlowTable> = None;
    for p in paths {
        let t = load_dataset(p.as_ref(), schema)?;
        out = Some(match out {
            Some(acc) => acc.concat(t)?,
            None => t,
        });
    }
    out.ok_or_else(|| Error::EmptyInput("no dataset files given".into()))
}

pub fn read_dataset<R: std::io::Read>(reader: R, schema: &DatasetSchema) -> Result<FlowTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let columns = schema.columns();
    let mut rows = rdr.records();
    // order[i] = position in the file row of schema column i
    let mut order: Vec<usize> = (0..columns.len()).collect();
    let mut first_line = 1;

    if schema.has_header() {
        let header = match rows.next() {
            Some(h) => h.map_err(csv_err)?,
            None => return Err(Error::EmptyInput("file has no header row".into())),
        };
        let pos: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
        if header.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "header has {} columns, schema `{}` expects {}",
                header.len(),
                schema.id(),
                columns.len()
            )));
        }
        for (i, c) in columns.iter().enumerate() {
            order[i] = *pos
                .get(c.name.as_str())
                .ok_or_else(|| Error::SchemaMismatch(format!("header lacks column `{}`", c.name)))?;
        }
        first_line = 2;
    }

    let identity = schema.identity_columns();
    let mut records = Vec::new();
    for (n, row) in rows.enumerate() {
        let row = row.map_err(csv_err)?;
        let line = first_line + n;
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        if row.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "row {line} has {} columns, schema `{}` expects {}",
                row.len(),
                schema.id(),
                columns.len()
            )));
        }
        let cell = |col: usize| &row[order[col]];

        let key = match identity {
            Some(idx) => Some(FlowKey {
                src_ip: cell(idx[0]).to_string(),
                src_port: parse_port(cell(idx[1]), line, &columns[idx[1]].name)?,
                dst_ip: cell(idx[2]).to_string(),
                dst_port: parse_port(cell(idx[3]), line, &columns[idx[3]].name)?,
                protocol: cell(idx[4]).to_string(),
            }),
            None => None,
        };

        let mut values = Vec::with_capacity(schema.value_columns().len());
        for &c in schema.value_columns() {
            values.push(parse_value(cell(c), &columns[c], line)?);
        }

        let raw_label = cell(schema.label_column());
        let label = if schema.is_benign(raw_label) {
            Label::Benign
        } else {
            let category = match schema.category_value() {
                Some(v) => match &values[v] {
                    Value::Cat(s) if !s.is_empty() => s.clone(),
                    _ => raw_label.to_string(),
                },
                None => raw_label.to_string(),
            };
            Label::Attack(category)
        };

        records.push(FlowRecord { key, values, label });
    }

    if records.is_empty() {
        return Err(Error::EmptyInput("no data rows".into()));
    }
    Ok(FlowTable::new(Arc::new(schema.clone()), records))
}

fn csv_err(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

fn parse_port(cell: &str, row: usize, column: &str) -> Result<u16> {
    // the UNSW export writes some ports in hex and ICMP ports as "-"
    let parsed = if cell.is_empty() || cell == "-" {
        Ok(0)
    } else if let Some(hex) = cell.strip_prefix("0x").or_else(|| cell.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16)
    } else {
        cell.parse::<u32>()
    };
    match parsed {
        Ok(p) if p <= u16::MAX as u32 => Ok(p as u16),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("invalid port `{cell}`"),
        }),
    }
}

fn parse_value(cell: &str, col: &ColumnDef, row: usize) -> Result<Value> {
    let fail = |message: String| Error::Parse {
        row,
        column: col.name.clone(),
        message,
    };
    match col.role {
        ColumnRole::Categorical => Ok(Value::Cat(cell.to_string())),
        ColumnRole::Boolean => match cell.to_ascii_lowercase().as_str() {
            "1" | "true" | "t" | "yes" | "y" => Ok(Value::Num(1.0)),
            "0" | "false" | "f" | "no" | "n" => Ok(Value::Num(0.0)),
            _ => Err(fail(format!("`{cell}` is not a boolean"))),
        },
        ColumnRole::Numeric => {
            if cell.is_empty() && col.empty_as_zero {
                return Ok(Value::Num(0.0));
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Value::Num(v)),
                _ => Err(fail(format!("`{cell}` is not a finite number"))),
            }
        }
        ColumnRole::Identity | ColumnRole::Label => unreachable!("not a value column"),
    }
}

/// Record indices of each five-tuple, groups in order of first occurrence.
fn five_tuple_indices(table: &FlowTable) -> Result<Vec<Vec<usize>>> {
    let mut index: HashMap<&FlowKey, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, r) in table.records().iter().enumerate() {
        let key = r.key.as_ref().ok_or(Error::MissingIdentity(i))?;
        match index.get(key) {
            Some(&g) => groups[g].push(i),
            None => {
                index.insert(key, groups.len());
                groups.push(vec![i]);
            }
        }
    }
    Ok(groups)
}

/// Partitions records by five-tuple. Groups appear in order of first
/// occurrence and keep their records' relative order.
pub fn group_by_five_tuple(table: &FlowTable) -> Result<Vec<(FlowKey, Vec<&FlowRecord>)>> {
    let recs = table.records();
    Ok(five_tuple_indices(table)?
        .into_iter()
        .map(|g| {
            let key = recs[g[0]].key.clone().expect("checked while grouping");
            (key, g.into_iter().map(|i| &recs[i]).collect())
        })
        .collect())
}

/// Record indices of every flow: five-tuple groups when the schema groups,
/// one record per flow otherwise.
pub fn flow_indices(table: &FlowTable) -> Result<Vec<Vec<usize>>> {
    if table.schema().groups_by_five_tuple() {
        five_tuple_indices(table)
    } else {
        Ok((0..table.len()).map(|i| vec![i]).collect())
    }
}
