use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNSW_NB15: &str = include_str!("../../config/schemas/unsw-nb15.toml");
const NSL_KDD: &str = include_str!("../../config/schemas/nsl-kdd.toml");

/// Which part of the five-tuple an identity column carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityField {
    SrcIp,
    SrcPort,
    DstIp,
    DstPort,
    Protocol,
}

impl IdentityField {
    pub const ALL: [IdentityField; 5] = [
        IdentityField::SrcIp,
        IdentityField::SrcPort,
        IdentityField::DstIp,
        IdentityField::DstPort,
        IdentityField::Protocol,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnRole {
    Identity,
    Numeric,
    Categorical,
    /// Decoded to 0/1 at ingest.
    Boolean,
    Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub role: ColumnRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<IdentityField>,
    /// Blank cells in a numeric column read as 0 instead of failing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_as_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRule {
    /// Label values meaning benign; anything else is an attack.
    pub benign: Vec<String>,
    /// Column whose text names the attack category. When absent the raw
    /// label value is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_column: Option<String>,
}

/// On-disk form of a schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SchemaDoc {
    id: String,
    #[serde(default)]
    header: bool,
    #[serde(default)]
    group_by_five_tuple: bool,
    label: LabelRule,
    columns: Vec<ColumnDef>,
}

/// Column layout of a dataset export plus the rule that decodes labels.
///
/// Value columns are every column that is neither identity nor label, in
/// file order; records store their values in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct DatasetSchema {
    doc: SchemaDoc,
    value_columns: Vec<usize>,
    value_index: HashMap<String, usize>,
    label_column: usize,
    category_value: Option<usize>,
    identity: Option<[usize; 5]>,
}

impl TryFrom<SchemaDoc> for DatasetSchema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("schema `{}`: {msg}", doc.id));

        let mut seen = HashMap::new();
        for (i, c) in doc.columns.iter().enumerate() {
            if seen.insert(c.name.as_str(), i).is_some() {
                return Err(bad(format!("duplicate column `{}`", c.name)));
            }
        }

        let labels: Vec<usize> = doc
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Label)
            .map(|(i, _)| i)
            .collect();
        if labels.len() != 1 {
            return Err(bad(format!(
                "expected exactly one label column, found {}",
                labels.len()
            )));
        }

        let mut slots: [Option<usize>; 5] = [None; 5];
        for (i, c) in doc.columns.iter().enumerate() {
            match (c.role, c.field) {
                (ColumnRole::Identity, Some(f)) => {
                    if slots[f.slot()].replace(i).is_some() {
                        return Err(bad(format!("identity field {f:?} mapped twice")));
                    }
                }
                (ColumnRole::Identity, None) => {
                    return Err(bad(format!("identity column `{}` has no field", c.name)));
                }
                (_, Some(_)) => {
                    return Err(bad(format!("column `{}` has a field but is not identity", c.name)));
                }
                _ => {}
            }
        }
        let present = slots.iter().filter(|s| s.is_some()).count();
        let identity = match (doc.group_by_five_tuple, present) {
            (true, 5) => Some(slots.map(|s| s.unwrap())),
            (false, 0) => None,
            (true, n) => return Err(bad(format!("grouping needs all five identity fields, found {n}"))),
            (false, _) => return Err(bad("identity columns present but grouping disabled".into())),
        };

        let value_columns: Vec<usize> = doc
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(c.role, ColumnRole::Identity | ColumnRole::Label))
            .map(|(i, _)| i)
            .collect();
        let value_index: HashMap<String, usize> = value_columns
            .iter()
            .enumerate()
            .map(|(v, &c)| (doc.columns[c].name.clone(), v))
            .collect();

        let category_value = match &doc.label.category_column {
            Some(name) => match value_index.get(name) {
                Some(&v) if doc.columns[value_columns[v]].role == ColumnRole::Categorical => Some(v),
                _ => {
                    return Err(bad(format!(
                        "category column `{name}` must be a categorical value column"
                    )))
                }
            },
            None => None,
        };

        Ok(DatasetSchema {
            label_column: labels[0],
            value_columns,
            value_index,
            category_value,
            identity,
            doc,
        })
    }
}

impl From<DatasetSchema> for SchemaDoc {
    fn from(s: DatasetSchema) -> Self {
        s.doc
    }
}

impl DatasetSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: SchemaDoc = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        doc.try_into()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Schemas shipped with the crate: `unsw-nb15` and `nsl-kdd`.
    pub fn builtin(id: &str) -> Option<Self> {
        let text = match id {
            "unsw-nb15" => UNSW_NB15,
            "nsl-kdd" => NSL_KDD,
            _ => return None,
        };
        Some(Self::from_toml(text).expect("builtin schema is valid"))
    }

    /// A builtin id, or else a path to a schema file.
    pub fn resolve(id_or_path: &str) -> Result<Self> {
        match Self::builtin(id_or_path) {
            Some(s) => Ok(s),
            None => Self::from_file(Path::new(id_or_path)),
        }
    }

    pub fn id(&self) -> &str {
        &self.doc.id
    }

    pub fn has_header(&self) -> bool {
        self.doc.header
    }

    pub fn groups_by_five_tuple(&self) -> bool {
        self.doc.group_by_five_tuple
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.doc.columns
    }

    pub fn label_rule(&self) -> &LabelRule {
        &self.doc.label
    }

    pub fn label_column(&self) -> usize {
        self.label_column
    }

    /// Column index for each five-tuple field, in [`IdentityField::ALL`] order.
    pub fn identity_columns(&self) -> Option<[usize; 5]> {
        self.identity
    }

    /// File-column indices of the value columns.
    pub fn value_columns(&self) -> &[usize] {
        &self.value_columns
    }

    pub fn value_names(&self) -> impl Iterator<Item = &str> {
        self.value_columns.iter().map(|&c| self.doc.columns[c].name.as_str())
    }

    /// Position of a named column within a record's values.
    pub fn value_index(&self, name: &str) -> Option<usize> {
        self.value_index.get(name).copied()
    }

    pub fn value_role(&self, value_idx: usize) -> ColumnRole {
        self.doc.columns[self.value_columns[value_idx]].role
    }

    pub(crate) fn category_value(&self) -> Option<usize> {
        self.category_value
    }

    pub fn is_benign(&self, raw_label: &str) -> bool {
        self.doc.label.benign.iter().any(|b| b == raw_label)
    }
}
