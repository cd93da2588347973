//! Prepared flow-table container.
//!
//! JSON lines. The first line is a header object:
//!
//! ```text
//! {"format":"insiderflow-flowtable","version":1,"record_count":N,"schema":{...}}
//! ```
//!
//! followed by exactly `record_count` lines, one [`FlowRecord`] each:
//! `{"key":{..}|null,"values":[..],"label":"benign"|{"attack":"<category>"}}`.
//! Numeric values are JSON numbers, categorical values JSON strings, in the
//! schema's value-column order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DatasetSchema, FlowRecord, FlowTable};
use crate::error::{Error, Result};

pub const TABLE_FORMAT: &str = "insiderflow-flowtable";
pub const TABLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    record_count: usize,
    schema: DatasetSchema,
}

pub fn write_table(path: &Path, table: &FlowTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        format: TABLE_FORMAT.to_string(),
        version: TABLE_VERSION,
        record_count: table.len(),
        schema: table.schema().clone(),
    };
    let io = |e: std::io::Error| Error::io(path, e);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(io)?;
    for r in table.records() {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_table(path: &Path) -> Result<FlowTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let de = |m: String| Error::Deserialization(format!("{}: {m}", path.display()));

    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(de("missing header".into())),
    };
    let header: Header = serde_json::from_str(&first).map_err(|e| de(e.to_string()))?;
    if header.format != TABLE_FORMAT {
        return Err(de(format!("not a flow table (format `{}`)", header.format)));
    }
    if header.version != TABLE_VERSION {
        return Err(Error::IncompatibleModel(format!(
            "flow table version {} (supported: {TABLE_VERSION})",
            header.version
        )));
    }

    let mut records = Vec::with_capacity(header.record_count);
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let r: FlowRecord = serde_json::from_str(&line).map_err(|e| de(e.to_string()))?;
        if r.values.len() != header.schema.value_columns().len() {
            return Err(de(format!("record {} has {} values", records.len(), r.values.len())));
        }
        records.push(r);
    }
    if records.len() != header.record_count {
        return Err(de(format!(
            "header promises {} records, found {}",
            header.record_count,
            records.len()
        )));
    }
    Ok(FlowTable::new(Arc::new(header.schema), records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::read_dataset;

    const ROWS: &str = "\
59.166.0.0,1390,149.171.126.6,53,udp,CON,0.001055,132,164,31,29,0,0,dns,500473.9375,621800.9375,2,2,0,0,0,0,66,82,0,0,0,0,1421927414,1421927414,0.017,0.013,0,0,0,0,0,0,0,0,3,7,1,3,1,1,1,,0
175.45.176.1,13284,149.171.126.16,80,tcp,FIN,0.1,900,300,254,252,1,1,http,3000.25,1000,10,8,255,255,1,2,90,37,1,0,0.5,0.25,1421927420,1421927421,0.0115,0.012,0.05,0.03,0.02,0,0,1,0,0,1,1,1,1,1,1,1, Exploits ,1
";

    #[test]
    fn round_trip_preserves_counts() {
        let schema = DatasetSchema::builtin("unsw-nb15").unwrap();
        let t = read_dataset(ROWS.as_bytes(), &schema).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.flows");
        write_table(&p, &t).unwrap();
        let back = read_table(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.attack_count(), 1);
    }

    #[test]
    fn truncated_file_fails() {
        let schema = DatasetSchema::builtin("unsw-nb15").unwrap();
        let t = read_dataset(ROWS.as_bytes(), &schema).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.flows");
        write_table(&p, &t).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let cut = text.lines().take(2).collect::<Vec<_>>().join("\n");
        std::fs::write(&p, cut).unwrap();
        assert_eq!(read_table(&p).unwrap_err().name(), "DeserializationError");
    }
}
