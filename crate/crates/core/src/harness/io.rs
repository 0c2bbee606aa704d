use std::io::{Read, Write};

use serde_json::{json, Value};

use super::{GridConfig, SimulationRecord};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

pub(crate) const RECORD_HEADER: [&str; 10] = [
    "m",
    "beta",
    "alpha",
    "n",
    "reps",
    "V",
    "stderr_V",
    "mean_iterations",
    "nonconverged",
    "seed",
];

pub fn write_records_csv<W: Write>(records: &[SimulationRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_records_csv`]; the header must match exactly.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<SimulationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected CSV header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            RECORD_HEADER.join(",")
        )));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// JSON description of a grid run.
pub fn grid_manifest(cfg: &GridConfig) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "simulate",
        "generator": concat!("smeary-core ", env!("CARGO_PKG_VERSION")),
        "config": cfg,
        "columns": RECORD_HEADER,
    })
}
