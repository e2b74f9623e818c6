//! Curve tables with the header `d,L,h,n,seed,estimate,se`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::McEstimate;

pub const HEADER: &str = "d,L,h,n,seed,estimate,se";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: u64,
    pub h: f64,
    pub n: u64,
    pub seed: u64,
    pub estimate: f64,
    pub se: f64,
}

impl CurveRow {
    pub fn new(d: usize, l: u64, h: f64, e: &McEstimate) -> Self {
        CurveRow { d, l, h, n: e.n, seed: e.seed, estimate: e.value, se: e.se }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Floats are written in shortest round-trip form, so reading back is exact.
pub fn write_rows(rows: &[CurveRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).unwrap();
    Ok(format!("{HEADER}\n{body}"))
}

pub fn read_rows(text: &str) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header.join(",") != HEADER {
        return Err(Error::Config(format!("unexpected header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
