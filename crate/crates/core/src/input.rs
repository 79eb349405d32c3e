//! Reading observation tables.
//!
//! The table is CSV with the header `x,observed,mean,sigma` and one row per
//! observation, in order. Row numbers in errors count data rows from 1.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::runs::{Observation, ObservationSeries};

pub const HEADER: [&str; 4] = ["x", "observed", "mean", "sigma"];

#[derive(Debug, Deserialize)]
struct Row {
    x: f64,
    observed: f64,
    mean: f64,
    sigma: f64,
}

pub fn read_series<R: Read>(reader: R) -> Result<ObservationSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(None, format!("cannot read header: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::data(
            None,
            format!("expected header '{}', found '{}'", HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut obs = Vec::new();
    for (i, record) in rdr.deserialize::<Row>().enumerate() {
        let row = i + 1;
        let r = record.map_err(|e| Error::data(Some(row), describe(&e)))?;
        obs.push(Observation {
            x: r.x,
            observed: r.observed,
            mean: r.mean,
            sigma: r.sigma,
        });
    }
    ObservationSeries::new(obs)
}

pub fn read_series_file(path: &Path) -> Result<ObservationSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(None, format!("cannot open {}: {e}", path.display())))?;
    read_series(std::io::BufReader::new(file))
}

fn describe(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("column '{}': {}", HEADER.get(f as usize).unwrap_or(&"?"), err.kind()),
            None => err.kind().to_string(),
        },
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    }
}
