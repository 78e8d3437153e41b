//! CSV schema: `timestamp,target,clear_sky,<feature...>` with ISO-8601 UTC
//! hourly timestamps; an empty field marks a missing value.

use std::io::{Read, Write};

use super::{fill_missing_zeros, format_timestamp, parse_timestamp, Dataset, RawSeries};
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

fn parse_field(field: &str, row: usize, col: &str) -> Result<Option<f64>> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    f.parse::<f64>().map(Some).map_err(|_| Error::Data(format!("row {row}, column `{col}`: `{f}` is not a number")))
}

pub fn read_raw_csv<R: Read>(reader: R) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 4 || header[0] != "timestamp" || header[1] != "target" || header[2] != "clear_sky" {
        return Err(Error::Data("header must start with `timestamp,target,clear_sky` followed by at least one feature".into()));
    }
    let mut raw = RawSeries { feature_names: header[3..].to_vec(), ..Default::default() };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 2;
        if rec.len() != header.len() {
            return Err(Error::Data(format!("row {row} has {} fields, header has {}", rec.len(), header.len())));
        }
        raw.timestamps.push(parse_timestamp(&rec[0])?);
        raw.target.push(parse_field(&rec[1], row, "target")?);
        raw.clear_sky.push(parse_field(&rec[2], row, "clear_sky")?);
        raw.features.push(rec.iter().skip(3).zip(&header[3..]).map(|(f, col)| parse_field(f, row, col)).collect::<Result<_>>()?);
    }
    Ok(raw)
}

/// Reads and zero-fills a dataset.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    fill_missing_zeros(&read_raw_csv(reader)?)
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec!["timestamp".to_string(), "target".into(), "clear_sky".into()];
    header.extend(dataset.feature_names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for r in dataset.records() {
        let mut row = vec![format_timestamp(r.timestamp), r.target.to_string(), r.clear_sky.to_string()];
        row.extend(r.features.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("csv writer", e))
}
