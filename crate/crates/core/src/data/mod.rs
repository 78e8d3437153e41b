//! Hourly irradiance datasets: generation, ingestion, preprocessing,
//! windowing and year-based splits.

mod clearsky;
mod csv_io;
mod scaler;
mod split;
mod synth;
mod time;
mod window;

pub use clearsky::{clearsky_curve, solar_elevation_deg};
pub use csv_io::{read_csv, read_raw_csv, write_csv};
pub use scaler::{ChannelRange, MinMaxScaler, SCALER_EPSILON};
pub use split::{split_by_year, Splits};
pub use synth::{synthesize_dataset, SyntheticConfig};
pub use time::{calendar_year, embed_time, format_timestamp, parse_timestamp, timestamp_of, TimeEmbedding};
pub use window::{make_windows, WindowedSample};

use crate::{Error, Result};

/// One hour of data. `timestamp` counts whole hours since the Unix epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceRecord {
    pub timestamp: i64,
    pub features: Vec<f64>,
    pub target: f64,
    pub clear_sky: f64,
}

/// An ordered, gap-free (up to skipped leap days) hourly series.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<IrradianceRecord>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, records: Vec<IrradianceRecord>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::Data("dataset needs at least one feature".into()));
        }
        let d = feature_names.len();
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != d {
                return Err(Error::Data(format!("record {i} has {} features, expected {d}", r.features.len())));
            }
            if r.features.iter().any(|v| !v.is_finite()) || !r.target.is_finite() || !r.clear_sky.is_finite() {
                return Err(Error::Data(format!("record {i} contains a non-finite value")));
            }
            if r.clear_sky < 0.0 {
                return Err(Error::Data(format!("record {i} has negative clear sky {}", r.clear_sky)));
            }
            if r.target < 0.0 {
                return Err(Error::Data(format!("record {i} has negative target {}", r.target)));
            }
        }
        for (i, pair) in records.windows(2).enumerate() {
            let (a, b) = (pair[0].timestamp, pair[1].timestamp);
            if b <= a {
                return Err(Error::Data(format!("timestamps not increasing at record {}", i + 1)));
            }
            if b - a != 1 && !time::skips_leap_day(a, b) {
                return Err(Error::Data(format!("gap of {} h between records {i} and {}", b - a, i + 1)));
            }
        }
        Ok(Self { records, feature_names })
    }

    pub fn records(&self) -> &[IrradianceRecord] {
        &self.records
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Calendar years present, ascending.
    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.records.iter().map(|r| calendar_year(r.timestamp)).collect();
        years.dedup();
        years
    }

    /// Keeps only the named feature channels, in the given order.
    pub fn select_features(&self, names: &[&str]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.feature_index(n).ok_or_else(|| Error::invalid(format!("unknown feature `{n}`"))))
            .collect::<Result<Vec<_>>>()?;
        let records = self
            .records
            .iter()
            .map(|r| IrradianceRecord { features: idx.iter().map(|&i| r.features[i]).collect(), ..r.clone() })
            .collect();
        Ok(Dataset { records, feature_names: names.iter().map(|s| s.to_string()).collect() })
    }

    /// Contiguous sub-range `[start, end)`; the slice of a valid dataset is valid.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset { records: self.records[start..end].to_vec(), feature_names: self.feature_names.clone() }
    }
}

/// Series as read from disk, with `None` marking a missing value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSeries {
    pub feature_names: Vec<String>,
    pub timestamps: Vec<i64>,
    pub target: Vec<Option<f64>>,
    pub clear_sky: Vec<Option<f64>>,
    /// Row-major, `timestamps.len()` rows of `feature_names.len()` values.
    pub features: Vec<Vec<Option<f64>>>,
}

/// Replaces every missing value by zero and validates the result.
pub fn fill_missing_zeros(raw: &RawSeries) -> Result<Dataset> {
    let fill = |v: &Option<f64>| v.unwrap_or(0.0);
    let n = raw.timestamps.len();
    if raw.target.len() != n || raw.clear_sky.len() != n || raw.features.len() != n {
        return Err(Error::Data("raw series columns have different lengths".into()));
    }
    let records = (0..n)
        .map(|i| IrradianceRecord {
            timestamp: raw.timestamps[i],
            features: raw.features[i].iter().map(fill).collect(),
            target: fill(&raw.target[i]),
            clear_sky: fill(&raw.clear_sky[i]),
        })
        .collect();
    Dataset::new(raw.feature_names.clone(), records)
}
