use super::Dataset;
use crate::{Error, Result};

/// One forecast origin: `window` hours of features ending at the origin and
/// the `horizon` hours that follow it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// Row-major `window × num_features`.
    pub input: Vec<f64>,
    pub window: usize,
    pub num_features: usize,
    pub target: Vec<f64>,
    pub future_clear_sky: Vec<f64>,
    /// Index of the origin (last input row) within the source dataset.
    pub origin: usize,
    pub origin_timestamp: i64,
}

impl WindowedSample {
    pub fn horizon(&self) -> usize {
        self.target.len()
    }

    pub fn input_row(&self, t: usize) -> &[f64] {
        &self.input[t * self.num_features..(t + 1) * self.num_features]
    }
}

pub fn make_windows(dataset: &Dataset, window: usize, horizon: usize, stride: usize) -> Result<Vec<WindowedSample>> {
    if window == 0 || horizon == 0 || stride == 0 {
        return Err(Error::invalid("window, horizon and stride must be positive"));
    }
    let needed = window + horizon;
    let len = dataset.len();
    if len < needed {
        return Err(Error::invalid(format!(
            "dataset has {len} hours, at least {needed} required for window {window} + horizon {horizon}"
        )));
    }
    let recs = dataset.records();
    let d = dataset.num_features();
    let count = (len - needed) / stride + 1;
    Ok((0..count)
        .map(|k| {
            let start = k * stride;
            let origin = start + window - 1;
            let mut input = Vec::with_capacity(window * d);
            for r in &recs[start..=origin] {
                input.extend_from_slice(&r.features);
            }
            let future = &recs[origin + 1..origin + 1 + horizon];
            WindowedSample {
                input,
                window,
                num_features: d,
                target: future.iter().map(|r| r.target).collect(),
                future_clear_sky: future.iter().map(|r| r.clear_sky).collect(),
                origin,
                origin_timestamp: recs[origin].timestamp,
            }
        })
        .collect())
}
