//! Point errors and probabilistic calibration: MAE, RMSE, quantile loss,
//! PICP, ACE, reliability, per-horizon RMSE.
//!
//! Functions that take a [`ForecastOutput`] work in whatever units the output
//! is in. For evaluation in W/m², extract a [`QuantileTable`], map it through
//! the inverse scaler, and use the table-based functions.

use serde::{Deserialize, Serialize};

use crate::distributions::ContinuousDistribution;
use crate::losses::{self, QuantileSet};
use crate::nn::ForecastOutput;
use crate::{Error, Result};

/// `{0.1, 0.2, …, 0.9}`
pub fn default_coverages() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// `{0.05, 0.10, …, 0.95}`
pub fn default_reliability_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Shape("empty input".into()));
    }
    Ok(())
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    same_len(y.len(), y_hat.len())?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    same_len(y.len(), y_hat.len())?;
    Ok((y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

/// RMSE per horizon index; `y` and `y_hat` are `batch × horizon`.
pub fn per_horizon_rmse(y: &[f64], y_hat: &[f64], horizon: usize) -> Result<Vec<f64>> {
    same_len(y.len(), y_hat.len())?;
    if horizon == 0 || !y.len().is_multiple_of(horizon) {
        return Err(Error::Shape(format!("{} values do not split into horizon {horizon}", y.len())));
    }
    let batch = (y.len() / horizon) as f64;
    let mut sums = vec![0.0; horizon];
    for (i, (a, b)) in y.iter().zip(y_hat).enumerate() {
        sums[i % horizon] += (a - b).powi(2);
    }
    Ok(sums.into_iter().map(|s| (s / batch).sqrt()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub coverage: f64,
}

impl PredictionInterval {
    pub fn new(lower: f64, upper: f64, coverage: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::invalid(format!("interval lower {lower} above upper {upper}")));
        }
        if !(coverage > 0.0 && coverage < 1.0) {
            return Err(Error::invalid(format!("coverage {coverage} outside (0, 1)")));
        }
        Ok(Self { lower, upper, coverage })
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// Predicted quantiles at fixed levels, one row of `levels.len()` values per
/// forecast point (batch-major, then horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

impl QuantileTable {
    pub fn rows(&self) -> usize {
        self.values.len() / self.levels.len().max(1)
    }

    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|q| (q - level).abs() < 1e-9)
    }

    pub fn column(&self, level: f64) -> Option<Vec<f64>> {
        let k = self.level_index(level)?;
        Some(self.values.chunks(self.levels.len()).map(|row| row[k]).collect())
    }

    /// Applies a monotone increasing map (e.g. inverse scaling) to every value.
    pub fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.values.iter_mut().for_each(|v| *v = f(*v));
        self
    }

    /// Central interval per row for coverage `c`.
    pub fn intervals(&self, c: f64) -> Result<Vec<PredictionInterval>> {
        let (lo, hi) = interval_levels(c);
        let (Some(a), Some(b)) = (self.level_index(lo), self.level_index(hi)) else {
            return Err(Error::Config(format!("coverage {c} needs quantiles {lo} and {hi}")));
        };
        self.values.chunks(self.levels.len()).map(|row| PredictionInterval::new(row[a], row[b].max(row[a]), c)).collect()
    }
}

fn interval_levels(c: f64) -> (f64, f64) {
    (round12((1.0 - c) / 2.0), round12((1.0 + c) / 2.0))
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn coverage_error(c: f64, q: &QuantileSet) -> Error {
    Error::Config(format!("coverage {c} has no matching quantile pair; available coverages: {:?}", q.available_coverages()))
}

/// Quantiles at `levels` for every forecast point. Quantile heads only
/// provide their own levels; point forecasts provide none.
pub fn quantiles_from_output(out: &ForecastOutput, levels: &[f64]) -> Result<QuantileTable> {
    let values = match out {
        ForecastOutput::Point { .. } => {
            return Err(Error::Config("deterministic forecasts carry no quantiles".into()));
        }
        ForecastOutput::Quantiles { levels: q, values, .. } => {
            let idx = levels
                .iter()
                .map(|&l| {
                    q.index_of(l)
                        .ok_or_else(|| Error::Config(format!("quantile {l} not predicted; available levels: {:?}", q.levels())))
                })
                .collect::<Result<Vec<_>>>()?;
            values.chunks(q.len()).flat_map(|row| idx.iter().map(move |&k| row[k])).collect()
        }
        ForecastOutput::Params { values, .. } => values.iter().flat_map(|d| levels.iter().map(move |&p| d.quantile(p))).collect(),
    };
    Ok(QuantileTable { levels: levels.to_vec(), values })
}

/// One list of intervals per coverage, each covering every forecast point.
pub fn intervals_from_output(out: &ForecastOutput, coverages: &[f64]) -> Result<Vec<Vec<PredictionInterval>>> {
    if let ForecastOutput::Quantiles { levels, .. } = out {
        for &c in coverages {
            let (lo, hi) = interval_levels(c);
            if levels.index_of(lo).is_none() || levels.index_of(hi).is_none() {
                return Err(coverage_error(c, levels));
            }
        }
    }
    let mut grid: Vec<f64> = coverages.iter().flat_map(|&c| <[f64; 2]>::from(interval_levels(c))).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let table = quantiles_from_output(out, &grid)?;
    coverages.iter().map(|&c| table.intervals(c)).collect()
}

/// Fraction of `y` inside the closed intervals.
pub fn picp(y: &[f64], intervals: &[PredictionInterval]) -> Result<f64> {
    same_len(y.len(), intervals.len())?;
    let hits = y.iter().zip(intervals).filter(|(v, iv)| iv.contains(**v)).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Mean absolute gap between nominal and observed coverage.
pub fn ace(picps: &[f64], coverages: &[f64]) -> Result<f64> {
    same_len(picps.len(), coverages.len())?;
    Ok(picps.iter().zip(coverages).map(|(p, c)| (c - p).abs()).sum::<f64>() / picps.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPoint {
    pub p: f64,
    pub frequency: f64,
}

/// Observed frequency of `y` at or below each predicted quantile.
pub fn reliability_from_table(y: &[f64], table: &QuantileTable) -> Result<Vec<ReliabilityPoint>> {
    same_len(y.len(), table.rows())?;
    let width = table.levels.len();
    let n = y.len() as f64;
    Ok(table
        .levels
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let below = y.iter().zip(table.values.chunks(width)).filter(|(v, row)| **v <= row[k]).count();
            ReliabilityPoint { p, frequency: below as f64 / n }
        })
        .collect())
}

/// Reliability on `grid`; quantile heads are restricted to their own levels.
pub fn reliability(y: &[f64], out: &ForecastOutput, grid: &[f64]) -> Result<Vec<ReliabilityPoint>> {
    let levels = reliability_levels(out, grid);
    reliability_from_table(y, &quantiles_from_output(out, &levels)?)
}

pub(crate) fn reliability_levels(out: &ForecastOutput, grid: &[f64]) -> Vec<f64> {
    match out {
        ForecastOutput::Quantiles { levels, .. } => levels.levels().to_vec(),
        _ => grid.to_vec(),
    }
}

/// Point forecast per output: the value itself, the 0.5 quantile, or the
/// distribution median.
pub fn point_forecast(out: &ForecastOutput) -> Result<Vec<f64>> {
    match out {
        ForecastOutput::Point { values, .. } => Ok(values.clone()),
        ForecastOutput::Quantiles { levels, .. } => {
            if levels.median_index().is_none() {
                return Err(Error::Config(format!("quantile set {:?} has no 0.5 level for a point forecast", levels.levels())));
            }
            Ok(quantiles_from_output(out, &[0.5])?.values)
        }
        ForecastOutput::Params { .. } => Ok(quantiles_from_output(out, &[0.5])?.values),
    }
}

/// Quantile set scored by [`quantile_loss`]: the head's own levels for
/// quantile heads, the standard five-level set for distribution heads.
pub fn scoring_quantiles(out: &ForecastOutput) -> Option<QuantileSet> {
    match out {
        ForecastOutput::Point { .. } => None,
        ForecastOutput::Quantiles { levels, .. } => Some(levels.clone()),
        ForecastOutput::Params { .. } => Some(QuantileSet::standard()),
    }
}

/// Mean pinball loss of the quantiles extracted at `q`.
pub fn quantile_loss(y: &[f64], out: &ForecastOutput, q: &QuantileSet) -> Result<f64> {
    let table = quantiles_from_output(out, q.levels())?;
    losses::pinball(y, &table.values, q)
}

/// Calibration summary of a probabilistic forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub coverages: Vec<f64>,
    pub picp: Vec<f64>,
    pub ace: f64,
    pub reliability: Vec<ReliabilityPoint>,
    pub per_horizon_rmse: Vec<f64>,
}

impl CalibrationReport {
    /// `quantiles` must contain both endpoints of every coverage in
    /// `coverages`, the reliability levels, and 0.5 for the point forecast.
    pub fn from_table(
        y: &[f64],
        quantiles: &QuantileTable,
        coverages: &[f64],
        reliability_levels: &[f64],
        point: &[f64],
        horizon: usize,
    ) -> Result<Self> {
        let picp = coverages.iter().map(|&c| picp(y, &quantiles.intervals(c)?)).collect::<Result<Vec<_>>>()?;
        let ace = ace(&picp, coverages)?;
        let idx: Vec<usize> = reliability_levels
            .iter()
            .map(|&p| quantiles.level_index(p).ok_or_else(|| Error::Config(format!("missing quantile {p}"))))
            .collect::<Result<_>>()?;
        let width = quantiles.levels.len();
        let sub = QuantileTable {
            levels: reliability_levels.to_vec(),
            values: quantiles.values.chunks(width).flat_map(|row| idx.iter().map(move |&k| row[k])).collect(),
        };
        Ok(Self {
            coverages: coverages.to_vec(),
            picp,
            ace,
            reliability: reliability_from_table(y, &sub)?,
            per_horizon_rmse: per_horizon_rmse(y, point, horizon)?,
        })
    }

    pub fn compute(y: &[f64], out: &ForecastOutput, coverages: &[f64], grid: &[f64]) -> Result<Self> {
        if matches!(out, ForecastOutput::Point { .. }) {
            return Err(Error::Config("calibration requires a probabilistic forecast".into()));
        }
        let rel = reliability_levels(out, grid);
        let levels = table_levels(coverages, &rel);
        if let ForecastOutput::Quantiles { levels: q, .. } = out {
            if let Some(&c) = coverages.iter().find(|&&c| !q.available_coverages().iter().any(|a| (a - c).abs() < 1e-9)) {
                return Err(coverage_error(c, q));
            }
        }
        let table = quantiles_from_output(out, &levels)?;
        let point = point_forecast(out)?;
        Self::from_table(y, &table, coverages, &rel, &point, out.horizon())
    }
}

/// Sorted union of interval endpoints, reliability levels and the median.
pub fn table_levels(coverages: &[f64], reliability: &[f64]) -> Vec<f64> {
    let mut levels: Vec<f64> = coverages
        .iter()
        .flat_map(|&c| <[f64; 2]>::from(interval_levels(c)))
        .chain(reliability.iter().copied())
        .chain([0.5])
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    levels
}
