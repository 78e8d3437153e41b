//! Test-split scoring in original units for trained models and baselines.
//!
//! All predictors are scored on the same forecast origins: windows are cut
//! once with the longest context any predictor needs, then trimmed and
//! column-projected per model.

use serde::{Deserialize, Serialize};

use crate::baselines::{smart_persistence_for_windows, PERSISTENCE_HISTORY};
use crate::data::{make_windows, Dataset, MinMaxScaler, WindowedSample};
use crate::losses::{self, QuantileSet};
use crate::metrics::{self, CalibrationReport, QuantileTable};
use crate::nn::{HeadKind, Model};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub coverages: Vec<f64>,
    pub reliability_grid: Vec<f64>,
    /// Score only points whose clear sky is positive.
    pub daylight_only: bool,
    pub stride: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            coverages: metrics::default_coverages(),
            reliability_grid: metrics::default_reliability_grid(),
            daylight_only: false,
            stride: 1,
        }
    }
}

/// A forecast origin shared by every predictor.
#[derive(Debug, Clone)]
pub struct EvalWindow {
    /// Index of the contiguous run the window was cut from.
    pub run: usize,
    pub sample: WindowedSample,
}

/// Cuts windows of `context` rows from every run.
pub fn evaluation_windows(runs: &[Dataset], context: usize, horizon: usize, stride: usize) -> Result<Vec<EvalWindow>> {
    let context = context.max(PERSISTENCE_HISTORY);
    let mut out = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        if run.len() < context + horizon {
            continue;
        }
        out.extend(make_windows(run, context, horizon, stride)?.into_iter().map(|sample| EvalWindow { run: i, sample }));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("no test run holds {} hours for a window plus horizon", context + horizon)));
    }
    Ok(out)
}

/// Keeps the last `window` rows and the named columns of a sample.
pub fn project_sample(sample: &WindowedSample, names: &[String], wanted: &[String], window: usize) -> Result<WindowedSample> {
    if window > sample.window {
        return Err(Error::Shape(format!("window {window} longer than the {} h cut", sample.window)));
    }
    let cols = wanted
        .iter()
        .map(|w| names.iter().position(|n| n == w).ok_or_else(|| Error::Data(format!("missing feature column {w}"))))
        .collect::<Result<Vec<_>>>()?;
    let skip = sample.window - window;
    let input =
        (skip..sample.window).flat_map(|t| cols.iter().map(move |&c| (t, c))).map(|(t, c)| sample.input_row(t)[c]).collect();
    Ok(WindowedSample { input, window, num_features: cols.len(), ..sample.clone() })
}

/// Forecasts of one predictor over the evaluation windows, in W/m².
#[derive(Debug, Clone, PartialEq)]
pub struct ModelForecasts {
    pub name: String,
    /// `None` for baselines.
    pub head: Option<HeadKind>,
    pub horizon: usize,
    pub observed: Vec<f64>,
    pub clear_sky: Vec<f64>,
    pub point: Vec<f64>,
    pub quantiles: Option<QuantileTable>,
    /// Levels scored by the quantile loss.
    pub scoring: Option<QuantileSet>,
    pub origins: Vec<i64>,
}

fn observed(windows: &[EvalWindow]) -> (Vec<f64>, Vec<f64>, Vec<i64>) {
    let y = windows.iter().flat_map(|w| w.sample.target.iter().copied()).collect();
    let cs = windows.iter().flat_map(|w| w.sample.future_clear_sky.iter().copied()).collect();
    let t = windows.iter().map(|w| w.sample.origin_timestamp).collect();
    (y, cs, t)
}

/// Levels a probabilistic head is evaluated on; quantile heads keep only
/// coverages their levels support.
pub fn evaluation_levels(head: HeadKind, quantiles: Option<&QuantileSet>, opts: &EvalOptions) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    match (head, quantiles) {
        (HeadKind::Quantile, Some(q)) => {
            let avail = q.available_coverages();
            let cov: Vec<f64> = opts.coverages.iter().copied().filter(|c| avail.iter().any(|a| (a - c).abs() < 1e-9)).collect();
            let cov = if cov.is_empty() { avail } else { cov };
            (cov, q.levels().to_vec(), q.levels().to_vec())
        }
        _ => {
            let rel = opts.reliability_grid.clone();
            let levels = metrics::table_levels(&opts.coverages, &rel);
            (opts.coverages.clone(), rel, levels)
        }
    }
}

pub fn model_forecasts(
    name: &str,
    model: &Model,
    scaler: &MinMaxScaler,
    feature_names: &[String],
    windows: &[EvalWindow],
    opts: &EvalOptions,
) -> Result<ModelForecasts> {
    let spec = model.spec();
    let wanted: Vec<String> = scaler.features.iter().map(|c| c.name.clone()).collect();
    let scaled = windows
        .iter()
        .map(|w| scaler.scale_sample(&project_sample(&w.sample, feature_names, &wanted, spec.window)?))
        .collect::<Result<Vec<_>>>()?;
    let out = model.predict(&scaled)?;
    let unscale = |v: f64| scaler.unscale_target(v);
    let point: Vec<f64> = metrics::point_forecast(&out)?.into_iter().map(unscale).collect();
    let (quantiles, scoring) = if spec.head.is_probabilistic() {
        let (_, _, levels) = evaluation_levels(spec.head, spec.quantiles.as_ref(), opts);
        let table = metrics::quantiles_from_output(&out, &levels)?.map(unscale);
        (Some(table), metrics::scoring_quantiles(&out))
    } else {
        (None, None)
    };
    let (y, cs, origins) = observed(windows);
    Ok(ModelForecasts {
        name: name.to_string(),
        head: Some(spec.head),
        horizon: spec.horizon,
        observed: y,
        clear_sky: cs,
        point,
        quantiles,
        scoring,
        origins,
    })
}

pub fn persistence_forecasts(runs: &[Dataset], windows: &[EvalWindow]) -> Result<ModelForecasts> {
    let horizon = windows.first().map_or(0, |w| w.sample.horizon());
    let mut point = Vec::new();
    for w in windows {
        point.extend(smart_persistence_for_windows(&runs[w.run], std::slice::from_ref(&w.sample))?);
    }
    let (y, cs, origins) = observed(windows);
    Ok(ModelForecasts {
        name: "smart-persistence".into(),
        head: None,
        horizon,
        observed: y,
        clear_sky: cs,
        point,
        quantiles: None,
        scoring: None,
        origins,
    })
}

/// One row of the results table plus calibration detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub head: Option<String>,
    pub points: usize,
    pub mae: f64,
    pub rmse: f64,
    pub quantile_loss: Option<f64>,
    pub ace: Option<f64>,
    pub per_horizon_rmse: Vec<f64>,
    pub calibration: Option<CalibrationReport>,
}

fn masked_per_horizon_rmse(y: &[f64], p: &[f64], keep: &[bool], horizon: usize) -> Vec<f64> {
    let mut sums = vec![0.0; horizon];
    let mut counts = vec![0usize; horizon];
    for i in (0..y.len()).filter(|&i| keep[i]) {
        sums[i % horizon] += (y[i] - p[i]).powi(2);
        counts[i % horizon] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &n)| if n == 0 { 0.0 } else { (s / n as f64).sqrt() }).collect()
}

fn select<T: Copy>(v: &[T], keep: &[bool]) -> Vec<T> {
    v.iter().zip(keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect()
}

/// Scores one predictor. Warnings explain omitted probabilistic metrics.
pub fn score(f: &ModelForecasts, opts: &EvalOptions) -> Result<(ModelReport, Vec<String>)> {
    let mut warnings = Vec::new();
    let keep: Vec<bool> = f.clear_sky.iter().map(|&c| !opts.daylight_only || c > 0.0).collect();
    let y = select(&f.observed, &keep);
    let point = select(&f.point, &keep);
    if y.is_empty() {
        return Err(Error::Data("no points left to score".into()));
    }
    let per_horizon_rmse = masked_per_horizon_rmse(&f.observed, &f.point, &keep, f.horizon);
    let mut report = ModelReport {
        model: f.name.clone(),
        head: f.head.map(|h| h.to_string()),
        points: y.len(),
        mae: metrics::mae(&y, &point)?,
        rmse: metrics::rmse(&y, &point)?,
        quantile_loss: None,
        ace: None,
        per_horizon_rmse: per_horizon_rmse.clone(),
        calibration: None,
    };
    let (Some(table), Some(head)) = (&f.quantiles, f.head) else {
        warnings.push(format!("{}: point forecast only, calibration metrics omitted", f.name));
        return Ok((report, warnings));
    };
    let width = table.levels.len();
    let rows: Vec<f64> =
        table.values.chunks(width).zip(&keep).filter(|(_, k)| **k).flat_map(|(r, _)| r.iter().copied()).collect();
    let table = QuantileTable { levels: table.levels.clone(), values: rows };
    let (coverages, rel, _) = evaluation_levels(head, f.scoring.as_ref().filter(|_| head == HeadKind::Quantile), opts);
    if coverages.len() < opts.coverages.len() {
        warnings.push(format!("{}: only coverages {coverages:?} are available from the predicted quantiles", f.name));
    }
    let mut cal = CalibrationReport::from_table(&y, &table, &coverages, &rel, &point, 1)?;
    cal.per_horizon_rmse = per_horizon_rmse;
    if let Some(q) = &f.scoring {
        let idx: Vec<usize> = q
            .levels()
            .iter()
            .map(|&l| table.level_index(l).ok_or_else(|| Error::Config(format!("quantile {l} missing from forecasts"))))
            .collect::<Result<_>>()?;
        let qv: Vec<f64> = table.values.chunks(width).flat_map(|r| idx.iter().map(move |&k| r[k])).collect();
        report.quantile_loss = Some(losses::pinball(&y, &qv, q)?);
    }
    report.ace = Some(cal.ace);
    report.calibration = Some(cal);
    Ok((report, warnings))
}

/// Table-style results for every scored predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub horizon: usize,
    pub daylight_only: bool,
    pub windows: usize,
    pub models: Vec<ModelReport>,
}

impl EvaluationReport {
    /// `model,MAE,RMSE,quantile_loss,ACE`; missing metrics are left empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from("model,MAE,RMSE,quantile_loss,ACE\n");
        for m in &self.models {
            s.push_str(&format!("{},{},{},{},{}\n", m.model, m.mae, m.rmse, opt(m.quantile_loss), opt(m.ace)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize_dataset, SyntheticConfig};

    fn clear_runs() -> Vec<Dataset> {
        let cfg = SyntheticConfig { year_count: 1, cloud_floor: 1.0, ..SyntheticConfig::default() };
        let ds = synthesize_dataset(&cfg).unwrap();
        vec![ds.slice(0, 400), ds.slice(400, 900)]
    }

    #[test]
    fn persistence_is_exact_on_clear_sky() {
        let runs = clear_runs();
        let windows = evaluation_windows(&runs, 24, 36, 5).unwrap();
        assert!(windows.iter().any(|w| w.run == 1));
        let f = persistence_forecasts(&runs, &windows).unwrap();
        let (r, warn) = score(&f, &EvalOptions::default()).unwrap();
        assert_eq!((r.mae, r.rmse), (0.0, 0.0));
        assert!(r.quantile_loss.is_none() && r.ace.is_none());
        assert_eq!(warn.len(), 1);
    }

    #[test]
    fn projection_trims_and_selects() {
        let runs = clear_runs();
        let names = runs[0].feature_names().to_vec();
        let w = &evaluation_windows(&runs, 30, 36, 50).unwrap()[0].sample;
        let wanted = vec!["clear_sky_feature".to_string(), "ghi".to_string()];
        let p = project_sample(w, &names, &wanted, 6).unwrap();
        assert_eq!((p.window, p.num_features), (6, 2));
        let cs = names.iter().position(|n| n == "clear_sky_feature").unwrap();
        assert_eq!(p.input_row(5)[0], w.input_row(29)[cs]);
        assert_eq!(p.input_row(0)[1], w.input_row(24)[0]);
        assert!(project_sample(w, &names, &["nope".to_string()], 6).is_err());
    }

    #[test]
    fn daylight_mask_drops_night_points() {
        let runs = clear_runs();
        let windows = evaluation_windows(&runs, 24, 36, 7).unwrap();
        let f = persistence_forecasts(&runs, &windows).unwrap();
        let all = score(&f, &EvalOptions::default()).unwrap().0;
        let day = score(&f, &EvalOptions { daylight_only: true, ..EvalOptions::default() }).unwrap().0;
        assert!(day.points < all.points && day.points > 0);
    }

    #[test]
    fn csv_leaves_missing_metrics_empty() {
        let rep = EvaluationReport {
            horizon: 36,
            daylight_only: false,
            windows: 1,
            models: vec![ModelReport {
                model: "m".into(),
                head: None,
                points: 1,
                mae: 1.0,
                rmse: 2.0,
                quantile_loss: None,
                ace: None,
                per_horizon_rmse: vec![],
                calibration: None,
            }],
        };
        assert_eq!(rep.to_csv(), "model,MAE,RMSE,quantile_loss,ACE\nm,1,2,,\n");
    }
}
