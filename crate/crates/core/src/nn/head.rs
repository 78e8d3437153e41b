//! Mapping of raw head activations to forecasts, including clear-sky
//! injection and parameter-range constraints, and the matching backward pass.

use serde::{Deserialize, Serialize};

use super::{HeadKind, ModelSpec};
use crate::distributions::{
    constrain, constrain_grad, positive, positive_grad, DistributionParams, Family, GaussianParams, JohnsonSBParams,
    JohnsonSUParams, ParamBounds, ParamGrad, WeibullParams,
};
use crate::losses::QuantileSet;

pub const SKEW_BOUNDS: ParamBounds = ParamBounds::interval(-4.0, 4.0);
pub const JSU_SHAPE_BOUNDS: ParamBounds = ParamBounds::interval(5.0, 9.0);
pub const JSB_SHAPE_BOUNDS: ParamBounds = ParamBounds::interval(0.05, 6.0);
pub const WEIBULL_SCALE_BOUNDS: ParamBounds = ParamBounds::interval(0.0, 1.0);
pub const WEIBULL_SHAPE_BOUNDS: ParamBounds = ParamBounds::interval(0.0, 2.0);
/// Injected Johnson SB skew is clamped this far inside `(-4, 4)`.
pub const JSB_SKEW_MARGIN: f64 = 1e-3;
const MIN_POSITIVE: f64 = 1e-9;

/// Forecasts for a batch, each shaped `batch × horizon` (× levels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForecastOutput {
    Point { batch: usize, horizon: usize, values: Vec<f64> },
    Quantiles { batch: usize, horizon: usize, levels: QuantileSet, values: Vec<f64> },
    Params { batch: usize, horizon: usize, family: Family, values: Vec<DistributionParams> },
}

impl ForecastOutput {
    pub fn batch(&self) -> usize {
        match self {
            ForecastOutput::Point { batch, .. }
            | ForecastOutput::Quantiles { batch, .. }
            | ForecastOutput::Params { batch, .. } => *batch,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            ForecastOutput::Point { horizon, .. }
            | ForecastOutput::Quantiles { horizon, .. }
            | ForecastOutput::Params { horizon, .. } => *horizon,
        }
    }

    pub(crate) fn empty(spec: &ModelSpec) -> Self {
        let horizon = spec.horizon;
        match (spec.head, spec.head.family()) {
            (HeadKind::Deterministic, _) => ForecastOutput::Point { batch: 0, horizon, values: vec![] },
            (HeadKind::Quantile, _) => ForecastOutput::Quantiles {
                batch: 0,
                horizon,
                levels: spec.quantiles.clone().expect("validated spec"),
                values: vec![],
            },
            (_, Some(family)) => ForecastOutput::Params { batch: 0, horizon, family, values: vec![] },
            _ => unreachable!(),
        }
    }

    pub(crate) fn push(&mut self, sample: SampleOutput) {
        match (self, sample) {
            (ForecastOutput::Point { batch, values, .. }, SampleOutput::Values(v))
            | (ForecastOutput::Quantiles { batch, values, .. }, SampleOutput::Values(v)) => {
                values.extend(v);
                *batch += 1;
            }
            (ForecastOutput::Params { batch, values, .. }, SampleOutput::Params(p)) => {
                values.extend(p);
                *batch += 1;
            }
            _ => panic!("sample output does not match forecast kind"),
        }
    }
}

/// Per-sample head output.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutput {
    /// `horizon` points or `horizon × levels` quantiles.
    Values(Vec<f64>),
    Params(Vec<DistributionParams>),
}

/// Gradient of the loss with respect to a [`SampleOutput`].
#[derive(Debug, Clone)]
pub enum OutputGrad {
    Values(Vec<f64>),
    Params(Vec<ParamGrad>),
}

pub(crate) fn transform(spec: &ModelSpec, raw: &[f64], cs: &[f64], alpha: f64) -> SampleOutput {
    let width = spec.output_width();
    let inject = spec.inject_clear_sky;
    let shift = |p: usize| if inject { alpha * cs[p] } else { 0.0 };
    match spec.head {
        HeadKind::Deterministic => SampleOutput::Values((0..spec.horizon).map(|p| raw[p] + shift(p)).collect()),
        HeadKind::Quantile => {
            let median = spec.quantiles.as_ref().and_then(QuantileSet::median_index);
            let mut out = raw.to_vec();
            for p in 0..spec.horizon {
                if let Some(m) = median {
                    out[p * width + m] += shift(p);
                }
            }
            SampleOutput::Values(out)
        }
        HeadKind::Gaussian => SampleOutput::Params(
            (0..spec.horizon)
                .map(|p| {
                    let r = &raw[p * width..];
                    DistributionParams::Gaussian(GaussianParams { mu: r[0] + shift(p), sigma: positive(r[1]) })
                })
                .collect(),
        ),
        HeadKind::JohnsonSU => SampleOutput::Params(
            (0..spec.horizon)
                .map(|p| {
                    let r = &raw[p * width..];
                    DistributionParams::JohnsonSU(JohnsonSUParams {
                        xi: r[0] + shift(p),
                        lambda: positive(r[1]),
                        gamma: constrain(r[2], SKEW_BOUNDS),
                        delta: constrain(r[3], JSU_SHAPE_BOUNDS),
                    })
                })
                .collect(),
        ),
        HeadKind::JohnsonSB => SampleOutput::Params(
            (0..spec.horizon)
                .map(|p| {
                    let r = &raw[p * width..];
                    let (gamma, _) = jsb_gamma(r[0], cs[p], inject);
                    DistributionParams::JohnsonSB(JohnsonSBParams {
                        xi: 0.0,
                        lambda: 1.0,
                        gamma,
                        delta: constrain(r[1], JSB_SHAPE_BOUNDS),
                    })
                })
                .collect(),
        ),
        HeadKind::Weibull => SampleOutput::Params(
            (0..spec.horizon)
                .map(|p| {
                    let r = &raw[p * width..];
                    let phi = constrain(r[0], WEIBULL_SCALE_BOUNDS).max(MIN_POSITIVE);
                    let omega = (constrain(r[1], WEIBULL_SHAPE_BOUNDS) + shift(p)).max(MIN_POSITIVE);
                    DistributionParams::Weibull(WeibullParams { phi, omega })
                })
                .collect(),
        ),
    }
}

/// Constrained skew plus `(1 - cs)·4`, clamped inside the open interval.
/// The flag reports whether the clamp is active.
fn jsb_gamma(raw: f64, cs: f64, inject: bool) -> (f64, bool) {
    let base = constrain(raw, SKEW_BOUNDS);
    if !inject {
        return (base, false);
    }
    let shifted = base + (1.0 - cs) * 4.0;
    let (lo, hi) = (-4.0 + JSB_SKEW_MARGIN, 4.0 - JSB_SKEW_MARGIN);
    (shifted.clamp(lo, hi), !(lo..=hi).contains(&shifted))
}

/// Returns `∂L/∂raw` and `∂L/∂α`.
pub(crate) fn backward(spec: &ModelSpec, raw: &[f64], cs: &[f64], alpha: f64, grad: &OutputGrad) -> (Vec<f64>, f64) {
    let width = spec.output_width();
    let inject = spec.inject_clear_sky;
    let mut d_raw = vec![0.0; raw.len()];
    let mut d_alpha = 0.0;
    match (spec.head, grad) {
        (HeadKind::Deterministic, OutputGrad::Values(g)) => {
            d_raw.copy_from_slice(g);
            if inject {
                d_alpha = g.iter().zip(cs).map(|(a, b)| a * b).sum();
            }
        }
        (HeadKind::Quantile, OutputGrad::Values(g)) => {
            d_raw.copy_from_slice(g);
            if let (true, Some(m)) = (inject, spec.quantiles.as_ref().and_then(QuantileSet::median_index)) {
                d_alpha = (0..spec.horizon).map(|p| g[p * width + m] * cs[p]).sum();
            }
        }
        (head, OutputGrad::Params(g)) => {
            for p in 0..spec.horizon {
                let r = &raw[p * width..(p + 1) * width];
                let d = &mut d_raw[p * width..(p + 1) * width];
                let gp = &g[p];
                match head {
                    HeadKind::Gaussian => {
                        d[0] = gp[0];
                        d[1] = gp[1] * positive_grad(r[1]);
                        if inject {
                            d_alpha += gp[0] * cs[p];
                        }
                    }
                    HeadKind::JohnsonSU => {
                        d[0] = gp[0];
                        d[1] = gp[1] * positive_grad(r[1]);
                        d[2] = gp[2] * constrain_grad(r[2], SKEW_BOUNDS);
                        d[3] = gp[3] * constrain_grad(r[3], JSU_SHAPE_BOUNDS);
                        if inject {
                            d_alpha += gp[0] * cs[p];
                        }
                    }
                    HeadKind::JohnsonSB => {
                        let (_, clamped) = jsb_gamma(r[0], cs[p], inject);
                        if !clamped {
                            d[0] = gp[2] * constrain_grad(r[0], SKEW_BOUNDS);
                        }
                        d[1] = gp[3] * constrain_grad(r[1], JSB_SHAPE_BOUNDS);
                    }
                    HeadKind::Weibull => {
                        if constrain(r[0], WEIBULL_SCALE_BOUNDS) > MIN_POSITIVE {
                            d[0] = gp[0] * constrain_grad(r[0], WEIBULL_SCALE_BOUNDS);
                        }
                        let shift = if inject { alpha * cs[p] } else { 0.0 };
                        if constrain(r[1], WEIBULL_SHAPE_BOUNDS) + shift > MIN_POSITIVE {
                            d[1] = gp[1] * constrain_grad(r[1], WEIBULL_SHAPE_BOUNDS);
                            if inject {
                                d_alpha += gp[1] * cs[p];
                            }
                        }
                    }
                    HeadKind::Deterministic | HeadKind::Quantile => unreachable!(),
                }
            }
        }
        _ => panic!("output gradient does not match head kind"),
    }
    (d_raw, d_alpha)
}

/// Sorts each horizon step's quantiles in place.
pub(crate) fn sort_quantiles(values: &mut [f64], width: usize) {
    for step in values.chunks_mut(width) {
        step.sort_by(f64::total_cmp);
    }
}
