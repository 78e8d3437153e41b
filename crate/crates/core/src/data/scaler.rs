use serde::{Deserialize, Serialize};

use super::{Dataset, WindowedSample};
use crate::{Error, Result};

/// Offset added after min-max scaling so scaled values are strictly positive.
pub const SCALER_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    pub fn fit(name: &str, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (min, max) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(max > min) {
            return Err(Error::ConstantChannel(name.to_string()));
        }
        Ok(Self { name: name.to_string(), min, max })
    }

    fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Per-channel min-max scaler mapping `[min, max]` onto `[ε, 1 + ε]`.
///
/// The clear-sky series shares the target's range so that injected clear sky
/// lives in the same units as the forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub features: Vec<ChannelRange>,
    pub target: ChannelRange,
    pub epsilon: f64,
}

impl MinMaxScaler {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        Self::fit_runs(std::slice::from_ref(dataset))
    }

    /// Fits over several runs that share one feature layout.
    pub fn fit_runs(runs: &[Dataset]) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::invalid("no data to fit the scaler on"))?;
        if runs.iter().any(|r| r.feature_names() != first.feature_names()) {
            return Err(Error::invalid("runs have different feature columns"));
        }
        let recs = || runs.iter().flat_map(|r| r.records());
        let features = first
            .feature_names()
            .iter()
            .enumerate()
            .map(|(j, name)| ChannelRange::fit(name, recs().map(|r| r.features[j])))
            .collect::<Result<Vec<_>>>()?;
        let target = ChannelRange::fit("target", recs().map(|r| r.target))?;
        Ok(Self { features, target, epsilon: SCALER_EPSILON })
    }

    pub fn apply(range: &ChannelRange, epsilon: f64, x: f64) -> f64 {
        (x - range.min) / range.span() + epsilon
    }

    pub fn invert(range: &ChannelRange, epsilon: f64, scaled: f64) -> f64 {
        (scaled - epsilon) * range.span() + range.min
    }

    pub fn scale_target(&self, x: f64) -> f64 {
        Self::apply(&self.target, self.epsilon, x)
    }

    pub fn unscale_target(&self, scaled: f64) -> f64 {
        Self::invert(&self.target, self.epsilon, scaled)
    }

    /// Target-unit scale factor: one scaled unit in W/m².
    pub fn target_span(&self) -> f64 {
        self.target.span()
    }

    pub fn scale_sample(&self, sample: &WindowedSample) -> Result<WindowedSample> {
        let d = self.features.len();
        if sample.num_features != d {
            return Err(Error::Shape(format!("sample has {} features, scaler was fitted on {d}", sample.num_features)));
        }
        let input = sample.input.iter().enumerate().map(|(i, &x)| Self::apply(&self.features[i % d], self.epsilon, x)).collect();
        Ok(WindowedSample {
            input,
            target: sample.target.iter().map(|&x| self.scale_target(x)).collect(),
            future_clear_sky: sample.future_clear_sky.iter().map(|&x| self.scale_target(x)).collect(),
            ..sample.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range() -> ChannelRange {
        ChannelRange::fit("x", [0.0, 100.0]).unwrap()
    }

    #[test]
    fn midpoint_and_floor() {
        let r = range();
        assert!((MinMaxScaler::apply(&r, SCALER_EPSILON, 50.0) - (0.5 + SCALER_EPSILON)).abs() < 1e-15);
        let lo = MinMaxScaler::apply(&r, SCALER_EPSILON, 0.0);
        assert_eq!(lo, SCALER_EPSILON);
        assert!(lo > 0.0);
    }

    #[test]
    fn roundtrip_value() {
        let r = range();
        let back = MinMaxScaler::invert(&r, SCALER_EPSILON, MinMaxScaler::apply(&r, SCALER_EPSILON, 73.2));
        assert!((back - 73.2).abs() <= 1e-9);
    }

    #[test]
    fn constant_channel_is_named() {
        match ChannelRange::fit("snowfall", [2.0, 2.0, 2.0]) {
            Err(Error::ConstantChannel(name)) => assert_eq!(name, "snowfall"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn roundtrip_within_range(lo in -1e3f64..1e3, width in 1e-3f64..1e4, frac in 0.0f64..=1.0) {
            let r = ChannelRange::fit("c", [lo, lo + width]).unwrap();
            let x = lo + frac * width;
            let s = MinMaxScaler::apply(&r, SCALER_EPSILON, x);
            proptest::prop_assert!((SCALER_EPSILON - 1e-15..=1.0 + SCALER_EPSILON + 1e-12).contains(&s));
            let back = MinMaxScaler::invert(&r, SCALER_EPSILON, s);
            proptest::prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(width).max(1.0));
        }
    }
}
