//! Reference predictors: 36 h smart persistence and a single-station MLP.

use crate::data::{Dataset, TimeEmbedding, WindowedSample};
use crate::nn::{self, Backbone, HeadKind, ModelSpec, TrainConfig, TrainOutcome};
use crate::{Error, Result, HORIZON};

/// Clear sky at or below this (W/m²) makes the ratio fall back to 1.
pub const CLEAR_SKY_GUARD: f64 = 1.0;
pub const MAX_RATIO: f64 = 1.5;
/// Hours of history the persistence ratio is taken from.
pub const PERSISTENCE_HISTORY: usize = 24;
pub const MLP_HIDDEN: usize = 64;

/// Inputs of the single-station MLP: the target channel plus time embeddings.
pub const MLP_FEATURES: [&str; 7] = ["ghi", "hour_sin", "hour_cos", "dow_sin", "dow_cos", "woy_sin", "woy_cos"];

/// Last 24 h of observations and clear sky, plus clear sky for the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SmartPersistenceState {
    /// `x(t−23) … x(t)`
    pub observations: Vec<f64>,
    /// `cs(t−23) … cs(t)`
    pub past_clear_sky: Vec<f64>,
    /// `cs(t+1) … cs(t+P)`
    pub future_clear_sky: Vec<f64>,
}

impl SmartPersistenceState {
    pub fn new(observations: Vec<f64>, past_clear_sky: Vec<f64>, future_clear_sky: Vec<f64>) -> Result<Self> {
        if observations.len() != PERSISTENCE_HISTORY || past_clear_sky.len() != PERSISTENCE_HISTORY {
            return Err(Error::Shape(format!(
                "persistence needs {PERSISTENCE_HISTORY} h of history, got {} observations and {} clear-sky values",
                observations.len(),
                past_clear_sky.len()
            )));
        }
        if future_clear_sky.is_empty() || future_clear_sky.len() > HORIZON {
            return Err(Error::Shape(format!("horizon {} outside 1..={HORIZON}", future_clear_sky.len())));
        }
        let all_cs = past_clear_sky.iter().chain(&future_clear_sky);
        if let Some(c) = all_cs.clone().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!("clear-sky value {c} must be finite and non-negative")));
        }
        if let Some(x) = observations.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("observation {x} is not finite")));
        }
        Ok(Self { observations, past_clear_sky, future_clear_sky })
    }

    /// State at dataset row `origin` (the last observed hour).
    pub fn from_dataset(ds: &Dataset, origin: usize, horizon: usize) -> Result<Self> {
        let r = ds.records();
        if origin + 1 < PERSISTENCE_HISTORY || origin + horizon >= r.len() {
            return Err(Error::Shape(format!(
                "origin {origin} needs {} rows before and {horizon} after in a {}-row dataset",
                PERSISTENCE_HISTORY - 1,
                r.len()
            )));
        }
        let past = &r[origin + 1 - PERSISTENCE_HISTORY..=origin];
        Self::new(
            past.iter().map(|x| x.target).collect(),
            past.iter().map(|x| x.clear_sky).collect(),
            r[origin + 1..=origin + horizon].iter().map(|x| x.clear_sky).collect(),
        )
    }

    /// Guarded, clamped clear-sky index of history hour `j` (0 is `t−23`).
    pub fn ratio(&self, j: usize) -> f64 {
        let cs = self.past_clear_sky[j];
        if cs > CLEAR_SKY_GUARD {
            (self.observations[j] / cs).clamp(0.0, MAX_RATIO)
        } else {
            1.0
        }
    }

    /// History hour whose ratio drives horizon hour `h` (1-based): the same
    /// time of day a day earlier for `h ≤ 24`, then hours 1–12 again.
    pub fn source_hour(h: usize) -> usize {
        (h - 1) % PERSISTENCE_HISTORY
    }
}

/// Forecast `f(t+h) = ratio · cs(t+h)` for every horizon hour.
pub fn smart_persistence_36h(state: &SmartPersistenceState) -> Vec<f64> {
    state.future_clear_sky.iter().enumerate().map(|(i, cs)| state.ratio(SmartPersistenceState::source_hour(i + 1)) * cs).collect()
}

/// Persistence forecasts for windows cut from `ds`, flattened `batch × horizon`
/// in original units.
pub fn smart_persistence_for_windows(ds: &Dataset, samples: &[WindowedSample]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.iter().map(|s| s.horizon()).sum());
    for s in samples {
        out.extend(smart_persistence_36h(&SmartPersistenceState::from_dataset(ds, s.origin, s.horizon())?));
    }
    Ok(out)
}

/// Keeps only the inputs the single-station MLP sees.
pub fn single_channel(ds: &Dataset) -> Result<Dataset> {
    ds.select_features(&MLP_FEATURES)
}

/// One tanh hidden layer of 64 units over the flattened window, MSE loss,
/// no clear-sky injection.
pub fn mlp_spec(window: usize, horizon: usize, seed: u64) -> ModelSpec {
    let mut spec = ModelSpec::new(HeadKind::Deterministic, MLP_FEATURES.len());
    spec.backbone = Backbone::Mlp;
    spec.layers = 1;
    spec.hidden = MLP_HIDDEN;
    spec.window = window;
    spec.horizon = horizon;
    spec.seed = seed;
    spec.inject_clear_sky = false;
    spec
}

/// Trains the MLP baseline on windows built from [`single_channel`] data.
pub fn mlp_baseline_train(
    spec: &ModelSpec,
    config: &TrainConfig,
    train: &[WindowedSample],
    val: &[WindowedSample],
) -> Result<TrainOutcome> {
    if spec.backbone != Backbone::Mlp || spec.head != HeadKind::Deterministic {
        return Err(Error::Config("the MLP baseline needs a deterministic head on an MLP backbone".into()));
    }
    if spec.input_dim != MLP_FEATURES.len() {
        return Err(Error::Config(format!(
            "the MLP baseline sees {} input channels, spec has {}",
            MLP_FEATURES.len(),
            spec.input_dim
        )));
    }
    nn::train(spec, config, train, val)
}

const _: () = assert!(TimeEmbedding::NAMES.len() + 1 == MLP_FEATURES.len());
