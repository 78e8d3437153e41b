use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::losses::QuantileSet;
use crate::{Error, Result, HORIZON};

/// Output head and the objective it is trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    #[serde(rename = "det")]
    Deterministic,
    #[serde(rename = "qr")]
    Quantile,
    #[serde(rename = "mle-g")]
    Gaussian,
    #[serde(rename = "mle-jsu")]
    JohnsonSU,
    #[serde(rename = "mle-jsb")]
    JohnsonSB,
    #[serde(rename = "mle-w")]
    Weibull,
}

impl HeadKind {
    pub const ALL: [HeadKind; 6] = [
        HeadKind::Deterministic,
        HeadKind::Quantile,
        HeadKind::Gaussian,
        HeadKind::JohnsonSU,
        HeadKind::JohnsonSB,
        HeadKind::Weibull,
    ];

    pub fn family(self) -> Option<Family> {
        match self {
            HeadKind::Gaussian => Some(Family::Gaussian),
            HeadKind::JohnsonSU => Some(Family::JohnsonSU),
            HeadKind::JohnsonSB => Some(Family::JohnsonSB),
            HeadKind::Weibull => Some(Family::Weibull),
            HeadKind::Deterministic | HeadKind::Quantile => None,
        }
    }

    pub fn is_probabilistic(self) -> bool {
        self != HeadKind::Deterministic
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Deterministic => "det",
            HeadKind::Quantile => "qr",
            HeadKind::Gaussian => "mle-g",
            HeadKind::JohnsonSU => "mle-jsu",
            HeadKind::JohnsonSB => "mle-jsb",
            HeadKind::Weibull => "mle-w",
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown head `{s}` (expected det, qr, mle-g, mle-jsu, mle-jsb, mle-w)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backbone {
    /// Stacked LSTM; the top layer's last hidden state feeds the head.
    Lstm,
    /// One tanh hidden layer over the flattened window.
    Mlp,
}

/// Architecture and optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub head: HeadKind,
    pub backbone: Backbone,
    pub layers: usize,
    pub hidden: usize,
    pub window: usize,
    pub horizon: usize,
    pub input_dim: usize,
    pub quantiles: Option<QuantileSet>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Add learnable-α-scaled clear sky to the head output.
    pub inject_clear_sky: bool,
    /// Sort quantile predictions per step at inference time.
    pub sort_quantiles: bool,
}

impl ModelSpec {
    /// Two-layer, 128-unit LSTM over a 72 h window, lr 1e-5, batch 64.
    pub fn new(head: HeadKind, input_dim: usize) -> Self {
        Self {
            head,
            backbone: Backbone::Lstm,
            layers: 2,
            hidden: 128,
            window: 72,
            horizon: HORIZON,
            input_dim,
            quantiles: (head == HeadKind::Quantile).then(QuantileSet::standard),
            learning_rate: 1e-5,
            batch_size: 64,
            seed: 0,
            inject_clear_sky: true,
            sort_quantiles: false,
        }
    }

    pub fn output_width(&self) -> usize {
        match self.head {
            HeadKind::Deterministic => 1,
            HeadKind::Quantile => self.quantiles.as_ref().map_or(0, QuantileSet::len),
            HeadKind::Gaussian | HeadKind::JohnsonSB | HeadKind::Weibull => 2,
            HeadKind::JohnsonSU => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("window", self.window),
            ("horizon", self.horizon),
            ("input_dim", self.input_dim),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        match (&self.head, &self.quantiles) {
            (HeadKind::Quantile, None) => return Err(Error::Config("quantile head needs a quantile set".into())),
            (HeadKind::Quantile, Some(q)) if self.inject_clear_sky && q.median_index().is_none() => {
                return Err(Error::Config(format!(
                    "clear-sky injection targets the 0.5 quantile, which is missing from {:?}",
                    q.levels()
                )))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Optimization loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    /// Hard cap on optimizer steps across all epochs.
    pub max_steps: Option<usize>,
    pub clip_norm: f64,
    pub ace_guard: bool,
    pub freeze_alpha: bool,
    /// Coverages scored on validation for the ACE guard.
    pub coverages: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            patience: 20,
            max_steps: None,
            clip_norm: 5.0,
            ace_guard: true,
            freeze_alpha: false,
            coverages: crate::metrics::default_coverages(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_defaults_and_widths() {
        let s = ModelSpec::new(HeadKind::Deterministic, 246);
        assert_eq!((s.window, s.layers, s.hidden, s.batch_size, s.horizon), (72, 2, 128, 64, 36));
        assert_eq!(s.learning_rate, 1e-5);
        let widths: Vec<usize> = HeadKind::ALL.iter().map(|h| ModelSpec::new(*h, 3).output_width()).collect();
        assert_eq!(widths, vec![1, 5, 2, 4, 2, 2]);
    }

    #[test]
    fn quantile_head_requires_median_for_injection() {
        let mut s = ModelSpec::new(HeadKind::Quantile, 3);
        s.quantiles = Some(QuantileSet::new(vec![0.1, 0.9]).unwrap());
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        s.inject_clear_sky = false;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn head_names_roundtrip() {
        for h in HeadKind::ALL {
            assert_eq!(h.as_str().parse::<HeadKind>().unwrap(), h);
        }
        assert!("mle-x".parse::<HeadKind>().is_err());
    }
}
