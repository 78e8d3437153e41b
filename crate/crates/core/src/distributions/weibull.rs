use serde::{Deserialize, Serialize};

use super::{ContinuousDistribution, ParamGrad};
use crate::{Error, Result};

/// Weibull with scale `φ` and shape `ω`, supported on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub phi: f64,
    pub omega: f64,
}

impl WeibullParams {
    pub fn new(phi: f64, omega: f64) -> Result<Self> {
        if !(phi > 0.0 && omega > 0.0) || !phi.is_finite() || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("weibull needs phi > 0 and omega > 0, got ({phi}, {omega})")));
        }
        Ok(Self { phi, omega })
    }
}

impl ContinuousDistribution for WeibullParams {
    fn logpdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        let ln_ratio = x.ln() - self.phi.ln();
        self.omega.ln() - self.phi.ln() + (self.omega - 1.0) * ln_ratio - (self.omega * ln_ratio).exp()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-(x / self.phi).powf(self.omega)).exp_m1()
    }

    fn quantile(&self, p: f64) -> f64 {
        self.phi * (-(-p).ln_1p()).powf(1.0 / self.omega)
    }

    /// `[∂/∂φ, ∂/∂ω]`; zero outside the support.
    fn grad_logpdf(&self, x: f64) -> ParamGrad {
        if !(x > 0.0) {
            return [0.0; 4];
        }
        let ln_ratio = x.ln() - self.phi.ln();
        let t = (self.omega * ln_ratio).exp();
        [self.omega * (t - 1.0) / self.phi, 1.0 / self.omega + ln_ratio * (1.0 - t), 0.0, 0.0]
    }
}
