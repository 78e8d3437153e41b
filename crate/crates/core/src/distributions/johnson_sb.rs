use serde::{Deserialize, Serialize};

use super::{logistic, std_normal_cdf, std_normal_quantile, ContinuousDistribution, ParamGrad, LN_SQRT_2PI};
use crate::{Error, Result};

/// Johnson's SB: `X = ξ + λ·logistic((Z - γ)/δ)`, supported on `(ξ, ξ + λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnsonSBParams {
    pub xi: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl JohnsonSBParams {
    pub fn new(xi: f64, lambda: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && delta > 0.0) || !xi.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "johnson SB needs lambda > 0 and delta > 0, got lambda={lambda}, delta={delta}"
            )));
        }
        Ok(Self { xi, lambda, gamma, delta })
    }

    /// Unit-interval form used by the forecasting head.
    pub fn unit(gamma: f64, delta: f64) -> Result<Self> {
        Self::new(0.0, 1.0, gamma, delta)
    }

    pub fn in_support(&self, x: f64) -> bool {
        x > self.xi && x < self.xi + self.lambda
    }
}

impl ContinuousDistribution for JohnsonSBParams {
    fn logpdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        let u = x - self.xi;
        let v = self.xi + self.lambda - x;
        let w = self.gamma + self.delta * (u / v).ln();
        self.delta.ln() + self.lambda.ln() - LN_SQRT_2PI - u.ln() - v.ln() - 0.5 * w * w
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.xi {
            return 0.0;
        }
        if x >= self.xi + self.lambda {
            return 1.0;
        }
        let u = x - self.xi;
        let v = self.xi + self.lambda - x;
        std_normal_cdf(self.gamma + self.delta * (u / v).ln())
    }

    fn quantile(&self, p: f64) -> f64 {
        self.xi + self.lambda * logistic((std_normal_quantile(p) - self.gamma) / self.delta)
    }

    /// `[∂/∂ξ, ∂/∂λ, ∂/∂γ, ∂/∂δ]`; zero outside the support.
    fn grad_logpdf(&self, x: f64) -> ParamGrad {
        if !self.in_support(x) {
            return [0.0; 4];
        }
        let u = x - self.xi;
        let v = self.xi + self.lambda - x;
        let ln_ratio = (u / v).ln();
        let w = self.gamma + self.delta * ln_ratio;
        let d_u = -(1.0 + w * self.delta) / u;
        let d_v = (w * self.delta - 1.0) / v;
        [-d_u + d_v, 1.0 / self.lambda + d_v, -w, 1.0 / self.delta - w * ln_ratio]
    }
}
