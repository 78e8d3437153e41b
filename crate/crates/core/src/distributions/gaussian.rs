use serde::{Deserialize, Serialize};

use super::{std_normal_cdf, std_normal_quantile, ContinuousDistribution, ParamGrad, LN_SQRT_2PI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian needs finite mu and sigma > 0, got ({mu}, {sigma})")));
        }
        Ok(Self { mu, sigma })
    }
}

impl ContinuousDistribution for GaussianParams {
    fn logpdf(&self, x: f64) -> f64 {
        let r = (x - self.mu) / self.sigma;
        -LN_SQRT_2PI - self.sigma.ln() - 0.5 * r * r
    }

    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mu) / self.sigma)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.mu + self.sigma * std_normal_quantile(p)
    }

    /// `[∂/∂μ, ∂/∂σ]`
    fn grad_logpdf(&self, x: f64) -> ParamGrad {
        let r = (x - self.mu) / self.sigma;
        [r / self.sigma, (r * r - 1.0) / self.sigma, 0.0, 0.0]
    }
}
