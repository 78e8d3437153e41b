use serde::{Deserialize, Serialize};

use super::{std_normal_cdf, std_normal_quantile, ContinuousDistribution, ParamGrad, LN_SQRT_2PI};
use crate::{Error, Result};

/// Johnson's SU: `X = ξ + λ·sinh((Z - γ)/δ)` for standard normal `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnsonSUParams {
    pub xi: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl JohnsonSUParams {
    pub fn new(xi: f64, lambda: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && delta > 0.0) || !xi.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "johnson SU needs lambda > 0 and delta > 0, got lambda={lambda}, delta={delta}"
            )));
        }
        Ok(Self { xi, lambda, gamma, delta })
    }
}

impl ContinuousDistribution for JohnsonSUParams {
    fn logpdf(&self, x: f64) -> f64 {
        let z = (x - self.xi) / self.lambda;
        let w = self.gamma + self.delta * z.asinh();
        self.delta.ln() - self.lambda.ln() - LN_SQRT_2PI - 0.5 * z.mul_add(z, 1.0).ln() - 0.5 * w * w
    }

    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.xi) / self.lambda;
        std_normal_cdf(self.gamma + self.delta * z.asinh())
    }

    fn quantile(&self, p: f64) -> f64 {
        self.xi + self.lambda * ((std_normal_quantile(p) - self.gamma) / self.delta).sinh()
    }

    /// `[∂/∂ξ, ∂/∂λ, ∂/∂γ, ∂/∂δ]`
    fn grad_logpdf(&self, x: f64) -> ParamGrad {
        let z = (x - self.xi) / self.lambda;
        let asinh_z = z.asinh();
        let w = self.gamma + self.delta * asinh_z;
        let one_z2 = z.mul_add(z, 1.0);
        let dz = -z / one_z2 - w * self.delta / one_z2.sqrt();
        [-dz / self.lambda, -1.0 / self.lambda - dz * z / self.lambda, -w, 1.0 / self.delta - w * asinh_z]
    }
}
