//! Parametric families used by the maximum-likelihood heads.
//!
//! Every family exposes log-density, CDF, quantile and the gradient of the
//! log-density with respect to its parameters. Log-densities return
//! `f64::NEG_INFINITY` for observations outside the support.

mod bounds;
mod gaussian;
mod johnson_sb;
mod johnson_su;
mod normal;
mod weibull;

pub use bounds::{constrain, constrain_grad, logistic, positive, positive_grad, ParamBounds, POSITIVE_FLOOR};
pub use gaussian::GaussianParams;
pub use johnson_sb::JohnsonSBParams;
pub use johnson_su::JohnsonSUParams;
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, LN_SQRT_2PI};
pub use weibull::WeibullParams;

use serde::{Deserialize, Serialize};

/// Gradient of a log-density with respect to a family's parameters, in the
/// family's declared parameter order. Unused trailing slots are zero.
pub type ParamGrad = [f64; 4];

pub trait ContinuousDistribution {
    fn logpdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
    fn grad_logpdf(&self, x: f64) -> ParamGrad;

    fn pdf(&self, x: f64) -> f64 {
        self.logpdf(x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    JohnsonSU,
    JohnsonSB,
    Weibull,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Gaussian, Family::JohnsonSU, Family::JohnsonSB, Family::Weibull];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Gaussian => &["mu", "sigma"],
            Family::JohnsonSU => &["xi", "lambda", "gamma", "delta"],
            Family::JohnsonSB => &["xi", "lambda", "gamma", "delta"],
            Family::Weibull => &["phi", "omega"],
        }
    }
}

/// One per-horizon parametric forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistributionParams {
    Gaussian(GaussianParams),
    JohnsonSU(JohnsonSUParams),
    JohnsonSB(JohnsonSBParams),
    Weibull(WeibullParams),
}

impl DistributionParams {
    pub fn family(&self) -> Family {
        match self {
            DistributionParams::Gaussian(_) => Family::Gaussian,
            DistributionParams::JohnsonSU(_) => Family::JohnsonSU,
            DistributionParams::JohnsonSB(_) => Family::JohnsonSB,
            DistributionParams::Weibull(_) => Family::Weibull,
        }
    }

    /// Parameter values in the order of [`Family::param_names`].
    pub fn values(&self) -> Vec<f64> {
        match self {
            DistributionParams::Gaussian(p) => vec![p.mu, p.sigma],
            DistributionParams::JohnsonSU(p) => vec![p.xi, p.lambda, p.gamma, p.delta],
            DistributionParams::JohnsonSB(p) => vec![p.xi, p.lambda, p.gamma, p.delta],
            DistributionParams::Weibull(p) => vec![p.phi, p.omega],
        }
    }

    fn inner(&self) -> &dyn ContinuousDistribution {
        match self {
            DistributionParams::Gaussian(p) => p,
            DistributionParams::JohnsonSU(p) => p,
            DistributionParams::JohnsonSB(p) => p,
            DistributionParams::Weibull(p) => p,
        }
    }
}

impl ContinuousDistribution for DistributionParams {
    fn logpdf(&self, x: f64) -> f64 {
        self.inner().logpdf(x)
    }
    fn cdf(&self, x: f64) -> f64 {
        self.inner().cdf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        self.inner().quantile(p)
    }
    fn grad_logpdf(&self, x: f64) -> ParamGrad {
        self.inner().grad_logpdf(x)
    }
}
