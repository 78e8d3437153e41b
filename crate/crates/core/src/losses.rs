//! Training objectives. All reductions are means over every entry.

use serde::{Deserialize, Serialize};

use crate::distributions::{ContinuousDistribution, DistributionParams, Family, ParamGrad};
use crate::{Error, Result};

/// Loss charged per observation that falls outside a bounded support.
pub const OUT_OF_SUPPORT_PENALTY: f64 = 1e4;

/// Strictly increasing probabilities in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileSet(Vec<f64>);

impl QuantileSet {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("quantile set is empty"));
        }
        if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::invalid(format!("quantile level {q} outside (0, 1)")));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("quantile levels {levels:?} not strictly increasing")));
        }
        Ok(Self(levels))
    }

    /// `{0.05, 0.25, 0.5, 0.75, 0.95}`
    pub fn standard() -> Self {
        Self(vec![0.05, 0.25, 0.5, 0.75, 0.95])
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, level: f64) -> Option<usize> {
        self.0.iter().position(|q| (q - level).abs() < 1e-9)
    }

    pub fn median_index(&self) -> Option<usize> {
        self.index_of(0.5)
    }

    /// Central coverages `c` for which both `(1-c)/2` and `(1+c)/2` are levels.
    pub fn available_coverages(&self) -> Vec<f64> {
        self.0.iter().filter(|&&q| q < 0.5 && self.index_of(1.0 - q).is_some()).map(|&q| round9(1.0 - 2.0 * q)).rev().collect()
    }
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl TryFrom<Vec<f64>> for QuantileSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QuantileSet> for Vec<f64> {
    fn from(q: QuantileSet) -> Self {
        q.0
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("{what}: got {got} entries, expected {want}")));
    }
    Ok(())
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    mse_with_grad(y, y_hat).map(|(l, _)| l)
}

/// Loss and `∂L/∂ŷ`.
pub fn mse_with_grad(y: &[f64], y_hat: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("mse prediction", y_hat.len(), y.len())?;
    if y.is_empty() {
        return Err(Error::Shape("mse of empty arrays".into()));
    }
    let n = y.len() as f64;
    let loss = y.iter().zip(y_hat).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() / n;
    let grad = y.iter().zip(y_hat).map(|(a, b)| 2.0 * (b - a) / n).collect();
    Ok((loss, grad))
}

/// `ρ_q(u)` with `u = y - ŷ`.
pub fn pinball_term(q: f64, u: f64) -> f64 {
    if u >= 0.0 {
        q * u
    } else {
        (q - 1.0) * u
    }
}

/// `y` is `n` values, `y_hat` is `n × |Q|` row-major.
pub fn pinball(y: &[f64], y_hat: &[f64], quantiles: &QuantileSet) -> Result<f64> {
    pinball_with_grad(y, y_hat, quantiles).map(|(l, _)| l)
}

pub fn pinball_with_grad(y: &[f64], y_hat: &[f64], quantiles: &QuantileSet) -> Result<(f64, Vec<f64>)> {
    let nq = quantiles.len();
    check_len("pinball prediction", y_hat.len(), y.len() * nq)?;
    if y.is_empty() {
        return Err(Error::Shape("pinball of empty arrays".into()));
    }
    let n = y_hat.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(y_hat.len());
    for (i, &yi) in y.iter().enumerate() {
        for (k, &q) in quantiles.levels().iter().enumerate() {
            let u = yi - y_hat[i * nq + k];
            loss += pinball_term(q, u);
            grad.push(if u >= 0.0 { -q / n } else { (1.0 - q) / n });
        }
    }
    Ok((loss / n, grad))
}

pub fn nll(y: &[f64], params: &[DistributionParams], family: Family) -> Result<f64> {
    nll_with_grad(y, params, family).map(|(l, _)| l)
}

/// Mean negative log-likelihood and its gradient with respect to each
/// per-observation parameter tuple. Out-of-support observations cost
/// [`OUT_OF_SUPPORT_PENALTY`] and contribute no gradient.
pub fn nll_with_grad(y: &[f64], params: &[DistributionParams], family: Family) -> Result<(f64, Vec<ParamGrad>)> {
    check_len("nll parameters", params.len(), y.len())?;
    if y.is_empty() {
        return Err(Error::Shape("nll of empty arrays".into()));
    }
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(y.len());
    for (&yi, p) in y.iter().zip(params) {
        if p.family() != family {
            return Err(Error::invalid(format!("expected {family:?} parameters, got {:?}", p.family())));
        }
        let lp = p.logpdf(yi);
        if lp.is_finite() {
            loss -= lp;
            let g = p.grad_logpdf(yi);
            grads.push(g.map(|v| -v / n));
        } else {
            loss += OUT_OF_SUPPORT_PENALTY;
            grads.push([0.0; 4]);
        }
    }
    Ok((loss / n, grads))
}
