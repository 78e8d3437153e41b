use serde::{Deserialize, Serialize};

/// Open interval a raw network output is squashed into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamBounds {
    Interval { lower: f64, upper: f64 },
    Unbounded,
}

impl ParamBounds {
    pub const fn interval(lower: f64, upper: f64) -> Self {
        ParamBounds::Interval { lower, upper }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `a + (b - a)·logistic(raw)` for intervals, identity when unbounded.
pub fn constrain(raw: f64, bounds: ParamBounds) -> f64 {
    match bounds {
        ParamBounds::Interval { lower, upper } => lower + (upper - lower) * logistic(raw),
        ParamBounds::Unbounded => raw,
    }
}

/// Derivative of [`constrain`] with respect to `raw`.
pub fn constrain_grad(raw: f64, bounds: ParamBounds) -> f64 {
    match bounds {
        ParamBounds::Interval { lower, upper } => {
            let s = logistic(raw);
            (upper - lower) * s * (1.0 - s)
        }
        ParamBounds::Unbounded => 1.0,
    }
}

/// Offset keeping softplus-mapped scales away from zero.
pub const POSITIVE_FLOOR: f64 = 1e-4;

/// `ln(1 + e^x) + 1e-4`, for strictly positive parameters without an upper bound.
pub fn positive(raw: f64) -> f64 {
    let sp = if raw > 30.0 { raw + (-raw).exp() } else { raw.exp().ln_1p() };
    sp + POSITIVE_FLOOR
}

pub fn positive_grad(raw: f64) -> f64 {
    logistic(raw)
}
