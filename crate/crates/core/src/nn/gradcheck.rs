//! Central finite-difference check of [`Model::loss_and_grad`].

use super::Model;
use crate::data::WindowedSample;
use crate::Result;

/// Gradients smaller than this are compared in absolute terms.
pub const GRADCHECK_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Block name and offset of the worst parameter.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares every analytic partial with `(L(θ+h) − L(θ−h)) / 2h`, where
/// `h = step · max(1, |θ|)`. Relative error is
/// `|a − n| / max(|a|, |n|, GRADCHECK_FLOOR)`.
pub fn check_gradients(model: &Model, batch: &[&WindowedSample], step: f64) -> Result<GradCheck> {
    let (_, grads) = model.loss_and_grad(batch)?;
    let mut probe = model.clone();
    let mut report = GradCheck { max_rel_error: 0.0, worst: (String::new(), 0), analytic: 0.0, numeric: 0.0, checked: 0 };
    for b in 0..model.blocks().len() {
        for k in 0..model.blocks()[b].len() {
            let theta = model.blocks()[b].values[k];
            let h = step * theta.abs().max(1.0);
            probe.blocks_mut()[b].values[k] = theta + h;
            let up = probe.loss_and_grad(batch)?.0;
            probe.blocks_mut()[b].values[k] = theta - h;
            let down = probe.loss_and_grad(batch)?.0;
            probe.blocks_mut()[b].values[k] = theta;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.0[b][k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (model.blocks()[b].name.clone(), k);
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
