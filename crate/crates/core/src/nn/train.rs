//! Minibatch Adam training with early stopping on validation loss and a
//! calibration guard for probabilistic heads.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamState, HeadKind, Model, ModelSpec, TrainConfig};
use crate::data::WindowedSample;
use crate::metrics;
use crate::{Error, Result};

/// ACE above this multiple of its running minimum counts as a rise.
pub const ACE_RISE_FACTOR: f64 = 1.2;
/// Consecutive rising evaluations that stop training.
pub const ACE_RISE_EVALS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_ace: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    /// `epoch,train_loss,val_loss,val_ace`; deterministic heads leave ACE empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_ace\n");
        for e in &self.epochs {
            let ace = e.val_ace.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, ace);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    MaxSteps,
    Patience,
    AceGuard,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub optimizer: AdamState,
    pub log: TrainingLog,
    /// Epoch the returned parameters come from; 0 means the initial model.
    pub best_epoch: usize,
    pub stop: StopReason,
    pub steps: usize,
}

#[derive(Clone)]
struct Snapshot {
    model: Model,
    optimizer: AdamState,
    epoch: usize,
    val_loss: f64,
}

/// Validation ACE for probabilistic heads, `None` for point forecasts.
pub fn validation_ace(model: &Model, val: &[WindowedSample], coverages: &[f64]) -> Result<Option<f64>> {
    if model.spec().head == HeadKind::Deterministic {
        return Ok(None);
    }
    let coverages = match &model.spec().quantiles {
        Some(q) if model.spec().head == HeadKind::Quantile => {
            let avail = q.available_coverages();
            let usable: Vec<f64> = coverages.iter().copied().filter(|c| avail.iter().any(|a| (a - c).abs() < 1e-9)).collect();
            if usable.is_empty() {
                avail
            } else {
                usable
            }
        }
        _ => coverages.to_vec(),
    };
    if coverages.is_empty() {
        return Ok(None);
    }
    let out = model.predict(val)?;
    let y: Vec<f64> = val.iter().flat_map(|s| s.target.iter().copied()).collect();
    let intervals = metrics::intervals_from_output(&out, &coverages)?;
    let picps: Vec<f64> = intervals.iter().map(|iv| metrics::picp(&y, iv)).collect::<Result<_>>()?;
    metrics::ace(&picps, &coverages).map(Some)
}

pub fn train(spec: &ModelSpec, config: &TrainConfig, train: &[WindowedSample], val: &[WindowedSample]) -> Result<TrainOutcome> {
    let model = Model::new(spec.clone())?;
    train_model(model, config, train, val)
}

/// Continues training an existing model.
pub fn train_model(
    mut model: Model,
    config: &TrainConfig,
    train: &[WindowedSample],
    val: &[WindowedSample],
) -> Result<TrainOutcome> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    let spec = model.spec().clone();
    let mut optimizer = AdamState::new(model.blocks());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x005e_ed0f_5a17);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainingLog::default();
    let alpha_idx = model.alpha_index();

    let initial_val = model.loss(val)?;
    let mut best = Snapshot { model: model.clone(), optimizer: optimizer.clone(), epoch: 0, val_loss: initial_val };
    let mut pending: Option<Snapshot> = None;
    let mut ace_min = f64::INFINITY;
    let mut rising = 0usize;
    let mut since_best = 0usize;
    let mut steps = 0usize;
    let guard = config.ace_guard && spec.head.is_probabilistic();

    let finish = |best: Snapshot, log: TrainingLog, stop: StopReason, steps: usize| TrainOutcome {
        model: best.model,
        optimizer: best.optimizer,
        log,
        best_epoch: best.epoch,
        stop,
        steps,
    };

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut step_capped = false;
        for chunk in order.chunks(spec.batch_size) {
            if config.max_steps.is_some_and(|m| steps >= m) {
                step_capped = true;
                break;
            }
            let batch: Vec<&WindowedSample> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, mut grads) = model.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Ok(finish(best, log, StopReason::Diverged, steps));
            }
            if config.freeze_alpha {
                grads.0[alpha_idx][0] = 0.0;
            }
            let norm = grads.global_norm();
            if norm.is_finite() && norm > config.clip_norm {
                grads.scale(config.clip_norm / norm);
            }
            match adam_step(model.blocks_mut(), &grads, &mut optimizer, spec.learning_rate) {
                Ok(()) => {}
                Err(Error::NonFiniteGradient(_)) => return Ok(finish(best, log, StopReason::Diverged, steps)),
                Err(e) => return Err(e),
            }
            steps += 1;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        if seen == 0 {
            return Ok(finish(best, log, StopReason::MaxSteps, steps));
        }

        let val_loss = model.loss(val)?;
        if !val_loss.is_finite() {
            return Ok(finish(best, log, StopReason::Diverged, steps));
        }
        let val_ace = validation_ace(&model, val, &config.coverages)?;
        log.epochs.push(EpochLog { epoch, train_loss: loss_sum / seen as f64, val_loss, val_ace });

        if let (true, Some(ace)) = (guard, val_ace) {
            if ace > ACE_RISE_FACTOR * ace_min {
                rising += 1;
            } else {
                rising = 0;
                ace_min = ace_min.min(ace);
            }
        }

        let snapshot = || Snapshot { model: model.clone(), optimizer: optimizer.clone(), epoch, val_loss };
        let best_so_far = pending.as_ref().map_or(best.val_loss, |p| p.val_loss.min(best.val_loss));
        if val_loss < best_so_far {
            since_best = 0;
            if rising > 0 {
                pending = Some(snapshot());
            } else {
                best = snapshot();
                pending = None;
            }
        } else {
            since_best += 1;
        }
        if rising == 0 {
            if let Some(p) = pending.take() {
                if p.val_loss < best.val_loss {
                    best = p;
                }
            }
        }

        if guard && rising >= ACE_RISE_EVALS {
            return Ok(finish(best, log, StopReason::AceGuard, steps));
        }
        if step_capped || config.max_steps.is_some_and(|m| steps >= m) {
            if let Some(p) = pending.take() {
                if p.val_loss < best.val_loss {
                    best = p;
                }
            }
            return Ok(finish(best, log, StopReason::MaxSteps, steps));
        }
        if since_best >= config.patience {
            return Ok(finish(best, log, StopReason::Patience, steps));
        }
    }
    if let Some(p) = pending.take() {
        if p.val_loss < best.val_loss {
            best = p;
        }
    }
    Ok(finish(best, log, StopReason::MaxEpochs, steps))
}
