use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::head::{self, OutputGrad, SampleOutput};
use super::lstm::{layer_backward, layer_forward, LayerTrace};
use super::{Backbone, ForecastOutput, Gradients, HeadKind, ModelSpec, ParamBlock};
use crate::data::WindowedSample;
use crate::losses::{mse_with_grad, nll_with_grad, pinball_with_grad};
use crate::{Error, Result};

/// Samples per parallel work unit; fixed so reductions do not depend on the
/// thread count.
const CHUNK: usize = 8;

/// A backbone plus forecasting head with all learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    blocks: Vec<ParamBlock>,
}

enum BackboneTrace {
    Lstm(Vec<LayerTrace>),
    Mlp { input: Vec<f64>, activation: Vec<f64> },
}

/// Everything the backward pass needs for one sample.
pub(crate) struct SampleTrace {
    backbone: BackboneTrace,
    hidden: Vec<f64>,
    raw: Vec<f64>,
    cs: Vec<f64>,
    loss: f64,
    d_output: OutputGrad,
}

impl Model {
    /// Initializes weights uniformly in `±1/√fan_in`, forget-gate biases at 1,
    /// other biases at 0 and the injection scale α at 1.
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let h = spec.hidden;
        let mut blocks = Vec::new();
        let uniform = |name: String, rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let bound = 1.0 / (cols as f64).sqrt();
            let mut b = ParamBlock::zeros(name, vec![rows, cols]);
            b.values.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
            b
        };
        match spec.backbone {
            Backbone::Lstm => {
                for l in 0..spec.layers {
                    let input = if l == 0 { spec.input_dim } else { h };
                    blocks.push(uniform(format!("lstm{l}.weight"), 4 * h, input + h, &mut rng));
                    let mut bias = ParamBlock::zeros(format!("lstm{l}.bias"), vec![4 * h]);
                    bias.values[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
                    blocks.push(bias);
                }
            }
            Backbone::Mlp => {
                blocks.push(uniform("mlp.weight".into(), h, spec.window * spec.input_dim, &mut rng));
                blocks.push(ParamBlock::zeros("mlp.bias", vec![h]));
            }
        }
        let out = spec.horizon * spec.output_width();
        blocks.push(uniform("head.weight".into(), out, h, &mut rng));
        blocks.push(ParamBlock::zeros("head.bias", vec![out]));
        let mut alpha = ParamBlock::zeros("alpha", vec![1]);
        alpha.values[0] = 1.0;
        blocks.push(alpha);
        Ok(Self { spec, blocks })
    }

    /// Rebuilds a model from a spec and previously saved blocks.
    pub fn from_blocks(spec: ModelSpec, blocks: Vec<ParamBlock>) -> Result<Self> {
        let template = Model::new(spec.clone())?;
        if template.blocks.len() != blocks.len()
            || template.blocks.iter().zip(&blocks).any(|(a, b)| a.name != b.name || a.shape != b.shape || b.len() != a.len())
        {
            return Err(Error::Checkpoint("parameter blocks do not match the model spec".into()));
        }
        Ok(Self { spec, blocks })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        &mut self.blocks
    }

    pub fn num_params(&self) -> usize {
        self.blocks.iter().map(ParamBlock::len).sum()
    }

    pub fn alpha(&self) -> f64 {
        self.blocks.last().expect("alpha block").values[0]
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.blocks.last_mut().expect("alpha block").values[0] = alpha;
    }

    pub fn alpha_index(&self) -> usize {
        self.blocks.len() - 1
    }

    fn head_index(&self) -> usize {
        self.blocks.len() - 3
    }

    /// Sets the head weights and biases to zero.
    pub fn zero_head(&mut self) {
        let i = self.head_index();
        for b in &mut self.blocks[i..i + 2] {
            b.values.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn check_sample(&self, s: &WindowedSample) -> Result<()> {
        let spec = &self.spec;
        if s.window != spec.window || s.num_features != spec.input_dim || s.input.len() != spec.window * spec.input_dim {
            return Err(Error::Shape(format!(
                "input window is {}×{} (W×D), model expects {}×{}",
                s.window, s.num_features, spec.window, spec.input_dim
            )));
        }
        if s.future_clear_sky.len() != spec.horizon || s.target.len() != spec.horizon {
            return Err(Error::Shape(format!(
                "horizon P={} expected, sample has target {} and clear sky {}",
                spec.horizon,
                s.target.len(),
                s.future_clear_sky.len()
            )));
        }
        Ok(())
    }

    fn backbone_forward(&self, input: &[f64]) -> (Vec<f64>, BackboneTrace) {
        let spec = &self.spec;
        match spec.backbone {
            Backbone::Lstm => {
                let mut traces: Vec<LayerTrace> = Vec::with_capacity(spec.layers);
                for l in 0..spec.layers {
                    let (inputs, dim) = match traces.last() {
                        None => (input.to_vec(), spec.input_dim),
                        Some(prev) => (prev.outputs().to_vec(), spec.hidden),
                    };
                    let w = &self.blocks[2 * l].values;
                    let b = &self.blocks[2 * l + 1].values;
                    traces.push(layer_forward(w, b, inputs, dim, spec.hidden));
                }
                let h = traces.last().expect("at least one layer").last_hidden().to_vec();
                (h, BackboneTrace::Lstm(traces))
            }
            Backbone::Mlp => {
                let w = &self.blocks[0].values;
                let b = &self.blocks[1].values;
                let cols = input.len();
                let activation: Vec<f64> = (0..spec.hidden)
                    .map(|r| (b[r] + w[r * cols..(r + 1) * cols].iter().zip(input).map(|(a, x)| a * x).sum::<f64>()).tanh())
                    .collect();
                (activation.clone(), BackboneTrace::Mlp { input: input.to_vec(), activation })
            }
        }
    }

    fn head_raw(&self, hidden: &[f64]) -> Vec<f64> {
        let i = self.head_index();
        let w = &self.blocks[i].values;
        let b = &self.blocks[i + 1].values;
        let h = hidden.len();
        b.iter()
            .enumerate()
            .map(|(r, bias)| bias + w[r * h..(r + 1) * h].iter().zip(hidden).map(|(a, x)| a * x).sum::<f64>())
            .collect()
    }

    /// Top-layer hidden state after the last window step.
    pub fn hidden_state(&self, sample: &WindowedSample) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        Ok(self.backbone_forward(&sample.input).0)
    }

    pub fn predict_one(&self, sample: &WindowedSample) -> Result<SampleOutput> {
        self.check_sample(sample)?;
        let (hidden, _) = self.backbone_forward(&sample.input);
        let raw = self.head_raw(&hidden);
        let mut out = head::transform(&self.spec, &raw, &sample.future_clear_sky, self.alpha());
        if let (true, SampleOutput::Values(v)) = (self.spec.sort_quantiles && self.spec.head == HeadKind::Quantile, &mut out) {
            head::sort_quantiles(v, self.spec.output_width());
        }
        Ok(out)
    }

    pub fn predict(&self, samples: &[WindowedSample]) -> Result<ForecastOutput> {
        let outs: Vec<SampleOutput> = samples
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|s| self.predict_one(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut forecast = ForecastOutput::empty(&self.spec);
        outs.into_iter().for_each(|o| forecast.push(o));
        Ok(forecast)
    }

    pub(crate) fn trace_sample(&self, sample: &WindowedSample) -> Result<SampleTrace> {
        self.check_sample(sample)?;
        let (hidden, backbone) = self.backbone_forward(&sample.input);
        let raw = self.head_raw(&hidden);
        let out = head::transform(&self.spec, &raw, &sample.future_clear_sky, self.alpha());
        let y = &sample.target;
        let (loss, d_output) = match (self.spec.head, out) {
            (HeadKind::Deterministic, SampleOutput::Values(v)) => {
                let (l, g) = mse_with_grad(y, &v)?;
                (l, OutputGrad::Values(g))
            }
            (HeadKind::Quantile, SampleOutput::Values(v)) => {
                let q = self.spec.quantiles.as_ref().expect("validated spec");
                let (l, g) = pinball_with_grad(y, &v, q)?;
                (l, OutputGrad::Values(g))
            }
            (head, SampleOutput::Params(p)) => {
                let (l, g) = nll_with_grad(y, &p, head.family().expect("parametric head"))?;
                (l, OutputGrad::Params(g))
            }
            _ => unreachable!("head output kind fixed by spec"),
        };
        Ok(SampleTrace { backbone, hidden, raw, cs: sample.future_clear_sky.clone(), loss, d_output })
    }

    /// Adds `scale · ∂loss/∂θ` for one traced sample into `grads`.
    pub(crate) fn backward_sample(&self, trace: &SampleTrace, scale: f64, grads: &mut Gradients) {
        let spec = &self.spec;
        let (mut d_raw, d_alpha) = head::backward(spec, &trace.raw, &trace.cs, self.alpha(), &trace.d_output);
        d_raw.iter_mut().for_each(|v| *v *= scale);
        let ai = self.alpha_index();
        grads.0[ai][0] += scale * d_alpha;

        let hi = self.head_index();
        let h = trace.hidden.len();
        let mut d_hidden = vec![0.0; h];
        {
            let w = &self.blocks[hi].values;
            let (before, after) = grads.0.split_at_mut(hi + 1);
            let dw = &mut before[hi];
            let db = &mut after[0];
            for (r, &dr) in d_raw.iter().enumerate() {
                db[r] += dr;
                for k in 0..h {
                    dw[r * h + k] += dr * trace.hidden[k];
                    d_hidden[k] += w[r * h + k] * dr;
                }
            }
        }

        match &trace.backbone {
            BackboneTrace::Lstm(layers) => {
                let steps = spec.window;
                let mut d_out = vec![0.0; steps * spec.hidden];
                d_out[(steps - 1) * spec.hidden..].copy_from_slice(&d_hidden);
                for l in (0..layers.len()).rev() {
                    let (before, after) = grads.0.split_at_mut(2 * l + 1);
                    let d_in = layer_backward(&layers[l], &self.blocks[2 * l].values, &d_out, &mut before[2 * l], &mut after[0]);
                    d_out = d_in;
                }
            }
            BackboneTrace::Mlp { input, activation } => {
                let cols = input.len();
                let (before, after) = grads.0.split_at_mut(1);
                for r in 0..spec.hidden {
                    let da = d_hidden[r] * (1.0 - activation[r] * activation[r]);
                    after[0][r] += da;
                    let row = &mut before[0][r * cols..(r + 1) * cols];
                    row.iter_mut().zip(input).for_each(|(g, x)| *g += da * x);
                }
            }
        }
    }

    /// Mean loss over the batch and its exact gradient.
    pub fn loss_and_grad(&self, batch: &[&WindowedSample]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let scale = 1.0 / batch.len() as f64;
        let partials = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grads = Gradients::zeros_like(&self.blocks);
                let mut loss = 0.0;
                for s in chunk {
                    let trace = self.trace_sample(s)?;
                    loss += trace.loss;
                    self.backward_sample(&trace, scale, &mut grads);
                }
                Ok((loss, grads))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = Gradients::zeros_like(&self.blocks);
        let mut loss = 0.0;
        for (l, g) in &partials {
            loss += l;
            total.add_assign(g);
        }
        Ok((loss * scale, total))
    }

    /// Mean per-sample loss, without gradients.
    pub fn loss(&self, samples: &[WindowedSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::invalid("empty sample set"));
        }
        let sums = samples
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|s| self.trace_sample(s).map(|t| t.loss)).sum::<Result<f64>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(sums.iter().sum::<f64>() / samples.len() as f64)
    }
}

/// Records forward passes so that [`GradientTape::backward`] can replay them.
pub struct GradientTape<'m> {
    model: &'m Model,
    traces: Option<Vec<SampleTrace>>,
}

impl<'m> GradientTape<'m> {
    pub fn new(model: &'m Model) -> Self {
        Self { model, traces: None }
    }

    /// Runs the forward pass and returns the mean batch loss.
    pub fn forward(&mut self, batch: &[&WindowedSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let traces = batch.iter().map(|s| self.model.trace_sample(s)).collect::<Result<Vec<_>>>()?;
        let loss = traces.iter().map(|t| t.loss).sum::<f64>() / traces.len() as f64;
        self.traces = Some(traces);
        Ok(loss)
    }

    /// Gradients of the last recorded loss; consumes the recording.
    pub fn backward(&mut self) -> Result<Gradients> {
        let traces = self.traces.take().ok_or(Error::NoForward)?;
        let scale = 1.0 / traces.len() as f64;
        let mut grads = Gradients::zeros_like(self.model.blocks());
        for t in &traces {
            self.model.backward_sample(t, scale, &mut grads);
        }
        Ok(grads)
    }
}
