//! Single LSTM layer with full-sequence backpropagation through time.
//!
//! Gate pre-activations are laid out `[input, forget, cell, output]`, each
//! `hidden` wide; the weight matrix is `4H × (in + H)` acting on `[x_t; h_{t-1}]`.

use super::sigmoid;

pub(crate) struct LayerTrace {
    input_dim: usize,
    hidden: usize,
    steps: usize,
    /// `T × in`
    inputs: Vec<f64>,
    /// `T × 4H`, post-activation
    gates: Vec<f64>,
    /// `(T + 1) × H`, row 0 is the zero initial state
    cell: Vec<f64>,
    /// `T × H`
    tanh_cell: Vec<f64>,
    /// `(T + 1) × H`
    hidden_states: Vec<f64>,
}

impl LayerTrace {
    /// Hidden states for steps `1..=T`, row-major.
    pub(crate) fn outputs(&self) -> &[f64] {
        &self.hidden_states[self.hidden..]
    }

    pub(crate) fn last_hidden(&self) -> &[f64] {
        &self.hidden_states[self.steps * self.hidden..]
    }
}

pub(crate) fn layer_forward(weight: &[f64], bias: &[f64], inputs: Vec<f64>, input_dim: usize, hidden: usize) -> LayerTrace {
    let steps = inputs.len() / input_dim;
    let h4 = 4 * hidden;
    let cols = input_dim + hidden;
    let mut gates = vec![0.0; steps * h4];
    let mut cell = vec![0.0; (steps + 1) * hidden];
    let mut tanh_cell = vec![0.0; steps * hidden];
    let mut hidden_states = vec![0.0; (steps + 1) * hidden];
    let mut xh = vec![0.0; cols];
    let mut z = vec![0.0; h4];

    for t in 0..steps {
        xh[..input_dim].copy_from_slice(&inputs[t * input_dim..(t + 1) * input_dim]);
        xh[input_dim..].copy_from_slice(&hidden_states[t * hidden..(t + 1) * hidden]);
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &weight[r * cols..(r + 1) * cols];
            *zr = bias[r] + row.iter().zip(&xh).map(|(w, x)| w * x).sum::<f64>();
        }
        let g = &mut gates[t * h4..(t + 1) * h4];
        for j in 0..hidden {
            let i_gate = sigmoid(z[j]);
            let f_gate = sigmoid(z[hidden + j]);
            let c_cand = z[2 * hidden + j].tanh();
            let o_gate = sigmoid(z[3 * hidden + j]);
            g[j] = i_gate;
            g[hidden + j] = f_gate;
            g[2 * hidden + j] = c_cand;
            g[3 * hidden + j] = o_gate;
            let c = f_gate * cell[t * hidden + j] + i_gate * c_cand;
            let tc = c.tanh();
            cell[(t + 1) * hidden + j] = c;
            tanh_cell[t * hidden + j] = tc;
            hidden_states[(t + 1) * hidden + j] = o_gate * tc;
        }
    }
    LayerTrace { input_dim, hidden, steps, inputs, gates, cell, tanh_cell, hidden_states }
}

/// Accumulates parameter gradients and returns `∂L/∂inputs` (`T × in`).
///
/// `d_outputs` holds `∂L/∂h_t` for `t = 1..=T` from outside the recurrence.
pub(crate) fn layer_backward(
    trace: &LayerTrace,
    weight: &[f64],
    d_outputs: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
) -> Vec<f64> {
    let (input_dim, hidden, steps) = (trace.input_dim, trace.hidden, trace.steps);
    let h4 = 4 * hidden;
    let cols = input_dim + hidden;
    let mut d_inputs = vec![0.0; steps * input_dim];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut da = vec![0.0; h4];
    let mut xh = vec![0.0; cols];
    let mut dxh = vec![0.0; cols];

    for t in (0..steps).rev() {
        let g = &trace.gates[t * h4..(t + 1) * h4];
        for j in 0..hidden {
            let (i_gate, f_gate, c_cand, o_gate) = (g[j], g[hidden + j], g[2 * hidden + j], g[3 * hidden + j]);
            let tc = trace.tanh_cell[t * hidden + j];
            let c_prev = trace.cell[t * hidden + j];
            let dh = d_outputs[t * hidden + j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o_gate * (1.0 - tc * tc);
            da[j] = dc * c_cand * i_gate * (1.0 - i_gate);
            da[hidden + j] = dc * c_prev * f_gate * (1.0 - f_gate);
            da[2 * hidden + j] = dc * i_gate * (1.0 - c_cand * c_cand);
            da[3 * hidden + j] = d_o * o_gate * (1.0 - o_gate);
            dc_next[j] = dc * f_gate;
        }
        xh[..input_dim].copy_from_slice(&trace.inputs[t * input_dim..(t + 1) * input_dim]);
        xh[input_dim..].copy_from_slice(&trace.hidden_states[t * hidden..(t + 1) * hidden]);
        dxh.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dar) in da.iter().enumerate() {
            d_bias[r] += dar;
            if dar == 0.0 {
                continue;
            }
            let row = &weight[r * cols..(r + 1) * cols];
            let d_row = &mut d_weight[r * cols..(r + 1) * cols];
            for k in 0..cols {
                d_row[k] += dar * xh[k];
                dxh[k] += row[k] * dar;
            }
        }
        d_inputs[t * input_dim..(t + 1) * input_dim].copy_from_slice(&dxh[..input_dim]);
        dh_next.copy_from_slice(&dxh[input_dim..]);
    }
    d_inputs
}
