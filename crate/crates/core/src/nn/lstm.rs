//! LSTM cell with an unrolled backward pass.
//!
//! Gate layout inside the stacked weight matrix is `[input, forget, output,
//! candidate]`, each block `hidden` rows tall. Every row multiplies the
//! concatenation `[x_t; h_{t-1}]`.

use rand::Rng;

use super::{check_len, sigmoid, Init, NnError, Parameterized, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden: usize,
    /// `(4 * hidden) x (input_dim + hidden)`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden: vec![0.0; hidden],
            cell: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    /// `[x_t; h_{t-1}]`
    joint: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Per-step values needed to run backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Result of backpropagating through an unrolled sequence.
#[derive(Debug, Clone)]
pub struct LstmGradients {
    pub inputs: Vec<Vec<f64>>,
    pub initial: LstmState,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: usize, init: Init, rng: &mut R) -> Self {
        let cols = input_dim + hidden;
        let mut weights = vec![0.0; 4 * hidden * cols];
        init.fill(&mut weights, cols, rng);
        let mut bias = vec![0.0; 4 * hidden];
        // forget gate starts open
        if !matches!(init, Init::Zeros) {
            bias[hidden..2 * hidden].fill(1.0);
        }
        Self {
            input_dim,
            hidden,
            weights,
            bias,
        }
    }

    pub fn from_parts(input_dim: usize, hidden: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        check_len("lstm weights", 4 * hidden * (input_dim + hidden), weights.len())?;
        check_len("lstm bias", 4 * hidden, bias.len())?;
        Ok(Self {
            input_dim,
            hidden,
            weights,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn check_state(&self, state: &LstmState) -> Result<()> {
        check_len("lstm hidden state", self.hidden, state.hidden.len())?;
        check_len("lstm cell state", self.hidden, state.cell.len())
    }

    fn step_cached(&self, input: &[f64], state: &LstmState) -> Result<(LstmState, StepCache)> {
        check_len("lstm input", self.input_dim, input.len())?;
        self.check_state(state)?;
        let h = self.hidden;
        let cols = self.input_dim + h;
        let mut joint = Vec::with_capacity(cols);
        joint.extend_from_slice(input);
        joint.extend_from_slice(&state.hidden);

        let mut z = self.bias.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &self.weights[r * cols..(r + 1) * cols];
            *zr += row.iter().zip(&joint).map(|(w, x)| w * x).sum::<f64>();
        }
        let i: Vec<f64> = z[..h].iter().map(|v| sigmoid(*v)).collect();
        let f: Vec<f64> = z[h..2 * h].iter().map(|v| sigmoid(*v)).collect();
        let o: Vec<f64> = z[2 * h..3 * h].iter().map(|v| sigmoid(*v)).collect();
        let g: Vec<f64> = z[3 * h..].iter().map(|v| v.tanh()).collect();
        let cell: Vec<f64> = (0..h).map(|k| f[k] * state.cell[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = cell.iter().map(|c| c.tanh()).collect();
        let hidden: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
        let cache = StepCache {
            joint,
            c_prev: state.cell.clone(),
            i,
            f,
            o,
            g,
            tanh_c,
        };
        Ok((LstmState { hidden, cell }, cache))
    }

    /// One recurrence step; the output equals the new hidden vector.
    pub fn step(&self, input: &[f64], state: &LstmState) -> Result<(Vec<f64>, LstmState)> {
        let (next, _) = self.step_cached(input, state)?;
        Ok((next.hidden.clone(), next))
    }

    /// Unrolls the cell over `inputs`, returning every hidden output, the
    /// final state and the cache for [`LstmCell::backward_sequence`].
    pub fn forward_sequence(&self, inputs: &[Vec<f64>], initial: &LstmState) -> Result<(Vec<Vec<f64>>, LstmState, LstmCache)> {
        let mut state = initial.clone();
        self.check_state(&state)?;
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (next, cache) = self.step_cached(x, &state)?;
            outputs.push(next.hidden.clone());
            steps.push(cache);
            state = next;
        }
        Ok((outputs, state, LstmCache { steps }))
    }

    /// Backpropagation through time for `L = Σ_t grad_hidden[t] · h_t`.
    /// Parameter gradients are added into `grads`.
    pub fn backward_sequence(&self, cache: &LstmCache, grad_hidden: &[Vec<f64>], grads: &mut LstmCell) -> Result<LstmGradients> {
        check_len("lstm output gradients", cache.steps.len(), grad_hidden.len())?;
        check_len("lstm gradient buffer", self.weights.len(), grads.weights.len())?;
        let h = self.hidden;
        let cols = self.input_dim + h;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut d_inputs = vec![Vec::new(); cache.steps.len()];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..cache.steps.len()).rev() {
            check_len("lstm hidden gradient", h, grad_hidden[t].len())?;
            let s = &cache.steps[t];
            for k in 0..h {
                let dh = grad_hidden[t][k] + dh_next[k];
                let dc = dc_next[k] + dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let d_o = dh * s.tanh_c[k];
                let d_i = dc * s.g[k];
                let d_g = dc * s.i[k];
                let d_f = dc * s.c_prev[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                dz[h + k] = d_f * s.f[k] * (1.0 - s.f[k]);
                dz[2 * h + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                dz[3 * h + k] = d_g * (1.0 - s.g[k] * s.g[k]);
            }
            let mut d_joint = vec![0.0; cols];
            for (r, dzr) in dz.iter().enumerate() {
                if *dzr == 0.0 {
                    continue;
                }
                grads.bias[r] += dzr;
                let row = &self.weights[r * cols..(r + 1) * cols];
                let g_row = &mut grads.weights[r * cols..(r + 1) * cols];
                for c in 0..cols {
                    g_row[c] += dzr * s.joint[c];
                    d_joint[c] += dzr * row[c];
                }
            }
            dh_next.copy_from_slice(&d_joint[self.input_dim..]);
            d_joint.truncate(self.input_dim);
            d_inputs[t] = d_joint;
        }
        Ok(LstmGradients {
            inputs: d_inputs,
            initial: LstmState {
                hidden: dh_next,
                cell: dc_next,
            },
        })
    }
}

impl Parameterized for LstmCell {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.weights, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, &mut self.bias]
    }
}

impl super::Persist for LstmCell {
    fn encode(&self, enc: &mut super::Encoder) {
        enc.put_u32(self.input_dim as u32);
        enc.put_u32(self.hidden as u32);
        enc.put_f64s(&self.weights);
        enc.put_f64s(&self.bias);
    }

    fn decode(dec: &mut super::Decoder<'_>) -> Result<Self> {
        let input_dim = dec.u32()? as usize;
        let hidden = dec.u32()? as usize;
        let weights = dec.f64s()?;
        let bias = dec.f64s()?;
        LstmCell::from_parts(input_dim, hidden, weights, bias).map_err(|e| NnError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cell_outputs_zero() {
        let cell = LstmCell::from_parts(3, 2, vec![0.0; 4 * 2 * 5], vec![0.0; 8]).unwrap();
        let (out, state) = cell.step(&[1.0, -1.0, 2.0], &LstmState::zeros(2)).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        assert_eq!(state.cell, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_scalar_cell() {
        // rows: [w_x, w_h] per gate in order i, f, o, g
        let weights = vec![0.5, -1.0, 1.0, 0.25, -0.5, 2.0, 2.0, 1.0];
        let bias = vec![0.1, 0.2, -0.3, 0.0];
        let cell = LstmCell::from_parts(1, 1, weights, bias).unwrap();
        let prev = LstmState {
            hidden: vec![0.5],
            cell: vec![-0.4],
        };
        let x = 0.8;
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let i = s(0.5 * x - 1.0 * 0.5 + 0.1);
        let f = s(1.0 * x + 0.25 * 0.5 + 0.2);
        let o = s(-0.5 * x + 2.0 * 0.5 - 0.3);
        let g = (2.0 * x + 1.0 * 0.5f64).tanh();
        let c = f * -0.4 + i * g;
        let h = o * c.tanh();
        let (out, state) = cell.step(&[x], &prev).unwrap();
        assert!((out[0] - h).abs() < 1e-15);
        assert!((state.cell[0] - c).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let cell = LstmCell::from_parts(2, 3, vec![0.0; 4 * 3 * 5], vec![0.0; 12]).unwrap();
        assert!(matches!(cell.step(&[1.0], &LstmState::zeros(3)), Err(NnError::Shape { .. })));
        assert!(matches!(cell.step(&[1.0, 2.0], &LstmState::zeros(2)), Err(NnError::Shape { .. })));
        assert!(LstmCell::from_parts(2, 3, vec![0.0; 10], vec![0.0; 12]).is_err());
    }
}
