use rand::Rng;

use super::{check_len, Activation, NnError, Parameterized, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform in `±1/sqrt(fan_in)`.
    FanIn,
    /// Uniform in `±limit`, used for output layers.
    Uniform(f64),
}

impl Init {
    fn limit(self, fan_in: usize) -> f64 {
        match self {
            Init::Zeros => 0.0,
            Init::FanIn => 1.0 / (fan_in.max(1) as f64).sqrt(),
            Init::Uniform(limit) => limit,
        }
    }

    pub(crate) fn fill<R: Rng + ?Sized>(self, values: &mut [f64], fan_in: usize, rng: &mut R) {
        let limit = self.limit(fan_in);
        for v in values.iter_mut() {
            *v = if limit > 0.0 {
                rng.random_range(-limit..limit)
            } else {
                0.0
            };
        }
    }
}

/// Affine layer followed by an element-wise activation. Weights are
/// row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, init: Init, rng: &mut R) -> Self {
        let mut weights = vec![0.0; in_dim * out_dim];
        let mut bias = vec![0.0; out_dim];
        init.fill(&mut weights, in_dim, rng);
        init.fill(&mut bias, in_dim, rng);
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        }
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        check_len("dense weights", in_dim * out_dim, weights.len())?;
        check_len("dense bias", out_dim, bias.len())?;
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
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

    /// Writes `activation(W x + b)` into `out`.
    pub fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.bias[o];
            out.push(self.activation.apply(z));
        }
    }

    /// Accumulates parameter gradients into `grads` and writes the gradient
    /// with respect to the layer input into `grad_in`.
    fn backward_into(&self, input: &[f64], output: &[f64], grad_out: &[f64], grads: &mut Dense, grad_in: &mut Vec<f64>) {
        grad_in.clear();
        grad_in.resize(self.in_dim, 0.0);
        for o in 0..self.out_dim {
            let dz = grad_out[o] * self.activation.derivative_from_output(output[o]);
            if dz == 0.0 {
                continue;
            }
            grads.bias[o] += dz;
            let row = o * self.in_dim;
            let w_row = &self.weights[row..row + self.in_dim];
            let g_row = &mut grads.weights[row..row + self.in_dim];
            for i in 0..self.in_dim {
                g_row[i] += dz * input[i];
                grad_in[i] += dz * w_row[i];
            }
        }
    }
}

/// Sequential stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Activations recorded by [`Mlp::forward`]; `values[0]` is the input and
/// `values[l + 1]` the output of layer `l`.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    values: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.values.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// `sizes` lists the input width followed by every layer width.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], init: Init, rng: &mut R) -> Result<Self> {
        check_len("mlp activations", sizes.len().saturating_sub(1), activations.len())?;
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, act)| Dense::new(w[0], w[1], *act, init, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        for pair in layers.windows(2) {
            check_len("adjacent layer widths", pair[0].out_dim, pair[1].in_dim)?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward(&self, input: &[f64]) -> Result<MlpCache> {
        check_len("mlp input", self.input_dim(), input.len())?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.forward_into(values.last().unwrap(), &mut out);
            values.push(out);
        }
        Ok(MlpCache { values })
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("mlp input", self.input_dim(), input.len())?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Gradients of `L = grad_out · output`, returned as a fresh
    /// parameter-shaped value plus the input gradient.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64]) -> Result<(Mlp, Vec<f64>)> {
        let mut grads = self.zeros_like();
        let grad_in = self.backward_accumulate(cache, grad_out, &mut grads)?;
        Ok((grads, grad_in))
    }

    /// Like [`Mlp::backward`] but adds into an existing gradient buffer.
    pub fn backward_accumulate(&self, cache: &MlpCache, grad_out: &[f64], grads: &mut Mlp) -> Result<Vec<f64>> {
        check_len("mlp cache depth", self.layers.len() + 1, cache.values.len())?;
        check_len("mlp output gradient", self.output_dim(), grad_out.len())?;
        check_len("mlp gradient buffer", self.layers.len(), grads.layers.len())?;
        for (l, layer) in self.layers.iter().enumerate() {
            check_len("mlp cached activation", layer.in_dim, cache.values[l].len())?;
        }
        let mut grad = grad_out.to_vec();
        let mut grad_in = Vec::new();
        for l in (0..self.layers.len()).rev() {
            self.layers[l].backward_into(&cache.values[l], &cache.values[l + 1], &grad, &mut grads.layers[l], &mut grad_in);
            std::mem::swap(&mut grad, &mut grad_in);
        }
        Ok(grad)
    }
}

impl Parameterized for Mlp {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl super::Persist for Mlp {
    fn encode(&self, enc: &mut super::Encoder) {
        enc.put_u32(self.layers.len() as u32);
        for l in &self.layers {
            enc.put_u32(l.in_dim as u32);
            enc.put_u32(l.out_dim as u32);
            enc.put_u32(l.activation.code());
            enc.put_f64s(&l.weights);
            enc.put_f64s(&l.bias);
        }
    }

    fn decode(dec: &mut super::Decoder<'_>) -> Result<Self> {
        let n = dec.u32()? as usize;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let in_dim = dec.u32()? as usize;
            let out_dim = dec.u32()? as usize;
            let act = Activation::from_code(dec.u32()?)?;
            let weights = dec.f64s()?;
            let bias = dec.f64s()?;
            layers.push(Dense::from_parts(in_dim, out_dim, weights, bias, act)?);
        }
        Mlp::from_layers(layers).map_err(|e| NnError::Checkpoint(e.to_string()))
    }
}
