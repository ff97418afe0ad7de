//! Small differentiable numeric core.
//!
//! Everything here works on single `f64` vectors; minibatches are handled by
//! the caller looping over samples and accumulating gradients into a
//! zero-initialized parameter-shaped buffer (see [`Parameterized::zeros_like`]).

mod adam;
mod checkpoint;
mod dense;
mod lstm;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Decoder, Encoder, Persist, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dense::{Dense, Init, Mlp, MlpCache};
pub use lstm::{LstmCache, LstmCell, LstmGradients, LstmState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in gradient tensor {tensor}")]
    NonFinite { tensor: usize },
    #[error("soft-update rate {0} outside [0, 1]")]
    Tau(f64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NnError::Shape {
            context,
            expected,
            got,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `y = f(z)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Linear => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Linear,
            other => return Err(NnError::Checkpoint(format!("unknown activation code {other}"))),
        })
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A value that owns a fixed, ordered set of parameter tensors.
///
/// Gradients, Adam moments and target networks are all represented as values
/// of the same type, so shape agreement reduces to comparing tensor lengths.
pub trait Parameterized: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    fn shape_signature(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, element-wise.
    fn add_scaled(&mut self, other: &Self, scale: f64) -> Result<()> {
        check_shapes(self, other)?;
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        Ok(())
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// Euclidean norm over every parameter.
    fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn check_shapes<P: Parameterized>(a: &P, b: &P) -> Result<()> {
    let (sa, sb) = (a.shape_signature(), b.shape_signature());
    check_len("tensor count", sa.len(), sb.len())?;
    for (x, y) in sa.iter().zip(&sb) {
        check_len("tensor length", *x, *y)?;
    }
    Ok(())
}

/// Blend `target ← τ·source + (1−τ)·target`.
pub fn soft_update<P: Parameterized>(source: &P, target: &mut P, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(NnError::Tau(tau));
    }
    check_shapes(source, target)?;
    for (dst, src) in target.tensors_mut().into_iter().zip(source.tensors()) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = tau * s + (1.0 - tau) * *d;
        }
    }
    Ok(())
}

/// Euclidean distance between two identically shaped parameter sets.
pub fn param_distance<P: Parameterized>(a: &P, b: &P) -> Result<f64> {
    check_shapes(a, b)?;
    Ok(a.tensors()
        .iter()
        .zip(b.tensors())
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
