use rand::Rng;

use crate::nn::{sigmoid, Activation, Decoder, Dense, Encoder, Init, Mlp, MlpCache, NnError, Parameterized, Persist, Result};

/// Final-layer weights start in ±this so early actions sit near the squash centre.
pub const OUTPUT_INIT: f64 = 3e-3;

/// Deterministic policy: relu MLP with a linear 3-unit head squashed to
/// steer `tanh`, throttle `sigmoid`, brake `sigmoid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    net: Mlp,
}

pub struct ActorCache {
    mlp: MlpCache,
    action: [f64; 3],
}

impl ActorCache {
    pub fn action(&self) -> [f64; 3] {
        self.action
    }
}

fn squash(z: &[f64]) -> [f64; 3] {
    [z[0].tanh(), sigmoid(z[1]), sigmoid(z[2])]
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mut layers = Vec::new();
        let mut prev = input_dim;
        for &h in hidden {
            layers.push(Dense::new(prev, h, Activation::Relu, Init::FanIn, rng));
            prev = h;
        }
        layers.push(Dense::new(prev, 3, Activation::Linear, Init::Uniform(OUTPUT_INIT), rng));
        Self::from_mlp(Mlp::from_layers(layers)?)
    }

    pub fn from_mlp(net: Mlp) -> Result<Self> {
        if net.output_dim() != 3 {
            return Err(NnError::Shape {
                context: "actor output",
                expected: 3,
                got: net.output_dim(),
            });
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn act(&self, input: &[f64]) -> Result<[f64; 3]> {
        Ok(squash(&self.net.predict(input)?))
    }

    pub fn forward(&self, input: &[f64]) -> Result<ActorCache> {
        let mlp = self.net.forward(input)?;
        let action = squash(mlp.output());
        Ok(ActorCache { mlp, action })
    }

    /// Accumulates `∂(grad_action · μ(s))/∂θ` into `grads`.
    pub fn backward(&self, cache: &ActorCache, grad_action: [f64; 3], grads: &mut Actor) -> Result<()> {
        let a = cache.action;
        let dz = [
            grad_action[0] * (1.0 - a[0] * a[0]),
            grad_action[1] * a[1] * (1.0 - a[1]),
            grad_action[2] * a[2] * (1.0 - a[2]),
        ];
        self.net.backward_accumulate(&cache.mlp, &dz, &mut grads.net)?;
        Ok(())
    }
}

impl Parameterized for Actor {
    fn tensors(&self) -> Vec<&[f64]> {
        self.net.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.tensors_mut()
    }
}

impl Persist for Actor {
    fn encode(&self, enc: &mut Encoder) {
        self.net.encode(enc);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        Actor::from_mlp(Mlp::decode(dec)?)
    }
}
