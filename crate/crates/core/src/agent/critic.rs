//! Action-value networks: a feed-forward critic and a recurrent critic that
//! unrolls an LSTM over a window of (state, action) pairs.

use rand::Rng;

use crate::nn::{
    check_len, Activation, Decoder, Dense, Encoder, Init, LstmCache, LstmCell, LstmState, Mlp, MlpCache, NnError,
    Parameterized, Persist, Result,
};

use super::actor::OUTPUT_INIT;

/// State stream → relu, concatenated with the action, → relu → linear Q.
#[derive(Debug, Clone, PartialEq)]
pub struct FfCritic {
    state_net: Mlp,
    head: Mlp,
}

/// Per step: state stream → relu, concatenated with the action, fed to an
/// LSTM; the final hidden state → linear Q.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCritic {
    window: usize,
    state_net: Mlp,
    cell: LstmCell,
    head: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Critic {
    Ff(FfCritic),
    Lstm(LstmCritic),
}

pub enum CriticCache {
    Ff { state: MlpCache, head: MlpCache },
    Lstm { states: Vec<MlpCache>, lstm: LstmCache, head: MlpCache },
}

impl CriticCache {
    pub fn q(&self) -> f64 {
        match self {
            CriticCache::Ff { head, .. } | CriticCache::Lstm { head, .. } => head.output()[0],
        }
    }
}

/// Input gradients of one Q evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticInputGrad {
    /// Flattened like the state input.
    pub states: Vec<f64>,
    /// One entry per action in the input, oldest first.
    pub actions: Vec<[f64; 3]>,
}

impl FfCritic {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, state_hidden: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let state_net = Mlp::from_layers(vec![Dense::new(state_dim, state_hidden, Activation::Relu, Init::FanIn, rng)])?;
        let head = Mlp::from_layers(vec![
            Dense::new(state_hidden + 3, hidden, Activation::Relu, Init::FanIn, rng),
            Dense::new(hidden, 1, Activation::Linear, Init::Uniform(OUTPUT_INIT), rng),
        ])?;
        Ok(Self { state_net, head })
    }

    pub fn from_parts(state_net: Mlp, head: Mlp) -> Result<Self> {
        check_len("critic head input", state_net.output_dim() + 3, head.input_dim())?;
        check_len("critic output", 1, head.output_dim())?;
        Ok(Self { state_net, head })
    }
}

impl LstmCritic {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, window: usize, state_hidden: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let state_net = Mlp::from_layers(vec![Dense::new(state_dim, state_hidden, Activation::Relu, Init::FanIn, rng)])?;
        let cell = LstmCell::new(state_hidden + 3, hidden, Init::FanIn, rng);
        let head = Mlp::from_layers(vec![Dense::new(hidden, 1, Activation::Linear, Init::Uniform(OUTPUT_INIT), rng)])?;
        Self::from_parts(window, state_net, cell, head)
    }

    pub fn from_parts(window: usize, state_net: Mlp, cell: LstmCell, head: Mlp) -> Result<Self> {
        if window == 0 {
            return Err(NnError::Shape {
                context: "critic window",
                expected: 1,
                got: 0,
            });
        }
        check_len("lstm input", state_net.output_dim() + 3, cell.input_dim())?;
        check_len("critic head input", cell.hidden_dim(), head.input_dim())?;
        check_len("critic output", 1, head.output_dim())?;
        Ok(Self {
            window,
            state_net,
            cell,
            head,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn cell(&self) -> &LstmCell {
        &self.cell
    }

    pub fn cell_mut(&mut self) -> &mut LstmCell {
        &mut self.cell
    }
}

impl Critic {
    pub fn state_dim(&self) -> usize {
        match self {
            Critic::Ff(c) => c.state_net.input_dim(),
            Critic::Lstm(c) => c.state_net.input_dim(),
        }
    }

    /// Expected number of stacked states in the input.
    pub fn window(&self) -> usize {
        match self {
            Critic::Ff(_) => 1,
            Critic::Lstm(c) => c.window,
        }
    }

    /// `states` holds `window · state_dim` values; `actions` one action per
    /// window step for the recurrent critic and exactly one otherwise.
    pub fn forward(&self, states: &[f64], actions: &[[f64; 3]]) -> Result<CriticCache> {
        match self {
            Critic::Ff(c) => {
                check_len("critic actions", 1, actions.len())?;
                let state = c.state_net.forward(states)?;
                let mut joint = state.output().to_vec();
                joint.extend_from_slice(&actions[0]);
                let head = c.head.forward(&joint)?;
                Ok(CriticCache::Ff { state, head })
            }
            Critic::Lstm(c) => {
                let d = c.state_net.input_dim();
                check_len("critic window states", c.window * d, states.len())?;
                check_len("critic window actions", c.window, actions.len())?;
                let mut caches = Vec::with_capacity(c.window);
                let mut inputs = Vec::with_capacity(c.window);
                for (k, a) in actions.iter().enumerate() {
                    let sc = c.state_net.forward(&states[k * d..(k + 1) * d])?;
                    let mut x = sc.output().to_vec();
                    x.extend_from_slice(a);
                    inputs.push(x);
                    caches.push(sc);
                }
                let (_, last, lstm) = c.cell.forward_sequence(&inputs, &LstmState::zeros(c.cell.hidden_dim()))?;
                let head = c.head.forward(&last.hidden)?;
                Ok(CriticCache::Lstm {
                    states: caches,
                    lstm,
                    head,
                })
            }
        }
    }

    pub fn q(&self, states: &[f64], actions: &[[f64; 3]]) -> Result<f64> {
        Ok(self.forward(states, actions)?.q())
    }

    /// Accumulates `dq · ∂Q/∂θ` into `grads` and returns `dq · ∂Q/∂input`.
    pub fn backward(&self, cache: &CriticCache, dq: f64, grads: &mut Critic) -> Result<CriticInputGrad> {
        match (self, cache, grads) {
            (Critic::Ff(c), CriticCache::Ff { state, head }, Critic::Ff(g)) => {
                let d_joint = c.head.backward_accumulate(head, &[dq], &mut g.head)?;
                let h = c.state_net.output_dim();
                let d_states = c.state_net.backward_accumulate(state, &d_joint[..h], &mut g.state_net)?;
                Ok(CriticInputGrad {
                    states: d_states,
                    actions: vec![[d_joint[h], d_joint[h + 1], d_joint[h + 2]]],
                })
            }
            (Critic::Lstm(c), CriticCache::Lstm { states, lstm, head }, Critic::Lstm(g)) => {
                let d_last = c.head.backward_accumulate(head, &[dq], &mut g.head)?;
                let steps = states.len();
                let hidden = c.cell.hidden_dim();
                let mut grad_hidden = vec![vec![0.0; hidden]; steps];
                grad_hidden[steps - 1] = d_last;
                let lg = c.cell.backward_sequence(lstm, &grad_hidden, &mut g.cell)?;
                let h = c.state_net.output_dim();
                let mut d_states = Vec::with_capacity(steps * c.state_net.input_dim());
                let mut d_actions = Vec::with_capacity(steps);
                for (sc, dx) in states.iter().zip(&lg.inputs) {
                    d_states.extend(c.state_net.backward_accumulate(sc, &dx[..h], &mut g.state_net)?);
                    d_actions.push([dx[h], dx[h + 1], dx[h + 2]]);
                }
                Ok(CriticInputGrad {
                    states: d_states,
                    actions: d_actions,
                })
            }
            _ => Err(NnError::Shape {
                context: "critic kind mismatch",
                expected: 0,
                got: 1,
            }),
        }
    }
}

impl Parameterized for Critic {
    fn tensors(&self) -> Vec<&[f64]> {
        match self {
            Critic::Ff(c) => {
                let mut t = c.state_net.tensors();
                t.extend(c.head.tensors());
                t
            }
            Critic::Lstm(c) => {
                let mut t = c.state_net.tensors();
                t.extend(c.cell.tensors());
                t.extend(c.head.tensors());
                t
            }
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Critic::Ff(c) => {
                let mut t = c.state_net.tensors_mut();
                t.extend(c.head.tensors_mut());
                t
            }
            Critic::Lstm(c) => {
                let mut t = c.state_net.tensors_mut();
                t.extend(c.cell.tensors_mut());
                t.extend(c.head.tensors_mut());
                t
            }
        }
    }
}

impl Persist for Critic {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            Critic::Ff(c) => {
                enc.put_u32(0);
                c.state_net.encode(enc);
                c.head.encode(enc);
            }
            Critic::Lstm(c) => {
                enc.put_u32(1);
                enc.put_u32(c.window as u32);
                c.state_net.encode(enc);
                c.cell.encode(enc);
                c.head.encode(enc);
            }
        }
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        match dec.u32()? {
            0 => {
                let state_net = Mlp::decode(dec)?;
                let head = Mlp::decode(dec)?;
                Ok(Critic::Ff(FfCritic::from_parts(state_net, head)?))
            }
            1 => {
                let window = dec.u32()? as usize;
                let state_net = Mlp::decode(dec)?;
                let cell = LstmCell::decode(dec)?;
                let head = Mlp::decode(dec)?;
                Ok(Critic::Lstm(LstmCritic::from_parts(window, state_net, cell, head)?))
            }
            other => Err(NnError::Checkpoint(format!("unknown critic kind {other}"))),
        }
    }
}
