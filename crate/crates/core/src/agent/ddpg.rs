use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{soft_update, Adam, AdamConfig, Decoder, Encoder, NnError, Parameterized};
use crate::replay::{PerConfig, ReplayBuffer, ReplayError, Transition};
use crate::sim::{Action, Termination};

use super::actor::Actor;
use super::critic::{Critic, FfCritic, LstmCritic};
use super::noise::{Exploration, ExplorationConfig};
use super::variant::{BufferKind, Variant};
use super::{bootstraps, compute_target};

pub const AGENT_CHECKPOINT_KIND: &str = "agent";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("training diverged at update {update}:\n{dump}")]
    Diverged { update: u64, dump: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub variant: Variant,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: usize,
    /// Used only by the prioritized variants.
    pub per: PerConfig,
    pub lac_enabled: bool,
    /// Bootstrap through step-cap terminals.
    pub adopted_target: bool,
    /// Transitions stored before the first update; never below `batch_size`.
    pub warmup: usize,
    /// Multiplies rewards on entry to the buffer; learning sees scaled
    /// returns, reported returns stay raw.
    pub reward_scale: f64,
    pub exploration: ExplorationConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Win1,
            gamma: 0.99,
            tau: 1e-3,
            batch_size: 32,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            hidden: 64,
            per: PerConfig::default(),
            lac_enabled: false,
            adopted_target: true,
            warmup: 32,
            reward_scale: 1.0,
            exploration: ExplorationConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn window(&self) -> usize {
        self.variant.window()
    }

    pub fn nstep(&self) -> usize {
        self.variant.nstep()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau outside [0, 1]");
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch size and hidden width must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return bad("reward scale must be positive");
        }
        self.per.validate()?;
        Ok(())
    }
}

/// Rolling stack of the last `w` observations; short histories repeat the
/// first observation of the episode, matching replay padding.
#[derive(Debug, Clone)]
pub struct ObservationWindow {
    window: usize,
    frames: VecDeque<Vec<f64>>,
}

impl ObservationWindow {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            frames: VecDeque::new(),
        }
    }

    pub fn reset(&mut self, first: &[f64]) {
        self.frames.clear();
        for _ in 0..self.window {
            self.frames.push_back(first.to_vec());
        }
    }

    pub fn push(&mut self, obs: &[f64]) {
        if self.frames.is_empty() {
            self.reset(obs);
            return;
        }
        self.frames.pop_front();
        self.frames.push_back(obs.to_vec());
    }

    /// Oldest first.
    pub fn flat(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }

    pub fn latest(&self) -> Option<&[f64]> {
        self.frames.back().map(|v| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    /// `1/N Σ w_i (y_i − Q_i)²`, before the update.
    pub critic_loss: f64,
    /// `1/N Σ Q(s_i, μ(s_i))` under the updated critic.
    pub actor_objective: f64,
    /// `y_i − Q_i` per sample.
    pub td_errors: Vec<f64>,
    /// `|∇_a Q(s_i, μ(s_i))|` per sample.
    pub action_grad_norms: Vec<f64>,
}

struct Sample {
    seq: u64,
    states: Vec<f64>,
    actions: Vec<[f64; 3]>,
    target: f64,
    weight: f64,
}

pub struct Agent {
    config: AgentConfig,
    state_dim: usize,
    actor: Actor,
    critic: Critic,
    target_actor: Actor,
    target_critic: Critic,
    actor_opt: Adam<Actor>,
    critic_opt: Adam<Critic>,
    buffer: ReplayBuffer,
    exploration: Exploration,
    rng: ChaCha8Rng,
    updates: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, state_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if state_dim == 0 {
            return Err(AgentError::Config("state dimension must be positive".into()));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let w = config.window();
        let h = config.hidden;
        let actor_input = if config.variant.is_recurrent() { state_dim } else { w * state_dim };
        let actor = Actor::new(actor_input, &[h, h], &mut master)?;
        let critic = if config.variant.is_recurrent() {
            Critic::Lstm(LstmCritic::new(state_dim, w, h, h, &mut master)?)
        } else {
            Critic::Ff(FfCritic::new(w * state_dim, h, h, &mut master)?)
        };
        let buffer = match config.variant.buffer() {
            BufferKind::Uniform(cap) => ReplayBuffer::uniform(cap)?,
            BufferKind::Prioritized(cap) => ReplayBuffer::prioritized(cap, config.per)?,
        };
        let exploration = Exploration::new(config.exploration, master.random());
        let rng = ChaCha8Rng::seed_from_u64(master.random());
        Ok(Self {
            actor_opt: Adam::new(AdamConfig::with_lr(config.actor_lr), &actor),
            critic_opt: Adam::new(AdamConfig::with_lr(config.critic_lr), &critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            buffer,
            exploration,
            rng,
            updates: 0,
            state_dim,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn window(&self) -> usize {
        self.config.window()
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn target_actor(&self) -> &Actor {
        &self.target_actor
    }

    pub fn target_critic(&self) -> &Critic {
        &self.target_critic
    }

    pub fn actor_mut(&mut self) -> &mut Actor {
        &mut self.actor
    }

    pub fn critic_mut(&mut self) -> &mut Critic {
        &mut self.critic
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn exploration(&self) -> &Exploration {
        &self.exploration
    }

    pub fn exploration_mut(&mut self) -> &mut Exploration {
        &mut self.exploration
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn new_window(&self) -> ObservationWindow {
        ObservationWindow::new(self.window())
    }

    /// Recurrent variants feed the actor only the newest state.
    fn actor_input<'a>(&self, window: &'a [f64]) -> &'a [f64] {
        if self.config.variant.is_recurrent() {
            &window[window.len() - self.state_dim..]
        } else {
            window
        }
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        let expected = self.window() * self.state_dim;
        if window.len() != expected {
            return Err(NnError::Shape {
                context: "observation window",
                expected,
                got: window.len(),
            }
            .into());
        }
        Ok(())
    }

    /// Deterministic policy output on a flattened observation window.
    pub fn act(&self, window: &[f64]) -> Result<Action> {
        self.check_window(window)?;
        let a = self.actor.act(self.actor_input(window))?;
        Ok(Action::new(a[0], a[1], a[2]))
    }

    pub fn act_explore(&mut self, window: &[f64]) -> Result<Action> {
        let a = self.act(window)?;
        Ok(self.exploration.perturb(a))
    }

    pub fn remember(&mut self, mut t: Transition) -> Result<u64> {
        t.reward *= self.config.reward_scale;
        Ok(self.buffer.push(t)?)
    }

    /// Q of a window of `w` (state, action) pairs under the recurrent critic.
    pub fn lstm_critic_eval(&self, states: &[f64], actions: &[[f64; 3]]) -> Result<f64> {
        match &self.critic {
            Critic::Lstm(_) => Ok(self.critic.q(states, actions)?),
            Critic::Ff(_) => Err(AgentError::Config(format!("{} has no recurrent critic", self.config.variant))),
        }
    }

    /// Critic input for transition `seq`: its state window and the matching actions.
    fn critic_input(&self, seq: u64) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
        let w = self.window();
        let states = self.buffer.assemble_window(seq, w)?;
        let actions = if self.config.variant.is_recurrent() {
            self.buffer.assemble_action_window(seq, w)?
        } else {
            vec![self.buffer.get(seq)?.action]
        };
        Ok((states, actions))
    }

    /// `Q′(s′, μ′(s′))` for the successor of `seq`.
    fn bootstrap_value(&self, seq: u64) -> Result<f64> {
        let w = self.window();
        let next = self.buffer.assemble_next_window(seq, w)?;
        let a = self.target_actor.act(self.actor_input(&next))?;
        let actions = if self.config.variant.is_recurrent() {
            let mut prefix = self.buffer.assemble_next_action_prefix(seq, w)?;
            prefix.push(a);
            prefix
        } else {
            vec![a]
        };
        Ok(self.target_critic.q(&next, &actions)?)
    }

    /// Training target for stored transition `seq` with an `n`-step horizon.
    pub fn target_for(&self, seq: u64, n: usize) -> Result<f64> {
        let ns = self.buffer.assemble_nstep(seq, n, self.config.gamma)?;
        let q = if bootstraps(ns.termination, self.config.adopted_target) {
            self.bootstrap_value(ns.last)?
        } else {
            0.0
        };
        Ok(compute_target(ns.reward_sum, ns.horizon, ns.termination, self.config.gamma, q, self.config.adopted_target))
    }

    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.config.warmup.max(self.config.batch_size)
    }

    /// One minibatch update of critic, actor and both targets. `None` until
    /// the buffer holds enough transitions.
    pub fn train_step(&mut self) -> Result<Option<TrainStats>> {
        if !self.ready() {
            return Ok(None);
        }
        let n = self.config.batch_size;
        let (seqs, weights) = if self.buffer.is_prioritized() {
            let s = self.buffer.sample_prioritized(n, &mut self.rng)?;
            let w = if self.config.per.is_beta.is_some() { s.weights } else { vec![1.0; n] };
            (s.indices, w)
        } else {
            (self.buffer.sample_uniform(n, &mut self.rng)?, vec![1.0; n])
        };

        let mut batch = Vec::with_capacity(n);
        for (&seq, &weight) in seqs.iter().zip(&weights) {
            let (states, actions) = self.critic_input(seq)?;
            let target = self.target_for(seq, self.config.nstep())?;
            batch.push(Sample {
                seq,
                states,
                actions,
                target,
                weight,
            });
        }

        let scale = 1.0 / n as f64;
        let mut critic_grads = self.critic.zeros_like();
        let mut td_errors = Vec::with_capacity(n);
        let mut loss = 0.0;
        let mut qs = Vec::with_capacity(n);
        for s in &batch {
            let cache = self.critic.forward(&s.states, &s.actions)?;
            let q = cache.q();
            let delta = s.target - q;
            loss += s.weight * delta * delta;
            self.critic.backward(&cache, -2.0 * s.weight * delta * scale, &mut critic_grads)?;
            td_errors.push(delta);
            qs.push(q);
        }
        loss *= scale;
        if !loss.is_finite() || !critic_grads.all_finite() {
            return Err(self.diverged(&batch, &qs, loss));
        }
        self.critic_opt.update(&mut self.critic, &critic_grads)?;

        let mut actor_grads = self.actor.zeros_like();
        let mut scratch = self.critic.zeros_like();
        let mut objective = 0.0;
        let mut grad_norms = Vec::with_capacity(n);
        for s in &batch {
            let acache = self.actor.forward(self.actor_input(&s.states))?;
            let mut actions = s.actions.clone();
            *actions.last_mut().expect("window holds an action") = acache.action();
            let ccache = self.critic.forward(&s.states, &actions)?;
            objective += ccache.q();
            let g = self.critic.backward(&ccache, 1.0, &mut scratch)?;
            let dq_da = *g.actions.last().expect("window holds an action");
            grad_norms.push(dq_da.iter().map(|v| v * v).sum::<f64>().sqrt());
            // ascent on J as descent on −J
            let ascent = [-dq_da[0] * scale, -dq_da[1] * scale, -dq_da[2] * scale];
            self.actor.backward(&acache, ascent, &mut actor_grads)?;
        }
        objective *= scale;
        if !objective.is_finite() || !actor_grads.all_finite() {
            return Err(self.diverged(&batch, &qs, loss));
        }
        self.actor_opt.update(&mut self.actor, &actor_grads)?;

        if self.buffer.is_prioritized() {
            for ((s, delta), norm) in batch.iter().zip(&td_errors).zip(&grad_norms) {
                self.buffer.update_priority(s.seq, *delta, norm * norm);
            }
        }

        soft_update(&self.critic, &mut self.target_critic, self.config.tau)?;
        soft_update(&self.actor, &mut self.target_actor, self.config.tau)?;
        self.updates += 1;
        Ok(Some(TrainStats {
            critic_loss: loss,
            actor_objective: objective,
            td_errors,
            action_grad_norms: grad_norms,
        }))
    }

    fn diverged(&self, batch: &[Sample], qs: &[f64], loss: f64) -> AgentError {
        let mut dump = format!("critic loss {loss}\nseq,reward,termination,target,q,weight\n");
        for (i, s) in batch.iter().enumerate() {
            let (reward, term) = self
                .buffer
                .get(s.seq)
                .map(|t| (t.reward, t.termination))
                .unwrap_or((f64::NAN, Termination::None));
            let q = qs.get(i).copied().unwrap_or(f64::NAN);
            let _ = writeln!(dump, "{},{},{},{},{},{}", s.seq, reward, term.as_str(), s.target, q, s.weight);
        }
        AgentError::Diverged {
            update: self.updates,
            dump,
        }
    }

    /// Networks, targets and counters. Optimizer moments and the replay
    /// buffer are not part of a checkpoint.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new(AGENT_CHECKPOINT_KIND);
        enc.put_str(&serde_json::to_string(&self.config).expect("config serializes"));
        enc.put_u64(self.state_dim as u64);
        enc.put_u64(self.updates);
        enc.put_u64(self.exploration.steps());
        enc.put(&self.actor);
        enc.put(&self.critic);
        enc.put(&self.target_actor);
        enc.put(&self.target_critic);
        enc.into_bytes()
    }

    /// Restores a checkpoint; `seed` drives the fresh exploration and sampling streams.
    pub fn from_bytes(data: &[u8], seed: u64) -> Result<Self> {
        let mut dec = Decoder::new(data, AGENT_CHECKPOINT_KIND)?;
        let config: AgentConfig =
            serde_json::from_str(&dec.string()?).map_err(|e| NnError::Checkpoint(format!("agent config: {e}")))?;
        let state_dim = dec.u64()? as usize;
        let updates = dec.u64()?;
        let explored = dec.u64()?;
        let actor: Actor = dec.get()?;
        let critic: Critic = dec.get()?;
        let target_actor: Actor = dec.get()?;
        let target_critic: Critic = dec.get()?;
        dec.finish()?;
        let mut agent = Agent::new(config, state_dim, seed)?;
        for (a, b) in [(&agent.actor, &actor), (&agent.target_actor, &target_actor)] {
            crate::nn::param_distance(a, b)?;
        }
        for (a, b) in [(&agent.critic, &critic), (&agent.target_critic, &target_critic)] {
            if std::mem::discriminant(a) != std::mem::discriminant(b) {
                return Err(NnError::Checkpoint("critic kind does not match variant".into()).into());
            }
            crate::nn::param_distance(a, b)?;
        }
        agent.actor_opt = Adam::new(AdamConfig::with_lr(agent.config.actor_lr), &actor);
        agent.critic_opt = Adam::new(AdamConfig::with_lr(agent.config.critic_lr), &critic);
        agent.actor = actor;
        agent.critic = critic;
        agent.target_actor = target_actor;
        agent.target_critic = target_critic;
        agent.updates = updates;
        agent.exploration.set_steps(explored);
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, seed: u64) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?, seed)
    }
}

#[cfg(test)]
mod tests;
