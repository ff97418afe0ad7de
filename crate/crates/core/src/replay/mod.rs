//! Transition storage: uniform and prioritized sampling, observation
//! windows and n-step returns.

mod sum_tree;

pub use sum_tree::SumTree;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{Decoder, Encoder, NnError};
use crate::sim::Termination;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("buffer holds {size} transitions, need {needed}")]
    NotReady { size: usize, needed: usize },
    #[error("transition {seq} is not in the buffer")]
    Missing { seq: u64 },
    #[error("episode {episode}: step {got} does not follow step {expected}")]
    NonContiguous { episode: u64, expected: u64, got: u64 },
    #[error("episode {episode} already ended")]
    AfterTerminal { episode: u64 },
    #[error("invalid replay config: {0}")]
    Config(String),
    #[error("state width {got}, buffer uses {expected}")]
    Width { expected: usize, got: usize },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl From<NnError> for ReplayError {
    fn from(e: NnError) -> Self {
        ReplayError::Snapshot(e.to_string())
    }
}

pub type Result<T, E = ReplayError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: [f64; 3],
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub termination: Termination,
    pub episode: u64,
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerConfig {
    pub alpha: f64,
    /// Weight of the squared action gradient in the priority.
    pub lambda3: f64,
    pub epsilon: f64,
    /// Importance-sampling exponent; `None` samples without correction.
    pub is_beta: Option<f64>,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            lambda3: 0.1,
            epsilon: 1e-3,
            is_beta: None,
        }
    }
}

impl PerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(ReplayError::Config(format!("alpha {} must be non-negative", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ReplayError::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if !(self.lambda3 >= 0.0 && self.lambda3.is_finite()) {
            return Err(ReplayError::Config(format!("lambda3 {} must be non-negative", self.lambda3)));
        }
        if let Some(b) = self.is_beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(ReplayError::Config(format!("beta {b} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `δ² + λ₃·|∇_a Q|² + ε`.
    pub fn priority(&self, td_error: f64, action_grad_sq: f64) -> f64 {
        td_error * td_error + self.lambda3 * action_grad_sq + self.epsilon
    }
}

/// Prioritized draw: buffer sequence numbers with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizedSample {
    pub indices: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// Importance weights normalized to a maximum of 1; all ones without correction.
    pub weights: Vec<f64>,
}

/// Discounted return over up to `n` steps from one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStep {
    pub reward_sum: f64,
    /// Transition whose `next_state` is the bootstrap state.
    pub last: u64,
    pub horizon: usize,
    /// Termination of the last included transition.
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayStats {
    pub pushed: u64,
    pub stale_updates: u64,
}

/// Ring buffer addressed by a global sequence number; slot = seq mod capacity.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Option<Transition>>,
    next_seq: u64,
    state_dim: Option<usize>,
    per: Option<(PerConfig, SumTree)>,
    /// Priority before the α exponent, per slot.
    raw_priority: Vec<f64>,
    max_priority: f64,
    stale_updates: u64,
}

impl ReplayBuffer {
    pub fn uniform(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(ReplayError::Config("capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            slots: Vec::new(),
            next_seq: 0,
            state_dim: None,
            per: None,
            raw_priority: Vec::new(),
            max_priority: 1.0,
            stale_updates: 0,
        })
    }

    pub fn prioritized(capacity: usize, config: PerConfig) -> Result<Self> {
        config.validate()?;
        let mut b = Self::uniform(capacity)?;
        b.per = Some((config, SumTree::new(capacity)));
        Ok(b)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        (self.next_seq as usize).min(self.capacity)
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    pub fn is_prioritized(&self) -> bool {
        self.per.is_some()
    }

    pub fn per_config(&self) -> Option<&PerConfig> {
        self.per.as_ref().map(|(c, _)| c)
    }

    pub fn stats(&self) -> ReplayStats {
        ReplayStats {
            pushed: self.next_seq,
            stale_updates: self.stale_updates,
        }
    }

    /// Oldest sequence number still stored.
    pub fn oldest(&self) -> u64 {
        self.next_seq.saturating_sub(self.capacity as u64)
    }

    /// Sequence number the next push will receive.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn contains(&self, seq: u64) -> bool {
        seq < self.next_seq && seq >= self.oldest()
    }

    fn slot(&self, seq: u64) -> usize {
        (seq % self.capacity as u64) as usize
    }

    pub fn get(&self, seq: u64) -> Result<&Transition> {
        if !self.contains(seq) {
            return Err(ReplayError::Missing { seq });
        }
        Ok(self.slots[self.slot(seq)].as_ref().expect("stored slot"))
    }

    /// Appends a transition, evicting the oldest when full. Returns its sequence number.
    pub fn push(&mut self, t: Transition) -> Result<u64> {
        for s in [&t.state, &t.next_state] {
            match self.state_dim {
                Some(d) if d != s.len() => return Err(ReplayError::Width { expected: d, got: s.len() }),
                _ => {}
            }
        }
        if t.state.len() != t.next_state.len() {
            return Err(ReplayError::Width {
                expected: t.state.len(),
                got: t.next_state.len(),
            });
        }
        if self.next_seq > 0 {
            let prev = self.get(self.next_seq - 1)?;
            if prev.episode == t.episode {
                if prev.termination.is_terminal() {
                    return Err(ReplayError::AfterTerminal { episode: t.episode });
                }
                if t.step != prev.step + 1 {
                    return Err(ReplayError::NonContiguous {
                        episode: t.episode,
                        expected: prev.step + 1,
                        got: t.step,
                    });
                }
            }
        }
        self.state_dim = Some(t.state.len());
        let seq = self.next_seq;
        let slot = self.slot(seq);
        if slot == self.slots.len() {
            self.slots.push(Some(t));
        } else {
            self.slots[slot] = Some(t);
        }
        if let Some((cfg, tree)) = &mut self.per {
            tree.set(slot, self.max_priority.powf(cfg.alpha));
            if slot == self.raw_priority.len() {
                self.raw_priority.push(self.max_priority);
            } else {
                self.raw_priority[slot] = self.max_priority;
            }
        }
        self.next_seq += 1;
        Ok(seq)
    }

    fn ensure_ready(&self, n: usize) -> Result<()> {
        if self.len() < n.max(1) {
            return Err(ReplayError::NotReady {
                size: self.len(),
                needed: n.max(1),
            });
        }
        Ok(())
    }

    /// `n` i.i.d. uniform draws with replacement.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<u64>> {
        self.ensure_ready(n.min(1))?;
        let oldest = self.oldest();
        let len = self.len() as u64;
        Ok((0..n).map(|_| oldest + rng.random_range(0..len)).collect())
    }

    /// Stratified draw: the priority mass is split into `n` equal segments
    /// with one draw per segment. Falls back to uniform without priorities.
    pub fn sample_prioritized<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PrioritizedSample> {
        self.ensure_ready(n.min(1))?;
        let Some((cfg, tree)) = &self.per else {
            let indices = self.sample_uniform(n, rng)?;
            let p = 1.0 / self.len() as f64;
            return Ok(PrioritizedSample {
                probabilities: vec![p; n],
                weights: vec![1.0; n],
                indices,
            });
        };
        let total = tree.total();
        assert!(total > 0.0, "priority mass is zero despite the epsilon floor");
        let segment = total / n as f64;
        let mut indices = Vec::with_capacity(n);
        let mut probabilities = Vec::with_capacity(n);
        for k in 0..n {
            let mass = (k as f64 + rng.random::<f64>()) * segment;
            let slot = tree.find(mass);
            indices.push(self.seq_of_slot(slot));
            probabilities.push(tree.get(slot) / total);
        }
        let weights = match cfg.is_beta {
            None => vec![1.0; n],
            Some(beta) => {
                let len = self.len() as f64;
                let raw: Vec<f64> = probabilities.iter().map(|p| (len * p).powf(-beta)).collect();
                let max = raw.iter().copied().fold(0.0, f64::max);
                raw.iter().map(|w| w / max).collect()
            }
        };
        Ok(PrioritizedSample {
            indices,
            probabilities,
            weights,
        })
    }

    fn seq_of_slot(&self, slot: usize) -> u64 {
        let cap = self.capacity as u64;
        let newest = self.next_seq - 1;
        let base = newest - newest % cap;
        let seq = base + slot as u64;
        if seq > newest {
            seq - cap
        } else {
            seq
        }
    }

    /// Sampling probability of a stored transition.
    pub fn probability(&self, seq: u64) -> Result<f64> {
        self.get(seq)?;
        Ok(match &self.per {
            Some((_, tree)) => tree.get(self.slot(seq)) / tree.total(),
            None => 1.0 / self.len() as f64,
        })
    }

    /// Raw priority (before the α exponent) of a stored transition.
    pub fn priority(&self, seq: u64) -> Result<Option<f64>> {
        self.get(seq)?;
        Ok(self.per.as_ref().map(|_| self.raw_priority[self.slot(seq)]))
    }

    /// Stores `δ² + λ₃·grad² + ε` for a sampled transition. Evicted indices
    /// are skipped and counted. Returns the new raw priority when applied.
    pub fn update_priority(&mut self, seq: u64, td_error: f64, action_grad_sq: f64) -> Option<f64> {
        if !self.contains(seq) {
            self.stale_updates += 1;
            return None;
        }
        let slot = self.slot(seq);
        let (cfg, tree) = self.per.as_mut()?;
        let p = cfg.priority(td_error, action_grad_sq);
        if !p.is_finite() {
            return None;
        }
        tree.set(slot, p.powf(cfg.alpha));
        self.raw_priority[slot] = p;
        self.max_priority = self.max_priority.max(p);
        Some(p)
    }

    pub fn tree(&self) -> Option<&SumTree> {
        self.per.as_ref().map(|(_, t)| t)
    }

    /// Sequence numbers of the `w` transitions ending at `seq`, oldest first,
    /// never crossing an episode start. Missing history is padded with the
    /// earliest stored transition of the episode.
    pub fn window_indices(&self, seq: u64, w: usize) -> Result<Vec<u64>> {
        let episode = self.get(seq)?.episode;
        let mut out = vec![seq; w];
        let mut first = seq;
        for k in 1..w {
            let back = k as u64;
            if seq < back {
                break;
            }
            let prev = seq - back;
            match self.get(prev) {
                Ok(t) if t.episode == episode => first = prev,
                _ => break,
            }
        }
        let have = (seq - first) as usize + 1;
        for (k, slot) in out.iter_mut().enumerate() {
            let pos = k as isize - (w as isize - have as isize);
            *slot = if pos < 0 { first } else { first + pos as u64 };
        }
        Ok(out)
    }

    /// Flattened states `s_{i−w+1} … s_i`.
    pub fn assemble_window(&self, seq: u64, w: usize) -> Result<Vec<f64>> {
        let idx = self.window_indices(seq, w)?;
        let mut out = Vec::new();
        for i in idx {
            out.extend_from_slice(&self.get(i)?.state);
        }
        Ok(out)
    }

    /// Actions paired with [`ReplayBuffer::assemble_window`].
    pub fn assemble_action_window(&self, seq: u64, w: usize) -> Result<Vec<[f64; 3]>> {
        self.window_indices(seq, w)?.into_iter().map(|i| Ok(self.get(i)?.action)).collect()
    }

    /// Flattened states `s_{i−w+2} … s_{i+1}` for the successor of `seq`.
    pub fn assemble_next_window(&self, seq: u64, w: usize) -> Result<Vec<f64>> {
        let mut out = if w > 1 {
            self.assemble_window(seq, w - 1)?
        } else {
            Vec::new()
        };
        out.extend_from_slice(&self.get(seq)?.next_state);
        Ok(out)
    }

    /// Stored actions that precede the successor state in its window
    /// (`a_{i−w+2} … a_i`); the final action comes from the target actor.
    pub fn assemble_next_action_prefix(&self, seq: u64, w: usize) -> Result<Vec<[f64; 3]>> {
        if w <= 1 {
            return Ok(Vec::new());
        }
        self.assemble_action_window(seq, w - 1)
    }

    /// `Σ_{k<m} γ^k r_{i+k}` where `m ≤ n` stops at the first terminal or at
    /// the newest stored transition.
    pub fn assemble_nstep(&self, seq: u64, n: usize, gamma: f64) -> Result<NStep> {
        let first = self.get(seq)?;
        let mut sum = 0.0;
        let mut discount = 1.0;
        let mut last = seq;
        let mut termination = first.termination;
        let mut horizon = 0;
        for k in 0..n.max(1) {
            let i = seq + k as u64;
            let t = match self.get(i) {
                Ok(t) if t.episode == first.episode => t,
                _ => break,
            };
            sum += discount * t.reward;
            discount *= gamma;
            last = i;
            termination = t.termination;
            horizon = k + 1;
            if t.termination.is_terminal() {
                break;
            }
        }
        Ok(NStep {
            reward_sum: sum,
            last,
            horizon,
            termination,
        })
    }

    const SNAPSHOT_KIND: &'static str = "replay";

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new(Self::SNAPSHOT_KIND);
        enc.put_u64(self.capacity as u64);
        enc.put_u64(self.next_seq);
        enc.put_u64(self.stale_updates);
        enc.put_f64(self.max_priority);
        match &self.per {
            Some((cfg, _)) => {
                enc.put_u32(1);
                enc.put_f64(cfg.alpha);
                enc.put_f64(cfg.lambda3);
                enc.put_f64(cfg.epsilon);
                enc.put_f64(cfg.is_beta.unwrap_or(f64::NAN));
            }
            None => enc.put_u32(0),
        }
        let oldest = self.oldest();
        for seq in oldest..self.next_seq {
            let t = self.get(seq).expect("stored");
            enc.put_f64s(&t.state);
            enc.put_f64s(&t.action);
            enc.put_f64(t.reward);
            enc.put_f64s(&t.next_state);
            enc.put_u32(t.termination.code());
            enc.put_u64(t.episode);
            enc.put_u64(t.step);
            if self.per.is_some() {
                enc.put_f64(self.raw_priority[self.slot(seq)]);
            }
        }
        enc.into_bytes()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut dec = Decoder::new(data, Self::SNAPSHOT_KIND)?;
        let capacity = dec.u64()? as usize;
        let next_seq = dec.u64()?;
        let stale_updates = dec.u64()?;
        let max_priority = dec.f64()?;
        let mut buf = match dec.u32()? {
            0 => Self::uniform(capacity)?,
            1 => {
                let alpha = dec.f64()?;
                let lambda3 = dec.f64()?;
                let epsilon = dec.f64()?;
                let beta = dec.f64()?;
                Self::prioritized(
                    capacity,
                    PerConfig {
                        alpha,
                        lambda3,
                        epsilon,
                        is_beta: (!beta.is_nan()).then_some(beta),
                    },
                )?
            }
            other => return Err(ReplayError::Snapshot(format!("unknown buffer kind {other}"))),
        };
        let oldest = next_seq.saturating_sub(capacity as u64);
        let stored = (next_seq as usize).min(capacity);
        buf.slots = vec![None; stored];
        if buf.per.is_some() {
            buf.raw_priority = vec![0.0; stored];
        }
        for seq in oldest..next_seq {
            let state = dec.f64s()?;
            let action = dec.f64s()?;
            let reward = dec.f64()?;
            let next_state = dec.f64s()?;
            let code = dec.u32()?;
            let termination =
                Termination::from_code(code).ok_or_else(|| ReplayError::Snapshot(format!("bad termination code {code}")))?;
            let episode = dec.u64()?;
            let step = dec.u64()?;
            if action.len() != 3 {
                return Err(ReplayError::Snapshot(format!("action of width {}", action.len())));
            }
            let slot = (seq % capacity as u64) as usize;
            buf.state_dim = Some(state.len());
            buf.slots[slot] = Some(Transition {
                state,
                action: [action[0], action[1], action[2]],
                reward,
                next_state,
                termination,
                episode,
                step,
            });
            if let Some((cfg, tree)) = &mut buf.per {
                let raw = dec.f64()?;
                tree.set(slot, raw.powf(cfg.alpha));
                buf.raw_priority[slot] = raw;
            }
        }
        dec.finish()?;
        buf.next_seq = next_seq;
        buf.stale_updates = stale_updates;
        buf.max_priority = max_priority;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| ReplayError::Snapshot(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| ReplayError::Snapshot(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&data)
    }
}

#[cfg(test)]
mod tests;
