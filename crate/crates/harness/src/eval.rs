//! Deterministic rollouts and per-lap results.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use racer_core::agent::{Agent, ObservationWindow};
use racer_core::geometry::{RacingLine, Track};
use racer_core::sim::{Action, EnvConfig, Environment, Observation, Termination};

use crate::bot::BaselineBot;
use crate::HarnessError;

/// Anything that can drive the car one decision at a time.
pub trait Policy {
    fn reset(&mut self, env: &Environment, obs: &Observation);
    fn act(&mut self, env: &Environment, obs: &Observation) -> Result<Action, HarnessError>;
}

impl Policy for BaselineBot {
    fn reset(&mut self, _env: &Environment, _obs: &Observation) {}

    fn act(&mut self, env: &Environment, _obs: &Observation) -> Result<Action, HarnessError> {
        Ok(BaselineBot::act(self, env.state(), env.track(), env.reference()))
    }
}

/// Greedy actor, no exploration.
pub struct AgentPolicy<'a> {
    agent: &'a Agent,
    window: ObservationWindow,
}

impl<'a> AgentPolicy<'a> {
    pub fn new(agent: &'a Agent) -> Self {
        Self {
            window: agent.new_window(),
            agent,
        }
    }
}

impl Policy for AgentPolicy<'_> {
    fn reset(&mut self, _env: &Environment, obs: &Observation) {
        self.window.reset(&obs.to_vec());
    }

    fn act(&mut self, _env: &Environment, obs: &Observation) -> Result<Action, HarnessError> {
        let v = obs.to_vec();
        if self.window.latest() != Some(v.as_slice()) {
            self.window.push(&v);
        }
        Ok(self.agent.act(&self.window.flat())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Completed every requested lap.
    Finished,
    /// Did not complete the requested laps.
    Dnf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Durations of completed laps, seconds; the first includes the standing start.
    pub lap_times: Vec<f64>,
    pub best_lap: Option<f64>,
    pub damage: f64,
    pub termination: Termination,
    pub episode_return: f64,
    pub steps: usize,
    pub status: Status,
}

impl EpisodeResult {
    pub fn finished(&self) -> bool {
        self.status == Status::Finished
    }

    /// Best lap of a finished, damage-free run.
    pub fn clean_best_lap(&self) -> Option<f64> {
        if self.finished() && self.damage == 0.0 {
            self.best_lap
        } else {
            None
        }
    }
}

/// Steps allowed per requested lap during evaluation.
pub const EVAL_STEPS_PER_LAP: usize = 1500;

/// Drives `laps` laps from a standing start. Stops early on any
/// termination; an incomplete run is a DNF, not an error.
pub fn evaluate<P: Policy>(
    policy: &mut P,
    track: Arc<Track>,
    reference: Option<Arc<RacingLine>>,
    env_config: &EnvConfig,
    laps: usize,
) -> Result<(EpisodeResult, Environment), HarnessError> {
    let mut config = env_config.clone();
    config.termination.max_steps = EVAL_STEPS_PER_LAP * laps.max(1);
    let mut env = Environment::new(track, reference, config)?;
    let mut obs = env.reset();
    policy.reset(&env, &obs);
    let mut ret = 0.0;
    let mut termination = Termination::None;
    while env.lap_times().len() < laps {
        let action = policy.act(&env, &obs)?;
        let step = env.step(action)?;
        ret += step.reward;
        obs = step.observation;
        termination = step.termination;
        if termination.is_terminal() {
            break;
        }
    }
    let lap_times = env.lap_times().to_vec();
    let status = if lap_times.len() >= laps { Status::Finished } else { Status::Dnf };
    let result = EpisodeResult {
        best_lap: lap_times.iter().copied().reduce(f64::min),
        lap_times,
        damage: env.state().damage,
        termination,
        episode_return: ret,
        steps: env.steps(),
        status,
    };
    Ok((result, env))
}
