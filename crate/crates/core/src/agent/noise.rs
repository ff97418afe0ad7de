//! Ornstein-Uhlenbeck noise and the annealed exploration policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sim::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean reversion rate.
    pub theta: f64,
    pub sigma: f64,
    pub mean: f64,
}

impl OuParams {
    pub const fn new(theta: f64, sigma: f64, mean: f64) -> Self {
        Self { theta, sigma, mean }
    }

    /// Stationary variance `σ²/(2θ)` of the continuous process.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuState {
    pub params: OuParams,
    pub x: f64,
}

impl OuState {
    /// Starts at the process mean.
    pub fn new(params: OuParams) -> Self {
        Self { params, x: params.mean }
    }

    /// `x ← x + θ(μ − x)dt + σ√dt·ξ`; returns the new value.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> f64 {
        let xi: f64 = rng.sample(StandardNormal);
        let p = self.params;
        self.x += p.theta * (p.mean - self.x) * dt + p.sigma * dt.sqrt() * xi;
        self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    /// Steps over which ε′ falls linearly from 1 to 0.
    pub horizon: u64,
    pub burst_probability: f64,
    pub steer: OuParams,
    pub throttle: OuParams,
    /// Brake noise outside bursts.
    pub brake: OuParams,
    /// Stronger brake noise applied on burst steps.
    pub burst: OuParams,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            burst_probability: 0.1,
            steer: OuParams::new(0.15, 0.3, 0.0),
            throttle: OuParams::new(0.15, 0.2, 0.0),
            brake: OuParams::new(0.15, 0.1, -0.3),
            burst: OuParams::new(0.15, 0.6, 0.3),
        }
    }
}

/// Exploration state: annealing counter, noise processes and their RNG.
#[derive(Debug, Clone)]
pub struct Exploration {
    config: ExplorationConfig,
    steps: u64,
    steer: OuState,
    throttle: OuState,
    brake: OuState,
    burst: OuState,
    rng: ChaCha8Rng,
    /// Forces ε′ regardless of the step counter.
    override_epsilon: Option<f64>,
}

impl Exploration {
    pub fn new(config: ExplorationConfig, seed: u64) -> Self {
        Self {
            steer: OuState::new(config.steer),
            throttle: OuState::new(config.throttle),
            brake: OuState::new(config.brake),
            burst: OuState::new(config.burst),
            config,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            override_epsilon: None,
        }
    }

    pub fn config(&self) -> &ExplorationConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_steps(&mut self, steps: u64) {
        self.steps = steps;
    }

    pub fn set_epsilon_override(&mut self, eps: Option<f64>) {
        self.override_epsilon = eps.map(|e| e.clamp(0.0, 1.0));
    }

    /// ε′ for the next step.
    pub fn epsilon(&self) -> f64 {
        if let Some(e) = self.override_epsilon {
            return e;
        }
        if self.config.horizon == 0 {
            return 0.0;
        }
        (1.0 - self.steps as f64 / self.config.horizon as f64).max(0.0)
    }

    /// Resets the noise processes to their means, keeping ε′ progress.
    pub fn reset_noise(&mut self) {
        self.steer = OuState::new(self.config.steer);
        self.throttle = OuState::new(self.config.throttle);
        self.brake = OuState::new(self.config.brake);
        self.burst = OuState::new(self.config.burst);
    }

    /// Perturbs a deterministic action. Every process advances on every
    /// call so the random stream does not depend on ε′. At ε′ = 0 the
    /// input is returned unchanged.
    pub fn perturb(&mut self, action: Action) -> Action {
        let eps = self.epsilon();
        let n_steer = self.steer.step(1.0, &mut self.rng);
        let n_throttle = self.throttle.step(1.0, &mut self.rng);
        let n_brake = self.brake.step(1.0, &mut self.rng);
        let n_burst = self.burst.step(1.0, &mut self.rng);
        let is_burst = self.rng.random::<f64>() < self.config.burst_probability;
        self.steps += 1;
        if eps == 0.0 {
            return action;
        }
        let mut throttle = action.throttle + eps * n_throttle;
        let brake = if is_burst {
            throttle *= 1.0 - eps;
            action.brake + eps * n_burst
        } else {
            action.brake + eps * n_brake
        };
        Action::new(action.steer + eps * n_steer, throttle, brake).clamped()
    }
}
