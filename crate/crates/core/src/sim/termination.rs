use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    None,
    OutOfTrack,
    Backwards,
    SlowProgress,
    MaxSteps,
}

impl Termination {
    pub fn is_terminal(self) -> bool {
        self != Termination::None
    }

    /// Ends the episode for a reason other than the step cap.
    pub fn is_premature(self) -> bool {
        matches!(self, Termination::OutOfTrack | Termination::Backwards | Termination::SlowProgress)
    }

    pub fn code(self) -> u32 {
        match self {
            Termination::None => 0,
            Termination::OutOfTrack => 1,
            Termination::Backwards => 2,
            Termination::SlowProgress => 3,
            Termination::MaxSteps => 4,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => Termination::None,
            1 => Termination::OutOfTrack,
            2 => Termination::Backwards,
            3 => Termination::SlowProgress,
            4 => Termination::MaxSteps,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::None => "none",
            Termination::OutOfTrack => "out_of_track",
            Termination::Backwards => "backwards",
            Termination::SlowProgress => "slow_progress",
            Termination::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerminationConfig {
    pub max_steps: usize,
    pub backwards_steps: usize,
    pub slow_window: usize,
    /// m/s
    pub slow_speed: f64,
    pub slow_after: usize,
    /// Replaces the step reward on out-of-track and backwards endings.
    pub terminal_reward: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        Self {
            max_steps: 3000,
            backwards_steps: 5,
            slow_window: 50,
            slow_speed: 2.0,
            slow_after: 100,
            terminal_reward: -1.0,
        }
    }
}

/// Rolling history behind the termination rules.
#[derive(Debug, Clone)]
pub struct TerminationMonitor {
    config: TerminationConfig,
    steps: usize,
    backwards_run: usize,
    speeds: VecDeque<f64>,
}

impl TerminationMonitor {
    pub fn new(config: TerminationConfig) -> Self {
        Self {
            config,
            steps: 0,
            backwards_run: 0,
            speeds: VecDeque::with_capacity(config.slow_window + 1),
        }
    }

    pub fn config(&self) -> &TerminationConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.config);
    }

    /// Records one completed step and returns the first rule that fires,
    /// checked as out-of-track, backwards, slow progress, step cap.
    pub fn observe(&mut self, track_pos: f64, theta: f64, vx: f64) -> Termination {
        self.steps += 1;
        if theta.abs() > FRAC_PI_2 {
            self.backwards_run += 1;
        } else {
            self.backwards_run = 0;
        }
        self.speeds.push_back(vx);
        if self.speeds.len() > self.config.slow_window {
            self.speeds.pop_front();
        }

        if track_pos.abs() > 1.0 {
            Termination::OutOfTrack
        } else if self.backwards_run >= self.config.backwards_steps {
            Termination::Backwards
        } else if self.steps > self.config.slow_after && self.mean_recent_speed() < self.config.slow_speed {
            Termination::SlowProgress
        } else if self.steps >= self.config.max_steps {
            Termination::MaxSteps
        } else {
            Termination::None
        }
    }

    fn mean_recent_speed(&self) -> f64 {
        self.speeds.iter().sum::<f64>() / self.speeds.len().max(1) as f64
    }

    /// Reward override applied at a terminal step, if any.
    pub fn terminal_reward(&self, kind: Termination) -> Option<f64> {
        match kind {
            Termination::OutOfTrack | Termination::Backwards => Some(self.config.terminal_reward),
            _ => None,
        }
    }
}
