//! Experiment configuration, stored as TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use racer_core::agent::{AgentConfig, Variant};
use racer_core::geometry::tracks;
use racer_core::sim::EnvConfig;

use crate::bot::BotConfig;
use crate::HarnessError;

/// What θ and trackPos are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceMode {
    /// Middle of the track.
    #[serde(rename = "mot")]
    Mot,
    /// Recorded racing line.
    #[serde(rename = "rc")]
    Rc,
    /// Racing line plus look-ahead curvature in the observation.
    #[serde(rename = "rc-lac")]
    RcLac,
}

impl ReferenceMode {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceMode::Mot => "mot",
            ReferenceMode::Rc => "rc",
            ReferenceMode::RcLac => "rc-lac",
        }
    }

    pub fn uses_line(self) -> bool {
        self != ReferenceMode::Mot
    }

    pub fn lac(self) -> bool {
        self == ReferenceMode::RcLac
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mot" => Ok(ReferenceMode::Mot),
            "rc" => Ok(ReferenceMode::Rc),
            "rc-lac" | "rc+lac" => Ok(ReferenceMode::RcLac),
            _ => Err(format!("unknown reference mode '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub track: String,
    pub variant: Variant,
    pub reference: ReferenceMode,
    /// Racing-line JSON, required by the line-based reference modes.
    pub racing_line: Option<PathBuf>,
    pub episodes: usize,
    /// Step cap per training episode.
    pub max_steps: usize,
    pub seeds: Vec<u64>,
    /// Greedy evaluation every this many episodes; 0 disables it.
    pub eval_every: usize,
    pub eval_laps: usize,
    /// Numbered checkpoint every this many episodes; 0 disables them.
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    pub updates_per_step: usize,
    /// Stop once a damage-free evaluation lap is at least this fast.
    pub stop_at_lap: Option<f64>,
    pub agent: AgentConfig,
    pub env: EnvConfig,
    pub bot: BotConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            track: tracks::OVAL.to_string(),
            variant: Variant::Win1,
            reference: ReferenceMode::Mot,
            racing_line: None,
            episodes: 500,
            max_steps: 3000,
            seeds: vec![1, 2, 3],
            eval_every: 10,
            eval_laps: 3,
            checkpoint_every: 50,
            output_dir: PathBuf::from("runs"),
            updates_per_step: 1,
            stop_at_lap: None,
            agent: AgentConfig::default(),
            env: EnvConfig::default(),
            bot: BotConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if tracks::by_name(&self.track).is_err() {
            return bad(format!("unknown track '{}'", self.track));
        }
        if self.reference.uses_line() && self.racing_line.is_none() {
            return bad(format!("reference mode {} needs a racing_line file", self.reference));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if self.eval_every > 0 && self.eval_laps == 0 {
            return bad("eval_laps must be positive".into());
        }
        self.agent_config().validate()?;
        Ok(())
    }

    /// Agent settings with the experiment's variant and observation layout.
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            variant: self.variant,
            lac_enabled: self.reference.lac(),
            ..self.agent.clone()
        }
    }

    /// Environment settings for training episodes.
    pub fn env_config(&self) -> EnvConfig {
        let mut env = self.env.clone();
        env.lac_enabled = self.reference.lac();
        env.termination.max_steps = self.max_steps;
        env
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}
