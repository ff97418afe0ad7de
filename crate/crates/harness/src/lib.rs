//! Experiment orchestration: baseline bot, training loop, evaluation,
//! tournaments, generalization checks, ablations and plots.

pub mod ablation;
pub mod bot;
pub mod config;
pub mod eval;
pub mod generalize;
pub mod leaderboard;
pub mod plot;
pub mod record;
pub mod tournament;
pub mod train;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] racer_core::sim::SimError),
    #[error(transparent)]
    Geometry(#[from] racer_core::geometry::GeometryError),
    #[error(transparent)]
    Agent(#[from] racer_core::agent::AgentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}
