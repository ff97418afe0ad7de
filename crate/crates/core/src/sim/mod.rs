//! Driving environment: dynamics, telemetry, reward, damage and termination.

mod car;
mod env;
mod reward;
mod telemetry;
mod termination;

pub use car::{apply_damage, integrate, Action, CarParams, CarState, GRAVITY};
pub use env::{EnvConfig, Environment, StepInfo, StepResult, AGENT_DT, SUBSTEPS};
pub use reward::{reward, reward_with, RewardConfig, DAMAGE_WEIGHT};
pub use telemetry::{
    telemetry, Observation, TelemetryLog, TelemetryRow, ANGLE_SCALE, LAC_SCALE, OBS_DIM, OBS_DIM_LAC, RANGE_SCALE,
    RPM_SCALE, SPEED_SCALE, TELEMETRY_HEADER, WHEEL_SCALE,
};
pub use termination::{Termination, TerminationConfig, TerminationMonitor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-finite action component {component}: {value}")]
    NonFiniteAction { component: &'static str, value: f64 },
    #[error("invalid car parameters: {0}")]
    Params(String),
    #[error("episode already terminated with {0:?}; call reset")]
    Terminated(Termination),
    #[error("car state became non-finite")]
    NonFiniteState,
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
