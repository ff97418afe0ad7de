//! Telemetry-driven racing simulator and the DDPG agent family that learns
//! to drive it.

pub mod nn;
pub mod geometry;
pub mod sim;
pub mod replay;
pub mod agent;
