use serde::{Deserialize, Serialize};

/// Penalty per unit of damage.
pub const DAMAGE_WEIGHT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Use the signed `sin θ` term instead of `|sin θ|`.
    pub signed_sin: bool,
    pub damage_weight: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            signed_sin: false,
            damage_weight: DAMAGE_WEIGHT,
        }
    }
}

/// `V_x · (cos θ − |sin θ| − |trackPos|) − λ_d · damage_increment`.
pub fn reward(vx: f64, theta: f64, track_pos: f64, damage_increment: f64) -> f64 {
    reward_with(&RewardConfig::default(), vx, theta, track_pos, damage_increment)
}

pub fn reward_with(config: &RewardConfig, vx: f64, theta: f64, track_pos: f64, damage_increment: f64) -> f64 {
    let lateral = if config.signed_sin { theta.sin() } else { theta.sin().abs() };
    vx * (theta.cos() - lateral - track_pos.abs()) - config.damage_weight * damage_increment
}
