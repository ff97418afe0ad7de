//! Slow reference laps recorded from the baseline bot.

use std::sync::Arc;

use racer_core::geometry::{RacingLine, Track};
use racer_core::sim::{EnvConfig, Environment};

use crate::bot::{BaselineBot, BotConfig};
use crate::HarnessError;

/// Speed multiplier of the recording lap.
pub const RECORD_SPEED_SCALE: f64 = 0.6;
/// Arc-length spacing of recorded points, metres.
pub const RECORD_SPACING: f64 = 2.0;

/// Drives one lap with the bot at reduced speed and samples its lateral
/// position every [`RECORD_SPACING`] metres of track axis.
pub fn record_reference_line(bot: &BotConfig, env_config: &EnvConfig, track: Arc<Track>) -> Result<RacingLine, HarnessError> {
    let bot = BaselineBot::new(
        BotConfig {
            speed_scale: RECORD_SPEED_SCALE,
            ..*bot
        },
        env_config.car,
        &track,
    )?;
    let mut config = env_config.clone();
    config.start_delta = 0.0;
    config.termination.max_steps = crate::eval::EVAL_STEPS_PER_LAP;
    let mut env = Environment::new(track.clone(), None, config)?;
    env.reset();
    let middle = env.reference().clone();

    let lap = track.lap_length();
    let marks = (lap / RECORD_SPACING).ceil() as usize;
    let mut points = Vec::with_capacity(marks);
    let alpha_here = |env: &Environment| {
        let p = track.project_raw(env.state().position);
        (0.5 + p.lateral / track.width()).clamp(0.0, 1.0)
    };
    points.push((0.0, alpha_here(&env)));
    while points.len() < marks {
        let step = env.step(bot.act(env.state(), &track, &middle))?;
        if step.info.damage_increment > 0.0 || step.termination.is_terminal() {
            return Err(HarnessError::Run(format!(
                "reference lap on '{}' failed after {:.0} m ({})",
                track.name(),
                env.progress(),
                step.termination.as_str()
            )));
        }
        let alpha = alpha_here(&env);
        while points.len() < marks && env.progress() >= points.len() as f64 * RECORD_SPACING {
            points.push((points.len() as f64 * RECORD_SPACING, alpha));
        }
    }
    Ok(RacingLine::new(&track, points)?)
}
