//! Heuristic driver: pure pursuit on a reference line with a curvature
//! speed cap. Serves as the lap-time baseline and records slow reference laps.

use serde::{Deserialize, Serialize};

use racer_core::geometry::{wrap_angle, GeometryError, RacingLine, Track};
use racer_core::sim::{Action, CarParams, CarState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BotConfig {
    /// Fraction of the cornering speed the bot aims for.
    pub safety: f64,
    /// Extra multiplier on the speed target; the slow reference lap uses 0.6.
    pub speed_scale: f64,
    /// Pure-pursuit look-ahead `L = base + gain · v`, metres.
    pub lookahead_base: f64,
    pub lookahead_gain: f64,
    /// How far ahead curvature is scanned for braking, metres.
    pub preview: f64,
    pub preview_step: f64,
    /// Deceleration assumed when planning braking, m/s².
    pub planning_decel: f64,
    /// Pedal per m/s of speed error.
    pub speed_gain: f64,
    /// Largest shift towards the inside of a bend, as a fraction of the
    /// track width. Zero follows the given reference line exactly.
    pub apex_shift: f64,
    /// Half-width of the curvature averaging window behind the guide line, metres.
    pub guide_window: f64,
    /// Averaged curvature that earns the full inside shift, 1/m.
    pub guide_curvature: f64,
}

impl Default for BotConfig {
    fn default() -> Self {
        Self {
            safety: 0.9,
            speed_scale: 1.0,
            lookahead_base: 6.0,
            lookahead_gain: 0.5,
            preview: 150.0,
            preview_step: 2.0,
            planning_decel: 8.0,
            speed_gain: 0.25,
            apex_shift: 0.0,
            guide_window: 40.0,
            guide_curvature: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineBot {
    config: BotConfig,
    car: CarParams,
    guide: Option<RacingLine>,
}

/// Best of three default-config laps on the oval from a standing start,
/// measured once and pinned; evaluation is deterministic, so any drift in
/// car, track or bot code shows up as a mismatch.
pub const BASELINE_OVAL_LAP: f64 = 26.60658546817025;

/// Spacing of the guide line's points, metres.
const GUIDE_SPACING: f64 = 2.0;

impl BaselineBot {
    pub fn new(config: BotConfig, car: CarParams, track: &Track) -> Result<Self, GeometryError> {
        let guide = if config.apex_shift > 0.0 { Some(guide_line(&config, track)?) } else { None };
        Ok(Self { config, car, guide })
    }

    pub fn config(&self) -> &BotConfig {
        &self.config
    }

    pub fn car(&self) -> &CarParams {
        &self.car
    }

    /// Own line shifted towards the inside of bends in proportion to the
    /// locally averaged track curvature; absent without an apex shift.
    pub fn guide(&self) -> Option<&RacingLine> {
        self.guide.as_ref()
    }

    /// Target speed at the car's position: the tightest braking-reachable
    /// cap over the preview distance, never above top speed.
    pub fn target_speed(&self, line: &RacingLine, delta: f64) -> f64 {
        let c = &self.config;
        let mut target = self.car.top_speed;
        let mut d = 0.0;
        while d <= c.preview {
            let kappa = line.curvature_at(delta + d);
            let cap = self.car.cornering_speed(kappa) * c.safety;
            let reachable = (cap * cap + 2.0 * c.planning_decel * d).sqrt();
            target = target.min(reachable);
            d += c.preview_step;
        }
        target.min(self.car.top_speed) * c.speed_scale
    }

    /// Steers along `reference`, or along the bot's own guide line when it has one.
    pub fn act(&self, state: &CarState, track: &Track, reference: &RacingLine) -> Action {
        let c = &self.config;
        let line = self.guide.as_ref().unwrap_or(reference);
        let v = state.vx;
        let here = line.project(state.position, state.heading).delta;
        let lookahead = c.lookahead_base + c.lookahead_gain * v;
        let aim = line.to_world(track, here + lookahead).unwrap_or_else(|_| track.point_at(here + lookahead));
        let rel = aim - state.position;
        let alpha = wrap_angle(rel.y.atan2(rel.x) - state.heading);
        let dist = rel.norm().max(1e-6);
        let kappa = 2.0 * alpha.sin() / dist;
        let wheel = (kappa * self.car.wheelbase).atan();
        let steer = (wheel / self.car.max_steer).clamp(-1.0, 1.0);

        let target = self.target_speed(line, here);
        let err = target - v;
        let hold = (v / self.car.top_speed).powi(2);
        let (throttle, brake) = if err >= 0.0 {
            ((hold + c.speed_gain * err).clamp(0.0, 1.0), 0.0)
        } else {
            let pedal = c.speed_gain * -err;
            if pedal < hold {
                ((hold - pedal).clamp(0.0, 1.0), 0.0)
            } else {
                (0.0, (pedal - hold).clamp(0.0, 1.0))
            }
        };
        Action::new(steer, throttle, brake)
    }
}

fn guide_line(config: &BotConfig, track: &Track) -> Result<RacingLine, GeometryError> {
    let lap = track.lap_length();
    let n = (lap / GUIDE_SPACING).floor() as usize;
    let step = lap / n as f64;
    let samples = (config.guide_window / step).ceil() as usize;
    let kappa: Vec<f64> = (0..n).map(|i| track.curvature_at(i as f64 * step)).collect();
    let points = (0..n)
        .map(|i| {
            let mut sum = 0.0;
            for k in 0..=2 * samples {
                let j = (i + n + k - samples) % n;
                sum += kappa[j];
            }
            let mean = sum / (2 * samples + 1) as f64;
            let shift = config.apex_shift * (mean / config.guide_curvature).clamp(-1.0, 1.0);
            (i as f64 * step, (0.5 + shift).clamp(0.0, 1.0))
        })
        .collect();
    RacingLine::new(track, points)
}
