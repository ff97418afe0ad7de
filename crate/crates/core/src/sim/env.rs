use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::telemetry::observation_from;
use super::{
    apply_damage, integrate, reward_with, Action, CarParams, CarState, Observation, Result, RewardConfig, SimError,
    TelemetryLog, TelemetryRow, Termination, TerminationConfig, TerminationMonitor,
};
use crate::geometry::{GeometryError, RacingLine, Track, TrackFrame, Vec2};

/// Seconds between agent decisions.
pub const AGENT_DT: f64 = 0.2;
/// Physics steps per agent decision.
pub const SUBSTEPS: usize = 10;

/// Segments searched either side of the previous foot point.
const PROJECTION_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub car: CarParams,
    pub reward: RewardConfig,
    pub termination: TerminationConfig,
    pub lac_enabled: bool,
    /// Track arc length of the starting grid.
    pub start_delta: f64,
    pub record_telemetry: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            car: CarParams::default(),
            reward: RewardConfig::default(),
            termination: TerminationConfig::default(),
            lac_enabled: false,
            start_delta: 0.0,
            record_telemetry: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub lap_completed: bool,
    /// Duration of the lap completed during this step.
    pub lap_time: Option<f64>,
    pub damage_increment: f64,
    pub damage: f64,
    /// Frame against the middle of the track.
    pub track_frame: TrackFrame,
    /// Track arc length driven since reset; negative when reversing.
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub termination: Termination,
    pub info: StepInfo,
}

/// One car on one track. Fully deterministic: no internal randomness.
#[derive(Debug, Clone)]
pub struct Environment {
    track: Arc<Track>,
    reference: Arc<RacingLine>,
    config: EnvConfig,
    state: CarState,
    monitor: TerminationMonitor,
    time: f64,
    track_hint: usize,
    reference_hint: usize,
    last_delta: f64,
    progress: f64,
    last_lap_mark: f64,
    lap_times: Vec<f64>,
    finished: Option<Termination>,
    log: TelemetryLog,
}

impl Environment {
    /// `reference` defaults to the middle of the track.
    pub fn new(track: Arc<Track>, reference: Option<Arc<RacingLine>>, config: EnvConfig) -> Result<Self> {
        if !config.car.is_valid() {
            return Err(SimError::Params(format!("{:?}", config.car)));
        }
        let reference = match reference {
            Some(r) if r.track_name() != track.name() => {
                return Err(SimError::Geometry(GeometryError::Invalid {
                    what: "reference line",
                    index: 0,
                    reason: format!("line is for '{}', not '{}'", r.track_name(), track.name()),
                }))
            }
            Some(r) => r,
            None => Arc::new(track.middle_line()),
        };
        let start = CarState::at_rest(track.point_at(config.start_delta), track.heading_at(config.start_delta));
        let mut env = Self {
            monitor: TerminationMonitor::new(config.termination),
            track,
            reference,
            config,
            state: start,
            time: 0.0,
            track_hint: 0,
            reference_hint: 0,
            last_delta: 0.0,
            progress: 0.0,
            last_lap_mark: 0.0,
            lap_times: Vec::new(),
            finished: None,
            log: TelemetryLog::default(),
        };
        env.reset();
        Ok(env)
    }

    /// Puts the car at rest on the starting grid and returns the first observation.
    pub fn reset(&mut self) -> Observation {
        let d = self.config.start_delta;
        let state = CarState::at_rest(self.track.point_at(d), self.track.heading_at(d));
        self.reset_to(state)
    }

    /// Starts an episode from an arbitrary state.
    pub fn reset_to(&mut self, state: CarState) -> Observation {
        self.state = state;
        self.monitor.reset();
        self.time = 0.0;
        self.progress = 0.0;
        self.last_lap_mark = 0.0;
        self.lap_times.clear();
        self.finished = None;
        self.log = TelemetryLog::default();
        let p = self.track.project_raw(state.position);
        self.track_hint = p.segment;
        self.last_delta = p.param;
        let (frame, hint) = self.reference_frame_global();
        self.reference_hint = hint;
        observation_from(&self.config.car, &self.state, &self.track, &frame, p.lateral, &self.reference, self.config.lac_enabled)
    }

    fn reference_frame_global(&self) -> (TrackFrame, usize) {
        let p = self.reference.world().project(self.state.position);
        let frame = TrackFrame {
            track_pos: p.lateral / self.track.half_width(),
            angle: crate::geometry::wrap_angle(self.state.heading - p.tangent_angle),
            delta: p.param,
        };
        (frame, p.segment)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if let Some(t) = self.finished {
            return Err(SimError::Terminated(t));
        }
        for (component, value) in [("steer", action.steer), ("throttle", action.throttle), ("brake", action.brake)] {
            if !value.is_finite() {
                return Err(SimError::NonFiniteAction { component, value });
            }
        }
        let action = action.clamped();
        let dt = AGENT_DT / SUBSTEPS as f64;
        let half_width = self.track.half_width();
        let lap = self.track.lap_length();
        let mut damage_increment = 0.0;
        let mut lap_time = None;
        let mut projection = None;

        for _ in 0..SUBSTEPS {
            integrate(&self.config.car, &mut self.state, action, dt);
            let p = self.track.centerline().project_near(self.state.position, self.track_hint, PROJECTION_WINDOW);
            self.track_hint = p.segment;
            if p.lateral.abs() >= half_width {
                let outward = Vec2::from_angle(p.tangent_angle).perp_left() * p.lateral.signum();
                damage_increment += apply_damage(&self.config.car, &mut self.state, outward);
            }

            let mut dd = p.param - self.last_delta;
            if dd > lap / 2.0 {
                dd -= lap;
            } else if dd < -lap / 2.0 {
                dd += lap;
            }
            let before = self.progress;
            self.progress += dd;
            self.last_delta = p.param;
            let target = (self.lap_times.len() + 1) as f64 * lap;
            if before < target && self.progress >= target {
                let frac = (target - before) / (self.progress - before);
                let crossing = self.time + frac * dt;
                lap_time = Some(crossing - self.last_lap_mark);
                self.lap_times.push(crossing - self.last_lap_mark);
                self.last_lap_mark = crossing;
            }
            self.time += dt;
            projection = Some(p);
        }
        if !self.state.is_finite() {
            return Err(SimError::NonFiniteState);
        }

        let p = projection.expect("at least one substep");
        let track_frame = self.track.frame_from_projection(&p, self.state.heading);
        let (ref_frame, hint) = self.reference.project_near(self.state.position, self.state.heading, self.reference_hint);
        self.reference_hint = hint;
        let observation = observation_from(
            &self.config.car,
            &self.state,
            &self.track,
            &ref_frame,
            p.lateral,
            &self.reference,
            self.config.lac_enabled,
        );

        let mut reward = reward_with(&self.config.reward, self.state.vx, ref_frame.angle, ref_frame.track_pos, damage_increment);
        let termination = self.monitor.observe(track_frame.track_pos, track_frame.angle, self.state.vx);
        if let Some(r) = self.monitor.terminal_reward(termination) {
            reward = r;
        }
        if termination.is_terminal() {
            self.finished = Some(termination);
        }
        if self.config.record_telemetry {
            self.log.push(TelemetryRow {
                step: self.monitor.steps(),
                t: self.time,
                x: self.state.position.x,
                y: self.state.position.y,
                heading: self.state.heading,
                vx: self.state.vx,
                vy: self.state.vy,
                steer: action.steer,
                throttle: action.throttle,
                brake: action.brake,
                reward,
                track_pos: ref_frame.track_pos,
                theta: ref_frame.angle,
                damage: self.state.damage,
            });
        }

        Ok(StepResult {
            observation,
            reward,
            termination,
            info: StepInfo {
                lap_completed: lap_time.is_some(),
                lap_time,
                damage_increment,
                damage: self.state.damage,
                track_frame,
                progress: self.progress,
            },
        })
    }

    pub fn track(&self) -> &Arc<Track> {
        &self.track
    }

    pub fn reference(&self) -> &Arc<RacingLine> {
        &self.reference
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &CarState {
        &self.state
    }

    pub fn elapsed(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.monitor.steps()
    }

    pub fn lap_times(&self) -> &[f64] {
        &self.lap_times
    }

    pub fn progress(&self) -> f64 {
        self.progress
    }

    pub fn finished(&self) -> Option<Termination> {
        self.finished
    }

    pub fn telemetry_log(&self) -> &TelemetryLog {
        &self.log
    }

    pub fn observation_dim(&self) -> usize {
        if self.config.lac_enabled {
            super::OBS_DIM_LAC
        } else {
            super::OBS_DIM
        }
    }
}
