//! Observation vector and the per-step CSV log.

use std::f64::consts::PI;
use std::io::Write;

use super::{CarParams, CarState, Result, SimError};
use crate::geometry::{rangefinders_with_lateral, RacingLine, Track, TrackFrame, RANGEFINDER_COUNT};

pub const ANGLE_SCALE: f64 = PI;
pub const RANGE_SCALE: f64 = 200.0;
pub const SPEED_SCALE: f64 = 50.0;
pub const WHEEL_SCALE: f64 = 200.0;
pub const RPM_SCALE: f64 = 10_000.0;
/// 1/m; sharpest bends in the bundled tracks stay below this.
pub const LAC_SCALE: f64 = 0.1;

/// θ, 19 ranges, trackPos, 3 speeds, 4 wheel speeds, rpm.
pub const OBS_DIM: usize = 29;
pub const OBS_DIM_LAC: usize = OBS_DIM + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Heading error against the reference, radians.
    pub angle: f64,
    pub track: [f64; RANGEFINDER_COUNT],
    /// Offset from the reference normalized by half the track width, positive left.
    pub track_pos: f64,
    pub speed_x: f64,
    pub speed_y: f64,
    pub speed_z: f64,
    pub wheel_spin: [f64; 4],
    pub rpm: f64,
    pub lac: Option<[f64; 4]>,
}

impl Observation {
    pub fn dim(&self) -> usize {
        if self.lac.is_some() {
            OBS_DIM_LAC
        } else {
            OBS_DIM
        }
    }

    /// Scaled features in fixed order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.angle / ANGLE_SCALE);
        v.extend(self.track.iter().map(|r| r / RANGE_SCALE));
        v.push(self.track_pos);
        v.push(self.speed_x / SPEED_SCALE);
        v.push(self.speed_y / SPEED_SCALE);
        v.push(self.speed_z / SPEED_SCALE);
        v.extend(self.wheel_spin.iter().map(|w| w / WHEEL_SCALE));
        v.push(self.rpm / RPM_SCALE);
        if let Some(lac) = self.lac {
            v.extend(lac.iter().map(|k| k / LAC_SCALE));
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }
}

/// Builds the observation for `state`; heading error and offset are taken
/// against `reference` and the rangefinders against the real borders.
pub fn telemetry(params: &CarParams, state: &CarState, track: &Track, reference: &RacingLine, lac_enabled: bool) -> Observation {
    let frame = reference.project(state.position, state.heading);
    let lateral = track.project_raw(state.position).lateral;
    observation_from(params, state, track, &frame, lateral, reference, lac_enabled)
}

pub(crate) fn observation_from(
    params: &CarParams,
    state: &CarState,
    track: &Track,
    frame: &TrackFrame,
    track_lateral: f64,
    reference: &RacingLine,
    lac_enabled: bool,
) -> Observation {
    let spin = state.vx / params.wheel_radius;
    Observation {
        angle: frame.angle,
        track: rangefinders_with_lateral(track, state.position, state.heading, track_lateral),
        track_pos: frame.track_pos,
        speed_x: state.vx,
        speed_y: state.vy,
        speed_z: 0.0,
        wheel_spin: [spin; 4],
        rpm: params.idle_rpm + params.rpm_per_mps * state.vx,
        lac: lac_enabled.then(|| reference.look_ahead_curvature(frame.delta)),
    }
}

pub const TELEMETRY_HEADER: &str = "step,t,x,y,heading,Vx,Vy,steer,throttle,brake,reward,trackPos,theta,damage";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub steer: f64,
    pub throttle: f64,
    pub brake: f64,
    pub reward: f64,
    pub track_pos: f64,
    pub theta: f64,
    pub damage: f64,
}

impl TelemetryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.t,
            self.x,
            self.y,
            self.heading,
            self.vx,
            self.vy,
            self.steer,
            self.throttle,
            self.brake,
            self.reward,
            self.track_pos,
            self.theta,
            self.damage
        )
    }

    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 14 {
            return None;
        }
        let n = |i: usize| f[i].parse::<f64>().ok();
        Some(Self {
            step: f[0].parse().ok()?,
            t: n(1)?,
            x: n(2)?,
            y: n(3)?,
            heading: n(4)?,
            vx: n(5)?,
            vy: n(6)?,
            steer: n(7)?,
            throttle: n(8)?,
            brake: n(9)?,
            reward: n(10)?,
            track_pos: n(11)?,
            theta: n(12)?,
            damage: n(13)?,
        })
    }
}

/// In-memory per-step log, written out as CSV on demand.
#[derive(Debug, Clone, Default)]
pub struct TelemetryLog {
    pub rows: Vec<TelemetryRow>,
}

impl TelemetryLog {
    pub fn push(&mut self, row: TelemetryRow) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| SimError::Io(e.to_string());
        writeln!(out, "{TELEMETRY_HEADER}").map_err(io)?;
        for r in &self.rows {
            writeln!(out, "{}", r.to_csv()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(TELEMETRY_HEADER) {
            return Err(SimError::Io("telemetry header mismatch".into()));
        }
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| TelemetryRow::parse(l).ok_or_else(|| SimError::Io(format!("bad telemetry row {}", i + 1))))
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }
}
