//! Tracks, racing lines, curvature, projections and rangefinder geometry.

mod builder;
mod polyline;
mod racing_line;
mod sensors;
mod track;
pub mod tracks;

pub use builder::{Segment, TrackBuilder};
pub use polyline::{ClosedPolyline, Projection};
pub use racing_line::{RacingLine, RacingLineFile, LAC_OFFSETS};
pub use sensors::{rangefinders, rangefinders_with_lateral, RANGEFINDER_ANGLES_DEG, RANGEFINDER_COUNT, RANGEFINDER_RANGE};
pub use track::{Track, TrackFile, TrackFrame, MIN_TRACK_WIDTH};

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry at index {index}: {reason}")]
    Degenerate { index: usize, reason: String },
    #[error("invalid {what} at index {index}: {reason}")]
    Invalid {
        what: &'static str,
        index: usize,
        reason: String,
    },
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("track builder could not close the loop: {0}")]
    Closure(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Rotated by +90°, i.e. pointing left of the direction of travel.
    pub fn perp_left(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Signed curvature of the circle through three points; positive when
/// `a → b → c` turns left.
pub fn circumscribed_curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let ab = (b - a).norm();
    let bc = (c - b).norm();
    let ca = (a - c).norm();
    let denom = ab * bc * ca;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * (b - a).cross(c - a) / denom
}

/// Highest speed at which grip still balances the centripetal load:
/// `v = sqrt(mu * rho * (g + downforce / mass))` with `rho = 1 / kappa`.
/// A zero curvature returns `top_speed`.
pub fn max_speed(kappa: f64, grip: f64, mass: f64, downforce: f64, gravity: f64, top_speed: f64) -> Result<f64> {
    for (name, v) in [("curvature", kappa), ("grip", grip), ("downforce", downforce), ("gravity", gravity)] {
        if !(v >= 0.0) {
            return Err(GeometryError::Domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    if !(mass > 0.0) {
        return Err(GeometryError::Domain(format!("mass must be positive, got {mass}")));
    }
    if kappa == 0.0 {
        return Ok(top_speed);
    }
    let radius = 1.0 / kappa;
    Ok((grip * radius * (gravity + downforce / mass)).sqrt().min(top_speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn max_speed_reference_value() {
        let v = max_speed(0.1, 1.0, 1000.0, 0.0, 9.81, f64::INFINITY).unwrap();
        assert!((v - 9.9045).abs() < 1e-3, "{v}");
        assert!((v - 98.1f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn max_speed_straight_is_top_speed() {
        assert_eq!(max_speed(0.0, 1.2, 900.0, 300.0, 9.81, 72.0).unwrap(), 72.0);
    }

    #[test]
    fn max_speed_downforce_scaling() {
        let (m, g, rho) = (1000.0, 9.81, 40.0);
        let at = |ratio: f64| max_speed(1.0 / rho, 1.1, m, ratio * g * m, g, f64::INFINITY).unwrap();
        // F_a/m: g -> 2g multiplies (g + F_a/m) by 3/2
        assert!((at(2.0) / at(1.0) - 1.5f64.sqrt()).abs() < 1e-12);
        // F_a/m: g/2 -> g multiplies it by 4/3
        assert!((at(1.0) / at(0.5) - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn max_speed_domain_errors() {
        assert!(max_speed(-0.1, 1.0, 1000.0, 0.0, 9.81, 50.0).is_err());
        assert!(max_speed(0.1, 1.0, 0.0, 0.0, 9.81, 50.0).is_err());
        assert!(max_speed(0.1, -1.0, 1000.0, 0.0, 9.81, 50.0).is_err());
    }

    #[test]
    fn three_point_curvature_sign() {
        let k = circumscribed_curvature(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0));
        assert!((k - 1.0).abs() < 1e-12);
        let k = circumscribed_curvature(Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0));
        assert!((k + 1.0).abs() < 1e-12);
        assert_eq!(circumscribed_curvature(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)), 0.0);
    }
}
