//! Kinematic bicycle model with a longitudinal force balance and a grip cap.

use serde::{Deserialize, Serialize};

use crate::geometry::{max_speed, Vec2};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CarParams {
    pub mass: f64,
    /// Tire-road friction coefficient.
    pub grip: f64,
    /// Downforce `F_a = c · v²`, N/(m/s)².
    pub downforce_coef: f64,
    pub engine_force: f64,
    pub brake_force: f64,
    /// Front wheel angle at full steering input, radians.
    pub max_steer: f64,
    pub wheelbase: f64,
    pub top_speed: f64,
    pub wheel_radius: f64,
    pub idle_rpm: f64,
    /// Engine rpm gained per m/s of road speed.
    pub rpm_per_mps: f64,
    /// Damage per (m/s)² of wall-normal impact speed.
    pub damage_coef: f64,
    /// Extra deceleration, as a fraction of the grip limit, while sliding.
    pub scrub: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        Self {
            mass: 1000.0,
            grip: 1.6,
            downforce_coef: 0.8,
            engine_force: 5500.0,
            brake_force: 14000.0,
            max_steer: 0.366,
            wheelbase: 2.6,
            top_speed: 65.0,
            wheel_radius: 0.33,
            idle_rpm: 800.0,
            rpm_per_mps: 140.0,
            damage_coef: 1.0,
            scrub: 0.3,
        }
    }
}

impl CarParams {
    /// Quadratic drag coefficient that makes full throttle settle at top speed.
    pub fn drag_coef(&self) -> f64 {
        self.engine_force / (self.top_speed * self.top_speed)
    }

    pub fn downforce(&self, speed: f64) -> f64 {
        self.downforce_coef * speed * speed
    }

    /// Lateral acceleration the tires can hold at `speed`.
    pub fn lateral_grip_limit(&self, speed: f64) -> f64 {
        self.grip * (GRAVITY + self.downforce(speed) / self.mass)
    }

    /// Fastest steady speed on a bend of curvature `kappa`, with downforce
    /// evaluated at that same speed. Falls back to top speed when aero load
    /// alone can hold the bend.
    pub fn cornering_speed(&self, kappa: f64) -> f64 {
        let k = kappa.abs();
        if k == 0.0 {
            return self.top_speed;
        }
        let radius = 1.0 / k;
        let aero = self.grip * radius * self.downforce_coef / self.mass;
        if aero >= 1.0 {
            return self.top_speed;
        }
        let v = (self.grip * radius * GRAVITY / (1.0 - aero)).sqrt();
        // same value through the generic formula with F_a = c·v²
        debug_assert!({
            let check = max_speed(k, self.grip, self.mass, self.downforce(v), GRAVITY, f64::INFINITY).unwrap();
            (check - v).abs() < 1e-6 * v.max(1.0)
        });
        v.min(self.top_speed)
    }

    pub fn is_valid(&self) -> bool {
        [
            self.mass,
            self.grip,
            self.engine_force,
            self.brake_force,
            self.max_steer,
            self.wheelbase,
            self.top_speed,
            self.wheel_radius,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
            && self.downforce_coef >= 0.0
            && self.damage_coef >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    pub position: Vec2,
    pub heading: f64,
    /// Speed along the car's longitudinal axis.
    pub vx: f64,
    /// Speed along the car's transverse axis, positive to the left.
    pub vy: f64,
    pub yaw_rate: f64,
    pub damage: f64,
}

impl CarState {
    pub fn at_rest(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading,
            vx: 0.0,
            vy: 0.0,
            yaw_rate: 0.0,
            damage: 0.0,
        }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    pub fn left(&self) -> Vec2 {
        self.forward().perp_left()
    }

    pub fn world_velocity(&self) -> Vec2 {
        self.forward() * self.vx + self.left() * self.vy
    }

    pub fn is_finite(&self) -> bool {
        [self.position.x, self.position.y, self.heading, self.vx, self.vy, self.yaw_rate, self.damage]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub steer: f64,
    pub throttle: f64,
    pub brake: f64,
}

impl Action {
    pub const DIM: usize = 3;

    pub fn new(steer: f64, throttle: f64, brake: f64) -> Self {
        Self { steer, throttle, brake }
    }

    pub fn clamped(self) -> Self {
        Self {
            steer: self.steer.clamp(-1.0, 1.0),
            throttle: self.throttle.clamp(0.0, 1.0),
            brake: self.brake.clamp(0.0, 1.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.steer.is_finite() && self.throttle.is_finite() && self.brake.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.steer, self.throttle, self.brake]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Relaxation time of the lateral slip speed, seconds.
const SLIP_TIME_CONSTANT: f64 = 0.1;
/// Fraction of the road speed converted to outward slip at full saturation.
const SLIP_GAIN: f64 = 0.5;

/// Advances the car by `dt` seconds under a (clamped) action.
pub fn integrate(params: &CarParams, state: &mut CarState, action: Action, dt: f64) {
    let a = action.clamped();
    let v = state.vx;

    let steer_angle = a.steer * params.max_steer;
    let desired_yaw = v * steer_angle.tan() / params.wheelbase;
    let demand = (v * desired_yaw).abs();
    let limit = params.lateral_grip_limit(v);
    let (yaw_rate, saturation) = if demand > limit && v > 0.0 {
        (desired_yaw.signum() * limit / v, 1.0 - limit / demand)
    } else {
        (desired_yaw, 0.0)
    };

    let drive = params.engine_force * a.throttle;
    let braking = if v > 0.0 { params.brake_force * a.brake } else { 0.0 };
    let drag = params.drag_coef() * v * v;
    let scrub = params.scrub * saturation * limit;
    let accel = (drive - braking - drag) / params.mass - scrub;
    state.vx = (v + accel * dt).clamp(0.0, params.top_speed);

    let slip_target = -desired_yaw.signum() * SLIP_GAIN * saturation * state.vx;
    state.vy += (slip_target - state.vy) * (dt / SLIP_TIME_CONSTANT).min(1.0);

    let v_new = state.vx;
    state.yaw_rate = if saturation > 0.0 {
        yaw_rate.signum() * params.lateral_grip_limit(v_new) / v_new.max(1e-9)
    } else {
        v_new * steer_angle.tan() / params.wheelbase
    };
    state.heading += state.yaw_rate * dt;
    let vel = state.world_velocity();
    state.position = state.position + vel * dt;
}

/// Registers a wall contact: damage grows with the square of the outward
/// normal speed and that velocity component is removed so the car slides
/// along the border. Returns the damage increment.
pub fn apply_damage(params: &CarParams, state: &mut CarState, outward_normal: Vec2) -> f64 {
    let vel = state.world_velocity();
    let normal_speed = vel.dot(outward_normal).max(0.0);
    let increment = params.damage_coef * normal_speed * normal_speed;
    if normal_speed > 0.0 {
        let slid = vel - outward_normal * normal_speed;
        state.vx = slid.dot(state.forward()).max(0.0);
        state.vy = slid.dot(state.left());
    }
    state.damage += increment;
    increment
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_without_input() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::new(1.0, 2.0), 0.3);
        for _ in 0..50 {
            integrate(&p, &mut s, Action::default(), 0.02);
        }
        assert_eq!(s, CarState::at_rest(Vec2::new(1.0, 2.0), 0.3));
    }

    #[test]
    fn full_throttle_settles_below_top_speed() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        let mut prev = 0.0;
        for _ in 0..20_000 {
            integrate(&p, &mut s, Action::new(0.0, 1.0, 0.0), 0.02);
            assert!(s.vx >= prev);
            prev = s.vx;
        }
        assert!(s.vx <= p.top_speed && s.vx > 0.95 * p.top_speed);
    }

    #[test]
    fn coasting_never_speeds_up() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        s.vx = 40.0;
        let mut prev = s.vx;
        for _ in 0..500 {
            integrate(&p, &mut s, Action::default(), 0.02);
            assert!(s.vx <= prev);
            prev = s.vx;
        }
    }

    #[test]
    fn braking_stops_without_reversing() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        s.vx = 10.0;
        for _ in 0..200 {
            integrate(&p, &mut s, Action::new(0.0, 0.0, 1.0), 0.02);
        }
        assert_eq!(s.vx, 0.0);
    }

    #[test]
    fn cornering_speed_matches_grip_formula() {
        let p = CarParams::default();
        let kappa = 1.0 / 80.0;
        let v = p.cornering_speed(kappa);
        let direct = max_speed(kappa, p.grip, p.mass, p.downforce(v), GRAVITY, f64::INFINITY).unwrap();
        assert!((v - direct).abs() < 1e-9);
        assert!(v > 30.0 && v < 45.0, "{v}");
    }

    #[test]
    fn damage_from_normal_impact() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        s.vx = 10.0;
        let inc = apply_damage(&p, &mut s, Vec2::new(1.0, 0.0));
        assert_eq!(inc, 100.0);
        assert_eq!(s.vx, 0.0);
        assert_eq!(s.damage, 100.0);
    }

    #[test]
    fn grazing_contact_is_free() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        s.vx = 30.0;
        let inc = apply_damage(&p, &mut s, Vec2::new(0.0, 1.0));
        assert_eq!(inc, 0.0);
        assert_eq!(s.vx, 30.0);
    }
}
