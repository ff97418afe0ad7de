//! Rangefinder rays against the track borders.

use super::{Track, Vec2};

pub const RANGEFINDER_COUNT: usize = 19;
/// Maximum reported distance, metres.
pub const RANGEFINDER_RANGE: f64 = 200.0;

/// Ray directions relative to the car heading, −90° … +90° in 10° steps.
pub const RANGEFINDER_ANGLES_DEG: [f64; RANGEFINDER_COUNT] = [
    -90.0, -80.0, -70.0, -60.0, -50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0,
];

/// Distance along `dir` from `origin` to segment `a`–`b`, if hit.
fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let ab = b - a;
    let denom = dir.cross(ab);
    if denom.abs() < 1e-12 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(ab) / denom;
    let u = ao.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Readings of the 19 rangefinders, clamped to 200 m. A car whose centre
/// lies outside the borders reads 0 on every sensor.
pub fn rangefinders(track: &Track, position: Vec2, heading: f64) -> [f64; RANGEFINDER_COUNT] {
    let proj = track.project_raw(position);
    rangefinders_with_lateral(track, position, heading, proj.lateral)
}

/// Same as [`rangefinders`] when the centerline offset is already known.
pub fn rangefinders_with_lateral(track: &Track, position: Vec2, heading: f64, lateral: f64) -> [f64; RANGEFINDER_COUNT] {
    let mut out = [0.0; RANGEFINDER_COUNT];
    if lateral.abs() > track.half_width() {
        return out;
    }
    let reach = RANGEFINDER_RANGE + 5.0;
    let mut candidates: Vec<(Vec2, Vec2)> = Vec::new();
    for border in [track.left_border(), track.right_border()] {
        let n = border.len();
        for i in 0..n {
            let a = border[i];
            let b = border[(i + 1) % n];
            let seg_len = (b - a).norm();
            if (a - position).norm() <= reach + seg_len {
                candidates.push((a, b));
            }
        }
    }
    let dirs = RANGEFINDER_ANGLES_DEG.map(|deg| Vec2::from_angle(heading + deg.to_radians()));
    for (reading, dir) in out.iter_mut().zip(dirs) {
        let mut best = RANGEFINDER_RANGE;
        for (a, b) in &candidates {
            if let Some(t) = ray_segment(position, dir, *a, *b) {
                if t < best {
                    best = t;
                }
            }
        }
        *reading = best;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TrackBuilder;

    fn long_straight() -> Track {
        TrackBuilder::new("straight", 10.0)
            .straight(600.0)
            .arc(60.0, 180.0)
            .straight(600.0)
            .arc(60.0, 180.0)
            .build()
            .unwrap()
    }

    #[test]
    fn side_rays_hit_borders_at_half_width() {
        let t = long_straight();
        let r = rangefinders(&t, Vec2::new(200.0, 0.0), 0.0);
        assert!((r[0] - 5.0).abs() < 1e-9);
        assert!((r[18] - 5.0).abs() < 1e-9);
        assert_eq!(r[9], RANGEFINDER_RANGE);
    }

    #[test]
    fn readings_symmetric_when_centered() {
        let t = long_straight();
        let r = rangefinders(&t, Vec2::new(250.0, 0.0), 0.0);
        for i in 0..RANGEFINDER_COUNT {
            assert!((r[i] - r[18 - i]).abs() < 1e-9, "{i}: {} vs {}", r[i], r[18 - i]);
        }
    }

    #[test]
    fn diagonal_ray() {
        let t = long_straight();
        let r = rangefinders(&t, Vec2::new(250.0, 0.0), 0.0);
        // index 13 is +40°, index 14 is +50°; check the 45° case by rotating the car
        let r45 = rangefinders(&t, Vec2::new(250.0, 0.0), 5f64.to_radians());
        assert!((r45[13] - 5.0 / 45f64.to_radians().sin()).abs() < 1e-9, "{}", r45[13]);
        assert!((r45[13] - 7.0711).abs() < 1e-4);
        assert!(r[13] > r[14]);
    }

    #[test]
    fn outside_track_reads_zero() {
        let t = long_straight();
        assert_eq!(rangefinders(&t, Vec2::new(200.0, 5.5), 0.0), [0.0; RANGEFINDER_COUNT]);
    }

    #[test]
    fn continuous_under_small_perturbation() {
        let t = long_straight();
        let base = rangefinders(&t, Vec2::new(300.0, 1.0), 0.1);
        let eps = 0.005;
        let moved = rangefinders(&t, Vec2::new(300.0 + eps, 1.0 + eps), 0.1);
        for (a, b) in base.iter().zip(&moved) {
            // sensitivity is bounded by 1/sin(smallest ray-to-border angle)
            assert!((a - b).abs() < 20.0 * eps, "{a} vs {b}");
        }
    }
}
