use std::path::Path;

use serde::{Deserialize, Serialize};

use super::track::CURVATURE_SPACING;
use super::{ClosedPolyline, GeometryError, Result, Track, TrackFrame, Vec2};

/// Look-ahead distances for the curvature preview, metres.
pub const LAC_OFFSETS: [f64; 4] = [20.0, 40.0, 60.0, 80.0];

/// Trajectory on a track as `(δ, α)` pairs: arc length along the track axis
/// and lateral fraction measured from the right border.
#[derive(Debug, Clone)]
pub struct RacingLine {
    track_name: String,
    half_width: f64,
    points: Vec<(f64, f64)>,
    world: ClosedPolyline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RacingLineFile {
    pub track: String,
    pub points: Vec<[f64; 2]>,
}

impl RacingLine {
    pub fn new(track: &Track, points: Vec<(f64, f64)>) -> Result<Self> {
        let lap = track.lap_length();
        if points.len() < 3 {
            return Err(GeometryError::Invalid {
                what: "racing line",
                index: points.len(),
                reason: "needs at least 3 points".into(),
            });
        }
        for (i, (d, a)) in points.iter().enumerate() {
            if !(d.is_finite() && a.is_finite()) {
                return Err(GeometryError::Invalid {
                    what: "racing line point",
                    index: i,
                    reason: "non-finite value".into(),
                });
            }
            if !(0.0..=1.0).contains(a) {
                return Err(GeometryError::Invalid {
                    what: "racing line alpha",
                    index: i,
                    reason: format!("{a} outside [0, 1]"),
                });
            }
            if i == 0 && *d < 0.0 {
                return Err(GeometryError::Invalid {
                    what: "racing line delta",
                    index: 0,
                    reason: format!("{d} is negative"),
                });
            }
            if i > 0 && !(*d > points[i - 1].0) {
                return Err(GeometryError::Invalid {
                    what: "racing line delta",
                    index: i,
                    reason: format!("{d} does not exceed {}", points[i - 1].0),
                });
            }
        }
        let last = points.last().unwrap().0;
        if !(last < points[0].0 + lap) || last > lap {
            return Err(GeometryError::Invalid {
                what: "racing line delta",
                index: points.len() - 1,
                reason: format!("{last} exceeds the lap length {lap}"),
            });
        }
        let world: Vec<Vec2> = points
            .iter()
            .map(|(d, a)| track.lateral_point(*d, *a))
            .collect::<Result<_>>()?;
        let params = points.iter().map(|(d, _)| *d).collect();
        let world = ClosedPolyline::new(world, params, lap, CURVATURE_SPACING)?;
        Ok(Self {
            track_name: track.name().to_string(),
            half_width: track.half_width(),
            points,
            world,
        })
    }

    pub fn from_file(track: &Track, file: &RacingLineFile) -> Result<Self> {
        if file.track != track.name() {
            return Err(GeometryError::Invalid {
                what: "racing line track",
                index: 0,
                reason: format!("line is for '{}', not '{}'", file.track, track.name()),
            });
        }
        RacingLine::new(track, file.points.iter().map(|p| (p[0], p[1])).collect())
    }

    pub fn to_file(&self) -> RacingLineFile {
        RacingLineFile {
            track: self.track_name.clone(),
            points: self.points.iter().map(|(d, a)| [*d, *a]).collect(),
        }
    }

    pub fn load(track: &Track, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
        let file: RacingLineFile = serde_json::from_str(&text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        RacingLine::from_file(track, &file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file()).map_err(|e| GeometryError::Parse(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))
    }

    pub fn track_name(&self) -> &str {
        &self.track_name
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Per-point signed curvature of the line's own world trajectory.
    pub fn curvatures(&self) -> &[f64] {
        self.world.vertex_curvatures()
    }

    pub fn world(&self) -> &ClosedPolyline {
        &self.world
    }

    /// Own arc length of the line in world space.
    pub fn world_length(&self) -> f64 {
        self.world.length()
    }

    /// Lateral fraction at track arc length `delta`, interpolated.
    pub fn alpha_at(&self, delta: f64) -> f64 {
        let (i, t) = self.world.locate(delta);
        let j = (i + 1) % self.points.len();
        self.points[i].1 + t * (self.points[j].1 - self.points[i].1)
    }

    pub fn curvature_at(&self, delta: f64) -> f64 {
        self.world.curvature_at(delta)
    }

    /// Curvatures 20, 40, 60 and 80 m ahead of `delta`, wrapped around the lap.
    pub fn look_ahead_curvature(&self, delta: f64) -> [f64; 4] {
        LAC_OFFSETS.map(|off| self.curvature_at(delta + off))
    }

    /// World position of the line at track arc length `delta`.
    pub fn to_world(&self, track: &Track, delta: f64) -> Result<Vec2> {
        track.lateral_point(delta, self.alpha_at(delta))
    }

    /// Frame relative to this line; the offset is normalized by the track's
    /// half-width and `delta` is the track arc length at the foot point.
    pub fn project(&self, position: Vec2, heading: f64) -> TrackFrame {
        let p = self.world.project(position);
        TrackFrame {
            track_pos: p.lateral / self.half_width,
            angle: super::wrap_angle(heading - p.tangent_angle),
            delta: p.param,
        }
    }

    pub fn project_near(&self, position: Vec2, heading: f64, hint: usize) -> (TrackFrame, usize) {
        let p = self.world.project_near(position, hint, 8);
        (
            TrackFrame {
                track_pos: p.lateral / self.half_width,
                angle: super::wrap_angle(heading - p.tangent_angle),
                delta: p.param,
            },
            p.segment,
        )
    }
}
