use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{wrap_angle, ClosedPolyline, GeometryError, Projection, RacingLine, Result, Vec2};

/// Widths at or below this cannot fit the car.
pub const MIN_TRACK_WIDTH: f64 = 2.0;

/// Stencil half-width for curvature estimates, metres.
pub(crate) const CURVATURE_SPACING: f64 = 5.0;

/// Constant-width closed track described by its centerline.
#[derive(Debug, Clone)]
pub struct Track {
    name: String,
    width: f64,
    centerline: ClosedPolyline,
    left: Vec<Vec2>,
    right: Vec<Vec2>,
}

/// Position of a car relative to a reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackFrame {
    /// Lateral offset divided by half the track width, positive to the left.
    pub track_pos: f64,
    /// Car heading minus reference tangent, in `(-π, π]`.
    pub angle: f64,
    /// Arc-length coordinate of the projected point along the track axis.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFile {
    pub name: String,
    pub width: f64,
    pub centerline: Vec<[f64; 2]>,
}

impl Track {
    pub fn new(name: impl Into<String>, width: f64, mut centerline: Vec<Vec2>) -> Result<Self> {
        if !(width > MIN_TRACK_WIDTH) {
            return Err(GeometryError::Invalid {
                what: "width",
                index: 0,
                reason: format!("{width} m does not exceed the car width {MIN_TRACK_WIDTH} m"),
            });
        }
        // an explicitly repeated start point is the implicit closing segment
        if centerline.len() > 3 && centerline.first() == centerline.last() {
            centerline.pop();
        }
        let n = centerline.len();
        let mut params = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            params.push(acc);
            if i + 1 < n {
                acc += (centerline[i + 1] - centerline[i]).norm();
            }
        }
        let period = if n >= 2 { acc + (centerline[0] - centerline[n - 1]).norm() } else { 1.0 };
        let centerline = ClosedPolyline::new(centerline, params, period, CURVATURE_SPACING)?;
        let half = 0.5 * width;
        let left = centerline.points().iter().zip(centerline.normals()).map(|(p, nrm)| *p + *nrm * half).collect();
        let right = centerline.points().iter().zip(centerline.normals()).map(|(p, nrm)| *p - *nrm * half).collect();
        Ok(Self {
            name: name.into(),
            width,
            centerline,
            left,
            right,
        })
    }

    pub fn from_file(file: &TrackFile) -> Result<Self> {
        let pts = file.centerline.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        Track::new(file.name.clone(), file.width, pts)
    }

    pub fn to_file(&self) -> TrackFile {
        TrackFile {
            name: self.name.clone(),
            width: self.width,
            centerline: self.centerline.points().iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
        let file: TrackFile = serde_json::from_str(&text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        Track::from_file(&file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file()).map_err(|e| GeometryError::Parse(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn lap_length(&self) -> f64 {
        self.centerline.period()
    }

    pub fn centerline(&self) -> &ClosedPolyline {
        &self.centerline
    }

    pub fn left_border(&self) -> &[Vec2] {
        &self.left
    }

    pub fn right_border(&self) -> &[Vec2] {
        &self.right
    }

    pub fn point_at(&self, delta: f64) -> Vec2 {
        self.centerline.point_at(delta)
    }

    pub fn heading_at(&self, delta: f64) -> f64 {
        self.centerline.tangent_angle_at(delta)
    }

    /// Signed centerline curvature at arc length `delta` (wrapped).
    pub fn curvature_at(&self, delta: f64) -> f64 {
        self.centerline.curvature_at(delta)
    }

    /// World position at arc length `delta` and lateral fraction `alpha`
    /// measured from the right border (`0` right border, `1` left border).
    pub fn lateral_point(&self, delta: f64, alpha: f64) -> Result<Vec2> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(GeometryError::Domain(format!("lateral fraction {alpha} outside [0, 1]")));
        }
        let c = self.centerline.point_at(delta);
        let n = self.centerline.normal_at(delta);
        Ok(c + n * ((alpha - 0.5) * self.width))
    }

    pub fn project_raw(&self, position: Vec2) -> Projection {
        self.centerline.project(position)
    }

    pub fn frame_from_projection(&self, p: &Projection, heading: f64) -> TrackFrame {
        TrackFrame {
            track_pos: p.lateral / self.half_width(),
            angle: wrap_angle(heading - p.tangent_angle),
            delta: p.param,
        }
    }

    /// Frame relative to the middle of the track.
    pub fn project(&self, position: Vec2, heading: f64) -> TrackFrame {
        let p = self.project_raw(position);
        self.frame_from_projection(&p, heading)
    }

    /// Racing line following the centerline exactly (`α = 0.5` at every vertex).
    pub fn middle_line(&self) -> RacingLine {
        let points = self.centerline.params().iter().map(|d| (*d, 0.5)).collect();
        RacingLine::new(self, points).expect("centerline is a valid racing line")
    }
}
