//! Piecewise straight/arc track construction.

use super::{GeometryError, Result, Track, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Straight { length: f64 },
    /// Positive `degrees` turn left.
    Arc { radius: f64, degrees: f64 },
}

/// Builds a centerline starting at the origin heading along +x.
///
/// [`TrackBuilder::closing`] marks two straights whose lengths absorb the
/// positional closure error; total turning must be exactly ±360°.
#[derive(Debug, Clone)]
pub struct TrackBuilder {
    name: String,
    width: f64,
    segments: Vec<Segment>,
    closing: Option<(usize, usize)>,
    spacing: f64,
}

impl TrackBuilder {
    pub fn new(name: impl Into<String>, width: f64) -> Self {
        Self {
            name: name.into(),
            width,
            segments: Vec::new(),
            closing: None,
            spacing: 1.0,
        }
    }

    pub fn straight(mut self, length: f64) -> Self {
        self.segments.push(Segment::Straight { length });
        self
    }

    pub fn arc(mut self, radius: f64, degrees: f64) -> Self {
        self.segments.push(Segment::Arc { radius, degrees });
        self
    }

    /// Lets the straights at segment indices `a` and `b` stretch to close the loop.
    pub fn closing(mut self, a: usize, b: usize) -> Self {
        self.closing = Some((a, b));
        self
    }

    /// Target vertex spacing in metres.
    pub fn spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    fn end_pose(segments: &[Segment]) -> (Vec2, f64) {
        let mut pos = Vec2::default();
        let mut heading: f64 = 0.0;
        for seg in segments {
            match *seg {
                Segment::Straight { length } => pos = pos + Vec2::from_angle(heading) * length,
                Segment::Arc { radius, degrees } => {
                    let turn = degrees.to_radians();
                    let sign = turn.signum();
                    let center = pos + Vec2::from_angle(heading).perp_left() * (radius * sign);
                    let start = pos - center;
                    let (s, c) = turn.sin_cos();
                    pos = center + Vec2::new(start.x * c - start.y * s, start.x * s + start.y * c);
                    heading += turn;
                }
            }
        }
        (pos, heading)
    }

    fn straight_heading(segments: &[Segment], idx: usize) -> f64 {
        segments[..idx]
            .iter()
            .map(|s| match s {
                Segment::Arc { degrees, .. } => degrees.to_radians(),
                Segment::Straight { .. } => 0.0,
            })
            .sum()
    }

    pub fn build(self) -> Result<Track> {
        let mut segments = self.segments.clone();
        let total_turn: f64 = segments
            .iter()
            .map(|s| match s {
                Segment::Arc { degrees, .. } => *degrees,
                Segment::Straight { .. } => 0.0,
            })
            .sum();
        if ((total_turn.abs() - 360.0).abs()) > 1e-9 {
            return Err(GeometryError::Closure(format!("total turning {total_turn}° is not ±360°")));
        }
        if let Some((a, b)) = self.closing {
            for idx in [a, b] {
                if !matches!(segments.get(idx), Some(Segment::Straight { .. })) {
                    return Err(GeometryError::Closure(format!("segment {idx} is not a straight")));
                }
            }
            let (end, _) = Self::end_pose(&segments);
            let da = Vec2::from_angle(Self::straight_heading(&segments, a));
            let db = Vec2::from_angle(Self::straight_heading(&segments, b));
            let det = da.cross(db);
            if det.abs() < 1e-9 {
                return Err(GeometryError::Closure("closing straights are parallel".into()));
            }
            let err = Vec2::default() - end;
            let ka = err.cross(db) / det;
            let kb = da.cross(err) / det;
            for (idx, extra) in [(a, ka), (b, kb)] {
                if let Segment::Straight { length } = &mut segments[idx] {
                    *length += extra;
                    if *length <= 0.0 {
                        return Err(GeometryError::Closure(format!("straight {idx} would have length {length}")));
                    }
                }
            }
        }
        let (end, _) = Self::end_pose(&segments);
        if end.norm() > 1e-6 {
            return Err(GeometryError::Closure(format!("loop misses the start by {:.3} m", end.norm())));
        }

        let mut points = Vec::new();
        let mut pos = Vec2::default();
        let mut heading: f64 = 0.0;
        for seg in &segments {
            match *seg {
                Segment::Straight { length } => {
                    let n = (length / self.spacing).ceil().max(1.0) as usize;
                    let dir = Vec2::from_angle(heading);
                    for k in 0..n {
                        points.push(pos + dir * (length * k as f64 / n as f64));
                    }
                    pos = pos + dir * length;
                }
                Segment::Arc { radius, degrees } => {
                    let turn = degrees.to_radians();
                    let sign = turn.signum();
                    let n = (radius * turn.abs() / self.spacing).ceil().max(1.0) as usize;
                    let center = pos + Vec2::from_angle(heading).perp_left() * (radius * sign);
                    let start = pos - center;
                    for k in 0..n {
                        let (s, c) = (turn * k as f64 / n as f64).sin_cos();
                        points.push(center + Vec2::new(start.x * c - start.y * s, start.x * s + start.y * c));
                    }
                    let (s, c) = turn.sin_cos();
                    pos = center + Vec2::new(start.x * c - start.y * s, start.x * s + start.y * c);
                    heading += turn;
                }
            }
        }
        Track::new(self.name, self.width, points)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stadium_closes_with_expected_length() {
        let t = TrackBuilder::new("s", 10.0).straight(100.0).arc(30.0, 180.0).straight(100.0).arc(30.0, 180.0).build().unwrap();
        assert!((t.lap_length() - (200.0 + 2.0 * PI * 30.0)).abs() < 0.05);
    }

    #[test]
    fn closing_straights_absorb_error() {
        let t = TrackBuilder::new("l", 10.0)
            .straight(80.0)
            .arc(20.0, 90.0)
            .straight(10.0)
            .arc(20.0, 90.0)
            .straight(50.0)
            .arc(20.0, 90.0)
            .straight(50.0)
            .arc(20.0, 90.0)
            .closing(4, 6)
            .build()
            .unwrap();
        assert!(t.lap_length() > 200.0);
    }

    #[test]
    fn rejects_open_loops() {
        assert!(TrackBuilder::new("x", 10.0).straight(10.0).arc(10.0, 90.0).build().is_err());
        assert!(TrackBuilder::new("x", 10.0).straight(10.0).arc(10.0, 360.0).build().is_err());
    }
}
