use super::{circumscribed_curvature, GeometryError, Result, Vec2};

/// Closed polyline whose vertices carry a monotone parameter (the
/// arc-length coordinate `δ` along the track axis). The segment from the last
/// vertex back to the first spans `params[n-1] .. params[0] + period`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPolyline {
    points: Vec<Vec2>,
    params: Vec<f64>,
    period: f64,
    /// Cumulative own arc length at every vertex.
    arc: Vec<f64>,
    length: f64,
    /// Unit left-pointing normal per vertex (average of adjacent segments).
    normals: Vec<Vec2>,
    curvature: Vec<f64>,
}

/// Closest point of a polyline to a query position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub segment: usize,
    /// Fraction along the segment in `[0, 1]`.
    pub t: f64,
    pub point: Vec2,
    /// Interpolated vertex parameter at the foot point, in `[params[0], params[0] + period)`.
    pub param: f64,
    /// Signed distance, positive to the left of the direction of travel.
    pub lateral: f64,
    /// Direction of the segment containing the foot point.
    pub tangent_angle: f64,
    pub distance: f64,
}

impl ClosedPolyline {
    /// Builds a polyline and its per-vertex curvature estimated with a
    /// three-point stencil spanning about `curvature_spacing` metres on
    /// either side of each vertex.
    pub fn new(points: Vec<Vec2>, params: Vec<f64>, period: f64, curvature_spacing: f64) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(GeometryError::Degenerate {
                index: n,
                reason: "a closed polyline needs at least 3 points".into(),
            });
        }
        if params.len() != n {
            return Err(GeometryError::Invalid {
                what: "parameter table",
                index: params.len(),
                reason: format!("expected {n} entries"),
            });
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if !(points[i].x.is_finite() && points[i].y.is_finite()) {
                return Err(GeometryError::Invalid {
                    what: "point",
                    index: i,
                    reason: "non-finite coordinate".into(),
                });
            }
            if (points[j] - points[i]).norm() == 0.0 {
                return Err(GeometryError::Degenerate {
                    index: j,
                    reason: "duplicate consecutive point".into(),
                });
            }
            let next = if j == 0 { params[0] + period } else { params[j] };
            if !(next > params[i]) {
                return Err(GeometryError::Invalid {
                    what: "parameter",
                    index: j,
                    reason: format!("not strictly increasing ({} after {})", next, params[i]),
                });
            }
        }
        let mut arc = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            arc.push(acc);
            acc += (points[(i + 1) % n] - points[i]).norm();
        }
        let length = acc;

        let seg_dir = |i: usize| (points[(i + 1) % n] - points[i]).normalized();
        let normals = (0..n)
            .map(|i| {
                let prev = seg_dir((i + n - 1) % n);
                let next = seg_dir(i);
                let avg = prev + next;
                if avg.norm() < 1e-12 {
                    next.perp_left()
                } else {
                    avg.normalized().perp_left()
                }
            })
            .collect();

        let mut poly = Self {
            points,
            params,
            period,
            arc,
            length,
            normals,
            curvature: Vec::new(),
        };
        poly.curvature = (0..n).map(|i| poly.vertex_curvature(i, curvature_spacing)).collect();
        Ok(poly)
    }

    fn vertex_curvature(&self, i: usize, spacing: f64) -> f64 {
        let n = self.points.len();
        let mut back = 0;
        let mut dist = 0.0;
        while dist < spacing && back < n / 3 {
            let a = (i + n - back - 1) % n;
            let b = (i + n - back) % n;
            dist += (self.points[b] - self.points[a]).norm();
            back += 1;
        }
        let mut fwd = 0;
        dist = 0.0;
        while dist < spacing && fwd < n / 3 {
            let a = (i + fwd) % n;
            let b = (i + fwd + 1) % n;
            dist += (self.points[b] - self.points[a]).norm();
            fwd += 1;
        }
        circumscribed_curvature(self.points[(i + n - back) % n], self.points[i], self.points[(i + fwd) % n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn vertex_curvatures(&self) -> &[f64] {
        &self.curvature
    }

    fn param_end(&self, i: usize) -> f64 {
        if i + 1 == self.points.len() {
            self.params[0] + self.period
        } else {
            self.params[i + 1]
        }
    }

    /// Wraps `param` into `[params[0], params[0] + period)`.
    pub fn wrap_param(&self, param: f64) -> f64 {
        let base = self.params[0];
        base + (param - base).rem_euclid(self.period)
    }

    /// Segment index and fraction for a (wrapped) parameter value.
    pub fn locate(&self, param: f64) -> (usize, f64) {
        let p = self.wrap_param(param);
        let i = match self.params.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let (a, b) = (self.params[i], self.param_end(i));
        (i, ((p - a) / (b - a)).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, param: f64) -> Vec2 {
        let (i, t) = self.locate(param);
        self.points[i].lerp(self.points[(i + 1) % self.points.len()], t)
    }

    /// Linearly interpolated (unnormalized) vertex normal; offsets along it
    /// land exactly on polylines built from vertex-normal offsets.
    pub fn normal_at(&self, param: f64) -> Vec2 {
        let (i, t) = self.locate(param);
        self.normals[i].lerp(self.normals[(i + 1) % self.points.len()], t)
    }

    pub fn tangent_angle_at(&self, param: f64) -> f64 {
        let (i, _) = self.locate(param);
        (self.points[(i + 1) % self.points.len()] - self.points[i]).angle()
    }

    pub fn curvature_at(&self, param: f64) -> f64 {
        let (i, t) = self.locate(param);
        let j = (i + 1) % self.points.len();
        self.curvature[i] + t * (self.curvature[j] - self.curvature[i])
    }

    fn project_segment(&self, i: usize, pos: Vec2) -> Projection {
        let n = self.points.len();
        let a = self.points[i];
        let b = self.points[(i + 1) % n];
        let ab = b - a;
        let t = ((pos - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
        let foot = a + ab * t;
        let d = pos - foot;
        let distance = d.norm();
        let side = ab.cross(pos - a);
        let lateral = if side >= 0.0 { distance } else { -distance };
        let (pa, pb) = (self.params[i], self.param_end(i));
        Projection {
            segment: i,
            t,
            point: foot,
            param: self.wrap_param(pa + t * (pb - pa)),
            lateral,
            tangent_angle: ab.angle(),
            distance,
        }
    }

    /// Nearest point over every segment; ties resolve to the smaller parameter.
    pub fn project(&self, pos: Vec2) -> Projection {
        let mut best = self.project_segment(0, pos);
        for i in 1..self.points.len() {
            let p = self.project_segment(i, pos);
            if p.distance < best.distance {
                best = p;
            }
        }
        best
    }

    /// Nearest point searching only `window` segments either side of `hint`.
    /// Falls back to the global search when the local minimum sits on the
    /// edge of the window.
    pub fn project_near(&self, pos: Vec2, hint: usize, window: usize) -> Projection {
        let n = self.points.len();
        if 2 * window + 1 >= n {
            return self.project(pos);
        }
        let mut best: Option<(usize, Projection)> = None;
        for k in 0..=2 * window {
            let i = (hint + n - window + k) % n;
            let p = self.project_segment(i, pos);
            if best.as_ref().is_none_or(|(_, b)| p.distance < b.distance) {
                best = Some((k, p));
            }
        }
        let (k, p) = best.unwrap();
        if k == 0 || k == 2 * window {
            self.project(pos)
        } else {
            p
        }
    }
}
