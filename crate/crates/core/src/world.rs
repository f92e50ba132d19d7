//! Static and moving geometry of the simulated indoor world.

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::geometry::{Circle, Segment, Vec2};

/// A circular obstacle travelling along a closed polyline at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub radius: f64,
    pub speed: f64,
    /// Visited in order, then back to the first vertex.
    pub path: Vec<Vec2>,
}

impl DynamicObstacle {
    fn perimeter(&self) -> f64 {
        let n = self.path.len();
        (0..n)
            .map(|i| (self.path[(i + 1) % n] - self.path[i]).norm())
            .sum()
    }

    /// Center position after `t` seconds of travel.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let n = self.path.len();
        if n == 1 || self.speed == 0.0 {
            return self.path[0];
        }
        let perimeter = self.perimeter();
        if perimeter == 0.0 {
            return self.path[0];
        }
        let mut s = (self.speed * t).rem_euclid(perimeter);
        for i in 0..n {
            let a = self.path[i];
            let b = self.path[(i + 1) % n];
            let len = (b - a).norm();
            if s <= len && len > 0.0 {
                return a + (b - a) * (s / len);
            }
            s -= len;
        }
        self.path[0]
    }
}

/// How a segment endpoint reflects sound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// Shared by two or more segments.
    Corner,
    /// Free end of a single segment.
    Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub position: Vec2,
    pub kind: VertexKind,
    /// Segments that end at this vertex.
    pub segments: Vec<usize>,
}

/// World geometry plus the clock driving the dynamic obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    segments: Vec<Segment>,
    circles: Vec<Circle>,
    dynamic: Vec<DynamicObstacle>,
    vertices: Vec<Vertex>,
    time: f64,
}

const VERTEX_TOLERANCE: f64 = 1e-9;

impl EnvironmentModel {
    pub fn new(
        segments: Vec<Segment>,
        circles: Vec<Circle>,
        dynamic: Vec<DynamicObstacle>,
    ) -> Result<Self, ValidationError> {
        let mut err = ValidationError::default();
        for (i, s) in segments.iter().enumerate() {
            if !(s.a.is_finite() && s.b.is_finite()) {
                err.push(format!("world.segments[{i}]"), "endpoints must be finite");
            } else if s.length() == 0.0 {
                err.push(format!("world.segments[{i}]"), "zero-length segment");
            }
        }
        for (i, c) in circles.iter().enumerate() {
            if !c.center.is_finite() || !(c.radius > 0.0) {
                err.push(format!("world.circles[{i}]"), "center must be finite and radius > 0");
            }
        }
        for (i, d) in dynamic.iter().enumerate() {
            if d.path.is_empty() || d.path.iter().any(|p| !p.is_finite()) {
                err.push(format!("world.dynamic[{i}].path"), "needs at least one finite point");
            }
            if !(d.speed >= 0.0) || !d.speed.is_finite() {
                err.push(format!("world.dynamic[{i}].speed"), "must be finite and >= 0");
            }
            if !(d.radius > 0.0) {
                err.push(format!("world.dynamic[{i}].radius"), "must be > 0");
            }
        }
        err.into_result()?;

        let mut vertices: Vec<Vertex> = Vec::new();
        for (i, s) in segments.iter().enumerate() {
            for p in [s.a, s.b] {
                match vertices
                    .iter_mut()
                    .find(|v| (v.position - p).norm() <= VERTEX_TOLERANCE)
                {
                    Some(v) => {
                        v.segments.push(i);
                        v.kind = VertexKind::Corner;
                    }
                    None => vertices.push(Vertex {
                        position: p,
                        kind: VertexKind::Edge,
                        segments: vec![i],
                    }),
                }
            }
        }

        Ok(Self {
            segments,
            circles,
            dynamic,
            vertices,
            time: 0.0,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new()).expect("empty world is valid")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn static_circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn dynamic(&self) -> &[DynamicObstacle] {
        &self.dynamic
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Advances the dynamic obstacles by `dt` seconds.
    pub fn advance(&mut self, dt: f64) {
        self.time += dt;
    }

    /// Dynamic obstacles as circles at the current time.
    pub fn dynamic_circles(&self) -> Vec<Circle> {
        self.dynamic
            .iter()
            .map(|d| Circle::new(d.position_at(self.time), d.radius))
            .collect()
    }

    /// Static followed by dynamic circles at the current time.
    pub fn all_circles(&self) -> Vec<Circle> {
        let mut all = self.circles.clone();
        all.extend(self.dynamic_circles());
        all
    }

    /// Axis-aligned bounds `(min, max)` of the static geometry and obstacle paths.
    pub fn bounds(&self) -> Option<(Vec2, Vec2)> {
        let mut pts: Vec<Vec2> = self.segments.iter().flat_map(|s| [s.a, s.b]).collect();
        for c in &self.circles {
            pts.push(c.center - Vec2::new(c.radius, c.radius));
            pts.push(c.center + Vec2::new(c.radius, c.radius));
        }
        for d in &self.dynamic {
            for p in &d.path {
                pts.push(*p - Vec2::new(d.radius, d.radius));
                pts.push(*p + Vec2::new(d.radius, d.radius));
            }
        }
        let first = *pts.first()?;
        Some(pts.iter().fold((first, first), |(lo, hi), p| {
            (
                Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}
