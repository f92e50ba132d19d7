//! Planar geometry helpers shared by the simulator, sonar tracer and masks.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at a counter-clockwise angle from the x-axis.
    pub fn from_angle(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation.
    pub fn rotate(self, a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A pose on the plane; `yaw` is counter-clockwise from the world x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform(&self, local: Vec2) -> Vec2 {
        self.position() + local.rotate(self.yaw)
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Closest point on the segment and its parameter in `[0, 1]`.
    pub fn closest_point(&self, p: Vec2) -> (Vec2, f64) {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return (self.a, 0.0);
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        (self.a + ab * t, t)
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (self.closest_point(p).0 - p).norm()
    }

    /// Foot of the perpendicular from `p` onto the infinite supporting line,
    /// with the unclamped line parameter.
    pub fn perpendicular_foot(&self, p: Vec2) -> Option<(Vec2, f64)> {
        let ab = self.b - self.a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            return None;
        }
        let t = (p - self.a).dot(ab) / len2;
        Some((self.a + ab * t, t))
    }

    /// Ray parameter `t >= 0` at which `origin + t * dir` crosses the segment.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            return None;
        }
        let w = self.a - origin;
        let t = w.cross(e) / denom;
        let u = w.cross(dir) / denom;
        if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            Some(t)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Distance from `p` to the rim; negative inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        (p - self.center).norm() - self.radius
    }

    /// First non-negative ray parameter hitting the circle; 0 when the origin is inside.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let oc = origin - self.center;
        let a = dir.dot(dir);
        let b = oc.dot(dir);
        let c = oc.dot(oc) - self.radius * self.radius;
        if c <= 0.0 {
            return Some(0.0);
        }
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let t = (-b - disc.sqrt()) / a;
        (t >= 0.0).then_some(t)
    }
}

/// Oriented rectangle: `width` runs along the local y-axis, `depth` along local x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Vec2,
    pub yaw: f64,
    pub width: f64,
    pub depth: f64,
}

impl OrientedRect {
    pub fn corners(&self) -> [Vec2; 4] {
        let hx = self.depth / 2.0;
        let hy = self.width / 2.0;
        let pose = Pose2::new(self.center.x, self.center.y, self.yaw);
        [
            pose.transform(Vec2::new(hx, hy)),
            pose.transform(Vec2::new(-hx, hy)),
            pose.transform(Vec2::new(-hx, -hy)),
            pose.transform(Vec2::new(hx, -hy)),
        ]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let pose = Pose2::new(self.center.x, self.center.y, self.yaw);
        let q = pose.inverse_transform(p);
        q.x.abs() <= self.depth / 2.0 && q.y.abs() <= self.width / 2.0
    }

    /// Nearest ray entry into the rectangle; 0 when the origin is inside.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        if self.contains(origin) {
            return Some(0.0);
        }
        let c = self.corners();
        (0..4)
            .filter_map(|i| Segment::new(c[i], c[(i + 1) % 4]).ray_hit(origin, dir))
            .min_by(f64::total_cmp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn segment_ray_and_distance() {
        let s = Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0));
        assert_eq!(s.ray_hit(Vec2::ZERO, Vec2::new(1.0, 0.0)), Some(2.0));
        assert_eq!(s.ray_hit(Vec2::ZERO, Vec2::new(-1.0, 0.0)), None);
        assert!((s.distance(Vec2::new(0.0, 3.0)) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn circle_ray() {
        let c = Circle::new(Vec2::new(3.0, 0.0), 1.0);
        assert!((c.ray_hit(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(c.ray_hit(Vec2::ZERO, Vec2::new(0.0, 1.0)), None);
        assert_eq!(c.ray_hit(Vec2::new(3.0, 0.5), Vec2::new(0.0, 1.0)), Some(0.0));
    }

    #[test]
    fn rect_ray_from_outside() {
        let r = OrientedRect {
            center: Vec2::new(0.0, 0.2),
            yaw: 0.0,
            width: 0.05,
            depth: 0.12,
        };
        let t = r.ray_hit(Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap();
        assert!((t - 0.175).abs() < 1e-12);
    }
}
