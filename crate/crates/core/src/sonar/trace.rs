//! Geometric echo tracing: which walls, vertices and round obstacles return
//! an echo to a sensor, and from where.

use crate::geometry::{Circle, Pose2, Vec2};
use crate::world::{EnvironmentModel, VertexKind};

use super::{ReflectionEvent, ReflectorKind};

/// A surface whose own intersection with the probing ray must be ignored.
#[derive(Clone, Copy)]
enum Source<'a> {
    Segment(usize),
    Vertex(&'a [usize]),
    Circle(usize),
}

fn occluded(world: &EnvironmentModel, circles: &[Circle], origin: Vec2, target: Vec2, source: Source<'_>) -> bool {
    let offset = target - origin;
    let range = offset.norm();
    let dir = offset * (1.0 / range);
    let limit = range - 1e-6;
    let segment_blocks = world.segments().iter().enumerate().any(|(i, s)| {
        let skip = match source {
            Source::Segment(k) => k == i,
            Source::Vertex(list) => list.contains(&i),
            Source::Circle(_) => false,
        };
        !skip && s.ray_hit(origin, dir).is_some_and(|t| t < limit)
    });
    segment_blocks
        || circles.iter().enumerate().any(|(i, c)| {
            !matches!(source, Source::Circle(k) if k == i) && c.ray_hit(origin, dir).is_some_and(|t| t < limit)
        })
}

/// Echoes visible from a sensor at `sensor` (world position, boresight yaw).
///
/// Walls reflect specularly from the foot of the perpendicular, segment
/// endpoints shared by two walls act as corners and free endpoints as edges,
/// and round obstacles reflect from their nearest rim point. Echoes beyond
/// `r_max`, outside the frontal half-plane, or shadowed by a closer surface
/// are dropped.
pub fn trace_reflections(world: &EnvironmentModel, sensor: &Pose2, r_max: f64) -> Vec<ReflectionEvent> {
    let origin = sensor.position();
    let circles = world.all_circles();
    let mut events = Vec::new();

    let mut emit = |target: Vec2, kind: ReflectorKind, source: Source<'_>, range: f64| {
        if !(range > 0.0 && range <= r_max) {
            return;
        }
        let local = sensor.inverse_transform(target);
        let bearing = (-local.y).atan2(local.x).to_degrees();
        if !(-90.0..=90.0).contains(&bearing) {
            return;
        }
        if occluded(world, &circles, origin, target, source) {
            return;
        }
        events.push(ReflectionEvent {
            range,
            bearing,
            amplitude: kind.amplitude_factor(),
            kind,
        });
    };

    for (i, seg) in world.segments().iter().enumerate() {
        if let Some((foot, t)) = seg.perpendicular_foot(origin) {
            if (0.0..=1.0).contains(&t) {
                emit(foot, ReflectorKind::Plane, Source::Segment(i), (foot - origin).norm());
            }
        }
    }

    for v in world.vertices() {
        let kind = match v.kind {
            VertexKind::Corner => ReflectorKind::Corner,
            VertexKind::Edge => ReflectorKind::Edge,
        };
        emit(v.position, kind, Source::Vertex(&v.segments), (v.position - origin).norm());
    }

    for (i, c) in circles.iter().enumerate() {
        let to_center = c.center - origin;
        let d = to_center.norm();
        if d <= c.radius {
            continue;
        }
        let rim = origin + to_center * ((d - c.radius) / d);
        emit(rim, ReflectorKind::Plane, Source::Circle(i), d - c.radius);
    }

    events
}
