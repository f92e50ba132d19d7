//! Closed-loop simulation: kinematics, contact and progress monitoring, and
//! the run loop tying sonar, controller and guidance together.

mod output;
mod run;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::controller::VelocityCommand;
use crate::error::ValidationError;
use crate::geometry::{wrap_angle, Pose2, Vec2};
use crate::world::EnvironmentModel;

pub use output::{aggregate_heatmap, write_trajectory_csv, HeatMap};
pub use run::{run_scenario, RunReport, Simulation, StepRecord, StepTiming, StuckInterval, Termination, TrajectorySample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    /// Simulated seconds before a run is abandoned.
    pub timeout: f64,
    pub robot_radius: f64,
    pub v_max: f64,
    /// Yaw-rate limit applied to operator commands.
    pub omega_max: f64,
    pub stuck_window: f64,
    pub stuck_distance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            timeout: 300.0,
            robot_radius: 0.1,
            v_max: 0.3,
            omega_max: 1.0,
            stuck_window: 10.0,
            stuck_distance: 0.05,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, prefix: &str, issues: &mut ValidationError) {
        for (name, v) in [
            ("dt", self.dt),
            ("timeout", self.timeout),
            ("robot_radius", self.robot_radius),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("stuck_window", self.stuck_window),
            ("stuck_distance", self.stuck_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                issues.push(format!("{prefix}.{name}"), format!("must be positive and finite, got {v}"));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2,
    pub command: VelocityCommand,
    pub radius: f64,
}

impl RobotState {
    pub fn new(pose: Pose2, radius: f64) -> Self {
        Self {
            pose,
            command: VelocityCommand::ZERO,
            radius,
        }
    }
}

/// Advances the world clock and the robot by one step.
///
/// Rotate first, then translate along the new heading. `V` is limited to `v_max`.
pub fn step_world(world: &mut EnvironmentModel, robot: &mut RobotState, cmd: VelocityCommand, dt: f64, v_max: f64) {
    let v = cmd.v.clamp(-v_max, v_max);
    let yaw = wrap_angle(robot.pose.yaw + cmd.omega * dt);
    robot.pose = Pose2::new(
        robot.pose.x + v * yaw.cos() * dt,
        robot.pose.y + v * yaw.sin() * dt,
        yaw,
    );
    robot.command = VelocityCommand::new(v, cmd.omega);
    world.advance(dt);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    /// `segment[i]`, `circle[i]` or `dynamic[i]`.
    pub entity: String,
    /// Distance from the robot rim to the entity; negative when penetrating.
    pub clearance: f64,
    pub position: Vec2,
}

/// Distance from the robot center to every entity, nearest first.
fn nearest_entity(world: &EnvironmentModel, p: Vec2) -> Option<(String, f64)> {
    let segs = world
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("segment[{i}]"), s.distance(p)));
    let circles = world
        .static_circles()
        .iter()
        .enumerate()
        .map(|(i, c)| (format!("circle[{i}]"), c.distance(p)));
    let dynamic = world
        .dynamic_circles()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("dynamic[{i}]"), c.distance(p)));
    segs.chain(circles)
        .chain(dynamic)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Robot rim to nearest obstacle; infinite in an empty world.
pub fn clearance(world: &EnvironmentModel, robot: &RobotState) -> f64 {
    nearest_entity(world, robot.pose.position()).map_or(f64::INFINITY, |(_, d)| d - robot.radius)
}

/// A collision is any entity strictly closer to the center than the robot radius.
pub fn detect_collision(world: &EnvironmentModel, robot: &RobotState) -> Option<CollisionEvent> {
    let (entity, d) = nearest_entity(world, robot.pose.position())?;
    (d < robot.radius).then(|| CollisionEvent {
        t: world.time(),
        entity,
        clearance: d - robot.radius,
        position: robot.pose.position(),
    })
}

/// Sliding-window progress monitor.
#[derive(Debug, Clone)]
pub struct StuckDetector {
    window: f64,
    min_distance: f64,
    samples: VecDeque<(f64, Vec2)>,
}

impl StuckDetector {
    pub fn new(window: f64, min_distance: f64) -> Self {
        Self {
            window,
            min_distance,
            samples: VecDeque::new(),
        }
    }

    /// Adds a sample; true when every position of the last full window
    /// stayed within `min_distance` of where the window began.
    pub fn push(&mut self, t: f64, p: Vec2) -> bool {
        self.samples.push_back((t, p));
        while let Some(&(t0, _)) = self.samples.get(1) {
            if t - t0 >= self.window - 1e-9 {
                self.samples.pop_front();
            } else {
                break;
            }
        }
        let (t0, p0) = self.samples[0];
        t - t0 >= self.window - 1e-9 && self.samples.iter().all(|&(_, q)| (q - p0).norm() < self.min_distance)
    }

    pub fn reset(&mut self) {
        self.samples.clear();
    }
}

/// Whether any `window`-long stretch of `trajectory` moved less than `min_distance`.
pub fn detect_stuck(trajectory: &[(f64, Vec2)], window: f64, min_distance: f64) -> bool {
    let mut d = StuckDetector::new(window, min_distance);
    trajectory.iter().any(|&(t, p)| d.push(t, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, Segment};

    #[test]
    fn straight_line_displacement() {
        let mut w = EnvironmentModel::empty();
        let mut r = RobotState::new(Pose2::default(), 0.1);
        for _ in 0..10 {
            step_world(&mut w, &mut r, VelocityCommand::new(0.3, 0.0), 0.1, 0.3);
        }
        assert!((r.pose.x - 0.3).abs() < 1e-12 && r.pose.y == 0.0);
        assert!((w.time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_in_place() {
        let mut w = EnvironmentModel::empty();
        let mut r = RobotState::new(Pose2::default(), 0.1);
        for _ in 0..10 {
            step_world(&mut w, &mut r, VelocityCommand::new(0.0, 0.5), 0.1, 0.3);
        }
        assert!((r.pose.yaw - 0.5).abs() < 1e-12);
        assert_eq!(r.pose.position(), Vec2::ZERO);
    }

    #[test]
    fn speed_is_limited() {
        let mut w = EnvironmentModel::empty();
        let mut r = RobotState::new(Pose2::default(), 0.1);
        step_world(&mut w, &mut r, VelocityCommand::new(2.0, 0.0), 0.1, 0.3);
        assert!((r.pose.x - 0.03).abs() < 1e-15);
        assert_eq!(r.command.v, 0.3);
    }

    #[test]
    fn closed_circle() {
        let mut w = EnvironmentModel::empty();
        let mut r = RobotState::new(Pose2::default(), 0.1);
        let steps = (4.0 * std::f64::consts::PI / 0.5 / 0.1).round() as usize;
        // Chords of 0.03 m turning 0.05 rad each: a regular polygon whose
        // circumcircle has radius 0.015 / sin(0.025), centered off the y axis.
        let rad = 0.015 / 0.025f64.sin();
        let center = Vec2::new(-rad * 0.025f64.sin(), rad * 0.025f64.cos());
        let mut max_dev: f64 = 0.0;
        for _ in 0..steps {
            step_world(&mut w, &mut r, VelocityCommand::new(0.3, 0.5), 0.1, 0.3);
            max_dev = max_dev.max(((r.pose.position() - center).norm() - rad).abs());
        }
        assert!(r.pose.position().norm() < 1e-2, "end {:?}", r.pose);
        assert!(max_dev < 1e-9, "{max_dev}");
    }

    #[test]
    fn collision_boundary() {
        let wall = |y: f64| {
            EnvironmentModel::new(vec![Segment::new(Vec2::new(-1.0, y), Vec2::new(1.0, y))], vec![], vec![]).unwrap()
        };
        let r = RobotState::new(Pose2::default(), 0.1);
        assert!(detect_collision(&wall(0.1), &r).is_none());
        let hit = detect_collision(&wall(0.1 - 1e-9), &r).unwrap();
        assert_eq!(hit.entity, "segment[0]");
        assert!(hit.clearance < 0.0);
        let w = EnvironmentModel::new(vec![], vec![Circle::new(Vec2::new(0.3, 0.0), 0.25)], vec![]).unwrap();
        assert_eq!(detect_collision(&w, &r).unwrap().entity, "circle[0]");
        assert!((clearance(&w, &r) + 0.05).abs() < 1e-12);
    }

    #[test]
    fn stuck_needs_a_full_quiet_window() {
        let still: Vec<(f64, Vec2)> = (0..=100).map(|k| (k as f64 * 0.1, Vec2::ZERO)).collect();
        assert!(detect_stuck(&still, 10.0, 0.05));
        assert!(!detect_stuck(&still[..100], 10.0, 0.05));
        let moving: Vec<(f64, Vec2)> = (0..=300).map(|k| (k as f64 * 0.1, Vec2::new(k as f64 * 0.001, 0.0))).collect();
        // 1 mm per step covers 0.1 m per 10 s window.
        assert!(!detect_stuck(&moving, 10.0, 0.05));
        let crawling: Vec<(f64, Vec2)> =
            (0..=300).map(|k| (k as f64 * 0.1, Vec2::new(k as f64 * 0.0004, 0.0))).collect();
        assert!(detect_stuck(&crawling, 10.0, 0.05));
    }
}
