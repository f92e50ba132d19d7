//! Waypoint follower that produces the controller's input command.
//!
//! A proportional heading law: turn toward the active waypoint and drive
//! forward in proportion to how well the platform already faces it.

use serde::{Deserialize, Serialize};

use crate::controller::VelocityCommand;
use crate::error::ValidationError;
use crate::geometry::{wrap_angle, Pose2, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub waypoints: Vec<Vec2>,
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
    #[serde(default = "default_cruise_v")]
    pub cruise_v: f64,
    #[serde(default = "default_heading_gain")]
    pub heading_gain: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

fn default_capture_radius() -> f64 {
    0.3
}
fn default_cruise_v() -> f64 {
    0.3
}
fn default_heading_gain() -> f64 {
    1.5
}
fn default_omega_max() -> f64 {
    1.0
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        Self {
            waypoints,
            capture_radius: default_capture_radius(),
            cruise_v: default_cruise_v(),
            heading_gain: default_heading_gain(),
            omega_max: default_omega_max(),
        }
    }

    pub fn validate(&self, prefix: &str, issues: &mut ValidationError) {
        if self.waypoints.is_empty() {
            issues.push(format!("{prefix}.waypoints"), "at least one waypoint is required");
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !w.is_finite() {
                issues.push(format!("{prefix}.waypoints[{i}]"), "must be finite");
            }
        }
        if !(self.capture_radius > 0.0 && self.capture_radius.is_finite()) {
            issues.push(format!("{prefix}.capture_radius"), "must be > 0");
        }
        for (name, v) in [
            ("cruise_v", self.cruise_v),
            ("heading_gain", self.heading_gain),
            ("omega_max", self.omega_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                issues.push(format!("{prefix}.{name}"), "must be finite and >= 0");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GuidanceState {
    pub active_index: usize,
    pub goal_reached: bool,
}

/// Input command toward the active waypoint, advancing past captured ones.
pub fn input_command(robot: &Pose2, plan: &WaypointPlan, state: &GuidanceState) -> (VelocityCommand, GuidanceState) {
    let mut next = *state;
    if plan.waypoints.is_empty() || next.goal_reached {
        return (VelocityCommand::ZERO, next);
    }
    let here = robot.position();
    next.active_index = next.active_index.min(plan.waypoints.len() - 1);
    while (plan.waypoints[next.active_index] - here).norm() <= plan.capture_radius {
        if next.active_index + 1 == plan.waypoints.len() {
            next.goal_reached = true;
            return (VelocityCommand::ZERO, next);
        }
        next.active_index += 1;
    }
    let to_goal = plan.waypoints[next.active_index] - here;
    let e = wrap_angle(to_goal.angle() - robot.yaw);
    let omega = (plan.heading_gain * e).clamp(-plan.omega_max, plan.omega_max);
    let v = plan.cruise_v * e.cos().max(0.0);
    (VelocityCommand::new(v, omega), next)
}
