//! Newline-delimited JSON messages exchanged with live clients.
//!
//! Every message is one JSON object on one line with a `"type"` tag:
//!
//! | type      | direction        | purpose                                          |
//! |-----------|------------------|--------------------------------------------------|
//! | `state`   | server -> client | one per simulation step                          |
//! | `config`  | server -> client | static scene: walls, sensors, masks; on connect and after reset |
//! | `ack`     | server -> client | a control message was applied                    |
//! | `error`   | server -> client | a client message was rejected                    |
//! | `command` | client -> server | operator input velocities                        |
//! | `control` | client -> server | `start`, `pause`, `reset`, `select_scenario`     |
//!
//! Clients must be prepared to miss `state` messages: slow connections drop
//! the oldest queued ones. `seq` increases strictly so gaps are visible.

use echoflow_core::controller::{Layer, VelocityCommand};
use echoflow_core::geometry::{Circle, Segment, Vec2};
use echoflow_core::masks::TernaryMask;
use echoflow_core::sim::Termination;
use echoflow_core::sonar::Energyscape;
use serde::{Deserialize, Serialize};

/// Downsampled energyscape limits.
pub const MAX_RANGE_CELLS: usize = 100;
pub const MAX_ANGLE_CELLS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    State(StateMessage),
    Command(CommandMessage),
    Control(ControlMessage),
    Config(ConfigMessage),
    Ack(AckMessage),
    Error(ErrorMessage),
}

impl WireMessage {
    /// One line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialize")
    }

    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim())
    }

    pub fn error(message: impl Into<String>) -> Self {
        WireMessage::Error(ErrorMessage {
            message: message.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirePose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Max-pooled energyscape, range-major, `n_range * n_angle` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEnergyscape {
    pub sensor: usize,
    pub n_range: usize,
    pub n_angle: usize,
    pub r_max: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    /// Strictly increasing over the life of the server, across resets.
    pub seq: u64,
    /// Simulation step; restarts at 0 after a reset.
    pub step: u64,
    pub t: f64,
    pub scenario: String,
    pub paused: bool,
    pub pose: WirePose,
    /// Operator command after clamping, as fed to the controller.
    pub input: VelocityCommand,
    pub output: VelocityCommand,
    pub layer: Layer,
    pub termination: Termination,
    pub goal_reached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<String>,
    pub dynamic: Vec<Circle>,
    pub energyscapes: Vec<WireEnergyscape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandMessage {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Start,
    Pause,
    Reset,
    SelectScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub action: ControlAction,
    /// Scenario name for `select_scenario`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSensor {
    pub x: f64,
    pub y: f64,
    /// Boresight relative to the platform heading, radians.
    pub heading: f64,
}

/// Max-pooled ternary masks per layer and sensor, same cell layout as the energyscapes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WireMasks {
    pub ca: Vec<Vec<i8>>,
    pub oa: Vec<Vec<i8>>,
    pub rcf: Vec<Vec<i8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigMessage {
    pub scenario: String,
    pub dt: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub robot_radius: f64,
    pub segments: Vec<Segment>,
    pub circles: Vec<Circle>,
    pub waypoints: Vec<Vec2>,
    pub sensors: Vec<WireSensor>,
    pub masks: WireMasks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckMessage {
    pub action: ControlAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub message: String,
}

fn pool_factor(n: usize, max: usize) -> usize {
    n.div_ceil(max).max(1)
}

/// Max-pools `e` to at most [`MAX_RANGE_CELLS`] x [`MAX_ANGLE_CELLS`] and
/// rounds to four decimals to keep messages small.
pub fn downsample(e: &Energyscape) -> WireEnergyscape {
    let g = e.grid;
    let fr = pool_factor(g.n_range, MAX_RANGE_CELLS);
    let fa = pool_factor(g.n_angle, MAX_ANGLE_CELLS);
    let nr = g.n_range.div_ceil(fr);
    let na = g.n_angle.div_ceil(fa);
    let mut data = vec![0.0f32; nr * na];
    for i in 0..g.n_range {
        for j in 0..g.n_angle {
            let cell = &mut data[(i / fr) * na + j / fa];
            *cell = cell.max(e.get(i, j));
        }
    }
    for v in &mut data {
        *v = (*v * 1e4).round() / 1e4;
    }
    WireEnergyscape {
        sensor: e.sensor_index,
        n_range: nr,
        n_angle: na,
        r_max: g.r_max(),
        angle_min_deg: g.angle_deg(0),
        angle_max_deg: g.angle_deg(g.n_angle - 1),
        data,
    }
}

/// Same cell layout as [`downsample`]; a cell takes the sign of any member voxel,
/// left winning over right.
pub fn downsample_mask(m: &TernaryMask) -> Vec<i8> {
    let g = m.grid;
    let fr = pool_factor(g.n_range, MAX_RANGE_CELLS);
    let fa = pool_factor(g.n_angle, MAX_ANGLE_CELLS);
    let na = g.n_angle.div_ceil(fa);
    let mut out = vec![0i8; g.n_range.div_ceil(fr) * na];
    for i in 0..g.n_range {
        for j in 0..g.n_angle {
            let v = m.get(i, j);
            let cell = &mut out[(i / fr) * na + j / fa];
            if v == 1 || (v == -1 && *cell == 0) {
                *cell = v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use echoflow_core::sonar::PolarGrid;

    #[test]
    fn messages_round_trip() {
        let msgs = [
            r#"{"type":"command","v":0.2,"omega":-0.5}"#,
            r#"{"type":"control","action":"pause"}"#,
            r#"{"type":"control","action":"select_scenario","scenario":"empty_room"}"#,
            r#"{"type":"ack","action":"reset"}"#,
            r#"{"type":"error","message":"bad"}"#,
        ];
        for m in msgs {
            let parsed = WireMessage::parse(m).unwrap();
            assert_eq!(WireMessage::parse(&parsed.to_line()).unwrap(), parsed);
            assert!(!parsed.to_line().contains('\n'));
        }
    }

    #[test]
    fn malformed_messages_are_rejected() {
        for m in [
            "",
            "{",
            r#"{"type":"warp"}"#,
            r#"{"type":"command","v":"fast"}"#,
            r#"{"type":"control","action":"explode"}"#,
        ] {
            assert!(WireMessage::parse(m).is_err(), "{m}");
        }
    }

    #[test]
    fn downsample_keeps_the_peak() {
        let grid = PolarGrid::default();
        let mut e = Energyscape::zeros(grid, 2, 0.0);
        e.set(437, 100, 0.75);
        let w = downsample(&e);
        assert!(w.n_range <= MAX_RANGE_CELLS && w.n_angle <= MAX_ANGLE_CELLS);
        assert_eq!((w.n_range, w.n_angle), (100, 61));
        assert_eq!(w.data.len(), w.n_range * w.n_angle);
        assert_eq!(w.data[(437 / 5) * w.n_angle + 100 / 3], 0.75);
        assert_eq!(w.data.iter().filter(|&&v| v > 0.0).count(), 1);
        assert_eq!(w.sensor, 2);
    }

    #[test]
    fn downsampled_mask_matches_energyscape_layout() {
        let grid = PolarGrid::default();
        let mut m = TernaryMask::zeros(grid);
        let idx = grid.index(10, 10);
        m.values[idx] = -1;
        let idx = grid.index(10, 11);
        m.values[idx] = 1;
        let idx = grid.index(0, 0);
        m.values[idx] = -1;
        let d = downsample_mask(&m);
        assert_eq!(d.len(), 100 * 61);
        assert_eq!(d[2 * 61 + 3], 1);
        assert_eq!(d[0], -1);
    }
}
