//! Multi-sonar acoustic-flow navigation workbench.
//!
//! The crate is organized along the processing chain of a sonar-equipped
//! differential-drive platform:
//!
//! * [`flow`]: how static reflectors move through a sensor's polar image
//!   under ego-motion.
//! * [`sonar`]: simulated energyscapes, either through the time-domain
//!   chirp / matched filter / beamformer / envelope chain or a fast
//!   point-spread surrogate.
//! * [`masks`]: control regions turned into ternary per-sensor masks, plus
//!   the flow-line voxel sets used for wall following.
//! * [`controller`]: the four-layer subsumption controller.
//! * [`guidance`]: waypoint follower producing the controller's input command.
//! * [`sim`]: closed-loop world, collision and stuck detection, reports.
//! * [`scenario`]: the scenario file schema and its validation.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod error;
pub mod flow;
pub mod controller;
pub mod geometry;
pub mod guidance;
pub mod masks;
pub mod scenario;
pub mod sim;
pub mod sonar;
pub mod world;

pub use error::{Error, Result, ValidationError};
pub use flow::{FlowRate, PlatformMotion, PolarPoint, SensorPose};
pub use geometry::{Pose2, Vec2};
