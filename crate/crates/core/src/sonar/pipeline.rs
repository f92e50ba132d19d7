//! Per-sensor rendering of a world snapshot into energyscapes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::SensorPose;
use crate::geometry::Pose2;
use crate::world::EnvironmentModel;

use super::deadzone::{sensor_body_dead_zones, DeadZone, DeadZoneMap};
use super::fast::{fast_energyscape, PsfModel};
use super::signal::{add_white_noise, matched_filter, synthesize_echo_signals, ArrayGeometry, Chirp};
use super::{beamform, envelope, trace_reflections, Energyscape, PolarGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SonarMode {
    /// Chirp synthesis, matched filter, beamforming and envelope detection.
    #[default]
    Full,
    /// Gaussian point-spread splatting of the traced echoes.
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SonarConfig {
    pub mode: SonarMode,
    pub chirp: Chirp,
    pub grid: PolarGrid,
    pub psf: PsfModel,
    pub array_seed: u64,
    /// Standard deviation of additive microphone noise; 0 disables it.
    pub noise_std: f64,
    /// Occlude each sensor's view with the housings of the other sensors.
    pub sensor_body_occlusion: bool,
}

impl Default for SonarConfig {
    fn default() -> Self {
        Self {
            mode: SonarMode::Full,
            chirp: Chirp::default(),
            grid: PolarGrid::canonical(),
            psf: PsfModel::default(),
            array_seed: 42,
            noise_std: 0.0,
            sensor_body_occlusion: true,
        }
    }
}

impl SonarConfig {
    pub fn fast() -> Self {
        Self {
            mode: SonarMode::Fast,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chirp.validate()?;
        self.grid.validate()?;
        if !(self.psf.sigma_angle_deg > 0.0 && self.psf.sigma_range_bins > 0.0 && self.psf.truncate_sigmas > 0.0) {
            return Err(crate::Error::Config(format!("invalid point-spread model {:?}", self.psf)));
        }
        if !(self.noise_std >= 0.0) {
            return Err(crate::Error::Config("noise_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Renders one energyscape per mounted sensor.
///
/// Dead-zone maps are computed once at construction from the mounting
/// geometry and any extra platform occluders.
#[derive(Debug, Clone)]
pub struct SonarSimulator {
    config: SonarConfig,
    sensors: Vec<SensorPose>,
    array: ArrayGeometry,
    dead_zones: Vec<DeadZoneMap>,
    noise_seed: u64,
}

impl SonarSimulator {
    pub fn new(config: SonarConfig, sensors: Vec<SensorPose>, extra_occluders: &[DeadZone]) -> Result<Self> {
        config.validate()?;
        let array = ArrayGeometry::irregular(config.array_seed);
        let dead_zones = (0..sensors.len())
            .map(|k| {
                let mut occluders = extra_occluders.to_vec();
                if config.sensor_body_occlusion {
                    occluders.extend(sensor_body_dead_zones(&sensors, k));
                }
                DeadZoneMap::new(&config.grid, &occluders, &sensors[k])
            })
            .collect();
        Ok(Self {
            config,
            sensors,
            array,
            dead_zones,
            noise_seed: 0,
        })
    }

    /// Seeds the optional microphone noise.
    pub fn with_noise_seed(mut self, seed: u64) -> Self {
        self.noise_seed = seed;
        self
    }

    pub fn config(&self) -> &SonarConfig {
        &self.config
    }

    pub fn sensors(&self) -> &[SensorPose] {
        &self.sensors
    }

    pub fn dead_zone(&self, sensor: usize) -> &DeadZoneMap {
        &self.dead_zones[sensor]
    }

    /// World pose of sensor `k` for a platform at `robot`; yaw is the boresight.
    pub fn sensor_world_pose(&self, robot: &Pose2, k: usize) -> Pose2 {
        let s = &self.sensors[k];
        let p = robot.transform(s.position());
        Pose2::new(p.x, p.y, robot.yaw + s.heading())
    }

    /// Renders sensor `k`. `step` only feeds the noise seed.
    pub fn render_sensor(&self, world: &EnvironmentModel, robot: &Pose2, k: usize, step: u64) -> Energyscape {
        let grid = &self.config.grid;
        let pose = self.sensor_world_pose(robot, k);
        let events = trace_reflections(world, &pose, grid.r_max());
        let t = world.time();
        let mut e = match self.config.mode {
            SonarMode::Fast => fast_energyscape(&events, &self.config.psf, grid, k, t),
            SonarMode::Full => {
                let mut raw = synthesize_echo_signals(&events, &self.config.chirp, &self.array, grid.r_max());
                if self.config.noise_std > 0.0 {
                    let seed = self
                        .noise_seed
                        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add(step.wrapping_mul(1_000_003))
                        .wrapping_add(k as u64);
                    add_white_noise(&mut raw, self.config.noise_std, seed);
                }
                let mf = matched_filter(&raw, &self.config.chirp);
                envelope(&beamform(&mf, &self.array, grid), grid, k, t)
            }
        };
        self.dead_zones[k].apply(&mut e);
        e
    }

    /// Renders every sensor; sensors fan out across the thread pool.
    pub fn render(&self, world: &EnvironmentModel, robot: &Pose2, step: u64) -> Vec<Energyscape> {
        (0..self.sensors.len())
            .into_par_iter()
            .map(|k| self.render_sensor(world, robot, k, step))
            .collect()
    }
}
