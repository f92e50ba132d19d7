//! Scenario files.
//!
//! On disk a scenario is JSON (comments allowed). Sensor mounts use degrees
//! and centimeters, sector regions and start yaw use degrees; everything else
//! is in meters and seconds. [`ScenarioFile`] is the on-disk form and
//! round-trips through serde unchanged; [`Scenario`] is the validated,
//! SI-unit form the simulator runs.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::error::{Error, Result, ValidationError};
use crate::flow::SensorPose;
use crate::geometry::{Circle, Pose2, Segment, Vec2};
use crate::guidance::WaypointPlan;
use crate::masks::{ControlRegion, LayerRegions};
use crate::sim::SimConfig;
use crate::sonar::{DeadZone, SonarConfig};
use crate::world::{DynamicObstacle, EnvironmentModel};

/// One sonar mount in table units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub l_cm: f64,
}

impl SensorSpec {
    pub const fn new(alpha_deg: f64, beta_deg: f64, l_cm: f64) -> Self {
        Self {
            alpha_deg,
            beta_deg,
            l_cm,
        }
    }

    pub fn to_pose(&self) -> Result<SensorPose> {
        SensorPose::from_table(self.alpha_deg, self.beta_deg, self.l_cm)
    }
}

/// The ten simulated multi-sonar setups, `(alpha deg, beta deg, l cm)` per sensor.
pub const TABLE1_SETUPS: [&[SensorSpec]; 10] = [
    &[SensorSpec::new(0.0, 0.0, 18.0)],
    &[
        SensorSpec::new(0.0, -20.0, 14.0),
        SensorSpec::new(90.0, -10.0, 10.0),
        SensorSpec::new(-90.0, -5.0, 8.0),
    ],
    &[SensorSpec::new(90.0, -20.0, 10.0), SensorSpec::new(-90.0, 20.0, 10.0)],
    &[
        SensorSpec::new(0.0, 0.0, 12.0),
        SensorSpec::new(90.0, 0.0, 12.0),
        SensorSpec::new(-90.0, 0.0, 12.0),
    ],
    &[SensorSpec::new(45.0, 0.0, 4.0), SensorSpec::new(-135.0, 0.0, 4.0)],
    &[SensorSpec::new(0.0, 0.0, 10.0), SensorSpec::new(-180.0, 0.0, 0.0)],
    &[
        SensorSpec::new(0.0, 20.0, 6.0),
        SensorSpec::new(90.0, 10.0, 0.0),
        SensorSpec::new(-90.0, 20.0, 14.0),
    ],
    &[
        SensorSpec::new(0.0, 0.0, 0.0),
        SensorSpec::new(120.0, -120.0, 14.0),
        SensorSpec::new(-120.0, 120.0, 14.0),
    ],
    &[SensorSpec::new(180.0, -180.0, 6.0)],
    &[
        SensorSpec::new(45.0, -10.0, 6.0),
        SensorSpec::new(-45.0, 10.0, 6.0),
        SensorSpec::new(-180.0, 0.0, 0.0),
    ],
];

/// Sensors of setup `n` (1-based).
pub fn table1_setup(n: usize) -> Option<Vec<SensorSpec>> {
    n.checked_sub(1).and_then(|i| TABLE1_SETUPS.get(i)).map(|s| s.to_vec())
}

/// A control region in file units: like [`ControlRegion`] but sector angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    HalfCircle {
        radius: f64,
    },
    Circle {
        radius: f64,
    },
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    Corridor {
        half_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_max: Option<f64>,
    },
    Trapezoid {
        vertices: [Vec2; 4],
    },
    Sector {
        angle_min_deg: f64,
        angle_max_deg: f64,
        radius: f64,
    },
}

impl RegionSpec {
    pub fn to_region(&self) -> ControlRegion {
        match *self {
            RegionSpec::HalfCircle { radius } => ControlRegion::HalfCircle { radius },
            RegionSpec::Circle { radius } => ControlRegion::Circle { radius },
            RegionSpec::Rectangle { x_min, x_max, y_min, y_max } => ControlRegion::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            },
            RegionSpec::Corridor { half_width, x_min, x_max } => ControlRegion::Corridor {
                half_width,
                x_min: x_min.unwrap_or(f64::NEG_INFINITY),
                x_max: x_max.unwrap_or(f64::INFINITY),
            },
            RegionSpec::Trapezoid { vertices } => ControlRegion::Trapezoid { vertices },
            RegionSpec::Sector {
                angle_min_deg,
                angle_max_deg,
                radius,
            } => ControlRegion::Sector {
                angle_min: angle_min_deg.to_radians(),
                angle_max: angle_max_deg.to_radians(),
                radius,
            },
        }
    }

    pub fn from_region(r: &ControlRegion) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        match *r {
            ControlRegion::HalfCircle { radius } => RegionSpec::HalfCircle { radius },
            ControlRegion::Circle { radius } => RegionSpec::Circle { radius },
            ControlRegion::Rectangle { x_min, x_max, y_min, y_max } => RegionSpec::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            },
            ControlRegion::Corridor { half_width, x_min, x_max } => RegionSpec::Corridor {
                half_width,
                x_min: finite(x_min),
                x_max: finite(x_max),
            },
            ControlRegion::Trapezoid { vertices } => RegionSpec::Trapezoid { vertices },
            ControlRegion::Sector {
                angle_min,
                angle_max,
                radius,
            } => RegionSpec::Sector {
                angle_min_deg: angle_min.to_degrees(),
                angle_max_deg: angle_max.to_degrees(),
                radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSpec {
    pub ca: Vec<RegionSpec>,
    pub oa: Vec<RegionSpec>,
    pub rcf: Vec<RegionSpec>,
}

impl Default for RegionsSpec {
    fn default() -> Self {
        let d = LayerRegions::default();
        let conv = |l: &[ControlRegion]| l.iter().map(RegionSpec::from_region).collect();
        Self {
            ca: conv(&d.ca),
            oa: conv(&d.oa),
            rcf: conv(&d.rcf),
        }
    }
}

impl RegionsSpec {
    pub fn to_regions(&self) -> LayerRegions {
        let conv = |l: &[RegionSpec]| l.iter().map(RegionSpec::to_region).collect();
        LayerRegions {
            ca: conv(&self.ca),
            oa: conv(&self.oa),
            rcf: conv(&self.rcf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub segments: Vec<Segment>,
    pub circles: Vec<Circle>,
    pub dynamic: Vec<DynamicObstacle>,
}

/// Axis-aligned box where runs start, with a nominal heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartZone {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    /// Uniform heading spread either side of `yaw_deg`.
    #[serde(default)]
    pub yaw_jitter_deg: f64,
}

impl StartZone {
    pub fn validate(&self, issues: &mut ValidationError) {
        let all = [self.x_min, self.x_max, self.y_min, self.y_max, self.yaw_deg, self.yaw_jitter_deg];
        if all.iter().any(|v| !v.is_finite()) {
            issues.push("start_zone", "all fields must be finite");
        } else {
            if self.x_max < self.x_min || self.y_max < self.y_min {
                issues.push("start_zone", "max bounds must not be below min bounds");
            }
            if self.yaw_jitter_deg < 0.0 {
                issues.push("start_zone.yaw_jitter_deg", "must be >= 0");
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Pose2 {
        let pick = |rng: &mut R, lo: f64, hi: f64| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let x = pick(rng, self.x_min, self.x_max);
        let y = pick(rng, self.y_min, self.y_max);
        let jitter = pick(rng, -self.yaw_jitter_deg, self.yaw_jitter_deg);
        Pose2::new(x, y, crate::geometry::wrap_angle((self.yaw_deg + jitter).to_radians()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceSpec {
    pub capture_radius: f64,
    pub cruise_v: f64,
    pub heading_gain: f64,
    pub omega_max: f64,
}

impl Default for GuidanceSpec {
    fn default() -> Self {
        let p = WaypointPlan::new(Vec::new());
        Self {
            capture_radius: p.capture_radius,
            cruise_v: p.cruise_v,
            heading_gain: p.heading_gain,
            omega_max: p.omega_max,
        }
    }
}

/// An extra rectangular occluder fixed to the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    pub width: f64,
    pub depth: f64,
}

/// The on-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub world: WorldSpec,
    pub start_zone: StartZone,
    pub waypoints: Vec<Vec2>,
    #[serde(default)]
    pub guidance: GuidanceSpec,
    /// Explicit mounts; ignored when `setup` is given.
    #[serde(default)]
    pub sensors: Vec<SensorSpec>,
    /// Row of the built-in setup table (1-10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<usize>,
    #[serde(default)]
    pub regions: RegionsSpec,
    #[serde(default)]
    pub occluders: Vec<OccluderSpec>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub sonar: SonarConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

impl std::str::FromStr for ScenarioFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }
}

impl ScenarioFile {
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let stripped = json_comments::StripComments::new(r);
        Ok(serde_json::from_reader(stripped)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Mounts in effect: the table row when `setup` is set, else `sensors`.
    pub fn sensor_specs(&self) -> Option<Vec<SensorSpec>> {
        match self.setup {
            Some(n) => table1_setup(n),
            None => Some(self.sensors.clone()),
        }
    }

    /// Validates every field and converts to SI units.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let mut issues = ValidationError::default();

        if self.name.trim().is_empty() {
            issues.push("name", "must not be empty");
        }
        let world = match EnvironmentModel::new(
            self.world.segments.clone(),
            self.world.circles.clone(),
            self.world.dynamic.clone(),
        ) {
            Ok(w) => Some(w),
            Err(e) => {
                issues.issues.extend(e.issues);
                None
            }
        };
        self.start_zone.validate(&mut issues);

        let mut plan = WaypointPlan::new(self.waypoints.clone());
        plan.capture_radius = self.guidance.capture_radius;
        plan.cruise_v = self.guidance.cruise_v;
        plan.heading_gain = self.guidance.heading_gain;
        plan.omega_max = self.guidance.omega_max;
        plan.validate("guidance", &mut issues);

        let mut sensors = Vec::new();
        match self.sensor_specs() {
            None => issues.push("setup", format!("unknown setup {:?}, expected 1-10", self.setup)),
            Some(specs) if specs.is_empty() => issues.push("sensors", "at least one sensor is required"),
            Some(specs) => {
                for (i, s) in specs.iter().enumerate() {
                    match s.to_pose() {
                        Ok(p) => sensors.push(p),
                        Err(e) => issues.push(format!("sensors[{i}]"), e.to_string()),
                    }
                }
            }
        }

        let regions = self.regions.to_regions();
        regions.validate("regions", &mut issues);

        let mut occluders = Vec::new();
        for (i, o) in self.occluders.iter().enumerate() {
            match DeadZone::new(Vec2::new(o.x, o.y), o.yaw_deg.to_radians(), o.width, o.depth) {
                Ok(d) => occluders.push(d),
                Err(e) => issues.push(format!("occluders[{i}]"), e.to_string()),
            }
        }

        self.controller.validate("controller", &mut issues);
        if let Err(e) = self.sonar.validate() {
            issues.push("sonar", e.to_string());
        }
        self.sim.validate("sim", &mut issues);

        issues.into_result()?;
        Ok(Scenario {
            name: self.name.clone(),
            seed: self.seed,
            world: world.expect("validated"),
            start_zone: self.start_zone,
            plan,
            sensors,
            regions,
            occluders,
            controller: self.controller.clone(),
            sonar: self.sonar.clone(),
            sim: self.sim.clone(),
        })
    }
}

/// A validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub world: EnvironmentModel,
    pub start_zone: StartZone,
    pub plan: WaypointPlan,
    pub sensors: Vec<SensorPose>,
    pub regions: LayerRegions,
    pub occluders: Vec<DeadZone>,
    pub controller: ControllerConfig,
    pub sonar: SonarConfig,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScenarioFile::load(path)?.to_scenario()
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ScenarioFile>()?.to_scenario()
    }
}
