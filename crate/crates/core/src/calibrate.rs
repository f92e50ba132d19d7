//! Threshold calibration against the full signal chain.
//!
//! Two fixtures, both with a single centered forward sensor:
//!
//! * a unit plane 1 m ahead; `T_OA` is a tenth of its strongest voxel;
//! * a wall parallel to the heading, 1 m to the left; the alignment
//!   thresholds are 0.3 of the highest point of its alignment profile.

use serde::{Deserialize, Serialize};

use crate::controller::{aff_alignment, default_d_grid, ControllerConfig};
use crate::error::Result;
use crate::flow::SensorPose;
use crate::geometry::{Pose2, Segment, Vec2};
use crate::masks::{LayerRegions, MaskSet};
use crate::sonar::{SonarConfig, SonarSimulator};
use crate::world::EnvironmentModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Peak energy of the plane fixture.
    pub oa_peak: f64,
    /// Maximum of the alignment profile for the side-wall fixture.
    pub a_peak: f64,
    pub t_ca: f64,
    pub t_oa: f64,
    pub t_rcf: f64,
    pub t_af_single: f64,
    pub t_aff_corr: f64,
}

impl Calibration {
    /// `base` with the calibrated thresholds substituted.
    pub fn apply(&self, base: &ControllerConfig) -> ControllerConfig {
        ControllerConfig {
            t_ca: self.t_ca,
            t_oa: self.t_oa,
            t_rcf: self.t_rcf,
            t_af_single: self.t_af_single,
            t_aff_corr: self.t_aff_corr,
            ..base.clone()
        }
    }
}

fn world(segment: Segment) -> EnvironmentModel {
    EnvironmentModel::new(vec![segment], vec![], vec![]).expect("fixture world is valid")
}

/// Runs both fixtures through `sonar` (normally the full-mode default).
pub fn calibrate_thresholds(sonar: &SonarConfig) -> Result<Calibration> {
    let sensors = vec![SensorPose::centered()];
    let sim = SonarSimulator::new(sonar.clone(), sensors.clone(), &[])?;
    let masks = MaskSet::build(&LayerRegions::default(), &sensors, &sonar.grid, &default_d_grid())?;
    let origin = Pose2::default();

    let plane = sim.render(&world(Segment::new(Vec2::new(1.0, -50.0), Vec2::new(1.0, 50.0))), &origin, 0);
    // The plane sits on the far edge of the OA region, where bin centers
    // straddle the boundary; the unmasked peak is the stable reference.
    let oa_peak = plane[0].max() as f64;

    let side = sim.render(&world(Segment::new(Vec2::new(-50.0, 1.0), Vec2::new(50.0, 1.0))), &origin, 0);
    let a_peak = aff_alignment(&side, &masks.aff).a.into_iter().fold(0.0, f64::max);

    let t_oa = 0.1 * oa_peak;
    let t_af = 0.3 * a_peak;
    Ok(Calibration {
        oa_peak,
        a_peak,
        t_ca: t_oa,
        t_oa,
        t_rcf: 0.5 * t_oa,
        t_af_single: t_af,
        t_aff_corr: t_af,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{DEFAULT_T_AF, DEFAULT_T_OA};

    #[test]
    fn reproduces_frozen_defaults() {
        let c = calibrate_thresholds(&SonarConfig::default()).unwrap();
        assert!((c.t_oa - DEFAULT_T_OA).abs() / DEFAULT_T_OA < 5e-3, "t_oa {}", c.t_oa);
        assert!((c.t_af_single - DEFAULT_T_AF).abs() / DEFAULT_T_AF < 5e-3, "t_af {}", c.t_af_single);
        let d = ControllerConfig::default();
        assert_eq!(c.t_ca, c.t_oa);
        assert_eq!(c.t_rcf, 0.5 * c.t_oa);
        assert!((d.t_rcf - 0.5 * DEFAULT_T_OA).abs() < 1e-15);
    }
}
