//! Field-of-view obstruction by vehicle structure and neighbouring sensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::SensorPose;
use crate::geometry::{OrientedRect, Vec2};

use super::{Energyscape, PolarGrid};

/// Housing size used for sensor-on-sensor occlusion.
pub const SENSOR_BODY_WIDTH: f64 = 0.12;
pub const SENSOR_BODY_DEPTH: f64 = 0.05;

/// A rectangular occluder in the platform frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadZone {
    pub rect: OrientedRect,
}

impl DeadZone {
    pub fn new(center: Vec2, yaw: f64, width: f64, depth: f64) -> Result<Self> {
        if !(width > 0.0 && depth > 0.0) || !center.is_finite() || !yaw.is_finite() {
            return Err(Error::Domain(format!(
                "occluder needs positive size and finite pose, got {width} x {depth}"
            )));
        }
        Ok(Self {
            rect: OrientedRect {
                center,
                yaw,
                width,
                depth,
            },
        })
    }
}

/// Housings of every sensor except `own`, as occluders for sensor `own`.
///
/// A housing sits behind its sensor face, centered half a body depth back
/// along the boresight.
pub fn sensor_body_dead_zones(poses: &[SensorPose], own: usize) -> Vec<DeadZone> {
    poses
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != own)
        .map(|(_, p)| {
            let back = Vec2::from_angle(p.heading()) * (-SENSOR_BODY_DEPTH / 2.0);
            DeadZone::new(p.position() + back, p.heading(), SENSOR_BODY_WIDTH, SENSOR_BODY_DEPTH)
                .expect("fixed positive body size")
        })
        .collect()
}

/// First shadowed range bin per bearing column, precomputed once per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadZoneMap {
    grid: PolarGrid,
    /// `grid.n_range` marks an unobstructed column.
    first_blocked: Vec<usize>,
}

impl DeadZoneMap {
    pub fn new(grid: &PolarGrid, occluders: &[DeadZone], pose: &SensorPose) -> Self {
        let origin = pose.position();
        let first_blocked = (0..grid.n_angle)
            .map(|j| {
                let dir = Vec2::from_angle(pose.heading() - grid.angle_rad(j));
                let hit = occluders
                    .iter()
                    .filter_map(|o| o.rect.ray_hit(origin, dir))
                    .min_by(f64::total_cmp);
                match hit {
                    // Bins whose center lies beyond the occluder.
                    Some(t) => (0..grid.n_range)
                        .find(|&i| grid.range_center(i) > t)
                        .unwrap_or(grid.n_range),
                    None => grid.n_range,
                }
            })
            .collect();
        Self {
            grid: *grid,
            first_blocked,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.first_blocked.iter().all(|&b| b == self.grid.n_range)
    }

    /// Whether column `j` has any shadowed bin.
    pub fn column_blocked(&self, j: usize) -> bool {
        self.first_blocked[j] < self.grid.n_range
    }

    pub fn first_blocked(&self, j: usize) -> usize {
        self.first_blocked[j]
    }

    pub fn apply(&self, e: &mut Energyscape) {
        debug_assert_eq!(e.grid, self.grid);
        for (j, &first) in self.first_blocked.iter().enumerate() {
            for i in first..self.grid.n_range {
                e.energy[self.grid.index(i, j)] = 0.0;
            }
        }
    }
}

/// Zeroes every voxel shadowed by one of `occluders` as seen from `pose`.
pub fn apply_dead_zones(e: &Energyscape, occluders: &[DeadZone], pose: &SensorPose) -> Energyscape {
    let mut out = e.clone();
    if !occluders.is_empty() {
        DeadZoneMap::new(&e.grid, occluders, pose).apply(&mut out);
    }
    out
}
