//! Control regions around the platform and their per-sensor masks.
//!
//! A region is a shape in the platform frame. Seen through one sensor it
//! becomes a ternary mask over the energyscape grid: 0 outside the region,
//! +1 inside on the left (`y >= 0`), -1 inside on the right. Voxels are
//! classified by their centers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::controller::Layer;
use crate::error::{Error, FieldIssue, Result, ValidationError};
use crate::flow::SensorPose;
use crate::geometry::Vec2;
use crate::sonar::PolarGrid;

/// A platform-frame zone. Angles are radians, lengths meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ControlRegion {
    /// Disc of `radius` restricted to `x >= 0`.
    HalfCircle { radius: f64 },
    Circle { radius: f64 },
    Rectangle { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    /// The band `|y| <= half_width` between `x_min` and `x_max`.
    Corridor {
        half_width: f64,
        #[serde(default = "neg_inf", skip_serializing_if = "is_neg_inf")]
        x_min: f64,
        #[serde(default = "pos_inf", skip_serializing_if = "is_pos_inf")]
        x_max: f64,
    },
    /// Simple quadrilateral, vertices in order.
    Trapezoid { vertices: [Vec2; 4] },
    /// Points within `radius` whose direction lies in `[angle_min, angle_max]`,
    /// angles counter-clockwise from the platform x-axis.
    Sector { angle_min: f64, angle_max: f64, radius: f64 },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}
fn pos_inf() -> f64 {
    f64::INFINITY
}
fn is_neg_inf(v: &f64) -> bool {
    *v == f64::NEG_INFINITY
}
fn is_pos_inf(v: &f64) -> bool {
    *v == f64::INFINITY
}

fn polygon_area(v: &[Vec2; 4]) -> f64 {
    (0..4).map(|i| v[i].cross(v[(i + 1) % 4])).sum::<f64>() / 2.0
}

impl ControlRegion {
    pub fn validate(&self, field: &str, issues: &mut ValidationError) {
        let mut bad = |msg: String| {
            issues.issues.push(FieldIssue {
                field: field.to_string(),
                message: msg,
            })
        };
        match *self {
            ControlRegion::HalfCircle { radius } | ControlRegion::Circle { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    bad(format!("radius must be positive and finite, got {radius}"));
                }
            }
            ControlRegion::Rectangle { x_min, x_max, y_min, y_max } => {
                if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
                    bad("rectangle bounds must be finite".into());
                } else if !(x_max > x_min && y_max > y_min) {
                    bad(format!("empty rectangle x {x_min}..{x_max}, y {y_min}..{y_max}"));
                }
            }
            ControlRegion::Corridor { half_width, x_min, x_max } => {
                if !(half_width > 0.0 && half_width.is_finite()) {
                    bad(format!("half_width must be positive and finite, got {half_width}"));
                }
                if x_min.is_nan() || x_max.is_nan() || !(x_max > x_min) {
                    bad(format!("empty corridor extent {x_min}..{x_max}"));
                }
            }
            ControlRegion::Trapezoid { vertices } => {
                if !vertices.iter().all(|v| v.is_finite()) {
                    bad("vertices must be finite".into());
                } else if polygon_area(&vertices).abs() < 1e-12 {
                    bad("quadrilateral has zero area".into());
                }
            }
            ControlRegion::Sector { angle_min, angle_max, radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    bad(format!("radius must be positive and finite, got {radius}"));
                }
                if !(angle_min.is_finite() && angle_max.is_finite() && angle_max > angle_min) {
                    bad(format!("empty angle span {angle_min}..{angle_max}"));
                }
            }
        }
    }

    pub fn checked(self) -> Result<Self> {
        let mut issues = ValidationError::default();
        self.validate("region", &mut issues);
        issues.into_result()?;
        Ok(self)
    }

    /// Whether the platform-frame point `p` lies in the region.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            ControlRegion::HalfCircle { radius } => p.x >= 0.0 && p.norm() <= radius,
            ControlRegion::Circle { radius } => p.norm() <= radius,
            ControlRegion::Rectangle { x_min, x_max, y_min, y_max } => {
                (x_min..=x_max).contains(&p.x) && (y_min..=y_max).contains(&p.y)
            }
            ControlRegion::Corridor { half_width, x_min, x_max } => {
                p.y.abs() <= half_width && p.x >= x_min && p.x <= x_max
            }
            ControlRegion::Trapezoid { vertices } => {
                // Even-odd crossing test.
                let mut inside = false;
                for i in 0..4 {
                    let a = vertices[i];
                    let b = vertices[(i + 3) % 4];
                    if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                        inside = !inside;
                    }
                }
                inside
            }
            ControlRegion::Sector { angle_min, angle_max, radius } => {
                if p.norm() > radius {
                    return false;
                }
                let a = p.y.atan2(p.x);
                // Accept the direction under any 2 pi shift that lands in the span.
                let k = ((angle_min - a) / std::f64::consts::TAU).ceil();
                a + k * std::f64::consts::TAU <= angle_max
            }
        }
    }

    /// Mirror image across the platform x-axis.
    pub fn mirrored(&self) -> Self {
        match *self {
            ControlRegion::Rectangle { x_min, x_max, y_min, y_max } => ControlRegion::Rectangle {
                x_min,
                x_max,
                y_min: -y_max,
                y_max: -y_min,
            },
            ControlRegion::Trapezoid { vertices } => ControlRegion::Trapezoid {
                vertices: vertices.map(|v| Vec2::new(v.x, -v.y)),
            },
            ControlRegion::Sector { angle_min, angle_max, radius } => ControlRegion::Sector {
                angle_min: -angle_max,
                angle_max: -angle_min,
                radius,
            },
            ref symmetric => symmetric.clone(),
        }
    }
}

/// Left/right side of a platform-frame point; `y = 0` counts as left.
pub fn side_of(p: Vec2) -> i8 {
    if p.y >= 0.0 {
        1
    } else {
        -1
    }
}

/// Per-voxel gate over one sensor's energyscape grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TernaryMask {
    pub grid: PolarGrid,
    /// Range-major, entries in {-1, 0, 1}.
    pub values: Vec<i8>,
    pub layer: Option<Layer>,
    pub sensor_index: usize,
}

impl TernaryMask {
    pub fn zeros(grid: PolarGrid) -> Self {
        Self {
            grid,
            values: vec![0; grid.len()],
            layer: None,
            sensor_index: 0,
        }
    }

    pub fn get(&self, range_bin: usize, angle_bin: usize) -> i8 {
        self.values[self.grid.index(range_bin, angle_bin)]
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_ternary(&self) -> bool {
        self.values.iter().all(|v| (-1..=1).contains(v))
    }

    pub fn with_labels(mut self, layer: Layer, sensor_index: usize) -> Self {
        self.layer = Some(layer);
        self.sensor_index = sensor_index;
        self
    }

    /// The same mask seen with the bearing axis reversed.
    pub fn flip_angles(&self) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for i in 0..g.n_range {
            for j in 0..g.n_angle {
                out.values[g.index(i, j)] = self.values[g.index(i, g.n_angle - 1 - j)];
            }
        }
        out
    }

    /// Binary PGM, one row per range bin; -1/0/+1 map to 0/128/255.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.grid.n_angle, self.grid.n_range)?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|&v| match v {
                -1 => 0,
                0 => 128,
                _ => 255,
            })
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Ternary mask of one region as seen by the sensor at `pose`.
pub fn region_to_mask(region: &ControlRegion, pose: &SensorPose, grid: &PolarGrid) -> TernaryMask {
    union_mask(std::slice::from_ref(region), pose, grid)
}

/// Ternary mask of the union of `regions`.
pub fn union_mask(regions: &[ControlRegion], pose: &SensorPose, grid: &PolarGrid) -> TernaryMask {
    let mut mask = TernaryMask::zeros(*grid);
    if regions.is_empty() {
        return mask;
    }
    for j in 0..grid.n_angle {
        let dir = Vec2::from_angle(pose.heading() - grid.angle_rad(j));
        for i in 0..grid.n_range {
            let p = pose.position() + dir * grid.range_center(i);
            if regions.iter().any(|r| r.contains(p)) {
                mask.values[grid.index(i, j)] = side_of(p);
            }
        }
    }
    mask
}

/// Left and right halves of a mask as 0/1 matrices.
pub fn split_lr(mask: &TernaryMask) -> (Vec<u8>, Vec<u8>) {
    let left = mask.values.iter().map(|&v| v.max(0) as u8).collect();
    let right = mask.values.iter().map(|&v| (-v).max(0) as u8).collect();
    (left, right)
}

/// Voxels occupied by the platform-frame line `y = d` in one sensor's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowLineMask {
    /// Signed lateral distance, positive to the left.
    pub d: f64,
    /// `(range_bin, angle_bin)`, at most one per bearing column.
    pub voxels: Vec<(usize, usize)>,
}

impl FlowLineMask {
    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }
}

/// The image of a wall parallel to the direction of travel at lateral offset `d`.
///
/// Under pure forward motion every point of such a wall stays on the line,
/// so the voxel set is a flow-line of the linear flow field.
pub fn flowline_mask(d: f64, pose: &SensorPose, grid: &PolarGrid) -> FlowLineMask {
    let origin = pose.position();
    let voxels = (0..grid.n_angle)
        .filter_map(|j| {
            let dir = Vec2::from_angle(pose.heading() - grid.angle_rad(j));
            if dir.y.abs() < 1e-12 {
                return None;
            }
            let t = (d - origin.y) / dir.y;
            if !(t > 0.0) {
                return None;
            }
            grid.range_bin_of(t).map(|i| (i, j))
        })
        .collect();
    FlowLineMask { d, voxels }
}

/// A mask flattened to its non-zero voxels, with per-voxel range weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMask {
    pub grid: PolarGrid,
    pub index: Vec<u32>,
    pub sign: Vec<f32>,
    pub inv_r2: Vec<f32>,
    pub range_bin: Vec<u32>,
}

impl PreparedMask {
    pub fn new(mask: &TernaryMask) -> Self {
        let g = mask.grid;
        let mut out = Self {
            grid: g,
            index: Vec::new(),
            sign: Vec::new(),
            inv_r2: Vec::new(),
            range_bin: Vec::new(),
        };
        for (idx, &v) in mask.values.iter().enumerate() {
            if v != 0 {
                let r = g.range_center(idx / g.n_angle);
                out.index.push(idx as u32);
                out.sign.push(v as f32);
                out.inv_r2.push((1.0 / (r * r)) as f32);
                out.range_bin.push((idx / g.n_angle) as u32);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// A flow-line mask flattened for the alignment sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedFlowLine {
    pub d: f64,
    pub index: Vec<u32>,
    pub sqrt_r: Vec<f32>,
}

impl PreparedFlowLine {
    pub fn new(mask: &FlowLineMask, grid: &PolarGrid) -> Self {
        Self {
            d: mask.d,
            index: mask.voxels.iter().map(|&(i, j)| grid.index(i, j) as u32).collect(),
            sqrt_r: mask.voxels.iter().map(|&(i, _)| grid.range_center(i).sqrt() as f32).collect(),
        }
    }
}

/// Regions for the three region-gated layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRegions {
    pub ca: Vec<ControlRegion>,
    pub oa: Vec<ControlRegion>,
    pub rcf: Vec<ControlRegion>,
}

impl Default for LayerRegions {
    fn default() -> Self {
        Self {
            ca: vec![ControlRegion::HalfCircle { radius: 0.4 }],
            oa: vec![ControlRegion::Rectangle {
                x_min: 0.0,
                x_max: 1.0,
                y_min: -0.25,
                y_max: 0.25,
            }],
            rcf: vec![
                ControlRegion::Rectangle {
                    x_min: -0.3,
                    x_max: 1.0,
                    y_min: 0.3,
                    y_max: 1.5,
                },
                ControlRegion::Rectangle {
                    x_min: -0.3,
                    x_max: 1.0,
                    y_min: -1.5,
                    y_max: -0.3,
                },
            ],
        }
    }
}

impl LayerRegions {
    pub fn validate(&self, prefix: &str, issues: &mut ValidationError) {
        for (name, list) in [("ca", &self.ca), ("oa", &self.oa), ("rcf", &self.rcf)] {
            if list.is_empty() {
                issues.push(format!("{prefix}.{name}"), "layer needs at least one region");
            }
            for (k, r) in list.iter().enumerate() {
                r.validate(&format!("{prefix}.{name}[{k}]"), issues);
            }
        }
    }
}

/// All masks for one sensor setup, built once per run and shared read-only.
#[derive(Debug, Clone)]
pub struct MaskSet {
    pub grid: PolarGrid,
    pub ca: Vec<PreparedMask>,
    pub oa: Vec<PreparedMask>,
    pub rcf: Vec<PreparedMask>,
    /// `aff[k][s]`: flow-line `k` of the lateral-distance grid for sensor `s`.
    pub aff: Vec<Vec<PreparedFlowLine>>,
    pub d_grid: Vec<f64>,
}

impl MaskSet {
    pub fn build(regions: &LayerRegions, sensors: &[SensorPose], grid: &PolarGrid, d_grid: &[f64]) -> Result<Self> {
        let mut issues = ValidationError::default();
        regions.validate("regions", &mut issues);
        issues.into_result()?;
        if sensors.is_empty() {
            return Err(Error::Config("mask set needs at least one sensor".into()));
        }
        let layer = |list: &[ControlRegion]| -> Vec<PreparedMask> {
            sensors
                .iter()
                .map(|s| PreparedMask::new(&union_mask(list, s, grid)))
                .collect()
        };
        let aff = d_grid
            .iter()
            .map(|&d| {
                sensors
                    .iter()
                    .map(|s| PreparedFlowLine::new(&flowline_mask(d, s, grid), grid))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: *grid,
            ca: layer(&regions.ca),
            oa: layer(&regions.oa),
            rcf: layer(&regions.rcf),
            aff,
            d_grid: d_grid.to_vec(),
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.ca.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn big_circle_covers_everything_with_bearing_signs() {
        let g = PolarGrid::canonical();
        let m = region_to_mask(&ControlRegion::Circle { radius: 10.0 }, &SensorPose::centered(), &g);
        assert_eq!(m.nonzero_count(), g.len());
        for i in [0, 250, 499] {
            assert_eq!(m.get(i, g.angle_bin_of(45.0).unwrap()), -1);
            assert_eq!(m.get(i, g.angle_bin_of(-45.0).unwrap()), 1);
            assert_eq!(m.get(i, g.angle_bin_of(0.0).unwrap()), 1);
        }
    }

    #[test]
    fn region_behind_is_invisible() {
        let g = PolarGrid::canonical();
        let behind = ControlRegion::Rectangle {
            x_min: -3.0,
            x_max: -0.1,
            y_min: -2.0,
            y_max: 2.0,
        };
        assert_eq!(region_to_mask(&behind, &SensorPose::centered(), &g).nonzero_count(), 0);
    }

    #[test]
    fn degenerate_regions_rejected() {
        assert!(ControlRegion::Circle { radius: 0.0 }.checked().is_err());
        assert!(ControlRegion::Rectangle {
            x_min: 1.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0
        }
        .checked()
        .is_err());
        let flat = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(3.0, 0.0)];
        assert!(ControlRegion::Trapezoid { vertices: flat }.checked().is_err());
        assert!(ControlRegion::Sector {
            angle_min: 0.5,
            angle_max: 0.5,
            radius: 1.0
        }
        .checked()
        .is_err());
    }

    #[test]
    fn shape_membership() {
        let half = ControlRegion::HalfCircle { radius: 1.0 };
        assert!(half.contains(Vec2::new(0.5, 0.5)));
        assert!(!half.contains(Vec2::new(-0.1, 0.0)));
        let corridor = ControlRegion::Corridor {
            half_width: 0.5,
            x_min: f64::NEG_INFINITY,
            x_max: f64::INFINITY,
        };
        assert!(corridor.contains(Vec2::new(100.0, -0.5)));
        assert!(!corridor.contains(Vec2::new(0.0, 0.51)));
        let trap = ControlRegion::Trapezoid {
            vertices: [Vec2::new(0.0, -1.0), Vec2::new(2.0, -0.5), Vec2::new(2.0, 0.5), Vec2::new(0.0, 1.0)],
        };
        assert!(trap.contains(Vec2::new(1.0, 0.7)));
        assert!(!trap.contains(Vec2::new(1.9, 0.7)));
        // Sector spanning the rear direction.
        let rear = ControlRegion::Sector {
            angle_min: 3.0,
            angle_max: 3.3,
            radius: 2.0,
        };
        assert!(rear.contains(Vec2::new(-1.0, 0.0)));
        assert!(rear.contains(Vec2::new(-1.0, -0.1)));
        assert!(!rear.contains(Vec2::new(-1.0, 0.5)));
    }

    #[test]
    fn split_partitions_magnitude() {
        let g = PolarGrid::reduced();
        let m = region_to_mask(&ControlRegion::Circle { radius: 3.0 }, &SensorPose::centered(), &g);
        let (l, r) = split_lr(&m);
        for k in 0..g.len() {
            assert_eq!(l[k] + r[k], m.values[k].unsigned_abs());
        }
        let zero = TernaryMask::zeros(g);
        let (l, r) = split_lr(&zero);
        assert!(l.iter().chain(&r).all(|&v| v == 0));
    }

    #[test]
    fn flowline_for_centered_sensor() {
        let g = PolarGrid::canonical();
        let f = flowline_mask(1.0, &SensorPose::centered(), &g);
        assert!(!f.is_empty());
        for &(i, j) in &f.voxels {
            let theta = g.angle_rad(j);
            assert!(theta < 0.0);
            assert_eq!(Some(i), g.range_bin_of(1.0 / theta.sin().abs()));
        }
        // Columns from -90 down to where 1/|sin| exceeds 5 m.
        let min_angle = (1.0f64 / 5.0).asin().to_degrees();
        let expected = (0..g.n_angle).filter(|&j| g.angle_deg(j) < -min_angle).count();
        assert_eq!(f.len(), expected);
        assert!(flowline_mask(0.0, &SensorPose::centered(), &g).is_empty());
    }

    #[test]
    fn flowline_for_side_sensor() {
        let g = PolarGrid::canonical();
        // Sensor on the left side, facing left.
        let s = SensorPose::new(0.1, -FRAC_PI_2, 0.0).unwrap();
        let f = flowline_mask(1.0, &s, &g);
        let axis = g.angle_bin_of(0.0).unwrap();
        let hit = f.voxels.iter().find(|v| v.1 == axis).unwrap();
        assert_eq!(Some(hit.0), g.range_bin_of(0.9));
        assert!(flowline_mask(-1.0, &s, &g).is_empty());
    }

    #[test]
    fn pgm_encoding() {
        let mut m = TernaryMask::zeros(PolarGrid::reduced());
        m.values[0] = -1;
        m.values[1] = 1;
        let mut out = Vec::new();
        m.write_pgm(&mut out).unwrap();
        let header = b"P5\n37 50\n255\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..header.len() + 3], &[0, 255, 128]);
        assert_eq!(out.len(), header.len() + 50 * 37);
    }

    #[test]
    fn prepared_mask_weights() {
        let g = PolarGrid::reduced();
        let m = region_to_mask(&ControlRegion::HalfCircle { radius: 0.4 }, &SensorPose::centered(), &g);
        let p = PreparedMask::new(&m);
        assert_eq!(p.len(), m.nonzero_count());
        for k in 0..p.len() {
            let r = g.range_center(p.range_bin[k] as usize);
            assert!((p.inv_r2[k] as f64 - 1.0 / (r * r)).abs() < 1e-4);
        }
    }
}
