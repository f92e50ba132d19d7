//! Simulated in-air imaging sonar.
//!
//! Each sensor produces an [`Energyscape`]: reflection energy on a polar grid
//! covering the frontal half-plane. Two rendering paths exist: the
//! time-domain chain in [`signal`] and [`beamform`] (chirp synthesis, matched
//! filter, delay-and-sum beamforming, envelope detection) and the fast
//! point-spread surrogate in [`fast`].

pub mod beamform;
pub mod deadzone;
pub mod fast;
pub mod io;
pub mod pipeline;
pub mod signal;
pub mod trace;

use serde::{Deserialize, Serialize};

pub use beamform::{beamform, envelope, BeamformedSignals};
pub use deadzone::{apply_dead_zones, sensor_body_dead_zones, DeadZone, DeadZoneMap};
pub use fast::{fast_energyscape, PsfModel};
pub use pipeline::{SonarConfig, SonarMode, SonarSimulator};
pub use signal::{matched_filter, synthesize_echo_signals, ArrayGeometry, Chirp, MultiChannel};
pub use trace::trace_reflections;

/// Speed of sound in air, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Range x bearing grid shared by energyscapes and masks.
///
/// Range bin `i` covers `[i, i + 1) * range_bin` and is represented by its
/// center; bearing column `j` sits at `angle_start_deg + j * angle_step_deg`.
/// Storage is range-major: `index(i, j) = i * n_angle + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_range: usize,
    pub range_bin: f64,
    pub n_angle: usize,
    pub angle_start_deg: f64,
    pub angle_step_deg: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self::canonical()
    }
}

impl PolarGrid {
    /// 500 one-centimeter range bins by 181 one-degree beams.
    pub const fn canonical() -> Self {
        Self {
            n_range: 500,
            range_bin: 0.01,
            n_angle: 181,
            angle_start_deg: -90.0,
            angle_step_deg: 1.0,
        }
    }

    /// Coarse 50 x 37 grid (10 cm, 5 degrees) for exhaustive tests.
    pub const fn reduced() -> Self {
        Self {
            n_range: 50,
            range_bin: 0.1,
            n_angle: 37,
            angle_start_deg: -90.0,
            angle_step_deg: 5.0,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.n_range as f64 * self.range_bin
    }

    pub fn len(&self) -> usize {
        self.n_range * self.n_angle
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, range_bin: usize, angle_bin: usize) -> usize {
        range_bin * self.n_angle + angle_bin
    }

    pub fn range_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.range_bin
    }

    pub fn angle_deg(&self, j: usize) -> f64 {
        self.angle_start_deg + j as f64 * self.angle_step_deg
    }

    pub fn angle_rad(&self, j: usize) -> f64 {
        self.angle_deg(j).to_radians()
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        (0..self.n_angle).map(|j| self.angle_deg(j)).collect()
    }

    /// Range bin containing `r`, if inside `[0, r_max)`.
    pub fn range_bin_of(&self, r: f64) -> Option<usize> {
        if r < 0.0 || !r.is_finite() {
            return None;
        }
        let i = (r / self.range_bin).floor() as usize;
        (i < self.n_range).then_some(i)
    }

    /// Nearest bearing column to `theta_deg`, if within half a step of the grid.
    pub fn angle_bin_of(&self, theta_deg: f64) -> Option<usize> {
        let x = ((theta_deg - self.angle_start_deg) / self.angle_step_deg).round();
        (x >= 0.0 && (x as usize) < self.n_angle).then_some(x as usize)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.n_range == 0 || self.n_angle == 0 || !(self.range_bin > 0.0) || !(self.angle_step_deg > 0.0)
        {
            return Err(crate::Error::Config(format!("degenerate polar grid {self:?}")));
        }
        Ok(())
    }
}

/// Per-sensor polar image of reflection energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Energyscape {
    pub grid: PolarGrid,
    /// Range-major, `grid.len()` non-negative entries.
    pub energy: Vec<f32>,
    pub sensor_index: usize,
    pub timestamp: f64,
}

impl Energyscape {
    pub fn zeros(grid: PolarGrid, sensor_index: usize, timestamp: f64) -> Self {
        Self {
            grid,
            energy: vec![0.0; grid.len()],
            sensor_index,
            timestamp,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.grid.r_max()
    }

    pub fn get(&self, range_bin: usize, angle_bin: usize) -> f32 {
        self.energy[self.grid.index(range_bin, angle_bin)]
    }

    pub fn set(&mut self, range_bin: usize, angle_bin: usize, value: f32) {
        let idx = self.grid.index(range_bin, angle_bin);
        self.energy[idx] = value;
    }

    /// `(range_bin, angle_bin, energy)` of the global maximum; first wins on ties.
    pub fn argmax(&self) -> (usize, usize, f32) {
        let (idx, v) = self
            .energy
            .iter()
            .enumerate()
            .fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (idx / self.grid.n_angle, idx % self.grid.n_angle, v)
    }

    pub fn max(&self) -> f32 {
        self.energy.iter().copied().fold(0.0, f32::max)
    }

    pub fn is_non_negative(&self) -> bool {
        self.energy.iter().all(|&e| e >= 0.0)
    }
}

/// What kind of geometric feature produced an echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectorKind {
    Plane,
    Corner,
    Edge,
}

impl ReflectorKind {
    /// Relative echo strength before spherical spreading.
    pub fn amplitude_factor(self) -> f64 {
        match self {
            ReflectorKind::Plane => 1.0,
            ReflectorKind::Corner => 0.6,
            ReflectorKind::Edge => 0.3,
        }
    }
}

/// A single echo as seen from one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionEvent {
    /// Meters from the sensor origin.
    pub range: f64,
    /// Degrees, positive to the sensor's right.
    pub bearing: f64,
    pub amplitude: f64,
    pub kind: ReflectorKind,
}
