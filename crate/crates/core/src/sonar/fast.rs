//! Point-spread surrogate for the full signal chain.

use serde::{Deserialize, Serialize};

use super::{Energyscape, PolarGrid, ReflectionEvent};

/// Separable Gaussian point-spread kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfModel {
    pub sigma_angle_deg: f64,
    pub sigma_range_bins: f64,
    /// Kernel support in standard deviations.
    pub truncate_sigmas: f64,
}

impl Default for PsfModel {
    fn default() -> Self {
        Self {
            sigma_angle_deg: 3.0,
            sigma_range_bins: 2.0,
            truncate_sigmas: 4.0,
        }
    }
}

/// Splats every echo as `amplitude / range^2` times the kernel, summing overlaps.
pub fn fast_energyscape(
    events: &[ReflectionEvent],
    psf: &PsfModel,
    grid: &PolarGrid,
    sensor_index: usize,
    timestamp: f64,
) -> Energyscape {
    let mut e = Energyscape::zeros(*grid, sensor_index, timestamp);
    let sigma_r = psf.sigma_range_bins * grid.range_bin;
    let reach_r = psf.truncate_sigmas * sigma_r;
    let reach_a = psf.truncate_sigmas * psf.sigma_angle_deg;

    for ev in events {
        if !(ev.range > 0.0) {
            continue;
        }
        let peak = ev.amplitude / (ev.range * ev.range);
        let i_lo = ((ev.range - reach_r) / grid.range_bin).floor().max(0.0) as usize;
        let i_hi = (((ev.range + reach_r) / grid.range_bin).ceil() as usize).min(grid.n_range);
        let j_lo = ((ev.bearing - reach_a - grid.angle_start_deg) / grid.angle_step_deg)
            .floor()
            .max(0.0) as usize;
        let j_hi = (((ev.bearing + reach_a - grid.angle_start_deg) / grid.angle_step_deg).ceil().max(0.0)
            as usize)
            .min(grid.n_angle);
        if j_lo >= j_hi || i_lo >= i_hi {
            continue;
        }
        let angle_weights: Vec<f64> = (j_lo..j_hi)
            .map(|j| {
                let d = (grid.angle_deg(j) - ev.bearing) / psf.sigma_angle_deg;
                (-0.5 * d * d).exp()
            })
            .collect();
        for i in i_lo..i_hi {
            let d = (grid.range_center(i) - ev.range) / sigma_r;
            let wr = peak * (-0.5 * d * d).exp();
            let row = grid.index(i, 0);
            for (j, wa) in (j_lo..j_hi).zip(&angle_weights) {
                e.energy[row + j] += (wr * wa) as f32;
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sonar::ReflectorKind;

    #[test]
    fn single_echo_peaks_at_its_cell() {
        let grid = PolarGrid::canonical();
        let ev = ReflectionEvent {
            range: 2.005,
            bearing: -30.0,
            amplitude: 0.6,
            kind: ReflectorKind::Corner,
        };
        let e = fast_energyscape(&[ev], &PsfModel::default(), &grid, 1, 0.5);
        let (i, j, v) = e.argmax();
        assert_eq!(i, 200);
        assert_eq!(grid.angle_deg(j), -30.0);
        assert!((v as f64 - 0.6 / (2.005 * 2.005)).abs() < 1e-6);
        assert_eq!(e.sensor_index, 1);
        assert!(e.is_non_negative());
    }

    #[test]
    fn edge_of_fov_is_truncated() {
        let grid = PolarGrid::canonical();
        let ev = ReflectionEvent {
            range: 1.0,
            bearing: -90.0,
            amplitude: 1.0,
            kind: ReflectorKind::Plane,
        };
        let e = fast_energyscape(&[ev], &PsfModel::default(), &grid, 0, 0.0);
        assert_eq!(grid.angle_deg(e.argmax().1), -90.0);
    }
}
