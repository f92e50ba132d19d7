//! Delay-and-sum beamforming and envelope detection.
//!
//! Steering delays are applied exactly as phase ramps in the frequency
//! domain. Only positive frequencies are kept, so every beam comes out as an
//! analytic signal whose magnitude is the envelope.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use super::signal::{ArrayGeometry, MultiChannel};
use super::{Energyscape, PolarGrid, SPEED_OF_SOUND};

/// One analytic time series per steering angle, angle-major.
#[derive(Debug, Clone)]
pub struct BeamformedSignals {
    pub sample_rate: f64,
    pub n_samples: usize,
    pub angles_deg: Vec<f64>,
    pub data: Vec<Complex<f32>>,
}

impl BeamformedSignals {
    pub fn beam(&self, angle_index: usize) -> &[Complex<f32>] {
        &self.data[angle_index * self.n_samples..(angle_index + 1) * self.n_samples]
    }
}

/// Bins carrying less than this fraction of the peak spectral power are skipped.
const BAND_FLOOR: f64 = 1e-12;

/// Steers the array at every bearing of `grid` and sums the aligned channels.
///
/// Channel `m` is delayed by the far-field plane-wave delay
/// `(u . p_m) / c` for the steering direction `u`, then the channels are
/// averaged, so a unit echo from the steered direction keeps unit amplitude.
pub fn beamform(signals: &MultiChannel, array: &ArrayGeometry, grid: &PolarGrid) -> BeamformedSignals {
    let n = signals.n_samples();
    let fs = signals.sample_rate;
    let max_offset = array
        .mic_positions
        .iter()
        .map(|m| m[0].hypot(m[1]))
        .fold(0.0, f64::max);
    let pad = (max_offset / SPEED_OF_SOUND * fs).ceil() as usize + 8;
    let nfft = (n + 2 * pad).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(nfft);
    let inverse = planner.plan_fft_inverse(nfft);

    let spectra: Vec<Vec<Complex<f64>>> = signals
        .channels
        .iter()
        .map(|ch| {
            let mut buf: Vec<Complex<f64>> = ch.iter().map(|&v| Complex::new(v, 0.0)).collect();
            buf.resize(nfft, Complex::default());
            forward.process(&mut buf);
            buf
        })
        .collect();

    // Restrict the steering sums to bins that carry signal.
    let half = nfft / 2;
    let power: Vec<f64> = (0..=half)
        .map(|k| spectra.iter().map(|s| s[k].norm_sqr()).sum())
        .collect();
    let peak = power.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = if peak > 0.0 {
        let lo = power.iter().position(|&p| p > BAND_FLOOR * peak).unwrap_or(1).max(1);
        let hi = power.iter().rposition(|&p| p > BAND_FLOOR * peak).unwrap_or(half).min(half - 1);
        (lo, hi)
    } else {
        (1, 0)
    };

    let df = fs / nfft as f64;
    let n_channels = signals.n_channels().max(1) as f64;
    let angles_deg = grid.angles_deg();
    let mut data = vec![Complex::<f32>::default(); angles_deg.len() * n];

    data.par_chunks_mut(n.max(1))
        .zip(angles_deg.par_iter())
        .for_each(|(out, &angle)| {
            if n == 0 {
                return;
            }
            let theta = angle.to_radians();
            let (st, ct) = theta.sin_cos();
            let mut spectrum = vec![Complex::<f64>::default(); nfft];
            for (spec, mic) in spectra.iter().zip(&array.mic_positions) {
                let tau = (mic[0] * ct - mic[1] * st) / SPEED_OF_SOUND;
                let step = Complex::from_polar(1.0, -2.0 * PI * df * tau);
                let mut phasor = Complex::from_polar(1.0, -2.0 * PI * df * tau * lo as f64);
                for k in lo..=hi {
                    spectrum[k] += spec[k] * phasor;
                    phasor *= step;
                }
            }
            // Analytic signal: double the positive half, drop the negative half.
            let scale = 2.0 / (nfft as f64 * n_channels);
            for s in &mut spectrum[lo..=hi] {
                *s *= scale;
            }
            inverse.process(&mut spectrum);
            for (o, s) in out.iter_mut().zip(&spectrum[..n]) {
                *o = Complex::new(s.re as f32, s.im as f32);
            }
        });

    BeamformedSignals {
        sample_rate: fs,
        n_samples: n,
        angles_deg,
        data,
    }
}

/// Envelope magnitude of each beam, max-pooled onto the range bins of `grid`.
///
/// Sample `n` maps to range `c * n / (2 fs)`.
pub fn envelope(beams: &BeamformedSignals, grid: &PolarGrid, sensor_index: usize, timestamp: f64) -> Energyscape {
    let mut e = Energyscape::zeros(*grid, sensor_index, timestamp);
    let meters_per_sample = SPEED_OF_SOUND / (2.0 * beams.sample_rate);
    let n_angle = grid.n_angle.min(beams.angles_deg.len());
    for j in 0..n_angle {
        for (n, s) in beams.beam(j).iter().enumerate() {
            let Some(i) = grid.range_bin_of(n as f64 * meters_per_sample) else {
                break;
            };
            let idx = grid.index(i, j);
            let mag = s.norm();
            if mag > e.energy[idx] {
                e.energy[idx] = mag;
            }
        }
    }
    e
}
