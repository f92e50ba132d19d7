//! Emitted chirp, microphone array layout, echo synthesis and pulse compression.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ReflectionEvent, SPEED_OF_SOUND};

/// Hann-windowed linear FM sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chirp {
    pub f_start: f64,
    pub f_end: f64,
    pub duration: f64,
    pub sample_rate: f64,
}

impl Default for Chirp {
    /// 80 kHz to 20 kHz down-sweep, 2.5 ms, sampled at 450 kHz.
    fn default() -> Self {
        Self {
            f_start: 80e3,
            f_end: 20e3,
            duration: 2.5e-3,
            sample_rate: 450e3,
        }
    }
}

impl Chirp {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate / 2.0;
        let ok = self.f_start > 0.0
            && self.f_end > 0.0
            && self.f_start < nyquist
            && self.f_end < nyquist
            && self.duration > 0.0
            && self.sample_rate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid chirp {self:?}")))
        }
    }

    /// Template length in samples; sample `k` is taken at `t = k / fs`.
    pub fn n_samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize + 1
    }

    /// Continuous-time waveform.
    ///
    /// Non-zero on `[-0.5, T * fs + 0.5)` samples so that a delayed copy
    /// starts at the sample nearest to its delay.
    pub fn value_at(&self, t: f64) -> f64 {
        let ts = 1.0 / self.sample_rate;
        if t < -0.5 * ts || t >= self.duration + 0.5 * ts {
            return 0.0;
        }
        let span = self.duration + 2.0 * ts;
        let window = 0.5 * (1.0 - (2.0 * PI * (t + ts) / span).cos());
        let sweep = (self.f_end - self.f_start) / (2.0 * self.duration);
        window * (2.0 * PI * (self.f_start * t + sweep * t * t)).cos()
    }

    pub fn template(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|k| self.value_at(k as f64 / self.sample_rate))
            .collect()
    }

    /// Sum of squared template samples: the matched-filter peak of a unit echo.
    pub fn energy(&self) -> f64 {
        self.template().iter().map(|v| v * v).sum()
    }
}

/// Face of the sensor in its own frame: `x` is the boresight, the face spans `y` and `z`.
pub const ARRAY_FACE_WIDTH: f64 = 0.116;
pub const ARRAY_FACE_HEIGHT: f64 = 0.05;
pub const N_MICROPHONES: usize = 32;
const MIN_MIC_SPACING: f64 = 0.004;

/// Microphone and emitter positions in the sensor frame, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mic_positions: Vec<[f64; 3]>,
    pub emitter_position: [f64; 3],
    pub seed: u64,
}

impl ArrayGeometry {
    /// Seeded irregular layout of 32 microphones on the sensor face with the
    /// emitter at the origin.
    pub fn irregular(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mics: Vec<[f64; 3]> = Vec::with_capacity(N_MICROPHONES);
        while mics.len() < N_MICROPHONES {
            let y = rng.random_range(-ARRAY_FACE_WIDTH / 2.0..=ARRAY_FACE_WIDTH / 2.0);
            let z = rng.random_range(-ARRAY_FACE_HEIGHT / 2.0..=ARRAY_FACE_HEIGHT / 2.0);
            let far_enough = mics
                .iter()
                .all(|m| (m[1] - y).hypot(m[2] - z) >= MIN_MIC_SPACING);
            if far_enough {
                mics.push([0.0, y, z]);
            }
        }
        Self {
            mic_positions: mics,
            emitter_position: [0.0; 3],
            seed,
        }
    }

    /// Every microphone collapsed onto the emitter; useful for delay checks.
    pub fn collapsed(n: usize) -> Self {
        Self {
            mic_positions: vec![[0.0; 3]; n],
            emitter_position: [0.0; 3],
            seed: 0,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.mic_positions.len()
    }
}

/// Equal-length sampled channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannel {
    pub sample_rate: f64,
    pub channels: Vec<Vec<f64>>,
}

impl MultiChannel {
    pub fn zeros(n_channels: usize, n_samples: usize, sample_rate: f64) -> Self {
        Self {
            sample_rate,
            channels: vec![vec![0.0; n_samples]; n_channels],
        }
    }

    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

/// Recording length that holds echoes out to `r_max`.
pub fn recording_length(chirp: &Chirp, r_max: f64) -> usize {
    ((2.0 * r_max / SPEED_OF_SOUND + chirp.duration) * chirp.sample_rate).ceil() as usize + 2
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Raw microphone recordings for a set of echoes.
///
/// Each echo adds a copy of the chirp to every channel, delayed by the
/// emitter-reflector-microphone path and scaled by its amplitude over the
/// squared range. Echoes beyond `r_max` are skipped.
pub fn synthesize_echo_signals(
    events: &[ReflectionEvent],
    chirp: &Chirp,
    array: &ArrayGeometry,
    r_max: f64,
) -> MultiChannel {
    let fs = chirp.sample_rate;
    let n = recording_length(chirp, r_max);
    let mut out = MultiChannel::zeros(array.n_channels(), n, fs);
    for ev in events.iter().filter(|e| e.range > 0.0 && e.range <= r_max) {
        let theta = ev.bearing.to_radians();
        let p = [ev.range * theta.cos(), -ev.range * theta.sin(), 0.0];
        let outbound = distance(p, array.emitter_position);
        let gain = ev.amplitude / (ev.range * ev.range);
        for (ch, mic) in out.channels.iter_mut().zip(&array.mic_positions) {
            let delay = (outbound + distance(p, *mic)) / SPEED_OF_SOUND;
            let first = ((delay * fs) - 0.5).ceil().max(0.0) as usize;
            let last = (((delay + chirp.duration) * fs + 0.5).ceil() as usize).min(n);
            for (k, sample) in ch.iter_mut().enumerate().take(last).skip(first) {
                *sample += gain * chirp.value_at(k as f64 / fs - delay);
            }
        }
    }
    out
}

/// Adds zero-mean Gaussian noise of standard deviation `std` to every sample.
pub fn add_white_noise(signals: &mut MultiChannel, std: f64, seed: u64) {
    if std <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("positive std");
    for ch in &mut signals.channels {
        for s in ch.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }
}

/// Cross-correlates every channel with the emitted chirp.
///
/// Output sample `n` is `sum_k x[n + k] c[k] / sum_k c[k]^2`, so an isolated
/// unit echo delayed by `n` samples peaks at index `n` with value 1.
pub fn matched_filter(signals: &MultiChannel, chirp: &Chirp) -> MultiChannel {
    let n = signals.n_samples();
    let template = chirp.template();
    let nfft = (n + template.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(nfft);
    let inverse = planner.plan_fft_inverse(nfft);

    let mut reference: Vec<Complex<f64>> = template.iter().map(|&v| Complex::new(v, 0.0)).collect();
    reference.resize(nfft, Complex::default());
    forward.process(&mut reference);
    let scale = 1.0 / (nfft as f64 * chirp.energy());

    let channels = signals
        .channels
        .iter()
        .map(|ch| {
            let mut buf: Vec<Complex<f64>> = ch.iter().map(|&v| Complex::new(v, 0.0)).collect();
            buf.resize(nfft, Complex::default());
            forward.process(&mut buf);
            for (b, r) in buf.iter_mut().zip(&reference) {
                *b *= r.conj();
            }
            inverse.process(&mut buf);
            buf[..n].iter().map(|c| c.re * scale).collect()
        })
        .collect();
    MultiChannel {
        sample_rate: signals.sample_rate,
        channels,
    }
}
