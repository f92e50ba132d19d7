//! Layered subsumption controller.
//!
//! Four behaviors look at masked energyscapes and may override the input
//! command. Priority, highest first: collision avoidance (CA), obstacle
//! avoidance (OA), acoustic flow following (AFF), reactive corridor
//! following (RCF). The first layer that triggers owns the output; if none
//! does, the input passes through untouched.
//!
//! Sign conventions: mask +1 is the platform's left, `omega > 0` turns left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::masks::{MaskSet, PreparedFlowLine, PreparedMask};
use crate::sonar::Energyscape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Layer {
    Ca,
    Oa,
    Aff,
    Rcf,
    Pass,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Ca => "CA",
            Layer::Oa => "OA",
            Layer::Aff => "AFF",
            Layer::Rcf => "RCF",
            Layer::Pass => "PASS",
        }
    }
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Linear speed (m/s) and yaw rate (rad/s, positive counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    /// Limits both components; non-finite values become 0.
    pub fn clamped(self, v_max: f64, omega_max: f64) -> Self {
        let fix = |x: f64, m: f64| if x.is_finite() { x.clamp(-m, m) } else { 0.0 };
        Self {
            v: fix(self.v, v_max),
            omega: fix(self.omega, omega_max),
        }
    }
}

/// Lateral distances probed by the alignment profile: 0.05 m steps out to
/// 2.5 m on each side, leaving out `|d| < 0.15` (inside the platform).
pub fn default_d_grid() -> Vec<f64> {
    (-50..=50)
        .filter(|k: &i32| k.abs() >= 3)
        .map(|k| k as f64 / 20.0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub t_ca: f64,
    pub t_oa: f64,
    pub t_rcf: f64,
    pub t_af_single: f64,
    pub t_aff_corr: f64,
    pub lambda_oa: f64,
    pub mu_oa: f64,
    pub lambda_rcf: f64,
    pub lambda_aff: f64,
    pub omega_ca: f64,
    pub v_reverse: f64,
    pub ca_consecutive: u32,
    pub d_grid: Vec<f64>,
    /// Minimum peak prominence on the alignment profile, as a fraction of its maximum.
    pub peak_prominence: f64,
}

/// Thresholds from the calibration fixture (unit plane at 1 m through the
/// full signal chain, default chirp and array). Reproduced by
/// `calibrate::calibrate_thresholds`.
pub const DEFAULT_T_OA: f64 = 0.0908;
pub const DEFAULT_T_AF: f64 = 0.0339;

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            t_ca: DEFAULT_T_OA,
            t_oa: DEFAULT_T_OA,
            t_rcf: 0.5 * DEFAULT_T_OA,
            t_af_single: DEFAULT_T_AF,
            t_aff_corr: DEFAULT_T_AF,
            lambda_oa: 0.3,
            mu_oa: 0.004,
            lambda_rcf: 0.2,
            lambda_aff: 1.0,
            omega_ca: 0.5,
            v_reverse: -0.1,
            ca_consecutive: 4,
            d_grid: default_d_grid(),
            peak_prominence: 0.1,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, prefix: &str, issues: &mut ValidationError) {
        for (name, v) in [
            ("t_ca", self.t_ca),
            ("t_oa", self.t_oa),
            ("t_rcf", self.t_rcf),
            ("t_af_single", self.t_af_single),
            ("t_aff_corr", self.t_aff_corr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                issues.push(format!("{prefix}.{name}"), format!("threshold must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("lambda_oa", self.lambda_oa),
            ("mu_oa", self.mu_oa),
            ("lambda_rcf", self.lambda_rcf),
            ("lambda_aff", self.lambda_aff),
            ("omega_ca", self.omega_ca),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                issues.push(format!("{prefix}.{name}"), format!("gain must be >= 0, got {v}"));
            }
        }
        if !self.v_reverse.is_finite() {
            issues.push(format!("{prefix}.v_reverse"), "must be finite");
        }
        if self.ca_consecutive < 1 {
            issues.push(format!("{prefix}.ca_consecutive"), "must be >= 1");
        }
        if self.d_grid.is_empty() || self.d_grid.iter().any(|d| !d.is_finite()) {
            issues.push(format!("{prefix}.d_grid"), "needs at least one finite distance");
        } else if self.d_grid.windows(2).any(|w| w[1] <= w[0]) {
            issues.push(format!("{prefix}.d_grid"), "must be strictly increasing");
        }
        if !(0.0..1.0).contains(&self.peak_prominence) {
            issues.push(format!("{prefix}.peak_prominence"), "must lie in [0, 1)");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    pub ca_streak: u32,
    /// Lateral distance of the last single-wall alignment peak.
    pub d_p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub d: f64,
    pub value: f64,
}

/// Per-step numbers behind a decision, for logs and the live view.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Masked energy `sum E |M|` per sensor, per layer.
    pub ca_sums: Vec<f64>,
    pub oa_sums: Vec<f64>,
    pub rcf_sums: Vec<f64>,
    pub rho: Option<f64>,
    pub peaks: Vec<Peak>,
    pub d_s: Option<f64>,
    pub d_l: Option<f64>,
    pub d_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDecision {
    pub layer: Layer,
    pub triggered: bool,
    pub command: VelocityCommand,
    pub diagnostics: Diagnostics,
}

impl LayerDecision {
    fn pass(layer: Layer, cmd: VelocityCommand) -> Self {
        Self {
            layer,
            triggered: false,
            command: cmd,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Masked sums over one layer's masks.
#[derive(Debug, Clone, Default)]
struct MaskedSums {
    per_sensor: Vec<f64>,
    total: f64,
    weighted_signed: f64,
    max_voxel: f64,
}

fn masked_sums(energies: &[Energyscape], masks: &[PreparedMask]) -> MaskedSums {
    let mut out = MaskedSums::default();
    for (e, m) in energies.iter().zip(masks) {
        let mut total = 0.0f64;
        let mut signed = 0.0f64;
        let mut max_voxel = 0.0f32;
        for k in 0..m.len() {
            let v = e.energy[m.index[k] as usize];
            if v > 0.0 {
                total += v as f64;
                signed += (v * m.sign[k] * m.inv_r2[k]) as f64;
                max_voxel = max_voxel.max(v);
            }
        }
        out.per_sensor.push(total);
        out.total += total;
        out.weighted_signed += signed;
        out.max_voxel = out.max_voxel.max(max_voxel as f64);
    }
    out
}

/// Collision avoidance: turn in place away from the nearest strong echo,
/// backing up once the condition has persisted.
pub fn ca_layer(
    energies: &[Energyscape],
    masks: &[PreparedMask],
    cmd_in: VelocityCommand,
    cfg: &ControllerConfig,
    state: &ControllerState,
) -> LayerDecision {
    // Nearest above-threshold voxel: smallest range bin, then largest energy.
    let mut nearest: Option<(u32, f32, f32)> = None;
    let mut sums = Vec::with_capacity(masks.len());
    for (e, m) in energies.iter().zip(masks) {
        let mut total = 0.0;
        for k in 0..m.len() {
            let v = e.energy[m.index[k] as usize];
            total += v as f64;
            if (v as f64) > cfg.t_ca {
                let cand = (m.range_bin[k], v, m.sign[k]);
                nearest = match nearest {
                    Some(best) if (best.0, -best.1) <= (cand.0, -cand.1) => Some(best),
                    _ => Some(cand),
                };
            }
        }
        sums.push(total);
    }
    let Some((_, _, side)) = nearest else {
        let mut d = LayerDecision::pass(Layer::Ca, cmd_in);
        d.diagnostics.ca_sums = sums;
        return d;
    };
    let streak = state.ca_streak + 1;
    let v = if streak >= cfg.ca_consecutive { cfg.v_reverse } else { 0.0 };
    LayerDecision {
        layer: Layer::Ca,
        triggered: true,
        command: VelocityCommand::new(v, -(side as f64) * cfg.omega_ca),
        diagnostics: Diagnostics {
            ca_sums: sums,
            ..Diagnostics::default()
        },
    }
}

fn steering_layer(
    layer: Layer,
    energies: &[Energyscape],
    masks: &[PreparedMask],
    cmd_in: VelocityCommand,
    threshold: f64,
    lambda: f64,
    mu: Option<f64>,
) -> LayerDecision {
    let s = masked_sums(energies, masks);
    let mut diagnostics = Diagnostics::default();
    match layer {
        Layer::Oa => diagnostics.oa_sums = s.per_sensor.clone(),
        _ => diagnostics.rcf_sums = s.per_sensor.clone(),
    }
    if !(s.max_voxel > threshold) {
        return LayerDecision {
            diagnostics,
            ..LayerDecision::pass(layer, cmd_in)
        };
    }
    let rho = s.weighted_signed / s.total;
    diagnostics.rho = Some(rho);
    let v = match mu {
        Some(mu) => cmd_in.v * (1.0 - mu * s.total).clamp(0.0, 1.0),
        None => cmd_in.v,
    };
    LayerDecision {
        layer,
        triggered: true,
        command: VelocityCommand::new(v, cmd_in.omega - lambda * rho),
        diagnostics,
    }
}

/// Obstacle avoidance: steer away from the side holding more near energy and slow down.
pub fn oa_layer(
    energies: &[Energyscape],
    masks: &[PreparedMask],
    cmd_in: VelocityCommand,
    cfg: &ControllerConfig,
) -> LayerDecision {
    steering_layer(Layer::Oa, energies, masks, cmd_in, cfg.t_oa, cfg.lambda_oa, Some(cfg.mu_oa))
}

/// Reactive corridor following: the same steering law on the peripheral zones, speed kept.
pub fn rcf_layer(
    energies: &[Energyscape],
    masks: &[PreparedMask],
    cmd_in: VelocityCommand,
    cfg: &ControllerConfig,
) -> LayerDecision {
    steering_layer(Layer::Rcf, energies, masks, cmd_in, cfg.t_rcf, cfg.lambda_rcf, None)
}

/// Alignment of the energyscapes with each lateral-distance flow-line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentProfile {
    pub d: Vec<f64>,
    pub a: Vec<f64>,
    /// False where no sensor sees the flow-line at all.
    pub observable: Vec<bool>,
}

/// `A(d) = sum_j sum_{F_dj} E sqrt(r) / |F_dj|`; `flowlines[k][j]` belongs to
/// distance `k` and sensor `j`.
pub fn aff_alignment(energies: &[Energyscape], flowlines: &[Vec<PreparedFlowLine>]) -> AlignmentProfile {
    let mut profile = AlignmentProfile {
        d: Vec::with_capacity(flowlines.len()),
        a: Vec::with_capacity(flowlines.len()),
        observable: Vec::with_capacity(flowlines.len()),
    };
    for per_sensor in flowlines {
        let mut a = 0.0f64;
        let mut seen = false;
        for (e, f) in energies.iter().zip(per_sensor) {
            if f.index.is_empty() {
                continue;
            }
            seen = true;
            let sum: f64 = f
                .index
                .iter()
                .zip(&f.sqrt_r)
                .map(|(&i, &w)| (e.energy[i as usize] * w) as f64)
                .sum();
            a += sum / f.index.len() as f64;
        }
        profile.d.push(per_sensor.first().map_or(f64::NAN, |f| f.d));
        profile.a.push(a);
        profile.observable.push(seen);
    }
    profile
}

/// Strict three-point local maxima with prominence at least `min_fraction`
/// of the profile maximum. End points never qualify.
pub fn find_peaks(a: &[f64], min_fraction: f64) -> Vec<usize> {
    let max = a.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let min_prominence = min_fraction * max;
    (1..a.len().saturating_sub(1))
        .filter(|&k| a[k] > a[k - 1] && a[k] > a[k + 1])
        .filter(|&k| {
            // Lowest point on each side before reaching higher ground.
            let mut left = a[k];
            for &v in a[..k].iter().rev() {
                if v > a[k] {
                    break;
                }
                left = left.min(v);
            }
            let mut right = a[k];
            for &v in &a[k + 1..] {
                if v > a[k] {
                    break;
                }
                right = right.min(v);
            }
            a[k] - left.max(right) >= min_prominence
        })
        .collect()
}

/// Acoustic flow following on the alignment profile.
///
/// Two strong peaks on opposite sides mean a corridor: steer so that the
/// left and right wall distances even out. A single strong peak means one
/// wall: steer to keep its lateral distance where it was on the previous step.
pub fn aff_layer(
    profile: &AlignmentProfile,
    cmd_in: VelocityCommand,
    cfg: &ControllerConfig,
    state: &ControllerState,
) -> LayerDecision {
    let peaks: Vec<Peak> = find_peaks(&profile.a, cfg.peak_prominence)
        .into_iter()
        .map(|k| Peak {
            d: profile.d[k],
            value: profile.a[k],
        })
        .collect();
    let strongest = |pred: &dyn Fn(&Peak) -> bool| {
        peaks
            .iter()
            .filter(|p| pred(p))
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .copied()
    };
    let mut diagnostics = Diagnostics {
        peaks: peaks.clone(),
        ..Diagnostics::default()
    };

    let left = strongest(&|p| p.d > 0.0 && p.value > cfg.t_aff_corr);
    let right = strongest(&|p| p.d < 0.0 && p.value > cfg.t_aff_corr);
    if let (Some(l), Some(r)) = (left, right) {
        diagnostics.d_l = Some(l.d);
        diagnostics.d_r = Some(r.d);
        return LayerDecision {
            layer: Layer::Aff,
            triggered: true,
            command: VelocityCommand::new(cmd_in.v, cmd_in.omega + cfg.lambda_aff * (l.d - r.d.abs())),
            diagnostics,
        };
    }

    if let Some(s) = strongest(&|p| p.value > cfg.t_af_single) {
        diagnostics.d_s = Some(s.d);
        let omega = match state.d_p {
            Some(d_p) => cmd_in.omega + cfg.lambda_aff * (s.d - d_p),
            None => cmd_in.omega,
        };
        return LayerDecision {
            layer: Layer::Aff,
            triggered: true,
            command: VelocityCommand::new(cmd_in.v, omega),
            diagnostics,
        };
    }

    LayerDecision {
        diagnostics,
        ..LayerDecision::pass(Layer::Aff, cmd_in)
    }
}

fn check_inputs(energies: &[Energyscape], masks: &MaskSet) -> Result<()> {
    if energies.len() != masks.n_sensors() {
        return Err(Error::Config(format!(
            "{} energyscapes for {} sensors",
            energies.len(),
            masks.n_sensors()
        )));
    }
    if let Some(e) = energies.iter().find(|e| e.grid != masks.grid || e.energy.len() != masks.grid.len()) {
        return Err(Error::Config(format!(
            "energyscape of sensor {} does not match the mask grid",
            e.sensor_index
        )));
    }
    Ok(())
}

/// One arbitration step.
///
/// Every layer is evaluated so the diagnostics are complete; the output is
/// the command of the highest-priority triggered layer, or `cmd_in` if none
/// triggers.
pub fn step(
    energies: &[Energyscape],
    masks: &MaskSet,
    cmd_in: VelocityCommand,
    cfg: &ControllerConfig,
    state: &ControllerState,
) -> Result<(VelocityCommand, LayerDecision, ControllerState)> {
    check_inputs(energies, masks)?;
    let ca = ca_layer(energies, &masks.ca, cmd_in, cfg, state);
    let oa = oa_layer(energies, &masks.oa, cmd_in, cfg);
    let profile = aff_alignment(energies, &masks.aff);
    let aff = aff_layer(&profile, cmd_in, cfg, state);
    let rcf = rcf_layer(energies, &masks.rcf, cmd_in, cfg);

    let diagnostics = Diagnostics {
        ca_sums: ca.diagnostics.ca_sums.clone(),
        oa_sums: oa.diagnostics.oa_sums.clone(),
        rcf_sums: rcf.diagnostics.rcf_sums.clone(),
        rho: oa.diagnostics.rho.or(rcf.diagnostics.rho),
        peaks: aff.diagnostics.peaks.clone(),
        d_s: aff.diagnostics.d_s,
        d_l: aff.diagnostics.d_l,
        d_r: aff.diagnostics.d_r,
    };

    let winner = [ca, oa, aff, rcf].into_iter().find(|d| d.triggered);
    let decision = match winner {
        Some(d) => LayerDecision { diagnostics, ..d },
        None => LayerDecision {
            layer: Layer::Pass,
            triggered: false,
            command: cmd_in,
            diagnostics,
        },
    };

    let next = ControllerState {
        ca_streak: if decision.layer == Layer::Ca { state.ca_streak + 1 } else { 0 },
        d_p: if decision.layer == Layer::Aff && decision.diagnostics.d_l.is_none() {
            decision.diagnostics.d_s
        } else {
            None
        },
    };
    Ok((decision.command, decision, next))
}

/// A controller bound to one sensor setup: configuration, cached masks and state.
#[derive(Debug, Clone)]
pub struct Controller {
    pub config: ControllerConfig,
    pub masks: MaskSet,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(config: ControllerConfig, masks: MaskSet) -> Result<Self> {
        let mut issues = ValidationError::default();
        config.validate("controller", &mut issues);
        issues.into_result()?;
        if masks.d_grid != config.d_grid {
            return Err(Error::Config("mask set was built for a different d_grid".into()));
        }
        Ok(Self {
            config,
            masks,
            state: ControllerState::default(),
        })
    }

    pub fn step(&mut self, energies: &[Energyscape], cmd_in: VelocityCommand) -> Result<(VelocityCommand, LayerDecision)> {
        let (cmd, decision, next) = step(energies, &self.masks, cmd_in, &self.config, &self.state)?;
        self.state = next;
        Ok((cmd, decision))
    }

    pub fn reset(&mut self) {
        self.state = ControllerState::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::SensorPose;
    use crate::masks::{ControlRegion, LayerRegions};
    use crate::sonar::PolarGrid;

    fn setup() -> (MaskSet, ControllerConfig) {
        let cfg = ControllerConfig::default();
        let masks = MaskSet::build(
            &LayerRegions::default(),
            &[SensorPose::centered()],
            &PolarGrid::canonical(),
            &cfg.d_grid,
        )
        .unwrap();
        (masks, cfg)
    }

    fn blank() -> Energyscape {
        Energyscape::zeros(PolarGrid::canonical(), 0, 0.0)
    }

    fn with_voxel(r: f64, bearing: f64, v: f32) -> Energyscape {
        let mut e = blank();
        let g = e.grid;
        e.set(g.range_bin_of(r).unwrap(), g.angle_bin_of(bearing).unwrap(), v);
        e
    }

    #[test]
    fn d_grid_shape() {
        let d = default_d_grid();
        assert_eq!(d.len(), 96);
        assert!((d[0] + 2.5).abs() < 1e-12 && (d[95] - 2.5).abs() < 1e-12);
        assert!(d.iter().all(|x| x.abs() >= 0.15 - 1e-12));
    }

    #[test]
    fn silence_passes_through() {
        let (masks, cfg) = setup();
        let cmd = VelocityCommand::new(0.3, 0.1);
        let (out, d, s) = step(&[blank()], &masks, cmd, &cfg, &ControllerState::default()).unwrap();
        assert_eq!(out, cmd);
        assert_eq!(d.layer, Layer::Pass);
        assert!(!d.triggered);
        assert_eq!(s, ControllerState::default());
    }

    #[test]
    fn ca_turns_away_and_latches_reverse() {
        let (masks, cfg) = setup();
        // Strong echo 0.3 m ahead, slightly left.
        let e = [with_voxel(0.3, -10.0, 1.0)];
        let mut state = ControllerState::default();
        for k in 1..=6 {
            let (out, d, next) = step(&e, &masks, VelocityCommand::new(0.3, 0.0), &cfg, &state).unwrap();
            assert_eq!(d.layer, Layer::Ca);
            assert_eq!(out.omega, -0.5);
            assert_eq!(out.v, if k >= 4 { -0.1 } else { 0.0 }, "step {k}");
            state = next;
        }
        assert_eq!(state.ca_streak, 6);
        let (_, _, reset) = step(&[blank()], &masks, VelocityCommand::ZERO, &cfg, &state).unwrap();
        assert_eq!(reset.ca_streak, 0);
    }

    #[test]
    fn oa_single_voxel_closed_form() {
        let (masks, cfg) = setup();
        // Right side voxel in the OA rectangle, outside the CA half circle.
        let e = [with_voxel(0.8, 10.0, 0.5)];
        let g = PolarGrid::canonical();
        let r = g.range_center(g.range_bin_of(0.8).unwrap());
        let d = oa_layer(&e, &masks.oa, VelocityCommand::new(0.3, 0.2), &cfg);
        assert!(d.triggered);
        let rho = d.diagnostics.rho.unwrap();
        assert!((rho + 1.0 / (r * r)).abs() < 1e-5);
        assert!((d.command.omega - (0.2 + cfg.lambda_oa / (r * r))).abs() < 1e-5);
        let expected_v = 0.3 * (1.0 - cfg.mu_oa * 0.5);
        assert!((d.command.v - expected_v).abs() < 1e-9);
    }

    #[test]
    fn rcf_keeps_speed() {
        let (masks, cfg) = setup();
        let e = [with_voxel(0.9, -60.0, 0.2)];
        let d = rcf_layer(&e, &masks.rcf, VelocityCommand::new(0.3, 0.0), &cfg);
        assert!(d.triggered);
        assert_eq!(d.command.v, 0.3);
        assert!(d.command.omega < 0.0);
    }

    #[test]
    fn peaks_need_prominence() {
        let a = [0.0, 1.0, 0.0, 0.05, 0.04, 0.0, 2.0, 1.95, 1.96, 0.0];
        assert_eq!(find_peaks(&a, 0.1), vec![1, 6]);
        assert!(find_peaks(&[0.0; 5], 0.1).is_empty());
        assert!(find_peaks(&[0.0, 1.0, 1.0, 0.0], 0.1).is_empty());
    }

    #[test]
    fn aff_single_wall_uses_previous_distance() {
        let cfg = ControllerConfig::default();
        let mk = |d_peak: f64| {
            let d = cfg.d_grid.clone();
            let a = d.iter().map(|&x| if (x - d_peak).abs() < 1e-9 { 1.0 } else { 0.0 }).collect();
            AlignmentProfile {
                observable: vec![true; d.len()],
                d,
                a,
            }
        };
        let cmd = VelocityCommand::new(0.3, 0.1);
        let first = aff_layer(&mk(1.0), cmd, &cfg, &ControllerState::default());
        assert!(first.triggered);
        assert_eq!(first.command, cmd);
        let state = ControllerState {
            ca_streak: 0,
            d_p: Some(1.0),
        };
        let second = aff_layer(&mk(1.1), cmd, &cfg, &state);
        assert!((second.command.omega - (0.1 + cfg.lambda_aff * 0.1)).abs() < 1e-9);
    }

    #[test]
    fn region_defaults_are_valid() {
        let mut issues = ValidationError::default();
        LayerRegions::default().validate("regions", &mut issues);
        ControllerConfig::default().validate("controller", &mut issues);
        assert!(issues.is_empty(), "{issues}");
        assert!(ControlRegion::Circle { radius: -1.0 }.checked().is_err());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let (masks, cfg) = setup();
        let wrong = Energyscape::zeros(PolarGrid::reduced(), 0, 0.0);
        assert!(step(&[wrong], &masks, VelocityCommand::ZERO, &cfg, &ControllerState::default()).is_err());
        assert!(step(&[], &masks, VelocityCommand::ZERO, &cfg, &ControllerState::default()).is_err());
    }
}
