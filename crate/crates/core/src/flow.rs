//! Acoustic flow: how a static reflector moves through a sensor's polar image
//! while the platform translates with speed `V` and yaws with rate `omega`.
//!
//! Frame conventions used throughout the crate:
//!
//! * Platform frame: `x` along the direction of travel, `y` to the left,
//!   yaw rate `omega > 0` is a counter-clockwise (left) turn.
//! * Sensor bearings `theta` are positive towards the sensor's right, so a
//!   planar reflector at `(r, theta)` sits at `x = r cos(theta)`,
//!   `y = -r sin(theta)` in the sensor frame (elevation `phi = pi/2`).
//! * Mount angles `alpha` and `beta` are measured in the same sense as the
//!   bearings. A sensor therefore sits at `l (cos alpha, -sin alpha)` in the
//!   platform frame and looks along the platform-frame heading `-(alpha + beta)`.
//!
//! With these conventions a straight-line trajectory keeps
//! `r sin(theta + delta)` constant, and the rates below agree with a direct
//! differentiation of the rigid-body motion.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{wrap_angle, Vec2};

/// Mounting of one sonar on the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSensorPose", into = "RawSensorPose")]
pub struct SensorPose {
    l: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSensorPose {
    l: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawSensorPose> for SensorPose {
    type Error = Error;
    fn try_from(r: RawSensorPose) -> Result<Self> {
        SensorPose::new(r.l, r.alpha, r.beta)
    }
}

impl From<SensorPose> for RawSensorPose {
    fn from(p: SensorPose) -> Self {
        RawSensorPose {
            l: p.l,
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

impl SensorPose {
    /// `l` in meters, angles in radians.
    pub fn new(l: f64, alpha: f64, beta: f64) -> Result<Self> {
        ensure_finite("sensor pose", &[l, alpha, beta])?;
        if l < 0.0 {
            return Err(Error::Domain(format!("sensor distance l = {l} must be >= 0")));
        }
        let alpha = wrap_angle(alpha);
        let beta = wrap_angle(beta);
        Ok(Self {
            l,
            alpha,
            beta,
            delta: alpha + beta,
        })
    }

    /// Table-style mounting: angles in degrees, distance in centimeters.
    pub fn from_table(alpha_deg: f64, beta_deg: f64, l_cm: f64) -> Result<Self> {
        Self::new(l_cm / 100.0, alpha_deg.to_radians(), beta_deg.to_radians())
    }

    /// A sensor at the rotation center looking straight ahead.
    pub fn centered() -> Self {
        Self {
            l: 0.0,
            alpha: 0.0,
            beta: 0.0,
            delta: 0.0,
        }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Sensor origin in the platform frame.
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.l * self.alpha.cos(), -self.l * self.alpha.sin())
    }

    /// Boresight direction as a counter-clockwise platform-frame angle.
    pub fn heading(&self) -> f64 {
        -self.delta
    }

    /// Platform-frame location of the planar reflector at `(r, theta)`.
    pub fn to_platform(&self, r: f64, theta: f64) -> Vec2 {
        self.position() + Vec2::from_angle(self.heading() - theta) * r
    }

    /// Polar coordinates of a platform-frame point as seen by this sensor.
    pub fn to_polar(&self, p: Vec2) -> PolarPoint {
        let local = (p - self.position()).rotate(-self.heading());
        PolarPoint {
            r: local.norm(),
            theta: (-local.y).atan2(local.x),
        }
    }

    /// Mirror image across the platform x-axis.
    pub fn mirrored(&self) -> Self {
        Self::new(self.l, -self.alpha, -self.beta).expect("mirror of a valid pose")
    }
}

/// Reflector position in a sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn in_fov(&self) -> bool {
        (-FRAC_PI_2..=FRAC_PI_2).contains(&self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlatformMotion {
    pub v: f64,
    pub omega: f64,
}

impl PlatformMotion {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRate {
    pub dr_dt: f64,
    pub dtheta_dt: f64,
}

/// Spherical sensor coordinates to Cartesian, for a fixed elevation `phi`.
pub fn polar_to_cartesian(p: PolarPoint, phi: f64) -> Result<CartesianPoint> {
    ensure_finite("polar_to_cartesian", &[p.r, p.theta, phi])?;
    if p.r <= 0.0 {
        return Err(Error::Domain(format!("range r = {} must be > 0", p.r)));
    }
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(CartesianPoint {
        x: p.r * ct,
        y: -p.r * st * sp,
        z: p.r * st * cp,
    })
}

/// Inverse of [`polar_to_cartesian`] for a known elevation `phi`.
pub fn cartesian_to_polar(c: CartesianPoint, phi: f64) -> Result<PolarPoint> {
    ensure_finite("cartesian_to_polar", &[c.x, c.y, c.z, phi])?;
    let r = (c.x * c.x + c.y * c.y + c.z * c.z).sqrt();
    if r <= 0.0 {
        return Err(Error::Domain("point at the sensor origin".into()));
    }
    let (sp, cp) = phi.sin_cos();
    let r_sin_theta = -c.y * sp + c.z * cp;
    Ok(PolarPoint {
        r,
        theta: r_sin_theta.atan2(c.x),
    })
}

/// Rate of change of a static reflector's `(r, theta)` under platform motion.
pub fn velocity_field(p: PolarPoint, pose: &SensorPose, motion: PlatformMotion) -> Result<FlowRate> {
    ensure_finite("velocity_field", &[p.r, p.theta, motion.v, motion.omega])?;
    if p.r <= 0.0 {
        return Err(Error::Domain(format!("range r = {} must be > 0", p.r)));
    }
    let PlatformMotion { v, omega } = motion;
    let lw = pose.l * omega;
    let a = p.theta + pose.delta;
    let b = p.theta + pose.beta;
    Ok(FlowRate {
        dr_dt: lw * b.sin() - v * a.cos(),
        dtheta_dt: (lw * b.cos() + v * a.sin()) / p.r + omega,
    })
}

/// The quantity `|r| sin(theta + delta)` conserved along pure-translation flow-lines.
pub fn linear_flow_constant(p: PolarPoint, pose: &SensorPose) -> Result<f64> {
    ensure_finite("linear_flow_constant", &[p.r, p.theta])?;
    if p.r <= 0.0 {
        return Err(Error::Domain(format!("range r = {} must be > 0", p.r)));
    }
    Ok(p.r.abs() * (p.theta + pose.delta).sin())
}

/// Flow under pure rotation; identical to [`velocity_field`] with `V = 0`.
pub fn rotational_flow_rate(p: PolarPoint, pose: &SensorPose, omega: f64) -> Result<FlowRate> {
    velocity_field(p, pose, PlatformMotion { v: 0.0, omega })
}

/// Why a flow-line integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// Range left `(0, r_max]`.
    OutOfRange,
    /// Bearing left `[-pi/2, pi/2]`.
    OutOfFov,
    /// An integration stage reached `r <= 0`.
    NonPositiveRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowLine {
    pub points: Vec<PolarPoint>,
    pub termination: Termination,
}

fn rk4_step(p: PolarPoint, pose: &SensorPose, motion: PlatformMotion, dt: f64) -> Result<PolarPoint> {
    let k1 = velocity_field(p, pose, motion)?;
    let p2 = PolarPoint::new(p.r + 0.5 * dt * k1.dr_dt, p.theta + 0.5 * dt * k1.dtheta_dt);
    let k2 = velocity_field(p2, pose, motion)?;
    let p3 = PolarPoint::new(p.r + 0.5 * dt * k2.dr_dt, p.theta + 0.5 * dt * k2.dtheta_dt);
    let k3 = velocity_field(p3, pose, motion)?;
    let p4 = PolarPoint::new(p.r + dt * k3.dr_dt, p.theta + dt * k3.dtheta_dt);
    let k4 = velocity_field(p4, pose, motion)?;
    Ok(PolarPoint::new(
        p.r + dt / 6.0 * (k1.dr_dt + 2.0 * k2.dr_dt + 2.0 * k3.dr_dt + k4.dr_dt),
        p.theta + dt / 6.0 * (k1.dtheta_dt + 2.0 * k2.dtheta_dt + 2.0 * k3.dtheta_dt + k4.dtheta_dt),
    ))
}

/// Integrates a flow-line with classic fourth-order Runge-Kutta.
///
/// The returned polyline starts at `start` and holds at most `n_steps + 1`
/// points; integration stops before the first step that leaves the range
/// `(0, r_max]` or the frontal field of view.
pub fn integrate_flow_line(
    start: PolarPoint,
    pose: &SensorPose,
    motion: PlatformMotion,
    dt: f64,
    n_steps: usize,
    r_max: f64,
) -> Result<FlowLine> {
    ensure_finite("integrate_flow_line", &[start.r, start.theta, dt, r_max])?;
    if !(start.r > 0.0 && start.r <= r_max) {
        return Err(Error::Domain(format!(
            "start range {} outside (0, {r_max}]",
            start.r
        )));
    }
    if dt <= 0.0 {
        return Err(Error::Domain(format!("time step {dt} must be > 0")));
    }

    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(start);
    let mut p = start;
    for _ in 0..n_steps {
        let next = match rk4_step(p, pose, motion, dt) {
            Ok(next) => next,
            Err(_) => {
                return Ok(FlowLine {
                    points,
                    termination: Termination::NonPositiveRange,
                })
            }
        };
        let termination = if next.r <= 0.0 {
            Some(Termination::NonPositiveRange)
        } else if next.r > r_max {
            Some(Termination::OutOfRange)
        } else if !next.in_fov() {
            Some(Termination::OutOfFov)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(FlowLine { points, termination });
        }
        points.push(next);
        p = next;
    }
    Ok(FlowLine {
        points,
        termination: Termination::Completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pose_normalizes_angles() {
        let p = SensorPose::new(0.1, 3.0 * PI / 2.0, -PI).unwrap();
        assert!((p.alpha() + PI / 2.0).abs() < 1e-12);
        assert_eq!(p.beta(), PI);
        assert_eq!(p.delta(), p.alpha() + p.beta());
        assert!(SensorPose::new(-0.1, 0.0, 0.0).is_err());
        assert!(SensorPose::new(0.1, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn polar_cartesian_examples() {
        let c = polar_to_cartesian(PolarPoint::new(1.0, 0.0), FRAC_PI_2).unwrap();
        assert_eq!((c.x, c.y, c.z), (1.0, 0.0, c.z));
        assert!(c.z.abs() < 1e-15);

        let c = polar_to_cartesian(PolarPoint::new(2.0, FRAC_PI_2), FRAC_PI_2).unwrap();
        assert!(c.x.abs() < 1e-15 && (c.y + 2.0).abs() < 1e-15 && c.z.abs() < 1e-15);

        // 1.5 * (cos 0.4, -sin 0.4 * sin(-pi/2), sin 0.4 * cos(-pi/2)), evaluated
        // independently with numpy.
        let c = polar_to_cartesian(PolarPoint::new(1.5, 0.4), -FRAC_PI_2).unwrap();
        assert!((c.x - 1.381_591_491_004_327_7).abs() < 1e-14);
        assert!((c.y - 0.584_127_513_462_975_8).abs() < 1e-14);
        assert!(c.z.abs() < 1e-15);

        assert!(polar_to_cartesian(PolarPoint::new(f64::INFINITY, 0.0), FRAC_PI_2).is_err());
        assert!(polar_to_cartesian(PolarPoint::new(0.0, 0.0), FRAC_PI_2).is_err());
    }

    #[test]
    fn polar_cartesian_round_trip() {
        for phi in [FRAC_PI_2, -FRAC_PI_2] {
            for &(r, theta) in &[(0.3, -1.2), (2.0, 0.7), (4.9, 1.5), (1.0, 0.0)] {
                let c = polar_to_cartesian(PolarPoint::new(r, theta), phi).unwrap();
                let back = cartesian_to_polar(c, phi).unwrap();
                assert!(((back.r - r) / r).abs() < 1e-12);
                assert!((back.theta - theta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn velocity_field_examples() {
        let pose = SensorPose::new(0.2, 0.3, -0.4).unwrap();
        let f = velocity_field(PolarPoint::new(1.3, 0.2), &pose, PlatformMotion::new(0.0, 0.0)).unwrap();
        assert_eq!((f.dr_dt, f.dtheta_dt), (0.0, 0.0));

        let centered = SensorPose::new(0.0, 0.7, 0.1).unwrap();
        let f = velocity_field(PolarPoint::new(2.0, -0.5), &centered, PlatformMotion::new(0.0, 0.5)).unwrap();
        assert_eq!((f.dr_dt, f.dtheta_dt), (0.0, 0.5));

        let f = velocity_field(
            PolarPoint::new(1.0, 0.0),
            &SensorPose::centered(),
            PlatformMotion::new(0.3, 0.0),
        )
        .unwrap();
        assert!((f.dr_dt + 0.3).abs() < 1e-15 && f.dtheta_dt.abs() < 1e-15);

        assert!(velocity_field(PolarPoint::new(0.0, 0.0), &pose, PlatformMotion::new(0.3, 0.0)).is_err());
        assert!(velocity_field(PolarPoint::new(-1.0, 0.0), &pose, PlatformMotion::new(0.3, 0.0)).is_err());
    }

    #[test]
    fn rotational_matches_velocity_field_bitwise() {
        let pose = SensorPose::from_table(120.0, -120.0, 14.0).unwrap();
        for &(r, th, w) in &[(1.0, 0.3, 0.5), (0.4, -1.2, -0.8), (3.3, 0.9, 2.0)] {
            let p = PolarPoint::new(r, th);
            let a = rotational_flow_rate(p, &pose, w).unwrap();
            let b = velocity_field(p, &pose, PlatformMotion::new(0.0, w)).unwrap();
            assert_eq!(a.dr_dt.to_bits(), b.dr_dt.to_bits());
            assert_eq!(a.dtheta_dt.to_bits(), b.dtheta_dt.to_bits());
        }
        let centered = SensorPose::centered();
        let f = rotational_flow_rate(PolarPoint::new(2.5, 0.4), &centered, 0.7).unwrap();
        assert_eq!((f.dr_dt, f.dtheta_dt), (0.0, 0.7));
        let f = rotational_flow_rate(PolarPoint::new(2.5, 0.4), &pose, 0.0).unwrap();
        assert_eq!((f.dr_dt, f.dtheta_dt), (0.0, 0.0));
    }

    #[test]
    fn velocity_field_matches_frozen_oracle() {
        // Central differences of a world-fixed reflector under the exact
        // platform arc, h = 1e-6 s.
        let pose = SensorPose::new(0.1, FRAC_PI_2, -0.2).unwrap();
        let f = velocity_field(PolarPoint::new(2.0, 0.5), &pose, PlatformMotion::new(0.3, 0.5)).unwrap();
        assert!((f.dr_dt - 0.103_432_072_351_417_05).abs() < 1e-8);
        assert!((f.dtheta_dt - 0.667_183_885_610_933_6).abs() < 1e-8);

        // Setup 8, sensor 2 with beta = -2.094 rad.
        let pose = SensorPose::new(0.14, 120f64.to_radians(), -2.094).unwrap();
        let f = rotational_flow_rate(PolarPoint::new(1.0, 0.3), &pose, 0.5).unwrap();
        assert!((f.dr_dt + 0.068_263_531_327_605_88).abs() < 1e-8);
        assert!((f.dtheta_dt - 0.484_505_153_219_849_66).abs() < 1e-8);
    }

    #[test]
    fn linear_motion_antisymmetry() {
        let pose = SensorPose::new(0.0, 0.4, 0.2).unwrap();
        let p = PolarPoint::new(1.7, -0.3);
        let f = velocity_field(p, &pose, PlatformMotion::new(0.25, 0.0)).unwrap();
        let g = velocity_field(p, &pose, PlatformMotion::new(-0.25, 0.0)).unwrap();
        assert_eq!(f.dr_dt, -g.dr_dt);
        assert_eq!(f.dtheta_dt, -g.dtheta_dt);
    }

    #[test]
    fn flow_constant_examples() {
        let pose = SensorPose::new(0.0, 0.5, FRAC_PI_2 - 0.5 - 0.3).unwrap();
        let c = linear_flow_constant(PolarPoint::new(2.0, 0.3), &pose).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        let pose = SensorPose::new(0.1, 0.2, -0.2).unwrap();
        let c = linear_flow_constant(PolarPoint::new(5.0, 0.0), &pose).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn flow_line_stationary_and_rotation() {
        let pose = SensorPose::from_table(90.0, -10.0, 10.0).unwrap();
        let line = integrate_flow_line(
            PolarPoint::new(2.0, 0.1),
            &pose,
            PlatformMotion::default(),
            0.01,
            50,
            5.0,
        )
        .unwrap();
        assert_eq!(line.points.len(), 51);
        assert!(line.points.iter().all(|p| *p == line.points[0]));

        let centered = SensorPose::centered();
        let line = integrate_flow_line(
            PolarPoint::new(1.5, -1.0),
            &centered,
            PlatformMotion::new(0.0, 0.5),
            1e-3,
            3000,
            5.0,
        )
        .unwrap();
        for (k, p) in line.points.iter().enumerate() {
            assert!((p.r - 1.5).abs() <= 1e-9);
            assert!((p.theta - (-1.0 + 0.5 * 1e-3 * k as f64)).abs() <= 1e-9);
        }
    }

    #[test]
    fn flow_line_terminates() {
        // Head-on approach runs the range to zero.
        let line = integrate_flow_line(
            PolarPoint::new(0.5, 0.0),
            &SensorPose::centered(),
            PlatformMotion::new(0.3, 0.0),
            0.01,
            1000,
            5.0,
        )
        .unwrap();
        assert_eq!(line.termination, Termination::NonPositiveRange);
        assert!(line.points.iter().all(|p| p.r > 0.0));

        // Receding reflector leaves the range window.
        let line = integrate_flow_line(
            PolarPoint::new(4.9, 0.0),
            &SensorPose::centered(),
            PlatformMotion::new(-0.3, 0.0),
            0.01,
            1000,
            5.0,
        )
        .unwrap();
        assert_eq!(line.termination, Termination::OutOfRange);

        // Passing reflector sweeps out of the frontal field of view.
        let line = integrate_flow_line(
            PolarPoint::new(1.0, -0.5),
            &SensorPose::centered(),
            PlatformMotion::new(0.3, 0.0),
            0.01,
            2000,
            5.0,
        )
        .unwrap();
        assert_eq!(line.termination, Termination::OutOfFov);

        assert!(integrate_flow_line(
            PolarPoint::new(6.0, 0.0),
            &SensorPose::centered(),
            PlatformMotion::default(),
            0.01,
            1,
            5.0
        )
        .is_err());
        assert!(integrate_flow_line(
            PolarPoint::new(1.0, 0.0),
            &SensorPose::centered(),
            PlatformMotion::default(),
            0.0,
            1,
            5.0
        )
        .is_err());
    }

    #[test]
    fn pose_polar_round_trip() {
        let pose = SensorPose::from_table(-120.0, 120.0, 14.0).unwrap();
        let q = pose.to_platform(1.3, 0.4);
        let back = pose.to_polar(q);
        assert!((back.r - 1.3).abs() < 1e-12 && (back.theta - 0.4).abs() < 1e-12);
        // Centered forward sensor: positive bearings lie to the right.
        let q = SensorPose::centered().to_platform(1.0, 0.3);
        assert!(q.y < 0.0);
    }
}
