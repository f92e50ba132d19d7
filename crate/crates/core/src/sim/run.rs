use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, Diagnostics, Layer, VelocityCommand};
use crate::error::Result;
use crate::geometry::Pose2;
use crate::guidance::{input_command, GuidanceState};
use crate::masks::MaskSet;
use crate::scenario::Scenario;
use crate::sonar::{Energyscape, SonarSimulator};
use crate::world::EnvironmentModel;

use super::{clearance, detect_collision, step_world, CollisionEvent, RobotState, StuckDetector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub v_i: f64,
    pub omega_i: f64,
    pub v_o: f64,
    pub omega_o: f64,
    pub layer: Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StuckInterval {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    GoalReached,
    Collision,
    Stuck,
    Timeout,
}

/// Consecutive steps spent in one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpan {
    pub layer: Layer,
    pub start: f64,
    pub steps: u64,
}

/// Wall-clock cost per step, in milliseconds. Not part of the deterministic record.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepTiming {
    pub mean_step_ms: f64,
    pub max_step_ms: f64,
    pub mean_controller_ms: f64,
    pub max_controller_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub n_sensors: usize,
    pub start_pose: Pose2,
    pub final_pose: Pose2,
    pub termination: Termination,
    pub goal_reached: bool,
    pub collisions: Vec<CollisionEvent>,
    pub stuck_intervals: Vec<StuckInterval>,
    pub min_clearance: f64,
    pub sim_time: f64,
    pub steps: u64,
    pub layer_timeline: Vec<LayerSpan>,
    pub trajectory: Vec<TrajectorySample>,
    pub timing: StepTiming,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.goal_reached && self.collisions.is_empty() && self.stuck_intervals.is_empty()
    }

    /// The report as JSON with the wall-clock section zeroed, for byte comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.timing = StepTiming::default();
        serde_json::to_string(&r).expect("report serializes")
    }
}

/// Everything produced by one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub sample: TrajectorySample,
    pub diagnostics: Diagnostics,
    pub collision: Option<CollisionEvent>,
    pub termination: Termination,
}

/// A running closed-loop simulation.
///
/// Each step renders the energyscapes at the current pose, takes the input
/// command from the waypoint follower (or an operator), lets the controller
/// modulate it, and moves the robot and the dynamic obstacles.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    seed: u64,
    world: EnvironmentModel,
    robot: RobotState,
    sonar: SonarSimulator,
    controller: Controller,
    guidance: GuidanceState,
    stuck: StuckDetector,
    step: u64,
    energies: Vec<Energyscape>,
    report: RunReport,
    step_ms: Vec<f64>,
    controller_ms: Vec<f64>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        let sonar = SonarSimulator::new(scenario.sonar.clone(), scenario.sensors.clone(), &scenario.occluders)?
            .with_noise_seed(seed);
        let masks = MaskSet::build(
            &scenario.regions,
            &scenario.sensors,
            &scenario.sonar.grid,
            &scenario.controller.d_grid,
        )?;
        let controller = Controller::new(scenario.controller.clone(), masks)?;
        Self::with_parts(scenario, seed, sonar, controller)
    }

    /// Reuses an already built sonar and controller (masks are the costly part).
    pub fn with_parts(scenario: &Scenario, seed: u64, sonar: SonarSimulator, mut controller: Controller) -> Result<Self> {
        controller.reset();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = scenario.start_zone.sample(&mut rng);
        let mut world = scenario.world.clone();
        world.set_time(0.0);
        let robot = RobotState::new(start, scenario.sim.robot_radius);
        let report = RunReport {
            scenario: scenario.name.clone(),
            seed,
            n_sensors: scenario.sensors.len(),
            start_pose: start,
            final_pose: start,
            termination: Termination::Running,
            goal_reached: false,
            collisions: Vec::new(),
            stuck_intervals: Vec::new(),
            min_clearance: clearance(&world, &robot),
            sim_time: 0.0,
            steps: 0,
            layer_timeline: Vec::new(),
            trajectory: Vec::new(),
            timing: StepTiming::default(),
        };
        let mut sim = Self {
            scenario: scenario.clone(),
            seed,
            world,
            robot,
            sonar,
            controller,
            guidance: GuidanceState::default(),
            stuck: StuckDetector::new(scenario.sim.stuck_window, scenario.sim.stuck_distance),
            step: 0,
            energies: Vec::new(),
            report,
            step_ms: Vec::new(),
            controller_ms: Vec::new(),
        };
        if let Some(c) = detect_collision(&sim.world, &sim.robot) {
            sim.report.collisions.push(c);
            sim.report.termination = Termination::Collision;
        }
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn world(&self) -> &EnvironmentModel {
        &self.world
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn sonar(&self) -> &SonarSimulator {
        &self.sonar
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn guidance(&self) -> &GuidanceState {
        &self.guidance
    }

    /// Energyscapes rendered in the last step.
    pub fn energies(&self) -> &[Energyscape] {
        &self.energies
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn termination(&self) -> Termination {
        self.report.termination
    }

    pub fn is_finished(&self) -> bool {
        self.report.termination != Termination::Running
    }

    /// Runs one control step. `operator` replaces the waypoint follower and
    /// is clamped to the platform limits first.
    pub fn step(&mut self, operator: Option<VelocityCommand>) -> Result<StepRecord> {
        let started = Instant::now();
        let cfg = self.scenario.sim.clone();
        let t = self.world.time();
        let pose = self.robot.pose;

        self.energies = self.sonar.render(&self.world, &pose, self.step);

        let cmd_in = match operator {
            Some(cmd) => cmd.clamped(cfg.v_max, cfg.omega_max),
            None => {
                let (cmd, next) = input_command(&pose, &self.scenario.plan, &self.guidance);
                self.guidance = next;
                cmd
            }
        };
        if operator.is_none() && self.guidance.goal_reached {
            self.report.goal_reached = true;
            self.report.termination = Termination::GoalReached;
        }

        let (cmd_out, layer, diagnostics) = if self.is_finished() {
            (VelocityCommand::ZERO, Layer::Pass, Diagnostics::default())
        } else {
            let c0 = Instant::now();
            let (cmd, decision) = self.controller.step(&self.energies, cmd_in)?;
            self.controller_ms.push(c0.elapsed().as_secs_f64() * 1e3);
            (cmd, decision.layer, decision.diagnostics)
        };

        let sample = TrajectorySample {
            t,
            x: pose.x,
            y: pose.y,
            yaw: pose.yaw,
            v_i: cmd_in.v,
            omega_i: cmd_in.omega,
            v_o: cmd_out.v,
            omega_o: cmd_out.omega,
            layer,
        };
        self.record(sample);

        let mut collision = None;
        if !self.is_finished() {
            step_world(&mut self.world, &mut self.robot, cmd_out, cfg.dt, cfg.v_max);
            self.report.min_clearance = self.report.min_clearance.min(clearance(&self.world, &self.robot));
            let now = self.world.time();
            if let Some(c) = detect_collision(&self.world, &self.robot) {
                self.report.collisions.push(c.clone());
                self.report.termination = Termination::Collision;
                collision = Some(c);
            } else if operator.is_none() && self.stuck.push(now, self.robot.pose.position()) {
                self.report.stuck_intervals.push(StuckInterval {
                    start: now - cfg.stuck_window,
                    end: now,
                });
                self.report.termination = Termination::Stuck;
            } else if operator.is_none() && now >= cfg.timeout - 1e-9 {
                self.report.termination = Termination::Timeout;
            }
        }

        let record = StepRecord {
            step: self.step,
            sample,
            diagnostics,
            collision,
            termination: self.report.termination,
        };
        self.step += 1;
        self.report.steps = self.step;
        self.report.sim_time = self.world.time();
        self.report.final_pose = self.robot.pose;
        self.step_ms.push(started.elapsed().as_secs_f64() * 1e3);
        Ok(record)
    }

    fn record(&mut self, sample: TrajectorySample) {
        match self.report.layer_timeline.last_mut() {
            Some(span) if span.layer == sample.layer => span.steps += 1,
            _ => self.report.layer_timeline.push(LayerSpan {
                layer: sample.layer,
                start: sample.t,
                steps: 1,
            }),
        }
        self.report.trajectory.push(sample);
    }

    /// Steps until the run ends.
    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step(None)?;
        }
        Ok(())
    }

    pub fn report(&self) -> RunReport {
        let mut r = self.report.clone();
        let stats = |v: &[f64]| {
            if v.is_empty() {
                (0.0, 0.0)
            } else {
                (v.iter().sum::<f64>() / v.len() as f64, v.iter().copied().fold(0.0, f64::max))
            }
        };
        let (mean_step_ms, max_step_ms) = stats(&self.step_ms);
        let (mean_controller_ms, max_controller_ms) = stats(&self.controller_ms);
        r.timing = StepTiming {
            mean_step_ms,
            max_step_ms,
            mean_controller_ms,
            max_controller_ms,
        };
        r
    }

    /// Back to a fresh start with a new seed, keeping the cached masks.
    pub fn reset(&mut self, seed: u64) -> Result<()> {
        *self = Self::with_parts(&self.scenario, seed, self.sonar.clone(), self.controller.clone())?;
        Ok(())
    }
}

/// Runs `scenario` to completion from the start pose drawn with `seed`.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<RunReport> {
    let mut sim = Simulation::new(scenario, seed)?;
    sim.run_to_end()?;
    Ok(sim.report())
}
