//! Repeated closed-loop runs over one or more sensor setups.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use echoflow_core::scenario::{ScenarioFile, TABLE1_SETUPS};
use echoflow_core::sim::{aggregate_heatmap, write_trajectory_csv, RunReport, Simulation, Termination};
use echoflow_core::sonar::SonarMode;
use echoflow_core::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which sensor mounts to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupSelection {
    /// Whatever the scenario file declares.
    Scenario,
    /// One row of the setup table.
    Table(usize),
    /// Every row of the setup table.
    AllTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOptions {
    pub setups: SetupSelection,
    pub reps: usize,
    /// First seed; repetition `k` uses `seed + k`. Defaults to the scenario seed.
    pub seed: Option<u64>,
    pub fast_sonar: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            setups: SetupSelection::Scenario,
            reps: 1,
            seed: None,
            fast_sonar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupSummary {
    pub setup: String,
    pub runs: usize,
    pub goals: usize,
    pub collisions: usize,
    pub stuck: usize,
    pub timeouts: usize,
    pub mean_step_ms: f64,
    pub max_step_ms: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignRun {
    pub setup: String,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub scenario: String,
    pub runs: Vec<CampaignRun>,
    pub summaries: Vec<SetupSummary>,
}

impl CampaignResult {
    /// Zero collisions, no stuck periods and every goal reached.
    pub fn all_succeeded(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| r.report.success())
    }
}

/// Scenario file with command-line overrides applied.
pub fn load_scenario(path: &Path, setup: Option<usize>, fast_sonar: bool) -> Result<ScenarioFile> {
    let mut file = ScenarioFile::load(path)?;
    if setup.is_some() {
        file.setup = setup;
    }
    if fast_sonar {
        file.sonar.mode = SonarMode::Fast;
    }
    Ok(file)
}

fn variants(file: &ScenarioFile, sel: SetupSelection) -> Vec<(String, ScenarioFile)> {
    let with_setup = |n: usize| {
        let mut f = file.clone();
        f.setup = Some(n);
        (format!("setup{n}"), f)
    };
    match sel {
        SetupSelection::Scenario => {
            let label = file.setup.map_or_else(|| "scenario".to_string(), |n| format!("setup{n}"));
            vec![(label, file.clone())]
        }
        SetupSelection::Table(n) => vec![with_setup(n)],
        SetupSelection::AllTable => (1..=TABLE1_SETUPS.len()).map(with_setup).collect(),
    }
}

/// Runs every selected setup `opts.reps` times. Setups and repetitions run
/// in parallel; each run is deterministic in its seed.
pub fn run_campaign(file: &ScenarioFile, opts: &CampaignOptions) -> Result<CampaignResult> {
    let mut file = file.clone();
    if opts.fast_sonar {
        file.sonar.mode = SonarMode::Fast;
    }
    let seed0 = opts.seed.unwrap_or(file.seed);
    let jobs = variants(&file, opts.setups)
        .into_iter()
        .map(|(label, f)| {
            let scenario = f.to_scenario()?;
            // Build masks once per setup; repetitions share them.
            let base = Simulation::new(&scenario, seed0)?;
            Ok((label, scenario, base))
        })
        .collect::<Result<Vec<_>>>()?;

    let per_setup: Vec<Vec<CampaignRun>> = jobs
        .par_iter()
        .map(|(label, scenario, base)| {
            (0..opts.reps as u64)
                .into_par_iter()
                .map(|k| {
                    let mut sim = Simulation::with_parts(
                        scenario,
                        seed0 + k,
                        base.sonar().clone(),
                        base.controller().clone(),
                    )?;
                    sim.run_to_end()?;
                    Ok(CampaignRun {
                        setup: label.clone(),
                        report: sim.report(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = per_setup.iter().zip(&jobs).map(|(runs, (label, ..))| summarize(label, runs)).collect();
    Ok(CampaignResult {
        scenario: file.name.clone(),
        runs: per_setup.into_iter().flatten().collect(),
        summaries,
    })
}

fn summarize(label: &str, runs: &[CampaignRun]) -> SetupSummary {
    let count = |f: &dyn Fn(&RunReport) -> bool| runs.iter().filter(|r| f(&r.report)).count();
    let steps: u64 = runs.iter().map(|r| r.report.steps).sum();
    let mean_step_ms = if steps == 0 {
        0.0
    } else {
        runs.iter().map(|r| r.report.timing.mean_step_ms * r.report.steps as f64).sum::<f64>() / steps as f64
    };
    SetupSummary {
        setup: label.to_string(),
        runs: runs.len(),
        goals: count(&|r| r.goal_reached),
        collisions: count(&|r| !r.collisions.is_empty()),
        stuck: count(&|r| !r.stuck_intervals.is_empty()),
        timeouts: count(&|r| r.termination == Termination::Timeout),
        mean_step_ms,
        max_step_ms: runs.iter().map(|r| r.report.timing.max_step_ms).fold(0.0, f64::max),
    }
}

/// Fixed-width table, one row per setup.
pub fn format_summary(summaries: &[SetupSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:>5} {:>6} {:>10} {:>6} {:>8} {:>9} {:>9}",
        "setup", "runs", "goals", "collisions", "stuck", "timeouts", "mean_ms", "max_ms"
    );
    for r in summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>5} {:>6} {:>10} {:>6} {:>8} {:>9.3} {:>9.3}",
            r.setup, r.runs, r.goals, r.collisions, r.stuck, r.timeouts, r.mean_step_ms, r.max_step_ms
        );
    }
    s
}

pub fn trajectory_file_name(run: &CampaignRun) -> String {
    format!("{}_seed{}.csv", run.setup, run.report.seed)
}

/// Writes `reports/`, `trajectories/`, `heatmap.{pgm,csv}`, `summary.{json,txt}` under `out`.
pub fn write_outputs(result: &CampaignResult, out: &Path) -> Result<()> {
    let reports = out.join("reports");
    let trajectories = out.join("trajectories");
    fs::create_dir_all(&reports)?;
    fs::create_dir_all(&trajectories)?;
    for run in &result.runs {
        let name = format!("{}_seed{}", run.setup, run.report.seed);
        serde_json::to_writer_pretty(BufWriter::new(File::create(reports.join(format!("{name}.json")))?), &run.report)?;
        write_trajectory_csv(&run.report, BufWriter::new(File::create(trajectories.join(trajectory_file_name(run)))?))?;
    }
    let all: Vec<RunReport> = result.runs.iter().map(|r| r.report.clone()).collect();
    let heat = aggregate_heatmap(&all, 0.05, None);
    heat.write_pgm(BufWriter::new(File::create(out.join("heatmap.pgm"))?))?;
    heat.write_csv(BufWriter::new(File::create(out.join("heatmap.csv"))?))?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("summary.json"))?), &result.summaries)?;
    fs::write(out.join("summary.txt"), format_summary(&result.summaries))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{
        "name": "line",
        "start_zone": {"x_min": 0, "x_max": 0.3, "y_min": -0.1, "y_max": 0.1},
        "waypoints": [[2.0, 0.0]],
        "sensors": [{"alpha_deg": 0, "beta_deg": 0, "l_cm": 10}],
        "sonar": {"mode": "fast"}
    }"#;

    #[test]
    fn all_setups_give_ten_rows() {
        let file = LINE.parse::<ScenarioFile>().unwrap();
        let opts = CampaignOptions {
            setups: SetupSelection::AllTable,
            reps: 1,
            ..Default::default()
        };
        let r = run_campaign(&file, &opts).unwrap();
        assert_eq!(r.summaries.len(), 10);
        assert_eq!(format_summary(&r.summaries).lines().count(), 11);
        assert!(r.all_succeeded());
    }

    #[test]
    fn repetitions_use_consecutive_seeds() {
        let file = LINE.parse::<ScenarioFile>().unwrap();
        let opts = CampaignOptions {
            reps: 3,
            seed: Some(40),
            ..Default::default()
        };
        let r = run_campaign(&file, &opts).unwrap();
        let seeds: Vec<u64> = r.runs.iter().map(|r| r.report.seed).collect();
        assert_eq!(seeds, [40, 41, 42]);
        assert_eq!(r.summaries[0].setup, "scenario");
        assert_eq!(r.summaries[0].goals, 3);
    }

    #[test]
    fn outputs_land_on_disk() {
        let file = LINE.parse::<ScenarioFile>().unwrap();
        let r = run_campaign(&file, &CampaignOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, dir.path()).unwrap();
        for p in ["heatmap.pgm", "heatmap.csv", "summary.json", "summary.txt", "trajectories/scenario_seed0.csv"] {
            assert!(dir.path().join(p).is_file(), "{p}");
        }
    }
}
