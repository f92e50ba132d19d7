//! Command-line front end and live server for the echoflow simulator.

pub mod campaign;
pub mod export;
pub mod plot;
pub mod server;
pub mod wire;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use echoflow_core::calibrate::calibrate_thresholds;
use echoflow_core::sim::RunReport;
use echoflow_core::sonar::SonarConfig;
use echoflow_core::Error;

use campaign::{format_summary, load_scenario, run_campaign, write_outputs, CampaignOptions, SetupSelection};
use server::{ServeOptions, Server};

/// Exit status when every run reached its goal without collision or stall.
pub const EXIT_OK: i32 = 0;
/// Some run failed, or an I/O error occurred.
pub const EXIT_FAILURE: i32 = 1;
/// The scenario or configuration did not validate.
pub const EXIT_SCHEMA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "echoflow", version, about = "Multi-sonar acoustic-flow navigation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, optionally repeated.
    Run(RunArgs),
    /// Run a campaign; without --setup every row of the setup table is used.
    Batch(RunArgs),
    /// Serve the live simulation over WebSocket.
    Serve(ServeArgs),
    /// Write flow-line, mask, energyscape and trajectory figures.
    Export(ExportArgs),
    /// Recompute the controller thresholds from the calibration fixtures.
    CalibrateThresholds(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Row of the built-in sensor setup table (1-10).
    #[arg(long)]
    pub setup: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// First seed; defaults to the scenario's.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the point-spread surrogate instead of the full signal chain.
    #[arg(long)]
    pub fast_sonar: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long)]
    pub setup: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fast_sonar: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub setup: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw the run figures from this report instead of simulating.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub fast_sonar: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Also write the result as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Json(_) | Error::Config(_) | Error::Domain(_) => EXIT_SCHEMA,
        Error::Io(_) => EXIT_FAILURE,
    }
}

/// Runs one subcommand, printing results to `out` and diagnostics to `err`.
pub fn execute<O: Write, E: Write>(cli: Cli, out: &mut O, err: &mut E) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch<O: Write>(cli: Cli, out: &mut O) -> echoflow_core::Result<i32> {
    match cli.command {
        Command::Run(a) => campaign_command(a, false, out),
        Command::Batch(a) => campaign_command(a, true, out),
        Command::Serve(a) => {
            let file = load_scenario(&a.scenario, a.setup, false)?;
            let options = ServeOptions {
                scenario_dir: a.scenario.parent().map(|p| p.to_path_buf()),
                fast_sonar: a.fast_sonar,
                seed: a.seed.unwrap_or(file.seed),
                ..ServeOptions::default()
            };
            let server = Server::bind((a.bind.as_str(), a.port), file, options)?;
            writeln!(out, "listening on ws://{}", server.local_addr()?)?;
            out.flush()?;
            server.run()?;
            Ok(EXIT_OK)
        }
        Command::Export(a) => {
            let file = load_scenario(&a.scenario, a.setup, a.fast_sonar)?;
            let scenario = file.to_scenario()?;
            let report: Option<RunReport> = match &a.report {
                Some(p) => Some(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(p)?))?),
                None => None,
            };
            export::export_figures(&scenario, a.seed.unwrap_or(file.seed), report.as_ref(), &a.out)?;
            writeln!(out, "figures written to {}", a.out.display())?;
            Ok(EXIT_OK)
        }
        Command::CalibrateThresholds(a) => {
            let c = calibrate_thresholds(&SonarConfig::default())?;
            let json = serde_json::to_string_pretty(&c)?;
            writeln!(out, "{json}")?;
            if let Some(p) = a.out {
                std::fs::write(p, json + "\n")?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn campaign_command<O: Write>(a: RunArgs, batch: bool, out: &mut O) -> echoflow_core::Result<i32> {
    let file = load_scenario(&a.scenario, None, a.fast_sonar)?;
    let setups = match (a.setup, batch) {
        (Some(n), _) => SetupSelection::Table(n),
        (None, true) => SetupSelection::AllTable,
        (None, false) => SetupSelection::Scenario,
    };
    let opts = CampaignOptions {
        setups,
        reps: a.reps,
        seed: a.seed,
        fast_sonar: a.fast_sonar,
    };
    let result = run_campaign(&file, &opts)?;
    if let Some(dir) = &a.out {
        write_outputs(&result, dir)?;
    }
    write!(out, "{}", format_summary(&result.summaries))?;
    let ok = result.all_succeeded();
    writeln!(out, "{}", if ok { "all runs succeeded" } else { "some runs failed" })?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}
