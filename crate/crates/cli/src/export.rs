//! Raster figures and data dumps for a scenario.
//!
//! Written under the output directory:
//!
//! * `flowlines.pgm`, `flowlines.csv`: flow-line voxels for a range of
//!   lateral distances, as seen by the first sensor;
//! * `masks/sensor{k}_{ca,oa,rcf}.pgm`: ternary layer masks;
//! * `energyscapes/sensor{k}.{bin,csv,pgm}`: what each sensor sees at the start pose;
//! * `trajectory.{csv,pgm}`, `report.json`, `heatmap.{csv,pgm}`: one run,
//!   either simulated with `seed` or read back from an earlier report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use echoflow_core::controller::Layer;
use echoflow_core::geometry::Vec2;
use echoflow_core::masks::{flowline_mask, union_mask};
use echoflow_core::scenario::Scenario;
use echoflow_core::sim::{aggregate_heatmap, run_scenario, write_trajectory_csv, RunReport, Simulation};
use echoflow_core::sonar::io::{write_binary, write_csv};
use echoflow_core::sonar::Energyscape;
use echoflow_core::Result;

use crate::plot::{Canvas, WorldView};

/// Lateral distances drawn in the flow-line figure.
pub const FLOWLINE_DISTANCES: [f64; 10] = [-2.5, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 2.5];

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Grayscale image of an energyscape, one row per range bin, scaled to its maximum.
pub fn energyscape_image(e: &Energyscape) -> Canvas {
    let g = e.grid;
    let mut c = Canvas::new(g.n_angle, g.n_range, 0);
    let max = e.max().max(f32::MIN_POSITIVE);
    for (px, &v) in c.pixels.iter_mut().zip(&e.energy) {
        *px = (255.0 * (v / max).sqrt()).round() as u8;
    }
    c
}

fn export_flowlines(scenario: &Scenario, out: &Path) -> Result<()> {
    let pose = scenario.sensors[0];
    let grid = scenario.sonar.grid;
    let mut img = Canvas::new(grid.n_angle, grid.n_range, 0);
    let mut csv = create(&out.join("flowlines.csv"))?;
    writeln!(csv, "d_m,range_m,bearing_deg")?;
    for d in FLOWLINE_DISTANCES {
        let m = flowline_mask(d, &pose, &grid);
        let shade = if d > 0.0 { 255 } else { 160 };
        for &(i, j) in &m.voxels {
            img.set(j as i64, i as i64, shade);
            writeln!(csv, "{d},{:.3},{}", grid.range_center(i), grid.angle_deg(j))?;
        }
    }
    img.write_pgm(create(&out.join("flowlines.pgm"))?)?;
    Ok(())
}

fn export_masks(scenario: &Scenario, out: &Path) -> Result<()> {
    let dir = out.join("masks");
    fs::create_dir_all(&dir)?;
    let grid = scenario.sonar.grid;
    for (k, pose) in scenario.sensors.iter().enumerate() {
        for (layer, regions) in [
            (Layer::Ca, &scenario.regions.ca),
            (Layer::Oa, &scenario.regions.oa),
            (Layer::Rcf, &scenario.regions.rcf),
        ] {
            let m = union_mask(regions, pose, &grid).with_labels(layer, k);
            let name = format!("sensor{k}_{}.pgm", layer.as_str().to_lowercase());
            m.write_pgm(create(&dir.join(name))?)?;
        }
    }
    Ok(())
}

fn export_energyscapes(scenario: &Scenario, seed: u64, out: &Path) -> Result<()> {
    let dir = out.join("energyscapes");
    fs::create_dir_all(&dir)?;
    let sim = Simulation::new(scenario, seed)?;
    let start = sim.robot().pose;
    for e in sim.sonar().render(sim.world(), &start, 0) {
        let k = e.sensor_index;
        write_binary(&e, create(&dir.join(format!("sensor{k}.bin")))?)?;
        write_csv(&e, create(&dir.join(format!("sensor{k}.csv")))?)?;
        energyscape_image(&e).write_pgm(create(&dir.join(format!("sensor{k}.pgm")))?)?;
    }
    Ok(())
}

/// Top-down view: walls and static circles black, path gray, start and goal marked.
pub fn trajectory_image(scenario: &Scenario, report: &RunReport, px_per_m: f64) -> Canvas {
    let path: Vec<Vec2> = report.trajectory.iter().map(|s| Vec2::new(s.x, s.y)).collect();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let bounds = scenario.world.bounds();
    let corners = bounds.iter().flat_map(|&(a, b)| [a, b]);
    for p in corners.chain(path.iter().copied()).chain(scenario.plan.waypoints.iter().copied()) {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.is_finite() {
        lo = Vec2::ZERO;
        hi = Vec2::new(1.0, 1.0);
    }
    let (view, mut c) = WorldView::fit(lo, hi, 0.25, px_per_m);
    for s in scenario.world.segments() {
        view.line(&mut c, s.a, s.b, 0);
    }
    for circle in scenario.world.static_circles() {
        view.circle(&mut c, circle.center, circle.radius, 0);
    }
    for w in path.windows(2) {
        view.line(&mut c, w[0], w[1], 120);
    }
    for wp in &scenario.plan.waypoints {
        view.circle(&mut c, *wp, scenario.plan.capture_radius, 60);
    }
    if let Some(p) = path.first() {
        view.circle(&mut c, *p, scenario.sim.robot_radius, 0);
    }
    c
}

fn export_run(scenario: &Scenario, report: &RunReport, out: &Path) -> Result<()> {
    write_trajectory_csv(report, create(&out.join("trajectory.csv"))?)?;
    serde_json::to_writer_pretty(create(&out.join("report.json"))?, report)?;
    trajectory_image(scenario, report, 50.0).write_pgm(create(&out.join("trajectory.pgm"))?)?;
    let heat = aggregate_heatmap(std::slice::from_ref(report), 0.05, scenario.world.bounds());
    heat.write_pgm(create(&out.join("heatmap.pgm"))?)?;
    heat.write_csv(create(&out.join("heatmap.csv"))?)?;
    Ok(())
}

/// Writes every figure for `scenario`. With `report` the run figures come
/// from it; otherwise the scenario is simulated with `seed`.
pub fn export_figures(scenario: &Scenario, seed: u64, report: Option<&RunReport>, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    export_flowlines(scenario, out)?;
    export_masks(scenario, out)?;
    export_energyscapes(scenario, seed, out)?;
    match report {
        Some(r) => export_run(scenario, r, out),
        None => export_run(scenario, &run_scenario(scenario, seed)?, out),
    }
}
