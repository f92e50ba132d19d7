use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Vec2;

use super::run::RunReport;

/// `t,x,y,yaw,V_i,omega_i,V_o,omega_o,layer`, one row per control step.
pub fn write_trajectory_csv<W: Write>(report: &RunReport, mut w: W) -> Result<()> {
    writeln!(w, "t,x,y,yaw,V_i,omega_i,V_o,omega_o,layer")?;
    for s in &report.trajectory {
        writeln!(
            w,
            "{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            s.t, s.x, s.y, s.yaw, s.v_i, s.omega_i, s.v_o, s.omega_o, s.layer
        )?;
    }
    Ok(())
}

/// Visit counts on a world-aligned grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    /// Lower-left corner of cell (0, 0).
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major from the bottom row, `counts[iy * nx + ix]`.
    pub counts: Vec<u64>,
}

impl HeatMap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    /// Binary PGM scaled to the busiest cell, top row first.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.nx, self.ny)?;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut bytes = Vec::with_capacity(self.nx * self.ny);
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                bytes.push((255.0 * self.get(ix, iy) as f64 / max).round() as u8);
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Non-empty cells as `x,y,count` with cell-center coordinates.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,count")?;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = self.get(ix, iy);
                if c > 0 {
                    let x = self.origin.x + (ix as f64 + 0.5) * self.cell;
                    let y = self.origin.y + (iy as f64 + 0.5) * self.cell;
                    writeln!(w, "{x:.3},{y:.3},{c}")?;
                }
            }
        }
        Ok(())
    }
}

/// Bins every trajectory sample of every report into `cell`-sized squares.
/// The grid covers `bounds` (if given) and all samples.
pub fn aggregate_heatmap(reports: &[RunReport], cell: f64, bounds: Option<(Vec2, Vec2)>) -> HeatMap {
    let pts = reports.iter().flat_map(|r| r.trajectory.iter().map(|s| Vec2::new(s.x, s.y)));
    let (mut lo, mut hi) = bounds.unwrap_or((Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)));
    for p in pts.clone() {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return HeatMap {
            origin: Vec2::ZERO,
            cell,
            nx: 0,
            ny: 0,
            counts: Vec::new(),
        };
    }
    let origin = Vec2::new((lo.x / cell).floor() * cell, (lo.y / cell).floor() * cell);
    let nx = ((hi.x - origin.x) / cell).floor() as usize + 1;
    let ny = ((hi.y - origin.y) / cell).floor() as usize + 1;
    let mut counts = vec![0u64; nx * ny];
    for p in pts {
        let ix = (((p.x - origin.x) / cell).floor() as usize).min(nx - 1);
        let iy = (((p.y - origin.y) / cell).floor() as usize).min(ny - 1);
        counts[iy * nx + ix] += 1;
    }
    HeatMap {
        origin,
        cell,
        nx,
        ny,
        counts,
    }
}
