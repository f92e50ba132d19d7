//! Energyscape dumps: a compact little-endian binary format and CSV.
//!
//! Binary layout: `u32 n_range, u32 n_angle, f64 r_max, f64 timestamp`,
//! then `n_range * n_angle` `f32` energies, range-major.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{Energyscape, PolarGrid};

pub const HEADER_LEN: usize = 24;

pub fn write_binary<W: Write>(e: &Energyscape, mut w: W) -> Result<()> {
    w.write_all(&(e.grid.n_range as u32).to_le_bytes())?;
    w.write_all(&(e.grid.n_angle as u32).to_le_bytes())?;
    w.write_all(&e.r_max().to_le_bytes())?;
    w.write_all(&e.timestamp.to_le_bytes())?;
    let mut buf = Vec::with_capacity(e.energy.len() * 4);
    for v in &e.energy {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a dump back. The bearing axis is assumed to span -90..=90 degrees.
pub fn read_binary<R: Read>(mut r: R, sensor_index: usize) -> Result<Energyscape> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let n_range = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let n_angle = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let r_max = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let timestamp = f64::from_le_bytes(header[16..24].try_into().unwrap());
    if n_range == 0 || n_angle < 2 || !(r_max > 0.0) {
        return Err(Error::Config(format!(
            "bad energyscape header: {n_range} x {n_angle}, r_max {r_max}"
        )));
    }
    let grid = PolarGrid {
        n_range,
        range_bin: r_max / n_range as f64,
        n_angle,
        angle_start_deg: -90.0,
        angle_step_deg: 180.0 / (n_angle - 1) as f64,
    };
    let mut raw = vec![0u8; grid.len() * 4];
    r.read_exact(&mut raw)?;
    let energy = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Energyscape {
        grid,
        energy,
        sensor_index,
        timestamp,
    })
}

/// One row per voxel: `range_m,bearing_deg,energy`.
pub fn write_csv<W: Write>(e: &Energyscape, mut w: W) -> Result<()> {
    writeln!(w, "range_m,bearing_deg,energy")?;
    for i in 0..e.grid.n_range {
        for j in 0..e.grid.n_angle {
            writeln!(w, "{},{},{}", e.grid.range_center(i), e.grid.angle_deg(j), e.get(i, j))?;
        }
    }
    Ok(())
}
