//! Checkpoint and initial-data file formats.
//!
//! Checkpoint layout (little-endian): `n_theta: u64`, `n_omega: u64`,
//! `t: f64`, `K: f64`, then `n_omega × n_theta` cell values as `f64`, row-major
//! by frequency slice. Frequency nodes are not stored; they are rebuilt from
//! the density passed to [`read_checkpoint`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KineticState, PhaseGrid};
use crate::frequency::FrequencyDensity;
use crate::{Error, Result};

pub fn write_checkpoint(state: &KineticState, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(state.grid().n_theta() as u64).to_le_bytes())?;
    w.write_all(&(state.n_omega() as u64).to_le_bytes())?;
    w.write_all(&state.t().to_le_bytes())?;
    w.write_all(&state.coupling().to_le_bytes())?;
    for v in state.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>, g: &FrequencyDensity) -> Result<KineticState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut buf = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
        r.read_exact(&mut buf)?;
        Ok(buf)
    };
    let n_theta = u64::from_le_bytes(next(&mut r)?) as usize;
    let n_omega = u64::from_le_bytes(next(&mut r)?) as usize;
    let t = f64::from_le_bytes(next(&mut r)?);
    let k = f64::from_le_bytes(next(&mut r)?);
    let expected_nodes = g.quadrature_nodes(n_omega)?.len();
    if expected_nodes != n_omega {
        return Err(Error::invalid(format!(
            "checkpoint has {n_omega} slices but the density yields {expected_nodes}"
        )));
    }
    let mut values = Vec::with_capacity(n_theta * n_omega);
    for _ in 0..n_theta * n_omega {
        values.push(f64::from_le_bytes(next(&mut r)?));
    }
    let mut tail = Vec::new();
    r.read_to_end(&mut tail)?;
    if !tail.is_empty() {
        return Err(Error::invalid("trailing bytes after checkpoint payload"));
    }
    let grid = PhaseGrid::new(n_theta)?;
    let mut state = KineticState::from_cells(grid, g, n_omega, k, values)?;
    state.set_t(t);
    Ok(state)
}

#[derive(Debug, Serialize, Deserialize)]
struct CellRow {
    omega_index: usize,
    theta_index: usize,
    f: f64,
}

/// Reads folded cell values from CSV with header `omega_index,theta_index,f`.
/// Missing cells are zero; the result is rescaled to unit mass.
pub fn read_initial_csv(
    path: impl AsRef<Path>,
    n_theta: usize,
    g: &FrequencyDensity,
    n_omega: usize,
    coupling: f64,
) -> Result<KineticState> {
    let grid = PhaseGrid::new(n_theta)?;
    let n_nodes = g.quadrature_nodes(n_omega)?.len();
    let mut values = vec![0.0; n_nodes * n_theta];
    let mut rdr = csv::Reader::from_path(path)?;
    for row in rdr.deserialize() {
        let row: CellRow = row?;
        if row.omega_index >= n_nodes || row.theta_index >= n_theta {
            return Err(Error::invalid(format!(
                "cell ({}, {}) outside a {n_nodes}×{n_theta} grid",
                row.omega_index, row.theta_index
            )));
        }
        values[row.omega_index * n_theta + row.theta_index] = row.f;
    }
    KineticState::from_cells(grid, g, n_omega, coupling, values)
}

pub fn write_initial_csv(state: &KineticState, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = state.grid().n_theta();
    for (i, &f) in state.values().iter().enumerate() {
        w.serialize(CellRow {
            omega_index: i / n,
            theta_index: i % n,
            f,
        })?;
    }
    w.flush()?;
    Ok(())
}
