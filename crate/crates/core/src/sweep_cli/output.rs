//! Artifact writers: diagnostics and step-log CSV, JSON summaries and
//! legacy-VTK field snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::grid::{interpolate_to_cell_center, CellKind, FieldSet, Grid};

use super::run::StepLog;

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_rows(path, records)
}

pub fn write_step_log(path: &Path, log: &[StepLog]) -> Result<()> {
    write_rows(path, log)
}

/// Writes serialisable rows with a header taken from their field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Cell-centred phi, pressure, cell kind and velocity on a structured grid.
pub fn write_vtk(path: &Path, grid: &Grid, fields: &FieldSet, time: f64) -> Result<()> {
    let (uc, vc) = interpolate_to_cell_center(grid, fields)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "strandsim t={time:e}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 2", grid.nx + 1, grid.ny + 1)?;
    writeln!(w, "ORIGIN {:e} {:e} 0", grid.origin[0], grid.origin[1])?;
    writeln!(w, "SPACING {:e} {:e} {:e}", grid.dx, grid.dy, grid.dx)?;
    writeln!(w, "CELL_DATA {}", grid.n_cells())?;
    for (name, data) in [("phi", &fields.phi), ("pressure", &fields.p)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in data.iter() {
            writeln!(w, "{x:e}")?;
        }
    }
    writeln!(w, "SCALARS cell_kind int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for k in grid.cells() {
        let code = match k {
            CellKind::Fluid => 0,
            CellKind::Solid => 1,
            CellKind::Void => 2,
        };
        writeln!(w, "{code}")?;
    }
    writeln!(w, "VECTORS velocity double")?;
    for (u, v) in uc.iter().zip(&vc) {
        writeln!(w, "{u:e} {v:e} 0")?;
    }
    w.flush()?;
    Ok(())
}
