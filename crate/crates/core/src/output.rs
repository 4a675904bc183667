//! Field output: legacy-ASCII VTK snapshots and probe time series.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::mesh::Mesh;
use crate::state::FieldState;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("probe cell {cell} out of range (mesh has {cells} cells)")]
    InvalidProbe { cell: usize, cells: usize },
    #[error("non-finite {field} in cell {cell}")]
    NonFinite { field: &'static str, cell: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.display().to_string(), source }
}

/// VTK corner order of a hexahedron relative to the canonical corner order.
pub const VTK_HEX_ORDER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];
const VTK_HEXAHEDRON: u8 = 12;

/// Legacy unstructured-grid document with cell data `T`, `p` and `u`.
pub fn vtk_string(mesh: &Mesh, state: &FieldState, title: &str) -> Result<String, OutputError> {
    if let Some((field, cell)) = state.find_non_finite() {
        return Err(OutputError::NonFinite { field: field.name(), cell });
    }
    let n = mesh.num_cells();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("").chars().take(255).collect::<String>());
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.8e} {:.8e} {:.8e}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "CELLS {} {}", n, 9 * n);
    for c in mesh.cells() {
        let ids: Vec<String> = VTK_HEX_ORDER.iter().map(|&k| c[k].to_string()).collect();
        let _ = writeln!(s, "8 {}", ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(s, "{VTK_HEXAHEDRON}");
    }
    let _ = writeln!(s, "CELL_DATA {n}");
    for (name, values) in [("T", state.temperature()), ("p", state.pressure())] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v:.8e}");
        }
    }
    let _ = writeln!(s, "VECTORS u double");
    for c in 0..n {
        let u = state.velocity(c);
        let _ = writeln!(s, "{:.8e} {:.8e} {:.8e}", u.x, u.y, u.z);
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, state: &FieldState, path: impl AsRef<Path>) -> Result<(), OutputError> {
    let path = path.as_ref();
    let title = format!("t = {:.8e} s, step {}", state.time, state.step_index);
    let text = vtk_string(mesh, state, &title)?;
    std::fs::write(path, text).map_err(io_err(path))
}

/// Appends one row per output time: `t`, then `T`, `ux`, `uy`, `uz`, `p`
/// for every probe cell. Units are part of the header.
pub struct ProbeWriter<W: Write> {
    writer: csv::Writer<W>,
    probes: Vec<usize>,
}

impl ProbeWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, probes: &[usize], num_cells: usize) -> Result<Self, OutputError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(io_err(path))?;
        ProbeWriter::new(BufWriter::new(file), probes, num_cells)
    }
}

impl<W: Write> ProbeWriter<W> {
    pub fn new(sink: W, probes: &[usize], num_cells: usize) -> Result<Self, OutputError> {
        if let Some(&cell) = probes.iter().find(|&&c| c >= num_cells) {
            return Err(OutputError::InvalidProbe { cell, cells: num_cells });
        }
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["t [s]".to_string()];
        for c in probes {
            header.extend([
                format!("T_{c} [K]"),
                format!("ux_{c} [m/s]"),
                format!("uy_{c} [m/s]"),
                format!("uz_{c} [m/s]"),
                format!("p_{c} [Pa]"),
            ]);
        }
        writer.write_record(&header)?;
        Ok(ProbeWriter { writer, probes: probes.to_vec() })
    }

    pub fn record(&mut self, state: &FieldState) -> Result<(), OutputError> {
        let mut row = vec![format!("{:.8e}", state.time)];
        for &c in &self.probes {
            let u = state.velocity(c);
            for v in [state.temperature()[c], u.x, u.y, u.z, state.pressure()[c]] {
                row.push(format!("{v:.8e}"));
            }
        }
        self.writer.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, OutputError> {
        self.writer.flush().map_err(|source| OutputError::Io { path: "probe output".into(), source })?;
        self.writer.into_inner().map_err(|e| OutputError::Io { path: "probe output".into(), source: e.into_error() })
    }
}

/// Record `states` to a probe file in one go.
pub fn write_probe_csv<'a>(
    states: impl IntoIterator<Item = &'a FieldState>,
    probes: &[usize],
    num_cells: usize,
    path: impl AsRef<Path>,
) -> Result<(), OutputError> {
    let mut w = ProbeWriter::create(path, probes, num_cells)?;
    for s in states {
        w.record(s)?;
    }
    w.finish().map(|_| ())
}
