//! Mesh quality scan. Collects every finding instead of stopping at the first.

use std::fmt;

use super::{match_faces, Face, FaceKind, FaceSlot, Mesh, MeshError};
use crate::geometry::{CellGeometry, HexVertices, Vec3};

/// Relative threshold for the port-update denominator `|w_ζ + w_χ|`.
pub const DENOMINATOR_REL_TOL: f64 = 1e-12;
/// Relative tolerance for area agreement of the two sides of a shared face.
pub const AREA_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    DegenerateCell {
        cell: usize,
        detail: String,
    },
    VertexIndex {
        cell: usize,
        vertex: usize,
    },
    Topology {
        detail: String,
    },
    /// Port update denominator too small (interior) or zero-flux weight too
    /// small (boundary).
    SmallDenominator {
        slot: FaceSlot,
        magnitude: f64,
        threshold: f64,
    },
    /// `(-1)^ι s[ι][⌊ι/2⌋]` is not negative.
    InconsistentOrientation {
        cell: usize,
        local: usize,
        weight: f64,
    },
    AreaMismatch {
        slot: FaceSlot,
        relative: f64,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DegenerateCell { cell, detail } => write!(f, "degenerate cell {cell}: {detail}"),
            Finding::VertexIndex { cell, vertex } => write!(f, "cell {cell}: vertex index {vertex} out of range"),
            Finding::Topology { detail } => write!(f, "topology: {detail}"),
            Finding::SmallDenominator { slot, magnitude, threshold } => write!(
                f,
                "face (cell {}, local {}): denominator {magnitude:e} below {threshold:e}",
                slot.cell, slot.local
            ),
            Finding::InconsistentOrientation { cell, local, weight } => {
                write!(f, "cell {cell} face {local}: orientation weight {weight:e} not negative")
            }
            Finding::AreaMismatch { slot, relative } => {
                write!(f, "face (cell {}, local {}): area vectors disagree by {relative:e}", slot.cell, slot.local)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub cells: usize,
    pub volume_min: f64,
    pub volume_max: f64,
    /// Worst angle between a face normal and the node-to-node vector, degrees.
    pub worst_nonorthogonality_deg: f64,
    /// Smallest denominator relative to the cell length scale.
    pub min_denominator_ratio: f64,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cells: {}", self.cells)?;
        writeln!(f, "volume range: [{:e}, {:e}]", self.volume_min, self.volume_max)?;
        writeln!(f, "worst non-orthogonality: {:.3} deg", self.worst_nonorthogonality_deg)?;
        writeln!(f, "min denominator / length scale: {:e}", self.min_denominator_ratio)?;
        writeln!(f, "findings: {}", self.findings.len())?;
        for finding in &self.findings {
            writeln!(f, "  {finding}")?;
        }
        Ok(())
    }
}

/// Scan raw cell data. Never aborts: degenerate cells are reported and
/// skipped in the face checks.
pub fn validate_mesh(vertices: &[Vec3], cells: &[[usize; 8]], periodic: &[(FaceSlot, FaceSlot)]) -> ValidationReport {
    let mut findings = Vec::new();
    let geometry: Vec<Option<CellGeometry>> = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                findings.push(Finding::VertexIndex { cell: c, vertex: v });
                return None;
            }
            let hex = HexVertices::from_fn(|k| vertices[cell[k]]);
            match CellGeometry::new(&hex) {
                Ok(g) => Some(g),
                Err(e) => {
                    findings.push(Finding::DegenerateCell { cell: c, detail: e.to_string() });
                    None
                }
            }
        })
        .collect();
    let safe_cells: Vec<[usize; 8]> =
        cells.iter().map(|c| if c.iter().all(|&v| v < vertices.len()) { *c } else { [usize::MAX; 8] }).collect();
    let (pairs, open) = match match_faces(&safe_cells, periodic) {
        Ok(r) => r,
        Err(e) => {
            findings.push(Finding::Topology { detail: e.to_string() });
            (Vec::new(), Vec::new())
        }
    };
    let mut report = scan(&geometry, pairs.iter().copied(), open.iter().copied());
    findings.append(&mut report.findings);
    report.findings = findings;
    report
}

pub(super) fn validate_built(mesh: &Mesh) -> ValidationReport {
    let geometry: Vec<Option<CellGeometry>> = mesh.geometries().iter().cloned().map(Some).collect();
    let pairs = mesh.faces().iter().filter_map(|f: &Face| match f.kind {
        FaceKind::Interior { neighbor } => Some((f.owner, neighbor)),
        FaceKind::Boundary { .. } => None,
    });
    let open = mesh.faces().iter().filter(|f| !f.is_interior()).map(|f| f.owner);
    scan(&geometry, pairs, open)
}

fn scan(
    geometry: &[Option<CellGeometry>],
    pairs: impl Iterator<Item = (FaceSlot, FaceSlot)>,
    open: impl Iterator<Item = FaceSlot>,
) -> ValidationReport {
    let mut findings = Vec::new();
    let mut volume_min = f64::INFINITY;
    let mut volume_max = f64::NEG_INFINITY;
    for (c, g) in geometry.iter().enumerate() {
        let Some(g) = g else { continue };
        volume_min = volume_min.min(g.volume);
        volume_max = volume_max.max(g.volume);
        for local in 0..6 {
            let w = g.normal_weight(local);
            if !(w < 0.0) {
                findings.push(Finding::InconsistentOrientation { cell: c, local, weight: w });
            }
        }
    }
    let mut worst_angle: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for (a, b) in pairs {
        let (Some(ga), Some(gb)) = (&geometry[a.cell], &geometry[b.cell]) else { continue };
        let (fa, fb) = (ga.faces[a.local], gb.faces[b.local]);
        let rel = (fa + fb).norm() / fa.norm().max(fb.norm());
        if !(rel <= AREA_REL_TOL) {
            findings.push(Finding::AreaMismatch { slot: a, relative: rel });
        }
        let d = (ga.face_centers[a.local] - ga.center) - (gb.face_centers[b.local] - gb.center);
        let cos = (d.dot(&fa) / (d.norm() * fa.norm())).clamp(-1.0, 1.0);
        worst_angle = worst_angle.max(cos.acos().to_degrees());
        let scale = ga.length_scale().min(gb.length_scale());
        let denom = (ga.normal_weight(a.local) + gb.normal_weight(b.local)).abs();
        min_ratio = min_ratio.min(denom / scale);
        if !(denom >= DENOMINATOR_REL_TOL * scale) {
            findings.push(Finding::SmallDenominator {
                slot: a,
                magnitude: denom,
                threshold: DENOMINATOR_REL_TOL * scale,
            });
        }
    }
    for slot in open {
        let Some(g) = &geometry[slot.cell] else { continue };
        let scale = g.length_scale();
        let denom = g.normal_weight(slot.local).abs();
        min_ratio = min_ratio.min(denom / scale);
        if !(denom >= DENOMINATOR_REL_TOL * scale) {
            findings.push(Finding::SmallDenominator { slot, magnitude: denom, threshold: DENOMINATOR_REL_TOL * scale });
        }
    }
    ValidationReport {
        cells: geometry.len(),
        volume_min,
        volume_max,
        worst_nonorthogonality_deg: worst_angle,
        min_denominator_ratio: min_ratio,
        findings,
    }
}

impl From<&MeshError> for Finding {
    fn from(e: &MeshError) -> Self {
        match e {
            MeshError::Geometry { cell, source } => Finding::DegenerateCell { cell: *cell, detail: source.to_string() },
            other => Finding::Topology { detail: other.to_string() },
        }
    }
}
