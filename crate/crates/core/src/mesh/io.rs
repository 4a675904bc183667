//! Plain-text mesh format.
//!
//! ```text
//! VERTICES n
//! x y z                      (n lines, 17 significant digits)
//! CELLS m
//! v0 v1 v2 v3 v4 v5 v6 v7    (m lines, canonical corner order)
//! BOUNDARY k
//! cell localFace tagName [value]
//! PERIODIC j                 (optional)
//! cellA faceA cellB faceB
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::validate::{validate_mesh, Finding, ValidationReport};
use super::{BoundarySpec, BoundaryTag, FaceKind, FaceSlot, Mesh, MeshError};
use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "VERTICES {}", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    let _ = writeln!(out, "CELLS {}", mesh.num_cells());
    for c in mesh.cells() {
        let line: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    let boundary: Vec<(FaceSlot, BoundaryTag)> = mesh
        .faces()
        .iter()
        .filter_map(|f| match f.kind {
            FaceKind::Boundary { tag, .. } => Some((f.owner, tag)),
            FaceKind::Interior { .. } => None,
        })
        .collect();
    let _ = writeln!(out, "BOUNDARY {}", boundary.len());
    for (slot, tag) in boundary {
        match tag.value() {
            Some(v) => {
                let _ = writeln!(out, "{} {} {} {:.16e}", slot.cell, slot.local, tag.name(), v);
            }
            None => {
                let _ = writeln!(out, "{} {} {}", slot.cell, slot.local, tag.name());
            }
        }
    }
    if !mesh.periodic_links().is_empty() {
        let _ = writeln!(out, "PERIODIC {}", mesh.periodic_links().len());
        for (a, b) in mesh.periodic_links() {
            let _ = writeln!(out, "{} {} {} {}", a.cell, a.local, b.cell, b.local);
        }
    }
    out
}

pub fn write_mesh_file(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshIoError> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Mesh, MeshIoError> {
    read_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            self.last = i + 1;
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshIoError> {
        self.next_content().ok_or_else(|| MeshIoError::Parse {
            line: self.last + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, message: message.into() }
}

fn header(lines: &mut Lines<'_>, name: &str) -> Result<usize, MeshIoError> {
    let (ln, text) = lines.expect(name)?;
    section_count(ln, text, name)
}

fn section_count(ln: usize, text: &str, name: &str) -> Result<usize, MeshIoError> {
    let mut it = text.split_whitespace();
    if it.next() != Some(name) {
        return Err(parse_err(ln, format!("expected `{name} <count>`, found `{text}`")));
    }
    let n = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, format!("bad count in `{text}`")))?;
    if it.next().is_some() {
        return Err(parse_err(ln, "trailing tokens after section count"));
    }
    Ok(n)
}

fn fields<T: std::str::FromStr>(ln: usize, text: &str, n: usize) -> Result<Vec<T>, MeshIoError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != n {
        return Err(parse_err(ln, format!("expected {n} fields, found {}", parts.len())));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|_| parse_err(ln, format!("cannot parse `{p}`")))).collect()
}

struct RawMesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 8]>,
    boundary: BoundarySpec,
    periodic: Vec<(FaceSlot, FaceSlot)>,
}

pub fn read_mesh(text: &str) -> Result<Mesh, MeshIoError> {
    let RawMesh { vertices, cells, boundary, periodic } = parse_raw(text)?;
    let listed: Vec<FaceSlot> = boundary.faces.keys().copied().collect();
    let mesh = Mesh::from_parts(vertices, cells, periodic, boundary)?;
    for slot in listed {
        if mesh.boundary_tag(slot).is_none() {
            return Err(MeshIoError::Mesh(MeshError::NotBoundary(slot)));
        }
    }
    Ok(mesh)
}

/// Quality report for a mesh file. Only syntax errors fail; geometric and
/// topological problems become findings.
pub fn check_mesh(text: &str) -> Result<ValidationReport, MeshIoError> {
    let raw = parse_raw(text)?;
    let report = validate_mesh(&raw.vertices, &raw.cells, &raw.periodic);
    if !report.is_ok() {
        return Ok(report);
    }
    let mut report = report;
    if let Err(e) = read_mesh(text) {
        report.findings.push(Finding::Topology { detail: e.to_string() });
    }
    Ok(report)
}

fn parse_raw(text: &str) -> Result<RawMesh, MeshIoError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let nv = header(&mut lines, "VERTICES")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines.expect("vertex")?;
        let xyz: Vec<f64> = fields(ln, t, 3)?;
        vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }

    let nc = header(&mut lines, "CELLS")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, t) = lines.expect("cell")?;
        let idx: Vec<usize> = fields(ln, t, 8)?;
        cells.push(std::array::from_fn(|k| idx[k]));
    }

    let nb = header(&mut lines, "BOUNDARY")?;
    let mut boundary = BoundarySpec::default();
    let mut patch_ids: HashMap<String, usize> = HashMap::new();
    for _ in 0..nb {
        let (ln, t) = lines.expect("boundary face")?;
        let parts: Vec<&str> = t.split_whitespace().collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(parse_err(ln, "expected `cell localFace tagName [value]`"));
        }
        let cell: usize = parts[0].parse().map_err(|_| parse_err(ln, "bad cell index"))?;
        let local: usize = parts[1].parse().map_err(|_| parse_err(ln, "bad local face"))?;
        if local > 5 || cell >= cells.len() {
            return Err(parse_err(ln, format!("face ({cell}, {local}) out of range")));
        }
        let value = match parts.get(3) {
            Some(v) => Some(v.parse::<f64>().map_err(|_| parse_err(ln, format!("bad value `{v}`")))?),
            None => None,
        };
        let tag = BoundaryTag::from_name(parts[2], value)
            .ok_or_else(|| parse_err(ln, format!("unknown tag `{}`", t.split_once(' ').map_or(t, |x| x.1))))?;
        let patch_name = tag.to_string();
        let next = patch_ids.len();
        let patch = *patch_ids.entry(patch_name.clone()).or_insert_with(|| {
            boundary.patches.push(patch_name);
            next
        });
        if boundary.faces.insert(FaceSlot::new(cell, local), (patch, tag)).is_some() {
            return Err(parse_err(ln, format!("face ({cell}, {local}) tagged twice")));
        }
    }

    let mut periodic = Vec::new();
    if let Some((ln, t)) = lines.next_content() {
        let np = section_count(ln, t, "PERIODIC")?;
        for _ in 0..np {
            let (ln, t) = lines.expect("periodic link")?;
            let v: Vec<usize> = fields(ln, t, 4)?;
            if v[1] > 5 || v[3] > 5 || v[0] >= cells.len() || v[2] >= cells.len() {
                return Err(parse_err(ln, "periodic link out of range"));
            }
            periodic.push((FaceSlot::new(v[0], v[1]), FaceSlot::new(v[2], v[3])));
        }
        if let Some((ln, t)) = lines.next_content() {
            return Err(parse_err(ln, format!("unexpected content `{t}`")));
        }
    }
    Ok(RawMesh { vertices, cells, boundary, periodic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_annulus, generate_box, BoxSpec, ThermalCondition};

    #[test]
    fn box_round_trips_bit_exactly() {
        let mut m = generate_box(&BoxSpec::new([3, 2, 2], [0.3, 0.7, 1.1]).with_grading([2.0, 1.0, 0.5])).unwrap();
        m.set_patch_tag("xmin", BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(313.15))).unwrap();
        m.set_patch_tag("zmax", BoundaryTag::FreeSlip(ThermalCondition::Adiabatic)).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells(), m.cells());
        for f in m.faces() {
            assert_eq!(back.boundary_tag(f.owner), m.boundary_tag(f.owner));
        }
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn periodic_links_round_trip() {
        let m = generate_box(&BoxSpec::new([3, 2, 1], [1.0; 3]).with_periodic([true, false, false])).unwrap();
        let text = write_mesh(&m);
        assert!(text.contains("PERIODIC 2"));
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.num_interior_faces(), m.num_interior_faces());
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn annulus_round_trips() {
        let m = generate_annulus(2, 12, 1, 0.05, 0.115, 0.02).unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.num_interior_faces(), m.num_interior_faces());
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = read_mesh("VERTICES 1\n0 0\n").unwrap_err();
        assert!(matches!(err, MeshIoError::Parse { line: 2, .. }), "{err}");
        let err = read_mesh("CELLS 0\n").unwrap_err();
        assert!(matches!(err, MeshIoError::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_tag_is_rejected() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let text = write_mesh(&m).replacen("noslip-adiabatic", "sticky", 1);
        let err = read_mesh(&text).unwrap_err();
        assert!(err.to_string().contains("unknown tag"), "{err}");
    }

    #[test]
    fn missing_boundary_tag_is_rejected() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let text = write_mesh(&m);
        let mut lines: Vec<&str> = text.lines().collect();
        let pos = lines.iter().position(|l| l.starts_with("BOUNDARY")).unwrap();
        lines[pos] = "BOUNDARY 5";
        lines.remove(pos + 1);
        let err = read_mesh(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, MeshIoError::Mesh(MeshError::MissingBoundaryTag(_))), "{err}");
    }

    #[test]
    fn check_reports_collapsed_cell_instead_of_failing() {
        let m = generate_box(&BoxSpec::new([2, 1, 1], [1.0; 3])).unwrap();
        let text = write_mesh(&m);
        assert!(check_mesh(&text).unwrap().is_ok());
        let c1 = m.cells()[1];
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        for k in [1, 3, 5, 7] {
            let v = m.vertices()[c1[k - 1]];
            lines[1 + c1[k]] = format!("{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
        }
        let report = check_mesh(&lines.join("\n")).unwrap();
        assert!(report.findings.iter().any(|f| matches!(f, Finding::DegenerateCell { cell: 1, .. })), "{report}");
        assert!(read_mesh(&lines.join("\n")).is_err());
    }
}
