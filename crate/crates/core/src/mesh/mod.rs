//! Hexahedral cell complexes: connectivity, face adjacency and boundary tags.

mod generate;
mod io;
mod validate;

pub use generate::{generate_annulus, generate_box, BoxSpec};
pub use io::{check_mesh, read_mesh, read_mesh_file, write_mesh, write_mesh_file, MeshIoError};
pub use validate::{validate_mesh, Finding, ValidationReport};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::{face_corners, CellGeometry, GeometryError, HexVertices, Vec3};

/// Thermal part of a boundary condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalCondition {
    /// Prescribed wall temperature in kelvin.
    FixedTemperature(f64),
    Adiabatic,
}

/// Boundary condition carried by every boundary face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryTag {
    NoSlipWall(ThermalCondition),
    FreeSlip(ThermalCondition),
}

impl BoundaryTag {
    pub fn thermal(&self) -> ThermalCondition {
        match *self {
            BoundaryTag::NoSlipWall(t) | BoundaryTag::FreeSlip(t) => t,
        }
    }

    pub fn is_no_slip(&self) -> bool {
        matches!(self, BoundaryTag::NoSlipWall(_))
    }

    /// Tag name used in mesh files, e.g. `noslip-fixed`.
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryTag::NoSlipWall(ThermalCondition::Adiabatic) => "noslip-adiabatic",
            BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(_)) => "noslip-fixed",
            BoundaryTag::FreeSlip(ThermalCondition::Adiabatic) => "freeslip-adiabatic",
            BoundaryTag::FreeSlip(ThermalCondition::FixedTemperature(_)) => "freeslip-fixed",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self.thermal() {
            ThermalCondition::FixedTemperature(t) => Some(t),
            ThermalCondition::Adiabatic => None,
        }
    }

    pub fn from_name(name: &str, value: Option<f64>) -> Option<Self> {
        let thermal = |fixed: bool| -> Option<ThermalCondition> {
            match (fixed, value) {
                (true, Some(v)) => Some(ThermalCondition::FixedTemperature(v)),
                (false, None) => Some(ThermalCondition::Adiabatic),
                _ => None,
            }
        };
        match name {
            "noslip-adiabatic" => thermal(false).map(BoundaryTag::NoSlipWall),
            "noslip-fixed" => thermal(true).map(BoundaryTag::NoSlipWall),
            "freeslip-adiabatic" => thermal(false).map(BoundaryTag::FreeSlip),
            "freeslip-fixed" => thermal(true).map(BoundaryTag::FreeSlip),
            _ => None,
        }
    }
}

impl Default for BoundaryTag {
    fn default() -> Self {
        BoundaryTag::NoSlipWall(ThermalCondition::Adiabatic)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{} {}", self.name(), v),
            None => f.write_str(self.name()),
        }
    }
}

/// A (cell, local face) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceSlot {
    pub cell: usize,
    pub local: usize,
}

impl FaceSlot {
    pub fn new(cell: usize, local: usize) -> Self {
        FaceSlot { cell, local }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceKind {
    Interior { neighbor: FaceSlot },
    Boundary { patch: usize, tag: BoundaryTag },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub owner: FaceSlot,
    pub kind: FaceKind,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        matches!(self.kind, FaceKind::Interior { .. })
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("cell {cell} references vertex {vertex} but only {count} vertices exist")]
    VertexIndex { cell: usize, vertex: usize, count: usize },
    #[error("cell {cell}: {source}")]
    Geometry {
        cell: usize,
        #[source]
        source: GeometryError,
    },
    #[error("face {0:?} is shared by more than two cells")]
    NonManifold(FaceSlot),
    #[error("face slot {0:?} is linked twice")]
    DuplicateLink(FaceSlot),
    #[error("boundary face {0:?} has no tag")]
    MissingBoundaryTag(FaceSlot),
    #[error("face slot {0:?} is not a boundary face")]
    NotBoundary(FaceSlot),
    #[error("unknown patch `{0}`")]
    UnknownPatch(String),
}

/// Boundary description handed to [`Mesh::from_parts`].
#[derive(Debug, Clone, Default)]
pub struct BoundarySpec {
    pub patches: Vec<String>,
    /// Patch index and tag per boundary slot; unlisted slots fall back to
    /// `default` when set.
    pub faces: HashMap<FaceSlot, (usize, BoundaryTag)>,
    pub default: Option<(usize, BoundaryTag)>,
}

/// Immutable hexahedral mesh with full face adjacency and per-cell geometry.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 8]>,
    geometry: Vec<CellGeometry>,
    faces: Vec<Face>,
    slot_faces: Vec<[usize; 6]>,
    patches: Vec<String>,
    periodic: Vec<(FaceSlot, FaceSlot)>,
}

/// Sorted global vertex indices of a local face.
pub(crate) fn face_key(cell: &[usize; 8], local: usize) -> [usize; 4] {
    let mut key = face_corners(local).map(|k| cell[k]);
    key.sort_unstable();
    key
}

/// Paired slots and unmatched (boundary) slots.
pub(crate) type FaceMatching = (Vec<(FaceSlot, FaceSlot)>, Vec<FaceSlot>);

/// Pure combinatorial adjacency.
pub(crate) fn match_faces(cells: &[[usize; 8]], periodic: &[(FaceSlot, FaceSlot)]) -> Result<FaceMatching, MeshError> {
    let mut linked: HashMap<FaceSlot, FaceSlot> = HashMap::new();
    for &(a, b) in periodic {
        for s in [a, b] {
            if linked.contains_key(&s) {
                return Err(MeshError::DuplicateLink(s));
            }
        }
        linked.insert(a, b);
        linked.insert(b, a);
    }
    let mut open: HashMap<[usize; 4], FaceSlot> = HashMap::new();
    let mut pairs = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        for local in 0..6 {
            let slot = FaceSlot::new(c, local);
            if linked.contains_key(&slot) {
                continue;
            }
            let key = face_key(cell, local);
            match open.remove(&key) {
                Some(other) => {
                    linked.insert(slot, other);
                    linked.insert(other, slot);
                    pairs.push((other, slot));
                }
                None => {
                    open.insert(key, slot);
                }
            }
        }
    }
    // a third slot with an already matched key shows up as a stray open slot
    // sharing the key with a matched pair
    let mut matched_keys: HashMap<[usize; 4], usize> = HashMap::new();
    for (a, _) in &pairs {
        *matched_keys.entry(face_key(&cells[a.cell], a.local)).or_default() += 1;
    }
    let mut boundary: Vec<FaceSlot> = open
        .into_iter()
        .map(|(key, slot)| if matched_keys.contains_key(&key) { Err(MeshError::NonManifold(slot)) } else { Ok(slot) })
        .collect::<Result<_, _>>()?;
    boundary.sort_unstable();
    pairs.extend(periodic.iter().copied());
    pairs.sort_unstable();
    Ok((pairs, boundary))
}

impl Mesh {
    /// Build adjacency and geometry. Faces are matched by their sorted vertex
    /// keys; `periodic` links additional slot pairs explicitly.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 8]>,
        periodic: Vec<(FaceSlot, FaceSlot)>,
        boundary: BoundarySpec,
    ) -> Result<Self, MeshError> {
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::VertexIndex { cell: c, vertex: v, count: vertices.len() });
            }
        }
        let geometry = cells
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let hex = HexVertices::from_fn(|k| vertices[cell[k]]);
                CellGeometry::new(&hex).map_err(|source| MeshError::Geometry { cell: c, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (pairs, open) = match_faces(&cells, &periodic)?;

        let mut faces = Vec::with_capacity(pairs.len() + open.len());
        let mut slot_faces = vec![[usize::MAX; 6]; cells.len()];
        for (a, b) in pairs {
            slot_faces[a.cell][a.local] = faces.len();
            slot_faces[b.cell][b.local] = faces.len();
            faces.push(Face { owner: a, kind: FaceKind::Interior { neighbor: b } });
        }
        for slot in open {
            let (patch, tag) =
                boundary.faces.get(&slot).copied().or(boundary.default).ok_or(MeshError::MissingBoundaryTag(slot))?;
            slot_faces[slot.cell][slot.local] = faces.len();
            faces.push(Face { owner: slot, kind: FaceKind::Boundary { patch, tag } });
        }
        Ok(Mesh { vertices, cells, geometry, faces, slot_faces, patches: boundary.patches, periodic })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 8]] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn geometries(&self) -> &[CellGeometry] {
        &self.geometry
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, index: usize) -> &Face {
        &self.faces[index]
    }

    /// Global face index of a cell slot.
    pub fn face_of(&self, slot: FaceSlot) -> usize {
        self.slot_faces[slot.cell][slot.local]
    }

    /// The other slot of an interior face.
    pub fn neighbor(&self, slot: FaceSlot) -> Option<FaceSlot> {
        match self.faces[self.face_of(slot)] {
            Face { owner, kind: FaceKind::Interior { neighbor } } => Some(if owner == slot { neighbor } else { owner }),
            _ => None,
        }
    }

    pub fn boundary_tag(&self, slot: FaceSlot) -> Option<BoundaryTag> {
        match self.faces[self.face_of(slot)].kind {
            FaceKind::Boundary { tag, .. } => Some(tag),
            FaceKind::Interior { .. } => None,
        }
    }

    pub fn patches(&self) -> &[String] {
        &self.patches
    }

    pub fn patch_index(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p == name)
    }

    pub fn periodic_links(&self) -> &[(FaceSlot, FaceSlot)] {
        &self.periodic
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.len() - self.num_interior_faces()
    }

    /// Boundary slots belonging to a patch.
    pub fn patch_faces(&self, patch: usize) -> impl Iterator<Item = FaceSlot> + '_ {
        self.faces.iter().filter_map(move |f| match f.kind {
            FaceKind::Boundary { patch: p, .. } if p == patch => Some(f.owner),
            _ => None,
        })
    }

    /// Replace the tag of every face on `patch`.
    pub fn set_patch_tag(&mut self, patch: &str, tag: BoundaryTag) -> Result<(), MeshError> {
        let idx = self.patch_index(patch).ok_or_else(|| MeshError::UnknownPatch(patch.to_string()))?;
        for f in &mut self.faces {
            if let FaceKind::Boundary { patch: p, tag: t } = &mut f.kind {
                if *p == idx {
                    *t = tag;
                }
            }
        }
        Ok(())
    }

    pub fn set_face_tag(&mut self, slot: FaceSlot, tag: BoundaryTag) -> Result<(), MeshError> {
        let idx = self.face_of(slot);
        match &mut self.faces[idx].kind {
            FaceKind::Boundary { tag: t, .. } => {
                *t = tag;
                Ok(())
            }
            FaceKind::Interior { .. } => Err(MeshError::NotBoundary(slot)),
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    /// Sum of face areas over unique faces.
    pub fn total_face_area(&self) -> f64 {
        self.faces.iter().map(|f| self.geometry[f.owner.cell].face_area(f.owner.local)).sum()
    }

    /// Cells owning at least one face on `patch`.
    pub fn cells_adjacent_to_patch(&self, patch: usize) -> Vec<usize> {
        let mut cells: Vec<usize> = self.patch_faces(patch).map(|s| s.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate_built(self)
    }

    /// Same topology and boundary tags with every vertex moved by `f`.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Mesh, MeshError> {
        let mut boundary = BoundarySpec { patches: self.patches.clone(), ..Default::default() };
        for face in &self.faces {
            if let FaceKind::Boundary { patch, tag } = face.kind {
                boundary.faces.insert(face.owner, (patch, tag));
            }
        }
        let vertices = self.vertices.iter().map(|&v| f(v)).collect();
        Mesh::from_parts(vertices, self.cells.clone(), self.periodic.clone(), boundary)
    }
}
