//! Structured mesh generators.

use std::f64::consts::PI;

use super::{BoundarySpec, BoundaryTag, FaceSlot, Mesh, MeshError};
use crate::geometry::Vec3;

/// Parameters of a structured box mesh on `[0, lx] x [0, ly] x [0, lz]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub cells: [usize; 3],
    pub lengths: [f64; 3],
    /// Ratio of last to first cell size along each axis (1 = uniform).
    pub grading: [f64; 3],
    /// Link opposite boundary faces along an axis.
    pub periodic: [bool; 3],
}

impl BoxSpec {
    pub fn new(cells: [usize; 3], lengths: [f64; 3]) -> Self {
        BoxSpec { cells, lengths, grading: [1.0; 3], periodic: [false; 3] }
    }

    pub fn with_grading(mut self, grading: [f64; 3]) -> Self {
        self.grading = grading;
        self
    }

    pub fn with_periodic(mut self, periodic: [bool; 3]) -> Self {
        self.periodic = periodic;
        self
    }
}

/// Node coordinates along one axis with geometric grading.
fn graded_nodes(n: usize, length: f64, ratio: f64) -> Vec<f64> {
    if n == 1 || (ratio - 1.0).abs() < 1e-15 {
        return (0..=n).map(|i| length * i as f64 / n as f64).collect();
    }
    let q = ratio.powf(1.0 / (n as f64 - 1.0));
    let mut sizes: Vec<f64> = (0..n).map(|i| q.powi(i as i32)).collect();
    let total: f64 = sizes.iter().sum();
    sizes.iter_mut().for_each(|s| *s *= length / total);
    let mut x = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    x.push(0.0);
    for (i, s) in sizes.iter().enumerate() {
        acc += s;
        x.push(if i + 1 == n { length } else { acc });
    }
    x
}

const BOX_PATCHES: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

/// Structured hexahedral box. Boundary patches are named `xmin` .. `zmax`
/// and tagged no-slip adiabatic until reassigned.
pub fn generate_box(spec: &BoxSpec) -> Result<Mesh, MeshError> {
    let [nx, ny, nz] = spec.cells;
    if spec.cells.contains(&0) {
        return Err(MeshError::InvalidDimensions(format!("cell counts must be >= 1, got {:?}", spec.cells)));
    }
    if !spec.lengths.iter().all(|&l| l > 0.0 && l.is_finite()) {
        return Err(MeshError::InvalidDimensions(format!("lengths must be positive, got {:?}", spec.lengths)));
    }
    if !spec.grading.iter().all(|&g| g > 0.0 && g.is_finite()) {
        return Err(MeshError::InvalidDimensions(format!("grading must be positive, got {:?}", spec.grading)));
    }
    let axes: Vec<Vec<f64>> = (0..3).map(|a| graded_nodes(spec.cells[a], spec.lengths[a], spec.grading[a])).collect();
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec3::new(axes[0][i], axes[1][j], axes[2][k]));
            }
        }
    }
    let cid = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let mut cells = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                cells.push(std::array::from_fn(|c| vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))));
            }
        }
    }

    let mut periodic = Vec::new();
    let mut boundary =
        BoundarySpec { patches: BOX_PATCHES.iter().map(|s| s.to_string()).collect(), ..Default::default() };
    let n = [nx, ny, nz];
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for q in 0..n[b] {
            for p in 0..n[a] {
                let mut lo = [0; 3];
                lo[a] = p;
                lo[b] = q;
                let mut hi = lo;
                hi[axis] = n[axis] - 1;
                let lo_slot = FaceSlot::new(cid(lo[0], lo[1], lo[2]), 2 * axis);
                let hi_slot = FaceSlot::new(cid(hi[0], hi[1], hi[2]), 2 * axis + 1);
                if spec.periodic[axis] {
                    periodic.push((lo_slot, hi_slot));
                } else {
                    boundary.faces.insert(lo_slot, (2 * axis, BoundaryTag::default()));
                    boundary.faces.insert(hi_slot, (2 * axis + 1, BoundaryTag::default()));
                }
            }
        }
    }
    Mesh::from_parts(vertices, cells, periodic, boundary)
}

const ANNULUS_PATCHES: [&str; 4] = ["inner", "outer", "zmin", "zmax"];

/// Body-fitted annulus around the z axis. Cells are indexed
/// `i_r + nr * (j_theta + ntheta * k_z)`; the theta seam closes through shared
/// vertices. Patches: `inner`, `outer`, `zmin`, `zmax`.
pub fn generate_annulus(
    nr: usize,
    ntheta: usize,
    nz: usize,
    r_inner: f64,
    r_outer: f64,
    length: f64,
) -> Result<Mesh, MeshError> {
    if nr == 0 || nz == 0 || ntheta < 8 {
        return Err(MeshError::InvalidDimensions(format!(
            "need nr >= 1, nz >= 1, ntheta >= 8; got ({nr}, {ntheta}, {nz})"
        )));
    }
    if !(r_inner > 0.0 && r_outer > r_inner && length > 0.0 && r_outer.is_finite() && length.is_finite()) {
        return Err(MeshError::InvalidDimensions(format!(
            "need 0 < r_inner < r_outer and length > 0; got ({r_inner}, {r_outer}, {length})"
        )));
    }
    let vid = |i: usize, j: usize, k: usize| i + (nr + 1) * ((j % ntheta) + ntheta * k);
    let mut vertices = Vec::with_capacity((nr + 1) * ntheta * (nz + 1));
    for k in 0..=nz {
        let z = length * k as f64 / nz as f64;
        for j in 0..ntheta {
            let theta = 2.0 * PI * j as f64 / ntheta as f64;
            let (s, c) = theta.sin_cos();
            for i in 0..=nr {
                let r = r_inner + (r_outer - r_inner) * i as f64 / nr as f64;
                vertices.push(Vec3::new(r * c, r * s, z));
            }
        }
    }
    let cid = |i: usize, j: usize, k: usize| i + nr * (j + ntheta * k);
    let mut cells = Vec::with_capacity(nr * ntheta * nz);
    for k in 0..nz {
        for j in 0..ntheta {
            for i in 0..nr {
                cells.push(std::array::from_fn(|c| vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))));
            }
        }
    }
    let mut boundary =
        BoundarySpec { patches: ANNULUS_PATCHES.iter().map(|s| s.to_string()).collect(), ..Default::default() };
    for k in 0..nz {
        for j in 0..ntheta {
            boundary.faces.insert(FaceSlot::new(cid(0, j, k), 0), (0, BoundaryTag::default()));
            boundary.faces.insert(FaceSlot::new(cid(nr - 1, j, k), 1), (1, BoundaryTag::default()));
        }
    }
    for j in 0..ntheta {
        for i in 0..nr {
            boundary.faces.insert(FaceSlot::new(cid(i, j, 0), 4), (2, BoundaryTag::default()));
            boundary.faces.insert(FaceSlot::new(cid(i, j, nz - 1), 5), (3, BoundaryTag::default()));
        }
    }
    Mesh::from_parts(vertices, cells, vec![], boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Independent count: every quad of every cell, keyed by sorted vertices.
    fn count_shared_quads(mesh: &Mesh) -> (usize, usize) {
        let mut counts: HashMap<[usize; 4], usize> = HashMap::new();
        for cell in mesh.cells() {
            for local in 0..6 {
                *counts.entry(super::super::face_key(cell, local)).or_default() += 1;
            }
        }
        let interior = counts.values().filter(|&&c| c == 2).count();
        let boundary = counts.values().filter(|&&c| c == 1).count();
        (interior, boundary)
    }

    #[test]
    fn single_cell_box() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.num_boundary_faces(), 6);
        assert_eq!(m.num_interior_faces(), 0);
    }

    #[test]
    fn two_cell_box() {
        let m = generate_box(&BoxSpec::new([2, 1, 1], [2.0, 1.0, 1.0])).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_interior_faces(), 1);
        assert_eq!(m.num_boundary_faces(), 10);
    }

    #[test]
    fn ten_by_ten_box_face_counts_match_quad_oracle() {
        let m = generate_box(&BoxSpec::new([10, 10, 1], [1.0, 1.0, 0.1])).unwrap();
        assert_eq!(m.num_cells(), 100);
        let (interior, boundary) = count_shared_quads(&m);
        assert_eq!((interior, boundary), (180, 240));
        assert_eq!(m.num_interior_faces(), interior);
        assert_eq!(m.num_boundary_faces(), boundary);
    }

    #[test]
    fn periodic_box_links_opposite_faces() {
        let m = generate_box(&BoxSpec::new([4, 3, 1], [1.0; 3]).with_periodic([true, false, false])).unwrap();
        assert_eq!(m.num_interior_faces(), 3 * 4 + 2 * 4);
        let left = FaceSlot::new(0, 0);
        assert_eq!(m.neighbor(left), Some(FaceSlot::new(3, 1)));
        assert!(m.patch_faces(0).next().is_none());
    }

    #[test]
    fn graded_nodes_keep_ratio_and_length() {
        let x = graded_nodes(5, 2.0, 4.0);
        assert_eq!(x.len(), 6);
        assert_eq!(x[5], 2.0);
        let first = x[1] - x[0];
        let last = x[5] - x[4];
        assert!((last / first - 4.0).abs() < 1e-12);
    }

    #[test]
    fn box_rejects_bad_dimensions() {
        assert!(matches!(generate_box(&BoxSpec::new([0, 1, 1], [1.0; 3])), Err(MeshError::InvalidDimensions(_))));
        assert!(matches!(
            generate_box(&BoxSpec::new([1, 1, 1], [1.0, -1.0, 1.0])),
            Err(MeshError::InvalidDimensions(_))
        ));
    }

    #[test]
    fn coarse_annulus_ring_topology() {
        let m = generate_annulus(1, 8, 1, 0.05, 0.115, 0.02).unwrap();
        assert_eq!(m.num_cells(), 8);
        assert_eq!(m.num_interior_faces(), 8);
        for c in 0..8 {
            let next = m.neighbor(FaceSlot::new(c, 3)).unwrap();
            assert_eq!(next, FaceSlot::new((c + 1) % 8, 2));
        }
        assert_eq!(m.patch_faces(0).count(), 8);
        assert_eq!(m.patch_faces(1).count(), 8);
    }

    #[test]
    fn annulus_volume_approaches_analytic() {
        let (ri, ro, l) = (0.05, 0.115, 0.02);
        let m = generate_annulus(4, 32, 1, ri, ro, l).unwrap();
        let exact = PI * (ro * ro - ri * ri) * l;
        let rel = (m.total_volume() - exact).abs() / exact;
        assert!(rel < 0.02, "relative volume error {rel}");
    }

    #[test]
    fn annulus_rejects_bad_dimensions() {
        assert!(generate_annulus(1, 7, 1, 0.05, 0.1, 0.1).is_err());
        assert!(generate_annulus(1, 8, 1, 0.0, 0.1, 0.1).is_err());
        assert!(generate_annulus(1, 8, 1, 0.2, 0.1, 0.1).is_err());
    }
}
