//! Connection step: port values from adjacent nodes through flux continuity.
//!
//! For face `ι` of a cell with node value `Zⁿ` the nodal quantities are
//! `z_μ = 2(-1)^ι Zⁿ` for `μ = ⌊ι/2⌋` and the opposite-port difference
//! `Z_{2μ+1} - Z_{2μ}` (previous port level) otherwise. With the weight
//! `w_ι = (-1)^ι s[ι][⌊ι/2⌋]` and the tangential sum
//! `t_ι = Σ_{μ≠⌊ι/2⌋} s[ι][μ] z_μ`, the face flux reads
//! `ιS = t_ι + 2 w_ι (Zⁿ - Zᵖ)`, and equal-and-opposite fluxes on a shared
//! face fix the port value.

use thiserror::Error;

use crate::geometry::{parity, CellGeometry, Vec3};
use crate::mesh::{BoundaryTag, FaceKind, FaceSlot, Mesh, ThermalCondition};
use crate::state::{FieldId, FieldState};

/// Relative threshold on `|w_ζ + w_χ|` (in units of the cell length).
pub const DENOMINATOR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("near-singular port denominator {magnitude:e} at cell {} face {}", slot.cell, slot.local)]
    NearSingularDenominator { slot: FaceSlot, magnitude: f64 },
}

/// Nodal vector `ι z_μⁿ` of face `iota`.
pub fn assemble_znode(node_value: f64, ports_prev: &[f64; 6], iota: usize) -> [f64; 3] {
    std::array::from_fn(|mu| {
        if mu == iota / 2 {
            2.0 * parity(iota) * node_value
        } else {
            ports_prev[2 * mu + 1] - ports_prev[2 * mu]
        }
    })
}

/// `t_ι`: the flux contribution of the directions along the face.
#[inline]
pub fn tangential_flux(geom: &CellGeometry, iota: usize, ports_prev: &[f64; 6]) -> f64 {
    let m = iota / 2;
    let s = &geom.flux_coeffs[iota];
    (0..3).filter(|&mu| mu != m).map(|mu| s[mu] * (ports_prev[2 * mu + 1] - ports_prev[2 * mu])).sum()
}

/// Face flux for a given port value.
#[inline]
pub fn flux_from_port(
    geom: &CellGeometry,
    iota: usize,
    node_value: f64,
    ports_prev: &[f64; 6],
    port_value: f64,
) -> f64 {
    tangential_flux(geom, iota, ports_prev) + 2.0 * geom.normal_weight(iota) * (node_value - port_value)
}

/// One side of a shared face: geometry, local face, node value, port levels.
#[derive(Clone, Copy)]
pub struct Side<'a> {
    pub geom: &'a CellGeometry,
    pub local: usize,
    pub node: f64,
    pub ports_prev: &'a [f64; 6],
}

impl Side<'_> {
    fn weight(&self) -> f64 {
        self.geom.normal_weight(self.local)
    }

    fn tangential(&self) -> f64 {
        tangential_flux(self.geom, self.local, self.ports_prev)
    }
}

/// Interior port value from flux continuity, written relative to side `a`
/// so that a uniform field maps to itself exactly.
#[inline]
pub fn interior_port_value(a: Side<'_>, b: Side<'_>) -> f64 {
    let (wa, wb) = (a.weight(), b.weight());
    a.node + (wb * (b.node - a.node) + 0.5 * (a.tangential() + b.tangential())) / (wa + wb)
}

/// Port value giving zero flux through a boundary face.
#[inline]
pub fn zero_flux_port_value(side: Side<'_>) -> f64 {
    side.node + side.tangential() / (2.0 * side.weight())
}

/// Gradient reconstructed on face `iota` from the nodal differences along
/// the node vectors, mapped through the dual basis.
pub fn face_gradient_from(
    geom: &CellGeometry,
    iota: usize,
    node_value: f64,
    ports_prev: &[f64; 6],
    port_value: f64,
) -> Vec3 {
    let mut along = Vec3::zeros();
    for mu in 0..3 {
        along[mu] = if mu == iota / 2 {
            2.0 * parity(iota) * (node_value - port_value)
        } else {
            ports_prev[2 * mu + 1] - ports_prev[2 * mu]
        };
    }
    geom.gamma * along
}

fn side<'a>(mesh: &'a Mesh, state: &'a FieldState, field: FieldId, slot: FaceSlot) -> Side<'a> {
    Side {
        geom: mesh.geometry(slot.cell),
        local: slot.local,
        node: state.node(field)[slot.cell],
        ports_prev: &state.port_prev(field)[slot.cell],
    }
}

pub(crate) fn check_denominator(
    ga: &CellGeometry,
    ia: usize,
    gb: &CellGeometry,
    ib: usize,
    slot: FaceSlot,
) -> Result<(), ConnectionError> {
    let d = (ga.normal_weight(ia) + gb.normal_weight(ib)).abs();
    let scale = ga.length_scale().min(gb.length_scale());
    if d >= DENOMINATOR_REL_TOL * scale {
        Ok(())
    } else {
        Err(ConnectionError::NearSingularDenominator { slot, magnitude: d })
    }
}

/// Update the shared port of interior face `face` for one field, writing
/// both slots and the equal-and-opposite fluxes. Returns the port value.
pub fn connect_interior_face(
    mesh: &Mesh,
    state: &mut FieldState,
    face: usize,
    field: FieldId,
) -> Result<f64, ConnectionError> {
    let rec = *mesh.face(face);
    let FaceKind::Interior { neighbor } = rec.kind else {
        panic!("connect_interior_face called on boundary face {face}");
    };
    let (a, b) = (rec.owner, neighbor);
    let (ga, gb) = (mesh.geometry(a.cell), mesh.geometry(b.cell));
    check_denominator(ga, a.local, gb, b.local, a)?;
    let sa = side(mesh, state, field, a);
    let sb = side(mesh, state, field, b);
    let value = interior_port_value(sa, sb);
    let flux = flux_from_port(ga, a.local, sa.node, sa.ports_prev, value);
    let f = field.index();
    state.port[f][a.cell][a.local] = value;
    state.port[f][b.cell][b.local] = value;
    state.flux[f][a.cell][a.local] = flux;
    state.flux[f][b.cell][b.local] = -flux;
    Ok(value)
}

/// Apply the boundary condition of a boundary face to every field.
pub fn connect_boundary_face(mesh: &Mesh, state: &mut FieldState, face: usize) {
    let rec = *mesh.face(face);
    let FaceKind::Boundary { tag, .. } = rec.kind else {
        panic!("connect_boundary_face called on interior face {face}");
    };
    let slot = rec.owner;
    let geom = mesh.geometry(slot.cell);
    let (c, l) = (slot.cell, slot.local);

    // temperature
    let t = FieldId::Temperature.index();
    match tag.thermal() {
        ThermalCondition::FixedTemperature(value) => {
            state.port[t][c][l] = value;
            state.flux[t][c][l] = flux_from_port(geom, l, state.node[t][c], &state.port_prev[t][c], value);
        }
        ThermalCondition::Adiabatic => {
            state.port[t][c][l] = zero_flux_port_value(side(mesh, state, FieldId::Temperature, slot));
            state.flux[t][c][l] = 0.0;
        }
    }

    // pressure: zero normal gradient everywhere
    let p = FieldId::Pressure.index();
    state.port[p][c][l] = zero_flux_port_value(side(mesh, state, FieldId::Pressure, slot));
    state.flux[p][c][l] = 0.0;

    // velocity
    let mut u = Vec3::zeros();
    if let BoundaryTag::FreeSlip(_) = tag {
        for (k, field) in FieldId::VELOCITY.into_iter().enumerate() {
            u[k] = zero_flux_port_value(side(mesh, state, field, slot));
        }
        let n = geom.faces[l].normalize();
        u -= n * u.dot(&n);
    }
    for (k, field) in FieldId::VELOCITY.into_iter().enumerate() {
        let f = field.index();
        state.port[f][c][l] = u[k];
        state.flux[f][c][l] = flux_from_port(geom, l, state.node[f][c], &state.port_prev[f][c], u[k]);
    }
}

/// Full connection step: every field on every face.
pub fn connect(mesh: &Mesh, state: &mut FieldState) -> Result<(), ConnectionError> {
    for (i, face) in mesh.faces().iter().enumerate() {
        if face.is_interior() {
            for field in FieldId::ALL {
                connect_interior_face(mesh, state, i, field)?;
            }
        } else {
            connect_boundary_face(mesh, state, i);
        }
    }
    Ok(())
}

/// Connection restricted to one field; boundary faces apply that field's rule.
pub fn connect_field(mesh: &Mesh, state: &mut FieldState, field: FieldId) -> Result<(), ConnectionError> {
    for (i, face) in mesh.faces().iter().enumerate() {
        if face.is_interior() {
            connect_interior_face(mesh, state, i, field)?;
        } else {
            // the boundary rule couples the velocity components, so restore
            // the untouched fields afterwards
            let slot = face.owner;
            let saved: Vec<(f64, f64)> = FieldId::ALL
                .iter()
                .map(|fid| {
                    (state.port[fid.index()][slot.cell][slot.local], state.flux[fid.index()][slot.cell][slot.local])
                })
                .collect();
            connect_boundary_face(mesh, state, i);
            for fid in FieldId::ALL {
                if fid != field {
                    let (pv, fv) = saved[fid.index()];
                    state.port[fid.index()][slot.cell][slot.local] = pv;
                    state.flux[fid.index()][slot.cell][slot.local] = fv;
                }
            }
        }
    }
    Ok(())
}

/// Flux `ιS` recomputed from the current port value.
pub fn face_flux(mesh: &Mesh, state: &FieldState, slot: FaceSlot, field: FieldId) -> f64 {
    let geom = mesh.geometry(slot.cell);
    let f = field.index();
    flux_from_port(
        geom,
        slot.local,
        state.node[f][slot.cell],
        &state.port_prev[f][slot.cell],
        state.port[f][slot.cell][slot.local],
    )
}

/// Gradient on one side of a face.
pub fn face_gradient(mesh: &Mesh, state: &FieldState, slot: FaceSlot, field: FieldId) -> Vec3 {
    let f = field.index();
    face_gradient_from(
        mesh.geometry(slot.cell),
        slot.local,
        state.node[f][slot.cell],
        &state.port_prev[f][slot.cell],
        state.port[f][slot.cell][slot.local],
    )
}

/// Face gradient shared by both sides: arithmetic mean of the two one-sided
/// reconstructions on interior faces.
pub fn shared_face_gradient(mesh: &Mesh, state: &FieldState, slot: FaceSlot, field: FieldId) -> Vec3 {
    let own = face_gradient(mesh, state, slot, field);
    match mesh.neighbor(slot) {
        Some(other) => 0.5 * (own + face_gradient(mesh, state, other, field)),
        None => own,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HexVertices;
    use crate::mesh::{generate_box, BoundarySpec, BoxSpec};
    use crate::state::InitialCondition;

    fn two_cubes() -> Mesh {
        generate_box(&BoxSpec::new([2, 1, 1], [2.0, 1.0, 1.0])).unwrap()
    }

    fn all_fixed(mesh: &mut Mesh, value: f64) {
        for p in mesh.patches().to_vec() {
            mesh.set_patch_tag(&p, BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(value))).unwrap();
        }
    }

    #[test]
    fn uniform_znode_has_only_normal_component() {
        let ports = [3.0; 6];
        for iota in 0..6 {
            let z = assemble_znode(3.0, &ports, iota);
            for mu in 0..3 {
                let expected = if mu == iota / 2 { 2.0 * parity(iota) * 3.0 } else { 0.0 };
                assert_eq!(z[mu], expected);
            }
        }
        assert_eq!(assemble_znode(1.0, &ports, 0)[0], -assemble_znode(1.0, &ports, 1)[0]);
    }

    #[test]
    fn linear_znode_on_unit_cube() {
        let g = CellGeometry::new(&HexVertices::unit_cube()).unwrap();
        let a = Vec3::new(0.7, -1.3, 2.1);
        let z = |x: Vec3| 0.4 + a.dot(&x);
        let ports: [f64; 6] = std::array::from_fn(|i| z(g.face_centers[i]));
        let zn = assemble_znode(z(g.center), &ports, 0);
        assert!((zn[0] - 2.0 * z(g.center)).abs() < 1e-15);
        assert!((zn[1] - a.y).abs() < 1e-15);
        assert!((zn[2] - a.z).abs() < 1e-15);
    }

    #[test]
    fn steady_linear_profile_gives_midpoint_and_antisymmetric_flux() {
        let mut m = two_cubes();
        all_fixed(&mut m, 0.0);
        let a = Vec3::new(3.0, 0.0, 0.0);
        let init = InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_temperature(move |x| 10.0 + a.dot(&x));
        let mut s = FieldState::initialize(&m, &init);
        let face = (0..m.faces().len()).find(|&i| m.face(i).is_interior()).unwrap();
        let v = connect_interior_face(&m, &mut s, face, FieldId::Temperature).unwrap();
        assert!((v - 13.0).abs() < 1e-12);
        let fa = s.flux(FieldId::Temperature)[0][1];
        let fb = s.flux(FieldId::Temperature)[1][0];
        assert!((fa - 3.0).abs() < 1e-12);
        assert_eq!(fa, -fb);
        let recomputed = face_flux(&m, &s, FaceSlot::new(1, 0), FieldId::Temperature);
        assert!((recomputed + fa).abs() < 1e-12);
    }

    #[test]
    fn uniform_field_is_a_fixed_point() {
        let mut m = two_cubes();
        all_fixed(&mut m, 42.0);
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(42.0, Vec3::zeros(), 5.0));
        let before = s.clone();
        connect(&m, &mut s).unwrap();
        assert_eq!(s.port, before.port);
        assert!(s.flux.iter().flatten().flatten().all(|&f| f == 0.0));
    }

    #[test]
    fn mirror_symmetric_antisymmetric_data_gives_symmetry_value() {
        let m = two_cubes();
        let init = InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_temperature(|x| {
            if x.x < 1.0 {
                5.0 - (1.0 - x.x)
            } else {
                5.0 + (x.x - 1.0)
            }
        });
        let mut s = FieldState::initialize(&m, &init);
        let face = (0..m.faces().len()).find(|&i| m.face(i).is_interior()).unwrap();
        let v = connect_interior_face(&m, &mut s, face, FieldId::Temperature).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
    }

    #[test]
    fn fixed_temperature_boundary_is_exact() {
        let mut m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        all_fixed(&mut m, 350.0);
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        connect(&m, &mut s).unwrap();
        assert!(s.port(FieldId::Temperature)[0].iter().all(|&t| t == 350.0));
        // flux into a colder cell through a unit face at half-cell distance
        assert!(s.flux(FieldId::Temperature)[0].iter().all(|&f| (f - 100.0).abs() < 1e-12));
    }

    #[test]
    fn adiabatic_uniform_interior() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        s.node[0][0] = 310.0;
        connect(&m, &mut s).unwrap();
        assert!(s.port(FieldId::Temperature)[0].iter().all(|&t| t == 310.0));
        assert!(s.flux(FieldId::Temperature)[0].iter().all(|&f| f == 0.0));
    }

    #[test]
    fn no_slip_zeroes_port_velocity() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::new(1.0, 0.0, 0.0), 0.0));
        connect(&m, &mut s).unwrap();
        for l in 0..6 {
            assert_eq!(s.port_velocity(0, l), Vec3::zeros());
        }
        let g = face_gradient(&m, &s, FaceSlot::new(0, 2), FieldId::VelocityX);
        assert!((g.y - 2.0).abs() < 1e-14, "{g}");
        assert!(g.norm() > 0.0);
    }

    #[test]
    fn free_slip_removes_normal_velocity_only() {
        let mut m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        for p in m.patches().to_vec() {
            m.set_patch_tag(&p, BoundaryTag::FreeSlip(ThermalCondition::Adiabatic)).unwrap();
        }
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::new(1.0, 2.0, 0.0), 0.0));
        connect(&m, &mut s).unwrap();
        // x faces keep the tangential y component
        assert_eq!(s.port_velocity(0, 1), Vec3::new(0.0, 2.0, 0.0));
        assert_eq!(s.port_velocity(0, 2), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(s.port_velocity(0, 5), Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn connect_field_leaves_other_fields() {
        let mut m = generate_box(&BoxSpec::new([2, 2, 1], [1.0; 3])).unwrap();
        all_fixed(&mut m, 400.0);
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::new(1.0, 0.0, 0.0), 0.0));
        let before = s.clone();
        connect_field(&m, &mut s, FieldId::Temperature).unwrap();
        assert_eq!(s.port[1], before.port[1]);
        assert_ne!(s.port[0], before.port[0]);
    }

    #[test]
    fn sheared_pair_reproduces_linear_field() {
        // two sheared cells sharing a face
        let verts: Vec<Vec3> = (0..12)
            .map(|k| {
                let i = (k % 3) as f64;
                let j = ((k / 3) % 2) as f64;
                let l = (k / 6) as f64;
                Vec3::new(i + 0.3 * j + 0.1 * l, j + 0.2 * i * i * 0.0, l + 0.15 * i)
            })
            .collect();
        let vid = |i: usize, j: usize, l: usize| i + 3 * (j + 2 * l);
        let cells: Vec<[usize; 8]> =
            (0..2).map(|i| std::array::from_fn(|c| vid(i + (c & 1), (c >> 1) & 1, (c >> 2) & 1))).collect();
        let spec = BoundarySpec {
            patches: vec!["wall".into()],
            default: Some((0, BoundaryTag::NoSlipWall(ThermalCondition::Adiabatic))),
            ..Default::default()
        };
        let m = Mesh::from_parts(verts, cells, vec![], spec).unwrap();
        let a = Vec3::new(1.5, -0.5, 2.0);
        let init = InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_temperature(move |x| a.dot(&x) - 1.0);
        let mut s = FieldState::initialize(&m, &init);
        let exact = s.port.clone();
        let face = (0..m.faces().len()).find(|&i| m.face(i).is_interior()).unwrap();
        connect_interior_face(&m, &mut s, face, FieldId::Temperature).unwrap();
        let slot = m.face(face).owner;
        assert!((s.port[0][slot.cell][slot.local] - exact[0][slot.cell][slot.local]).abs() < 1e-12);
        let g = face_gradient(&m, &s, slot, FieldId::Temperature);
        assert!((g - a).norm() < 1e-12);
        let flux = s.flux(FieldId::Temperature)[slot.cell][slot.local];
        assert!((flux - m.geometry(slot.cell).faces[slot.local].dot(&a)).abs() < 1e-12);
    }
}
