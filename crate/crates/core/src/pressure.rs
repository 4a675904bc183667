//! Divergence cleaning by a pressure increment.
//!
//! The face divergence integrals `I_ζ = Σ_ι u_port·f_ι` are removed by a
//! pressure increment `δp` solving `(τ/ρ) Σ_ι ιS(δp) = I_ζ - Ī` cell by cell
//! with SOR. Port values of `δp` are eliminated through flux continuity, so
//! each sweep updates nodes only; the ports follow from the same continuity
//! relation. Face velocities are corrected with the shared face gradient,
//! nodes with the nodal gradient, and `p += δp`.

use thiserror::Error;

use crate::connection::{interior_port_value, tangential_flux, zero_flux_port_value, Side};
use crate::geometry::{parity, Vec3};
use crate::mesh::{BoundaryTag, FaceKind, FaceSlot, Mesh};
use crate::reflection::{nodal_gradient, FluidProperties};
use crate::state::{FieldId, FieldState};

/// Consecutive growing sweeps that count as divergence once the residual
/// also exceeds its starting value; growth at the round-off floor is ignored.
pub const DIVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("SOR diverged after {sweeps} sweeps (residual {residual:e})")]
    SorDiverged { sweeps: usize, residual: f64 },
    #[error("projection not converged after {iterations} outer iterations: sum |I| = {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid SOR parameter {name} = {value}")]
    InvalidParams { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorParams {
    pub omega: f64,
    /// Inner tolerance on the cell residual, m³/s.
    pub eps_cell: f64,
    /// Outer tolerance on `Σ_ζ |I_ζ|`, m³/s.
    pub eps_global: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl SorParams {
    pub const DEFAULT_OMEGA: f64 = 1.5;
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_INNER: usize = 200;
    pub const DEFAULT_MAX_OUTER: usize = 50;

    /// Defaults scaled by a reference velocity and the mesh face area.
    pub fn for_mesh(mesh: &Mesh, u_ref: f64) -> Self {
        let eps_global = Self::DEFAULT_REL_TOL * u_ref * mesh.total_face_area();
        SorParams {
            omega: Self::DEFAULT_OMEGA,
            eps_cell: 0.1 * eps_global / mesh.num_cells() as f64,
            eps_global,
            max_inner: Self::DEFAULT_MAX_INNER,
            max_outer: Self::DEFAULT_MAX_OUTER,
        }
    }

    pub fn validate(&self) -> Result<(), PressureError> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(PressureError::InvalidParams { name: "omega", value: self.omega });
        }
        if !(self.eps_cell > 0.0 && self.eps_cell.is_finite()) {
            return Err(PressureError::InvalidParams { name: "eps_cell", value: self.eps_cell });
        }
        if !(self.eps_global > 0.0) {
            return Err(PressureError::InvalidParams { name: "eps_global", value: self.eps_global });
        }
        if self.max_inner == 0 {
            return Err(PressureError::InvalidParams { name: "max_inner", value: 0.0 });
        }
        Ok(())
    }
}

/// `I_ζ = Σ_ι u_port · f_ι` for every cell.
pub fn divergence_integrals(mesh: &Mesh, state: &FieldState) -> Vec<f64> {
    (0..mesh.num_cells())
        .map(|c| {
            let g = mesh.geometry(c);
            (0..6).map(|l| state.port_velocity(c, l).dot(&g.faces[l])).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Link {
    neighbor: usize,
    local: usize,
    /// Coupling coefficient `-2 w_ζ w_χ / (w_ζ + w_χ)`.
    k: f64,
    w_own: f64,
    w_other: f64,
}

/// Cell-wise coefficients of the eliminated pressure system.
#[derive(Debug, Clone)]
pub struct PressureOperator {
    links: Vec<[Option<Link>; 6]>,
    diagonal: Vec<f64>,
    /// No tangential flux coefficients anywhere: sweeps need no port refresh.
    orthogonal: bool,
}

impl PressureOperator {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_cells();
        let mut links = vec![[None; 6]; n];
        let mut diagonal = vec![0.0; n];
        let mut orthogonal = true;
        for c in 0..n {
            let g = mesh.geometry(c);
            for l in 0..6 {
                let s = g.flux_coeffs[l];
                let scale = s.iter().map(|x| x.abs()).fold(0.0, f64::max);
                if (0..3).any(|mu| mu != l / 2 && s[mu].abs() > 1e-13 * scale) {
                    orthogonal = false;
                }
                if let Some(other) = mesh.neighbor(FaceSlot::new(c, l)) {
                    let w_own = g.normal_weight(l);
                    let w_other = mesh.geometry(other.cell).normal_weight(other.local);
                    let k = -2.0 * w_own * w_other / (w_own + w_other);
                    links[c][l] = Some(Link { neighbor: other.cell, local: other.local, k, w_own, w_other });
                    diagonal[c] += k;
                }
            }
        }
        PressureOperator { links, diagonal, orthogonal }
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// Coupling coefficient of face `local` of `cell`, if interior.
    pub fn coupling(&self, cell: usize, local: usize) -> Option<(usize, f64)> {
        self.links[cell][local].map(|l| (l.neighbor, l.k))
    }

    #[inline]
    fn tangential_part(&self, mesh: &Mesh, port: &[[f64; 6]], cell: usize, l: usize, link: &Link) -> f64 {
        if self.orthogonal {
            return 0.0;
        }
        let t_own = tangential_flux(mesh.geometry(cell), l, &port[cell]);
        let t_other = tangential_flux(mesh.geometry(link.neighbor), link.local, &port[link.neighbor]);
        (link.w_other * t_own - link.w_own * t_other) / (link.w_own + link.w_other)
    }

    /// `Σ_ι ιS` of cell `cell` with ports eliminated.
    fn flux_sum(&self, mesh: &Mesh, node: &[f64], port: &[[f64; 6]], cell: usize) -> f64 {
        let mut sum = 0.0;
        for (l, link) in self.links[cell].iter().enumerate() {
            if let Some(link) = link {
                sum += link.k * (node[link.neighbor] - node[cell]) + self.tangential_part(mesh, port, cell, l, link);
            }
        }
        sum
    }

    fn refresh_cell_ports(&self, mesh: &Mesh, node: &[f64], port: &mut [[f64; 6]], cell: usize) {
        for l in 0..6 {
            let own_ports = port[cell];
            let own = Side { geom: mesh.geometry(cell), local: l, node: node[cell], ports_prev: &own_ports };
            match &self.links[cell][l] {
                Some(link) => {
                    let other_ports = port[link.neighbor];
                    let other = Side {
                        geom: mesh.geometry(link.neighbor),
                        local: link.local,
                        node: node[link.neighbor],
                        ports_prev: &other_ports,
                    };
                    let v = interior_port_value(own, other);
                    port[cell][l] = v;
                    port[link.neighbor][link.local] = v;
                }
                None => port[cell][l] = zero_flux_port_value(own),
            }
        }
    }

    /// Solve `(τ/ρ) Σ S(δp) = I - Ī` for the increment `δp`, gauged to
    /// `δp_0 = 0`.
    pub fn solve(
        &self,
        mesh: &Mesh,
        divergence: &[f64],
        tau_over_rho: f64,
        params: &SorParams,
    ) -> Result<PressureIncrement, PressureError> {
        let n = mesh.num_cells();
        let mean = divergence.iter().sum::<f64>() / n as f64;
        let target: Vec<f64> = divergence.iter().map(|d| d - mean).collect();
        let rhs: Vec<f64> = target.iter().map(|t| t / tau_over_rho).collect();
        let mut node = vec![0.0; n];
        let mut port = vec![[0.0; 6]; n];

        let residual = |node: &[f64], port: &[[f64; 6]]| -> f64 {
            (0..n).map(|c| (target[c] - tau_over_rho * self.flux_sum(mesh, node, port, c)).abs()).fold(0.0, f64::max)
        };

        let mut res = residual(&node, &port);
        let initial = res;
        let mut growth = 0;
        let mut sweeps = 0;
        while res >= params.eps_cell && sweeps < params.max_inner {
            for c in 0..n {
                let diag = self.diagonal[c];
                if diag == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for (l, link) in self.links[c].iter().enumerate() {
                    if let Some(link) = link {
                        acc += link.k * node[link.neighbor] + self.tangential_part(mesh, &port, c, l, link);
                    }
                }
                let star = (acc - rhs[c]) / diag;
                node[c] += params.omega * (star - node[c]);
                if !self.orthogonal {
                    self.refresh_cell_ports(mesh, &node, &mut port, c);
                }
            }
            sweeps += 1;
            let next = residual(&node, &port);
            if !next.is_finite() {
                return Err(PressureError::SorDiverged { sweeps, residual: next });
            }
            growth = if next > res { growth + 1 } else { 0 };
            res = next;
            if growth >= DIVERGENCE_WINDOW && res > initial {
                return Err(PressureError::SorDiverged { sweeps, residual: res });
            }
        }

        let shift = node.first().copied().unwrap_or(0.0);
        for v in &mut node {
            *v -= shift;
        }
        for p in &mut port {
            for v in p.iter_mut() {
                *v -= shift;
            }
        }
        for c in 0..n {
            self.refresh_cell_ports(mesh, &node, &mut port, c);
        }
        Ok(PressureIncrement { node, port, sweeps, residual: res })
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureIncrement {
    pub node: Vec<f64>,
    pub port: Vec<[f64; 6]>,
    pub sweeps: usize,
    /// Final max cell residual, m³/s.
    pub residual: f64,
}

impl PressureIncrement {
    /// One-sided face gradient of the increment.
    pub fn face_gradient(&self, mesh: &Mesh, slot: FaceSlot) -> Vec3 {
        let g = mesh.geometry(slot.cell);
        let ports = &self.port[slot.cell];
        let mut along = Vec3::zeros();
        for mu in 0..3 {
            along[mu] = if mu == slot.local / 2 {
                2.0 * parity(slot.local) * (self.node[slot.cell] - ports[slot.local])
            } else {
                ports[2 * mu + 1] - ports[2 * mu]
            };
        }
        g.gamma * along
    }

    pub fn shared_face_gradient(&self, mesh: &Mesh, slot: FaceSlot) -> Vec3 {
        let own = self.face_gradient(mesh, slot);
        match mesh.neighbor(slot) {
            Some(other) => 0.5 * (own + self.face_gradient(mesh, other)),
            None => own,
        }
    }
}

/// Apply `u -= (τ/ρ) ∇δp` on faces and nodes and accumulate `p += δp`.
pub fn correct_velocity(mesh: &Mesh, state: &mut FieldState, tau_over_rho: f64, dp: &PressureIncrement) {
    let [ux, uy, uz] = FieldId::VELOCITY.map(|f| f.index());
    for face in mesh.faces() {
        let slot = face.owner;
        let mut grad = dp.shared_face_gradient(mesh, slot);
        let targets: Vec<FaceSlot> = match face.kind {
            FaceKind::Interior { neighbor } => vec![slot, neighbor],
            FaceKind::Boundary { tag: BoundaryTag::NoSlipWall(_), .. } => continue,
            FaceKind::Boundary { tag: BoundaryTag::FreeSlip(_), .. } => {
                let n = mesh.geometry(slot.cell).faces[slot.local].normalize();
                grad -= n * grad.dot(&n);
                vec![slot]
            }
        };
        let du = grad * tau_over_rho;
        for t in targets {
            state.port[ux][t.cell][t.local] -= du.x;
            state.port[uy][t.cell][t.local] -= du.y;
            state.port[uz][t.cell][t.local] -= du.z;
        }
    }
    let p = FieldId::Pressure.index();
    for c in 0..mesh.num_cells() {
        let du = nodal_gradient(mesh.geometry(c), &dp.port[c]) * tau_over_rho;
        state.node[ux][c] -= du.x;
        state.node[uy][c] -= du.y;
        state.node[uz][c] -= du.z;
        state.node[p][c] += dp.node[c];
        for l in 0..6 {
            state.port[p][c][l] += dp.port[c][l];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectionStats {
    pub outer_iterations: usize,
    pub inner_sweeps: usize,
    /// `Σ_ζ |I_ζ|` after the loop.
    pub residual_sum: f64,
    pub residual_max: f64,
}

fn sum_max(div: &[f64]) -> (f64, f64) {
    div.iter().fold((0.0, 0.0), |(s, m), d| (s + d.abs(), f64::max(m, d.abs())))
}

/// Repeat solve/correct until `Σ|I| < eps_global` or `max_outer`. A solve
/// that needs no sweep ends the loop, since further passes cannot change
/// anything. On `NotConverged` the state holds the last corrected fields.
pub fn projection_loop(
    mesh: &Mesh,
    op: &PressureOperator,
    state: &mut FieldState,
    props: &FluidProperties,
    tau: f64,
    params: &SorParams,
) -> Result<ProjectionStats, PressureError> {
    params.validate()?;
    let tau_over_rho = tau / props.rho_inf;
    let mut div = divergence_integrals(mesh, state);
    let (mut sum, mut max) = sum_max(&div);
    let mut stats = ProjectionStats { residual_sum: sum, residual_max: max, ..Default::default() };
    if max < params.eps_cell {
        return Ok(stats);
    }
    loop {
        let dp = op.solve(mesh, &div, tau_over_rho, params)?;
        correct_velocity(mesh, state, tau_over_rho, &dp);
        div = divergence_integrals(mesh, state);
        (sum, max) = sum_max(&div);
        stats.outer_iterations += 1;
        stats.inner_sweeps += dp.sweeps;
        stats.residual_sum = sum;
        stats.residual_max = max;
        if sum < params.eps_global || stats.outer_iterations >= params.max_outer || dp.sweeps == 0 {
            break;
        }
    }
    if sum < params.eps_global {
        Ok(stats)
    } else {
        Err(PressureError::NotConverged { iterations: stats.outer_iterations, residual: sum })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::connect;
    use crate::mesh::{generate_annulus, generate_box, BoxSpec};
    use crate::state::InitialCondition;

    fn props() -> FluidProperties {
        FluidProperties { alpha: 1.0, mu: 1.0, rho_inf: 2.0, beta_exp: -1.0, t_inf: 0.0, g: Vec3::new(0.0, -1.0, 0.0) }
    }

    fn tight(mesh: &Mesh) -> SorParams {
        SorParams { eps_cell: 1e-14, eps_global: 1e-12, max_inner: 5000, ..SorParams::for_mesh(mesh, 1.0) }
    }

    #[test]
    fn uniform_velocity_has_zero_divergence() {
        let m = generate_annulus(2, 12, 1, 0.05, 0.115, 0.02).unwrap();
        let s = FieldState::initialize(&m, &InitialCondition::uniform(0.0, Vec3::new(1.0, -2.0, 0.5), 0.0));
        assert!(divergence_integrals(&m, &s).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn linear_stretching_divergence_on_unit_cube() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let s = FieldState::initialize(
            &m,
            &InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_velocity(|x| Vec3::new(x.x, 0.0, 0.0)),
        );
        assert!((divergence_integrals(&m, &s)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rigid_rotation_is_divergence_free() {
        let m = generate_box(&BoxSpec::new([3, 3, 2], [1.0, 2.0, 0.5])).unwrap();
        let w = Vec3::new(0.3, -1.0, 2.0);
        let s = FieldState::initialize(
            &m,
            &InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_velocity(move |x| w.cross(&x)),
        );
        assert!(divergence_integrals(&m, &s).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn box_coupling_is_area_over_distance() {
        let m = generate_box(&BoxSpec::new([3, 2, 2], [1.5, 1.0, 2.0])).unwrap();
        let op = PressureOperator::new(&m);
        assert!(op.is_orthogonal());
        let (other, k) = op.coupling(0, 1).unwrap();
        assert_eq!(other, 1);
        assert!((k - 0.5 * 1.0 / 0.5).abs() < 1e-14);
        let (_, k) = op.coupling(0, 3).unwrap();
        assert!((k - 0.5 * 1.0 / 0.5).abs() < 1e-14);
        assert!(op.coupling(0, 0).is_none());
    }

    #[test]
    fn divergence_free_state_needs_no_iteration() {
        let m = generate_box(&BoxSpec::new([3, 3, 3], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(0.0, Vec3::zeros(), 0.0));
        connect(&m, &mut s).unwrap();
        let before = s.clone();
        let stats = projection_loop(&m, &PressureOperator::new(&m), &mut s, &props(), 0.1, &tight(&m)).unwrap();
        assert_eq!(stats.outer_iterations, 0);
        assert_eq!(s, before);
    }

    fn kicked(m: &Mesh) -> FieldState {
        let mut s = FieldState::initialize(m, &InitialCondition::uniform(0.0, Vec3::new(0.0, 1.0, 0.0), 0.0));
        connect(m, &mut s).unwrap();
        s
    }

    #[test]
    fn buoyant_kick_is_cleaned() {
        let m = generate_box(&BoxSpec::new([4, 4, 2], [1.0; 3])).unwrap();
        let mut s = kicked(&m);
        let params = tight(&m);
        let stats = projection_loop(&m, &PressureOperator::new(&m), &mut s, &props(), 0.1, &params).unwrap();
        assert!(stats.outer_iterations >= 1 && stats.outer_iterations <= 10, "{stats:?}");
        assert!(stats.residual_sum < params.eps_global);
        // pressure builds up against the kick
        let p = s.pressure();
        assert!(p[m.num_cells() - 1] > p[0]);
    }

    #[test]
    fn infinite_tolerance_gives_one_iteration() {
        let m = generate_box(&BoxSpec::new([3, 3, 1], [1.0; 3])).unwrap();
        let mut s = kicked(&m);
        let params = SorParams { eps_global: f64::INFINITY, ..tight(&m) };
        let stats = projection_loop(&m, &PressureOperator::new(&m), &mut s, &props(), 0.1, &params).unwrap();
        assert_eq!(stats.outer_iterations, 1);
    }

    #[test]
    fn outer_cap_reports_not_converged() {
        let m = generate_box(&BoxSpec::new([6, 6, 1], [1.0; 3])).unwrap();
        let mut s = kicked(&m);
        let params = SorParams { max_inner: 1, max_outer: 2, ..tight(&m) };
        let err = projection_loop(&m, &PressureOperator::new(&m), &mut s, &props(), 0.1, &params).unwrap_err();
        assert!(matches!(err, PressureError::NotConverged { iterations: 2, .. }));
    }

    #[test]
    fn single_source_correction_reduces_divergence() {
        let m = generate_box(&BoxSpec::new([3, 3, 3], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(0.0, Vec3::zeros(), 0.0));
        // outward velocity on the faces of the central cell
        let centre = 13;
        for l in 0..6 {
            let n = m.geometry(centre).faces[l].normalize();
            for (k, f) in FieldId::VELOCITY.into_iter().enumerate() {
                s.port[f.index()][centre][l] = 0.1 * n[k];
                let other = m.neighbor(FaceSlot::new(centre, l)).unwrap();
                s.port[f.index()][other.cell][other.local] = 0.1 * n[k];
            }
        }
        let before = divergence_integrals(&m, &s)[centre];
        let op = PressureOperator::new(&m);
        let dp = op.solve(&m, &divergence_integrals(&m, &s), 0.5, &tight(&m)).unwrap();
        assert_eq!(dp.node[0], 0.0);
        correct_velocity(&m, &mut s, 0.5, &dp);
        let after = divergence_integrals(&m, &s)[centre];
        assert!(after.abs() * 10.0 <= before.abs(), "{before} -> {after}");
    }

    #[test]
    fn annulus_projection_converges() {
        let m = generate_annulus(3, 16, 1, 0.05, 0.115, 0.02).unwrap();
        let op = PressureOperator::new(&m);
        assert!(!op.is_orthogonal());
        let mut s = kicked(&m);
        let params = SorParams { eps_global: 1e-9, eps_cell: 1e-13, max_inner: 2000, ..SorParams::for_mesh(&m, 1.0) };
        let stats = projection_loop(&m, &op, &mut s, &props(), 0.01, &params).unwrap();
        assert!(stats.residual_sum < 1e-9, "{stats:?}");
    }

    #[test]
    fn parameter_validation() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let mut p = SorParams::for_mesh(&m, 1.0);
        assert!(p.validate().is_ok());
        p.omega = 2.0;
        assert!(p.validate().is_err());
    }
}
