//! Reflection step: nodal updates of temperature and velocity from the
//! current port level.

use std::fmt;

use thiserror::Error;

use crate::geometry::{CellGeometry, Vec3};
use crate::mesh::Mesh;
use crate::state::{FieldId, FieldState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReflectionError {
    #[error("non-finite {field} update in cell {cell}")]
    NonFiniteUpdate { cell: usize, field: &'static str },
    #[error("invalid fluid property {name} = {value}")]
    InvalidProperty { name: &'static str, value: f64 },
}

/// Constant material data of the Oberbeck-Boussinesq model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    /// Thermal diffusivity, m²/s.
    pub alpha: f64,
    /// Dynamic viscosity, Pa·s.
    pub mu: f64,
    /// Reference density, kg/m³.
    pub rho_inf: f64,
    /// `ρ⁻¹ ∂ρ/∂T`, 1/K. Negative for ordinary fluids.
    pub beta_exp: f64,
    /// Reference temperature, K.
    pub t_inf: f64,
    /// Gravitational acceleration, m/s².
    pub g: Vec3,
}

impl FluidProperties {
    /// Dry air near 313 K.
    pub fn air() -> Self {
        FluidProperties {
            alpha: 2.42e-5,
            mu: 1.91e-5,
            rho_inf: 1.127,
            beta_exp: -1.0 / 313.15,
            t_inf: 313.15,
            g: Vec3::new(0.0, -9.81, 0.0),
        }
    }

    pub fn kinematic_viscosity(&self) -> f64 {
        self.mu / self.rho_inf
    }

    pub fn validate(&self) -> Result<(), ReflectionError> {
        if !(self.rho_inf > 0.0 && self.rho_inf.is_finite()) {
            return Err(ReflectionError::InvalidProperty { name: "rho_inf", value: self.rho_inf });
        }
        for (name, value) in [("alpha", self.alpha), ("mu", self.mu)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ReflectionError::InvalidProperty { name, value });
            }
        }
        for (name, value) in [("beta_exp", self.beta_exp), ("t_inf", self.t_inf), ("g", self.g.norm())] {
            if !value.is_finite() {
                return Err(ReflectionError::InvalidProperty { name, value });
            }
        }
        Ok(())
    }
}

/// Volumetric heat source in K/s, sampled at cell centroids.
pub enum HeatSource {
    None,
    Uniform(f64),
    PerCell(Vec<f64>),
    /// Per-cell profile scaled by a piecewise-linear `(time, factor)` table,
    /// held constant outside its range.
    Scheduled {
        profile: Vec<f64>,
        schedule: Vec<(f64, f64)>,
    },
    Function(Box<dyn Fn(Vec3, f64) -> f64 + Send + Sync>),
}

impl HeatSource {
    #[inline]
    pub fn value(&self, cell: usize, centroid: Vec3, time: f64) -> f64 {
        match self {
            HeatSource::None => 0.0,
            HeatSource::Uniform(q) => *q,
            HeatSource::PerCell(q) => q[cell],
            HeatSource::Scheduled { profile, schedule } => profile[cell] * interpolate(schedule, time),
            HeatSource::Function(f) => f(centroid, time),
        }
    }
}

fn interpolate(table: &[(f64, f64)], t: f64) -> f64 {
    match table {
        [] => 1.0,
        [(t0, v0), ..] if t <= *t0 => *v0,
        [.., (tn, vn)] if t >= *tn => *vn,
        _ => {
            let i = table.partition_point(|&(ti, _)| ti <= t);
            let ((t0, v0), (t1, v1)) = (table[i - 1], table[i]);
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        }
    }
}

impl fmt::Debug for HeatSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeatSource::None => write!(f, "None"),
            HeatSource::Uniform(q) => write!(f, "Uniform({q})"),
            HeatSource::PerCell(q) => write!(f, "PerCell({} cells)", q.len()),
            HeatSource::Scheduled { profile, schedule } => {
                write!(f, "Scheduled({} cells, {} knots)", profile.len(), schedule.len())
            }
            HeatSource::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Cartesian gradient from the opposite-port differences of one cell.
#[inline]
pub fn nodal_gradient(geom: &CellGeometry, ports: &[f64; 6]) -> Vec3 {
    geom.gamma * Vec3::new(ports[1] - ports[0], ports[3] - ports[2], ports[5] - ports[4])
}

pub fn cell_gradient(mesh: &Mesh, state: &FieldState, cell: usize, field: FieldId) -> Vec3 {
    nodal_gradient(mesh.geometry(cell), &state.port(field)[cell])
}

#[inline]
fn flux_sum(state: &FieldState, field: FieldId, cell: usize) -> f64 {
    state.flux(field)[cell].iter().sum()
}

fn finite(value: f64, cell: usize, field: &'static str) -> Result<f64, ReflectionError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ReflectionError::NonFiniteUpdate { cell, field })
    }
}

/// New temperature of `cell` after a step of size `tau`.
pub fn update_temperature(
    mesh: &Mesh,
    state: &FieldState,
    props: &FluidProperties,
    source: &HeatSource,
    tau: f64,
    cell: usize,
) -> Result<f64, ReflectionError> {
    let geom = mesh.geometry(cell);
    let t = state.node(FieldId::Temperature)[cell];
    let u = state.velocity(cell);
    let advection =
        if u == Vec3::zeros() { 0.0 } else { u.dot(&cell_gradient(mesh, state, cell, FieldId::Temperature)) };
    let diffusion = props.alpha / geom.volume * flux_sum(state, FieldId::Temperature, cell);
    let q = source.value(cell, geom.center, state.time + 0.5 * tau);
    finite(t + tau * (-advection + diffusion + q), cell, "temperature")
}

/// New velocity of `cell` after a step of size `tau`.
pub fn update_velocity(
    mesh: &Mesh,
    state: &FieldState,
    props: &FluidProperties,
    tau: f64,
    cell: usize,
) -> Result<Vec3, ReflectionError> {
    let geom = mesh.geometry(cell);
    let u = state.velocity(cell);
    let grad_p = cell_gradient(mesh, state, cell, FieldId::Pressure);
    let visc = props.mu / (geom.volume * props.rho_inf);
    let buoyancy = props.g * (props.beta_exp * (state.node(FieldId::Temperature)[cell] - props.t_inf));
    let mut rate = buoyancy - grad_p / props.rho_inf;
    for (k, field) in FieldId::VELOCITY.into_iter().enumerate() {
        let advection = if u == Vec3::zeros() { 0.0 } else { u.dot(&cell_gradient(mesh, state, cell, field)) };
        rate[k] += visc * flux_sum(state, field, cell) - advection;
    }
    let new = u + rate * tau;
    for k in 0..3 {
        finite(new[k], cell, "velocity")?;
    }
    Ok(new)
}

/// Full reflection step. All right-hand sides use the values from before
/// the step; nodes are overwritten only after every cell has been computed.
pub fn reflect(
    mesh: &Mesh,
    state: &mut FieldState,
    props: &FluidProperties,
    source: &HeatSource,
    tau: f64,
    frozen_velocity: bool,
) -> Result<(), ReflectionError> {
    let n = mesh.num_cells();
    let temperature =
        (0..n).map(|c| update_temperature(mesh, state, props, source, tau, c)).collect::<Result<Vec<_>, _>>()?;
    if !frozen_velocity {
        let velocity = (0..n).map(|c| update_velocity(mesh, state, props, tau, c)).collect::<Result<Vec<_>, _>>()?;
        for (k, field) in FieldId::VELOCITY.into_iter().enumerate() {
            let node = state.node_mut(field);
            for c in 0..n {
                node[c] = velocity[c][k];
            }
        }
    }
    state.node_mut(FieldId::Temperature).copy_from_slice(&temperature);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::connect;
    use crate::geometry::HexVertices;
    use crate::mesh::{generate_box, BoundaryTag, BoxSpec, ThermalCondition};
    use crate::state::InitialCondition;

    fn props() -> FluidProperties {
        FluidProperties {
            alpha: 1.0,
            mu: 1.0,
            rho_inf: 1.0,
            beta_exp: -0.5,
            t_inf: 300.0,
            g: Vec3::new(0.0, -10.0, 0.0),
        }
    }

    #[test]
    fn nodal_gradient_is_exact_for_linear_fields() {
        let hex = HexVertices::parallelepiped(
            Vec3::new(0.3, -0.2, 1.0),
            Vec3::new(1.0, 0.2, 0.1),
            Vec3::new(-0.3, 0.8, 0.0),
            Vec3::new(0.1, 0.2, 1.4),
        );
        let g = CellGeometry::new(&hex).unwrap();
        let a = Vec3::new(-1.0, 4.0, 0.25);
        let ports: [f64; 6] = std::array::from_fn(|i| 2.0 + a.dot(&g.face_centers[i]));
        assert!((nodal_gradient(&g, &ports) - a).norm() < 1e-12);
        assert_eq!(nodal_gradient(&g, &[7.0; 6]), Vec3::zeros());
    }

    #[test]
    fn even_field_has_zero_gradient_at_center() {
        let hex = HexVertices::unit_cube().map(|x| x - Vec3::repeat(0.5));
        let g = CellGeometry::new(&hex).unwrap();
        let ports: [f64; 6] = std::array::from_fn(|i| g.face_centers[i].x.powi(2));
        assert_eq!(nodal_gradient(&g, &ports), Vec3::zeros());
    }

    #[test]
    fn quiescent_state_is_fixed() {
        let m = generate_box(&BoxSpec::new([2, 2, 2], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        connect(&m, &mut s).unwrap();
        let before = s.clone();
        reflect(&m, &mut s, &props(), &HeatSource::None, 0.01, false).unwrap();
        assert_eq!(s.node, before.node);
    }

    #[test]
    fn steady_linear_profile_is_fixed() {
        let mut m = generate_box(&BoxSpec::new([2, 1, 1], [2.0, 1.0, 1.0])).unwrap();
        m.set_patch_tag("xmin", BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(0.0))).unwrap();
        m.set_patch_tag("xmax", BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(2.0))).unwrap();
        let init = InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_temperature(|x| x.x);
        let mut s = FieldState::initialize(&m, &init);
        connect(&m, &mut s).unwrap();
        let mut p = props();
        p.beta_exp = 0.0;
        let before = s.node(FieldId::Temperature).to_vec();
        reflect(&m, &mut s, &p, &HeatSource::None, 0.1, true).unwrap();
        for (a, b) in s.node(FieldId::Temperature).iter().zip(&before) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn source_only_integration() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        let mut p = props();
        p.alpha = 0.0;
        for _ in 0..4 {
            connect(&m, &mut s).unwrap();
            reflect(&m, &mut s, &p, &HeatSource::Uniform(2.5), 0.1, true).unwrap();
            s.rotate_port_history();
        }
        assert!((s.node(FieldId::Temperature)[0] - 301.0).abs() < 1e-12);
    }

    #[test]
    fn buoyancy_kick_single_step() {
        let m = generate_box(&BoxSpec::new([1, 1, 1], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(302.0, Vec3::zeros(), 0.0));
        connect(&m, &mut s).unwrap();
        let p = props();
        reflect(&m, &mut s, &p, &HeatSource::None, 0.01, false).unwrap();
        let expected = p.g * (0.01 * p.beta_exp * 2.0);
        assert!((s.velocity(0) - expected).norm() < 1e-15);
        assert!(s.velocity(0).y > 0.0);
    }

    #[test]
    fn uniform_flow_without_forces_is_unchanged() {
        let m = generate_box(&BoxSpec::new([2, 2, 2], [1.0; 3]).with_periodic([true, true, true])).unwrap();
        let u0 = Vec3::new(0.4, -0.1, 0.2);
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, u0, 0.0));
        connect(&m, &mut s).unwrap();
        reflect(&m, &mut s, &props(), &HeatSource::None, 0.05, false).unwrap();
        for c in 0..m.num_cells() {
            assert!((s.velocity(c) - u0).norm() < 1e-15);
        }
    }

    #[test]
    fn non_finite_update_names_cell() {
        let m = generate_box(&BoxSpec::new([2, 1, 1], [1.0; 3])).unwrap();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        connect(&m, &mut s).unwrap();
        let src = HeatSource::PerCell(vec![0.0, f64::INFINITY]);
        let err = reflect(&m, &mut s, &props(), &src, 0.1, true).unwrap_err();
        assert_eq!(err, ReflectionError::NonFiniteUpdate { cell: 1, field: "temperature" });
    }

    #[test]
    fn scheduled_source_interpolates_and_clamps() {
        let src = HeatSource::Scheduled { profile: vec![2.0, 0.0], schedule: vec![(1.0, 0.0), (3.0, 1.0)] };
        let x = Vec3::zeros();
        assert_eq!(src.value(0, x, 0.0), 0.0);
        assert_eq!(src.value(0, x, 2.0), 1.0);
        assert_eq!(src.value(0, x, 9.0), 2.0);
        assert_eq!(src.value(1, x, 2.0), 0.0);
    }

    #[test]
    fn property_validation() {
        assert!(props().validate().is_ok());
        assert!(FluidProperties::air().validate().is_ok());
        let mut p = props();
        p.rho_inf = 0.0;
        assert!(matches!(p.validate(), Err(ReflectionError::InvalidProperty { name: "rho_inf", .. })));
        let mut p = props();
        p.alpha = -1.0;
        assert!(p.validate().is_err());
        p.alpha = 0.0;
        assert!(p.validate().is_ok());
    }
}
