//! Node and port storage for the transported fields.
//!
//! Node values live at cell centers on the half-step grid, port values on
//! cell faces at integer steps. Ports keep two levels: `port` is the level
//! written by the latest connection step, `port_prev` the level before it.

use crate::geometry::Vec3;
use crate::mesh::Mesh;

/// Scalar fields carried by the solver. Velocity is stored component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldId {
    Temperature,
    VelocityX,
    VelocityY,
    VelocityZ,
    Pressure,
}

impl FieldId {
    pub const ALL: [FieldId; 5] =
        [FieldId::Temperature, FieldId::VelocityX, FieldId::VelocityY, FieldId::VelocityZ, FieldId::Pressure];
    pub const VELOCITY: [FieldId; 3] = [FieldId::VelocityX, FieldId::VelocityY, FieldId::VelocityZ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::Temperature => "T",
            FieldId::VelocityX => "u_x",
            FieldId::VelocityY => "u_y",
            FieldId::VelocityZ => "u_z",
            FieldId::Pressure => "p",
        }
    }
}

pub const NUM_FIELDS: usize = 5;

/// Initial condition sampled at nodes and face centers.
pub struct InitialCondition<'a> {
    pub temperature: Box<dyn Fn(Vec3) -> f64 + 'a>,
    pub velocity: Box<dyn Fn(Vec3) -> Vec3 + 'a>,
    pub pressure: Box<dyn Fn(Vec3) -> f64 + 'a>,
}

impl<'a> InitialCondition<'a> {
    pub fn uniform(temperature: f64, velocity: Vec3, pressure: f64) -> Self {
        InitialCondition {
            temperature: Box::new(move |_| temperature),
            velocity: Box::new(move |_| velocity),
            pressure: Box::new(move |_| pressure),
        }
    }

    pub fn with_temperature(mut self, f: impl Fn(Vec3) -> f64 + 'a) -> Self {
        self.temperature = Box::new(f);
        self
    }

    pub fn with_velocity(mut self, f: impl Fn(Vec3) -> Vec3 + 'a) -> Self {
        self.velocity = Box::new(f);
        self
    }

    pub fn with_pressure(mut self, f: impl Fn(Vec3) -> f64 + 'a) -> Self {
        self.pressure = Box::new(f);
        self
    }

    fn sample(&self, x: Vec3) -> [f64; NUM_FIELDS] {
        let u = (self.velocity)(x);
        [(self.temperature)(x), u.x, u.y, u.z, (self.pressure)(x)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub node: [Vec<f64>; NUM_FIELDS],
    pub port: [Vec<[f64; 6]>; NUM_FIELDS],
    pub port_prev: [Vec<[f64; 6]>; NUM_FIELDS],
    /// Face fluxes `ιS = f_ι · ∇Z` from the latest connection step.
    pub flux: [Vec<[f64; 6]>; NUM_FIELDS],
    pub step_index: u64,
    /// Time of the current port level.
    pub time: f64,
}

impl FieldState {
    /// Sample `initial` at nodes and face centers; both port levels are set
    /// to the same sample.
    pub fn initialize(mesh: &Mesh, initial: &InitialCondition<'_>) -> Self {
        let n = mesh.num_cells();
        let mut node: [Vec<f64>; NUM_FIELDS] = std::array::from_fn(|_| Vec::with_capacity(n));
        let mut port: [Vec<[f64; 6]>; NUM_FIELDS] = std::array::from_fn(|_| Vec::with_capacity(n));
        for g in mesh.geometries() {
            let at_node = initial.sample(g.center);
            let at_faces: [[f64; NUM_FIELDS]; 6] = std::array::from_fn(|i| initial.sample(g.face_centers[i]));
            for f in 0..NUM_FIELDS {
                node[f].push(at_node[f]);
                port[f].push(std::array::from_fn(|i| at_faces[i][f]));
            }
        }
        FieldState {
            node,
            port_prev: port.clone(),
            port,
            flux: std::array::from_fn(|_| vec![[0.0; 6]; n]),
            step_index: 0,
            time: 0.0,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.node[0].len()
    }

    #[inline]
    pub fn node(&self, field: FieldId) -> &[f64] {
        &self.node[field.index()]
    }

    #[inline]
    pub fn node_mut(&mut self, field: FieldId) -> &mut [f64] {
        &mut self.node[field.index()]
    }

    #[inline]
    pub fn port(&self, field: FieldId) -> &[[f64; 6]] {
        &self.port[field.index()]
    }

    #[inline]
    pub fn port_prev(&self, field: FieldId) -> &[[f64; 6]] {
        &self.port_prev[field.index()]
    }

    #[inline]
    pub fn flux(&self, field: FieldId) -> &[[f64; 6]] {
        &self.flux[field.index()]
    }

    pub fn velocity(&self, cell: usize) -> Vec3 {
        Vec3::new(self.node[1][cell], self.node[2][cell], self.node[3][cell])
    }

    pub fn port_velocity(&self, cell: usize, local: usize) -> Vec3 {
        Vec3::new(self.port[1][cell][local], self.port[2][cell][local], self.port[3][cell][local])
    }

    pub fn temperature(&self) -> &[f64] {
        &self.node[0]
    }

    pub fn pressure(&self) -> &[f64] {
        &self.node[4]
    }

    /// Previous port level takes the current one.
    pub fn rotate_port_history(&mut self) {
        for f in 0..NUM_FIELDS {
            self.port_prev[f].copy_from_slice(&self.port[f]);
        }
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.velocity(c).norm()).fold(0.0, f64::max)
    }

    /// First non-finite node or port value, as `(field, cell)`.
    pub fn find_non_finite(&self) -> Option<(FieldId, usize)> {
        for field in FieldId::ALL {
            let f = field.index();
            for c in 0..self.num_cells() {
                if !self.node[f][c].is_finite() || self.port[f][c].iter().any(|v| !v.is_finite()) {
                    return Some((field, c));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box, BoxSpec};

    fn mesh() -> Mesh {
        generate_box(&BoxSpec::new([3, 2, 2], [1.0, 0.5, 0.5])).unwrap()
    }

    #[test]
    fn uniform_temperature_fills_every_slot() {
        let m = mesh();
        let s = FieldState::initialize(&m, &InitialCondition::uniform(300.0, Vec3::zeros(), 0.0));
        assert!(s.node(FieldId::Temperature).iter().all(|&t| t == 300.0));
        assert!(s.port(FieldId::Temperature).iter().flatten().all(|&t| t == 300.0));
        assert!(s.port_prev(FieldId::Temperature).iter().flatten().all(|&t| t == 300.0));
        for f in FieldId::VELOCITY {
            assert!(s.node(f).iter().all(|&u| u == 0.0));
            assert!(s.port(f).iter().flatten().all(|&u| u == 0.0));
        }
    }

    #[test]
    fn linear_profile_node_equals_face_average() {
        let m = mesh();
        let a = Vec3::new(2.0, -1.0, 0.5);
        let init = InitialCondition::uniform(0.0, Vec3::zeros(), 0.0).with_temperature(move |x| 1.0 + a.dot(&x));
        let s = FieldState::initialize(&m, &init);
        for c in 0..m.num_cells() {
            let avg: f64 = s.port(FieldId::Temperature)[c].iter().sum::<f64>() / 6.0;
            assert!((avg - s.node(FieldId::Temperature)[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_copies_current_level() {
        let m = mesh();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(1.0, Vec3::zeros(), 0.0));
        for (c, l, v) in [(0, 1, 5.0), (3, 4, -2.0), (11, 5, 7.5)] {
            s.port[0][c][l] = v;
        }
        let before = s.port.clone();
        s.rotate_port_history();
        assert_eq!(s.port_prev, before);
        assert_eq!(s.port, before);
        s.rotate_port_history();
        assert_eq!(s.port_prev, s.port);
        assert_eq!(s.step_index, 0);
    }

    #[test]
    fn non_finite_values_are_found() {
        let m = mesh();
        let mut s = FieldState::initialize(&m, &InitialCondition::uniform(1.0, Vec3::zeros(), 0.0));
        assert_eq!(s.find_non_finite(), None);
        s.port[4][7][2] = f64::NAN;
        assert_eq!(s.find_non_finite(), Some((FieldId::Pressure, 7)));
    }
}
