//! Explicit dual scattering channel solver for buoyant incompressible flow
//! on hexahedral meshes.
//!
//! A time step alternates a *connection* step, which sets interface (port)
//! values so that diffusive fluxes are continuous between neighbouring cells,
//! a pressure projection that cleans the velocity divergence, and a
//! *reflection* step that advances the cell-centred (node) values.
//!
//! ```
//! use dscflow::geometry::Vec3;
//! use dscflow::mesh::{generate_box, BoxSpec};
//! use dscflow::reflection::{FluidProperties, HeatSource};
//! use dscflow::solver::Simulation;
//! use dscflow::state::InitialCondition;
//!
//! let mesh = generate_box(&BoxSpec::new([4, 4, 1], [1.0, 1.0, 0.25])).unwrap();
//! let init = InitialCondition::uniform(313.15, Vec3::zeros(), 0.0);
//! let mut sim = Simulation::new(mesh, FluidProperties::air(), HeatSource::Uniform(0.1), &init).unwrap();
//! let tau = sim.auto_timestep(0.5);
//! sim.step(tau).unwrap();
//! assert!(sim.state.temperature()[0] > 313.15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod connection;
pub mod geometry;
pub mod mesh;
pub mod output;
pub mod pressure;
pub mod reflection;
pub mod scenario;
pub mod solver;
pub mod state;
pub mod validation;

pub use config::{ConfigError, ScenarioConfig};
pub use geometry::{CellGeometry, Vec3};
pub use mesh::{BoundaryTag, Mesh, ThermalCondition};
pub use reflection::{FluidProperties, HeatSource};
pub use scenario::{ExecuteError, Scenario, ScenarioError};
pub use solver::{RunConfig, Simulation, SolverError};
pub use state::{FieldId, FieldState, InitialCondition};

use thiserror::Error;

/// Any failure of a batch job, classified for process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("setup error: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("run error: {0}")]
    Execute(#[from] ExecuteError),
    #[error("mesh error: {0}")]
    MeshIo(#[from] mesh::MeshIoError),
    #[error("output error: {0}")]
    Output(#[from] output::OutputError),
}

impl Error {
    /// 2 for anything wrong with the inputs, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Scenario(_) | Error::MeshIo(_) => 2,
            Error::Execute(_) | Error::Output(_) => 1,
        }
    }
}
