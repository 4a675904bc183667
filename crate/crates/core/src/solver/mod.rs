//! Time stepping: connection, pressure projection, reflection.

mod scattering;

pub use scattering::{Channel, ScatteringDiagnostic, ScatteringError, RECONSTRUCTION_TOL};

use std::fmt;

use thiserror::Error;

use crate::connection::{connect, ConnectionError};
use crate::mesh::Mesh;
use crate::pressure::{
    divergence_integrals, projection_loop, PressureError, PressureOperator, ProjectionStats, SorParams,
};
use crate::reflection::{reflect, FluidProperties, HeatSource, ReflectionError};
use crate::state::{FieldId, FieldState, InitialCondition};

/// Velocity floor in the advective time-step bound, m/s.
pub const U_FLOOR: f64 = 1e-9;
/// Guard for the relative-change denominators of the steady monitor.
pub const STEADY_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("step {step} (t = {time:e}): {source}")]
    Connection { step: u64, time: f64, source: ConnectionError },
    #[error("step {step} (t = {time:e}): {source}")]
    Pressure { step: u64, time: f64, source: PressureError },
    #[error("step {step} (t = {time:e}): {source}")]
    Reflection { step: u64, time: f64, source: ReflectionError },
    #[error("invalid run setting: {0}")]
    InvalidSetting(String),
}

/// What to do when the projection loop hits its outer cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvergencePolicy {
    #[default]
    Warn,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    Fixed(f64),
    Auto { safety: f64, recompute_every: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub tau: TauPolicy,
    /// Steps between output events and steady-state checks.
    pub output_every: u64,
    /// Stop once the monitor reports relative changes below this value.
    pub steady_tol: Option<f64>,
    pub max_steps: Option<u64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::InvalidSetting(format!("t_end = {} must be positive", self.t_end)));
        }
        match self.tau {
            TauPolicy::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                Err(SolverError::InvalidSetting(format!("tau = {t} must be positive")))
            }
            TauPolicy::Auto { safety, .. } if !(safety > 0.0 && safety <= 1.0) => {
                Err(SolverError::InvalidSetting(format!("tau safety {safety} outside (0, 1]")))
            }
            _ if self.output_every == 0 => Err(SolverError::InvalidSetting("output_every must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Explicit time-step bound from diffusion and advection.
pub fn auto_timestep(mesh: &Mesh, state: &FieldState, props: &FluidProperties, safety: f64) -> f64 {
    let diffusivity = props.alpha.max(props.kinematic_viscosity());
    let mut tau = f64::INFINITY;
    for (c, g) in mesh.geometries().iter().enumerate() {
        let h = g.volume.cbrt();
        let diffusive = if diffusivity > 0.0 { h * h / (6.0 * diffusivity) } else { f64::INFINITY };
        let advective = h / (state.velocity(c).norm() + U_FLOOR);
        tau = tau.min(diffusive).min(advective);
    }
    safety * tau
}

/// Node values of temperature and velocity at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub temperature: Vec<f64>,
    pub velocity: [Vec<f64>; 3],
}

impl Snapshot {
    pub fn of(state: &FieldState) -> Self {
        Snapshot {
            temperature: state.node(FieldId::Temperature).to_vec(),
            velocity: FieldId::VELOCITY.map(|f| state.node(f).to_vec()),
        }
    }
}

/// Relative changes `(ΔT, Δu)` between two snapshots. Temperature changes
/// are measured against the temperature spread, velocity changes against
/// the largest speed component.
pub fn relative_change(current: &Snapshot, previous: &Snapshot) -> (f64, f64) {
    let max_abs_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let dt = max_abs_diff(&current.temperature, &previous.temperature);
    let (lo, hi) =
        previous.temperature.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &t| (l.min(t), h.max(t)));
    let t_scale = (hi - lo).max(STEADY_GUARD * hi.abs().max(lo.abs()).max(1.0));
    let mut du: f64 = 0.0;
    let mut u_scale: f64 = STEADY_GUARD;
    for k in 0..3 {
        du = du.max(max_abs_diff(&current.velocity[k], &previous.velocity[k]));
        u_scale = u_scale.max(previous.velocity[k].iter().map(|u| u.abs()).fold(0.0, f64::max));
    }
    (dt / t_scale, du / u_scale)
}

pub fn monitor_steady_state(current: &Snapshot, previous: &Snapshot, tol: f64) -> bool {
    let (dt, du) = relative_change(current, previous);
    dt < tol && du < tol
}

/// Diagnostics of one completed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub time: f64,
    pub tau: f64,
    pub max_speed: f64,
    pub max_temperature: f64,
    pub pressure: ProjectionStats,
    pub pressure_converged: bool,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {:>7}  t {:.6e}  max|u| {:.4e}  maxT {:.6e}  p-iter {:>2}  sum|I| {:.3e}",
            self.step,
            self.time,
            self.max_speed,
            self.max_temperature,
            self.pressure.outer_iterations,
            self.pressure.residual_sum
        )?;
        if !self.pressure_converged {
            write!(f, "  (pressure not converged)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunEvent<'a> {
    Step(&'a StepReport),
    /// Output cadence reached (also emitted for the initial and final state).
    Output {
        index: usize,
    },
    Steady,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub time: f64,
    pub steady: bool,
    pub pressure_warnings: u64,
    pub last: Option<StepReport>,
}

/// Mesh, material data and evolving state of one simulation.
pub struct Simulation {
    pub mesh: Mesh,
    pub props: FluidProperties,
    pub source: HeatSource,
    pub state: FieldState,
    pub pressure: SorParams,
    pub frozen_velocity: bool,
    pub on_not_converged: ConvergencePolicy,
    operator: PressureOperator,
}

impl Simulation {
    pub fn new(
        mesh: Mesh,
        props: FluidProperties,
        source: HeatSource,
        initial: &InitialCondition<'_>,
    ) -> Result<Self, SolverError> {
        props.validate().map_err(|e| SolverError::InvalidSetting(e.to_string()))?;
        let state = FieldState::initialize(&mesh, initial);
        let pressure = SorParams::for_mesh(&mesh, 1.0);
        let operator = PressureOperator::new(&mesh);
        Ok(Simulation {
            mesh,
            props,
            source,
            state,
            pressure,
            frozen_velocity: false,
            on_not_converged: ConvergencePolicy::Warn,
            operator,
        })
    }

    pub fn with_pressure(mut self, params: SorParams) -> Self {
        self.pressure = params;
        self
    }

    pub fn with_frozen_velocity(mut self, frozen: bool) -> Self {
        self.frozen_velocity = frozen;
        self
    }

    pub fn pressure_operator(&self) -> &PressureOperator {
        &self.operator
    }

    pub fn auto_timestep(&self, safety: f64) -> f64 {
        auto_timestep(&self.mesh, &self.state, &self.props, safety)
    }

    /// Connection step: ports at the current time level.
    pub fn connection_phase(&mut self) -> Result<(), SolverError> {
        let (step, time) = (self.state.step_index, self.state.time);
        connect(&self.mesh, &mut self.state).map_err(|source| SolverError::Connection { step, time, source })
    }

    /// Projection loop; returns the statistics and whether it converged.
    pub fn projection_phase(&mut self, tau: f64) -> Result<(ProjectionStats, bool), SolverError> {
        let (step, time) = (self.state.step_index, self.state.time);
        if self.frozen_velocity {
            let div = divergence_integrals(&self.mesh, &self.state);
            let stats = ProjectionStats {
                residual_sum: div.iter().map(|d| d.abs()).sum(),
                residual_max: div.iter().map(|d| d.abs()).fold(0.0, f64::max),
                ..Default::default()
            };
            return Ok((stats, true));
        }
        match projection_loop(&self.mesh, &self.operator, &mut self.state, &self.props, tau, &self.pressure) {
            Ok(stats) => Ok((stats, true)),
            Err(PressureError::NotConverged { iterations, residual })
                if self.on_not_converged == ConvergencePolicy::Warn =>
            {
                let stats =
                    ProjectionStats { outer_iterations: iterations, residual_sum: residual, ..Default::default() };
                Ok((stats, false))
            }
            Err(source) => Err(SolverError::Pressure { step, time, source }),
        }
    }

    /// Reflection step: nodes advance by `tau`.
    pub fn reflection_phase(&mut self, tau: f64) -> Result<(), SolverError> {
        let (step, time) = (self.state.step_index, self.state.time);
        reflect(&self.mesh, &mut self.state, &self.props, &self.source, tau, self.frozen_velocity)
            .map_err(|source| SolverError::Reflection { step, time, source })
    }

    /// Close the step: previous ports take the current level, counters advance.
    pub fn finish_step(&mut self, tau: f64) {
        self.state.rotate_port_history();
        self.state.step_index += 1;
        self.state.time += tau;
    }

    /// One full cycle of size `tau`.
    pub fn step(&mut self, tau: f64) -> Result<StepReport, SolverError> {
        self.connection_phase()?;
        let (pressure, pressure_converged) = self.projection_phase(tau)?;
        self.reflection_phase(tau)?;
        self.finish_step(tau);
        Ok(StepReport {
            step: self.state.step_index,
            time: self.state.time,
            tau,
            max_speed: self.state.max_speed(),
            max_temperature: self.state.temperature().iter().copied().fold(f64::NEG_INFINITY, f64::max),
            pressure,
            pressure_converged,
        })
    }

    /// Advance to `config.t_end`, calling `observer` after every step and at
    /// every output instant.
    pub fn run(
        &mut self,
        config: &RunConfig,
        mut observer: impl FnMut(&Simulation, RunEvent<'_>),
    ) -> Result<RunSummary, SolverError> {
        config.validate()?;
        let mut summary =
            RunSummary { steps: 0, time: self.state.time, steady: false, pressure_warnings: 0, last: None };
        let mut outputs = 0;
        observer(self, RunEvent::Output { index: outputs });
        outputs += 1;
        let mut snapshot = Snapshot::of(&self.state);
        let mut tau = match config.tau {
            TauPolicy::Fixed(t) => t,
            TauPolicy::Auto { safety, .. } => self.auto_timestep(safety),
        };
        let end = config.t_end * (1.0 - 1e-12);
        let mut last_output_step = 0;
        while self.state.time < end {
            if config.max_steps.is_some_and(|m| summary.steps >= m) {
                break;
            }
            if let TauPolicy::Auto { safety, recompute_every } = config.tau {
                if recompute_every > 0 && summary.steps > 0 && summary.steps.is_multiple_of(recompute_every) {
                    tau = self.auto_timestep(safety);
                }
            }
            let this_tau = tau.min(config.t_end - self.state.time);
            let report = self.step(this_tau)?;
            summary.steps += 1;
            if !report.pressure_converged {
                summary.pressure_warnings += 1;
            }
            observer(self, RunEvent::Step(&report));
            summary.last = Some(report);
            if summary.steps.is_multiple_of(config.output_every) {
                observer(self, RunEvent::Output { index: outputs });
                outputs += 1;
                last_output_step = summary.steps;
                let now = Snapshot::of(&self.state);
                if let Some(tol) = config.steady_tol {
                    if monitor_steady_state(&now, &snapshot, tol) {
                        summary.steady = true;
                        observer(self, RunEvent::Steady);
                        break;
                    }
                }
                snapshot = now;
            }
        }
        if last_output_step != summary.steps {
            observer(self, RunEvent::Output { index: outputs });
        }
        summary.time = self.state.time;
        Ok(summary)
    }
}
