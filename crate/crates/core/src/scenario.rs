//! Turning a [`ScenarioConfig`] into a ready-to-run [`Simulation`].

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{MeshSpec, OutputFormat, RegionSelector, ScenarioConfig, TauSpec, WallKind};
use crate::geometry::Vec3;
use crate::mesh::{
    generate_annulus, generate_box, read_mesh_file, BoundaryTag, BoxSpec, Mesh, MeshError, MeshIoError,
    ThermalCondition,
};
use crate::output::{write_vtk, OutputError, ProbeWriter};
use crate::pressure::SorParams;
use crate::reflection::{FluidProperties, HeatSource};
use crate::solver::{ConvergencePolicy, RunConfig, RunEvent, RunSummary, Simulation, SolverError, TauPolicy};
use crate::state::InitialCondition;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("mesh generation failed: {0}")]
    Mesh(#[from] MeshError),
    #[error("cannot load mesh file: {0}")]
    MeshFile(#[from] MeshIoError),
    #[error("unknown patch `{patch}` in {context}; mesh has: {}", available.join(", "))]
    UnknownPatch { patch: String, context: &'static str, available: Vec<String> },
    #[error("probe cell {cell} out of range (mesh has {cells} cells)")]
    InvalidProbe { cell: usize, cells: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Generate or load the mesh and apply the configured boundary tags.
/// Relative mesh-file paths are resolved against `base_dir`.
pub fn build_mesh(config: &ScenarioConfig, base_dir: &Path) -> Result<Mesh, ScenarioError> {
    let mut mesh = match &config.mesh {
        MeshSpec::Box { cells, lengths, grading, periodic } => {
            generate_box(&BoxSpec::new(*cells, *lengths).with_grading(*grading).with_periodic(*periodic))?
        }
        MeshSpec::Annulus { nr, ntheta, nz, r_inner, r_outer, length } => {
            generate_annulus(*nr, *ntheta, *nz, *r_inner, *r_outer, *length)?
        }
        MeshSpec::File { path } => read_mesh_file(base_dir.join(path))?,
    };
    for b in &config.boundary {
        let thermal = b.temperature.map_or(ThermalCondition::Adiabatic, ThermalCondition::FixedTemperature);
        let tag = match b.kind {
            WallKind::NoSlip => BoundaryTag::NoSlipWall(thermal),
            WallKind::FreeSlip => BoundaryTag::FreeSlip(thermal),
        };
        if mesh.patch_index(&b.patch).is_none() {
            return Err(unknown_patch(&mesh, &b.patch, "boundary"));
        }
        mesh.set_patch_tag(&b.patch, tag)?;
    }
    Ok(mesh)
}

fn unknown_patch(mesh: &Mesh, patch: &str, context: &'static str) -> ScenarioError {
    ScenarioError::UnknownPatch { patch: patch.to_string(), context, available: mesh.patches().to_vec() }
}

/// Per-cell heat source in K/s; overlapping regions add up.
pub fn build_source(config: &ScenarioConfig, mesh: &Mesh) -> Result<HeatSource, ScenarioError> {
    let source = &config.source;
    if source.regions.is_empty() {
        return Ok(HeatSource::None);
    }
    let mut profile = vec![0.0; mesh.num_cells()];
    for region in &source.regions {
        match &region.selector {
            RegionSelector::All => profile.iter_mut().for_each(|q| *q += region.value),
            RegionSelector::AdjacentTo(patch) => {
                let idx = mesh.patch_index(patch).ok_or_else(|| unknown_patch(mesh, patch, "source region"))?;
                for c in mesh.cells_adjacent_to_patch(idx) {
                    profile[c] += region.value;
                }
            }
            RegionSelector::Box { min, max } => {
                let (lo, hi) = (Vec3::from(*min), Vec3::from(*max));
                for (c, g) in mesh.geometries().iter().enumerate() {
                    let x = g.center;
                    if (0..3).all(|k| x[k] >= lo[k] && x[k] <= hi[k]) {
                        profile[c] += region.value;
                    }
                }
            }
        }
    }
    Ok(if source.schedule.is_empty() {
        HeatSource::PerCell(profile)
    } else {
        HeatSource::Scheduled { profile, schedule: source.schedule.clone() }
    })
}

pub fn fluid_properties(config: &ScenarioConfig) -> FluidProperties {
    let f = &config.fluid;
    FluidProperties {
        alpha: f.alpha,
        mu: f.mu,
        rho_inf: f.rho_inf,
        beta_exp: f.beta_exp,
        t_inf: f.t_inf,
        g: f.gravity(),
    }
}

pub fn sor_params(config: &ScenarioConfig, mesh: &Mesh) -> SorParams {
    let p = &config.pressure;
    let base = SorParams::for_mesh(mesh, p.u_ref);
    let eps_global = p.eps_global.unwrap_or(base.eps_global);
    SorParams {
        omega: p.omega,
        eps_global,
        eps_cell: p.eps_cell.unwrap_or(0.1 * eps_global / mesh.num_cells() as f64),
        max_inner: p.max_inner,
        max_outer: p.max_outer,
    }
}

pub fn run_config(config: &ScenarioConfig) -> RunConfig {
    let r = &config.run;
    RunConfig {
        t_end: r.t_end,
        tau: match r.tau {
            TauSpec::Fixed(t) => TauPolicy::Fixed(t),
            TauSpec::Auto => TauPolicy::Auto { safety: r.safety, recompute_every: r.recompute_every },
        },
        output_every: config.output.every,
        steady_tol: r.steady_tol,
        max_steps: r.max_steps,
    }
}

/// A configured simulation together with its run settings.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub simulation: Simulation,
    pub run: RunConfig,
}

impl Scenario {
    pub fn build(config: ScenarioConfig, base_dir: &Path) -> Result<Self, ScenarioError> {
        let mesh = build_mesh(&config, base_dir)?;
        let cells = mesh.num_cells();
        if let Some(&cell) = config.output.probes.iter().find(|&&c| c >= cells) {
            return Err(ScenarioError::InvalidProbe { cell, cells });
        }
        let source = build_source(&config, &mesh)?;
        let params = sor_params(&config, &mesh);
        let init = &config.initial;
        let initial = InitialCondition::uniform(init.temperature, Vec3::from(init.velocity), init.pressure);
        let mut simulation = Simulation::new(mesh, fluid_properties(&config), source, &initial)?
            .with_pressure(params)
            .with_frozen_velocity(config.run.frozen_velocity);
        simulation.on_not_converged =
            if config.run.abort_on_pressure_failure { ConvergencePolicy::Abort } else { ConvergencePolicy::Warn };
        let run = run_config(&config);
        run.validate()?;
        Ok(Scenario { config, simulation, run })
    }
}

/// Files written by [`Scenario::execute`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ExecuteError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl Scenario {
    /// Run to completion, writing the effective config, VTK snapshots and
    /// probe series into `out_dir`. `observer` sees every solver event.
    pub fn execute(
        &mut self,
        out_dir: &Path,
        mut observer: impl FnMut(&Simulation, &RunEvent<'_>),
    ) -> Result<RunOutcome, ExecuteError> {
        let io = |source| OutputError::Io { path: out_dir.display().to_string(), source };
        std::fs::create_dir_all(out_dir).map_err(io)?;
        let config_path = out_dir.join("config.toml");
        std::fs::write(&config_path, self.config.to_toml()).map_err(io)?;
        let mut files = vec![config_path];

        let formats = &self.config.output.formats;
        let vtk = formats.contains(&OutputFormat::Vtk);
        let mut probes = if formats.contains(&OutputFormat::Csv) {
            let path = out_dir.join("probes.csv");
            let w = ProbeWriter::create(&path, &self.config.output.probes, self.simulation.mesh.num_cells())?;
            files.push(path);
            Some(w)
        } else {
            None
        };

        let mut failure: Option<OutputError> = None;
        let summary = self.simulation.run(&self.run, |sim, event| {
            if let (RunEvent::Output { index }, None) = (&event, &failure) {
                let mut write = || -> Result<(), OutputError> {
                    if vtk {
                        let path = out_dir.join(format!("fields_{index:04}.vtk"));
                        write_vtk(&sim.mesh, &sim.state, &path)?;
                        files.push(path);
                    }
                    if let Some(w) = probes.as_mut() {
                        w.record(&sim.state)?;
                    }
                    Ok(())
                };
                failure = write().err();
            }
            observer(sim, &event);
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        if let Some(w) = probes {
            w.finish()?;
        }
        Ok(RunOutcome { summary, files })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ScenarioConfig {
        let text = format!(
            r#"
[mesh]
generator = "annulus"
nr = 2
ntheta = 8
r_inner = 0.05
r_outer = 0.115
length = 0.03

[fluid]
alpha = 2.42e-5
mu = 1.91e-5
rho_inf = 1.127
beta_exp = -0.0031933
t_inf = 313.15

[run]
t_end = 1.0
tau = 0.01
{extra}
"#
        );
        ScenarioConfig::parse(&text).unwrap()
    }

    #[test]
    fn boundary_and_source_are_applied() {
        let c = config(
            "[[boundary]]\npatch = \"outer\"\nkind = \"noslip\"\ntemperature = 313.15\n\
             [[source.region]]\nvalue = 0.2\nadjacent_to = \"inner\"\n",
        );
        let s = Scenario::build(c, Path::new(".")).unwrap();
        let mesh = &s.simulation.mesh;
        let outer = mesh.patch_index("outer").unwrap();
        let slot = mesh.patch_faces(outer).next().unwrap();
        assert_eq!(mesh.boundary_tag(slot), Some(BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(313.15))));
        let HeatSource::PerCell(q) = &s.simulation.source else { panic!("expected per-cell source") };
        assert_eq!(q.iter().filter(|&&v| v == 0.2).count(), 8);
        assert_eq!(q.iter().filter(|&&v| v == 0.0).count(), 8);
        assert_eq!(s.run.tau, TauPolicy::Fixed(0.01));
    }

    #[test]
    fn unknown_patch_lists_available() {
        let c = config("[[boundary]]\npatch = \"top\"\nkind = \"freeslip\"\n");
        let err = Scenario::build(c, Path::new(".")).err().unwrap();
        assert!(err.to_string().contains("inner"), "{err}");
    }

    #[test]
    fn probe_out_of_range() {
        let c = config("[output]\nprobes = [16]\n");
        assert!(matches!(Scenario::build(c, Path::new(".")), Err(ScenarioError::InvalidProbe { cell: 16, cells: 16 })));
    }

    #[test]
    fn box_region_source() {
        let mut c = config("[[source.region]]\nvalue = 1.0\nbox_min = [-1, 0, -1]\nbox_max = [1, 1, 1]\n");
        c.source.schedule = vec![(0.0, 0.0), (1.0, 1.0)];
        let mesh = build_mesh(&c, Path::new(".")).unwrap();
        let src = build_source(&c, &mesh).unwrap();
        let upper: Vec<usize> = (0..mesh.num_cells()).filter(|&c| mesh.geometry(c).center.y > 0.0).collect();
        assert_eq!(upper.len(), 8);
        for &cell in &upper {
            assert_eq!(src.value(cell, Vec3::zeros(), 0.5), 0.5);
        }
    }
}
