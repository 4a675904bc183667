//! Incident and outgoing channel parts recorded over a short run, and the
//! one-cell-per-step spreading of a local perturbation.

use dscflow::geometry::Vec3;
use dscflow::mesh::{generate_box, BoxSpec};
use dscflow::reflection::{FluidProperties, HeatSource};
use dscflow::solver::{ScatteringDiagnostic, Simulation};
use dscflow::state::{FieldId, InitialCondition};
use dscflow::validation::cone_reach;

fn main() {
    let mesh = generate_box(&BoxSpec::new([4, 4, 1], [1.0, 1.0, 0.25])).expect("valid box");
    let props =
        FluidProperties { alpha: 0.1, mu: 0.1, rho_inf: 1.0, beta_exp: -0.5, t_inf: 1.0, g: Vec3::new(0.0, -1.0, 0.0) };
    let init = InitialCondition::uniform(1.0, Vec3::zeros(), 0.0).with_temperature(|x| 1.0 + 0.2 * x.x);
    let mut sim = Simulation::new(mesh, props, HeatSource::None, &init).expect("valid setup");
    let mut diag = ScatteringDiagnostic::new(sim.mesh.num_cells());
    let tau = sim.auto_timestep(0.5);
    for _ in 0..50 {
        sim.connection_phase().expect("connect");
        sim.projection_phase(tau).expect("project");
        diag.after_connection(&sim.state).expect("identity");
        sim.reflection_phase(tau).expect("reflect");
        diag.after_reflection(&sim.state).expect("identity");
        sim.finish_step(tau);
    }
    let cell = 5;
    println!("cell {cell} temperature channels after 50 steps:");
    for face in 0..6 {
        let (i, o) = (diag.incident(FieldId::Temperature)[cell][face], diag.outgoing(FieldId::Temperature)[cell][face]);
        println!("  face {face}: in {i:+.6}  out {o:+.6}  node {:.6}", i + o);
    }
    println!("worst reconstruction mismatch {:.2e}", diag.worst);
    println!("perturbation reach per step: {:?}", cone_reach(5));
}
