//! Conduction in a rod with fixed end temperatures against the decaying
//! sine solution.

use std::f64::consts::PI;

use dscflow::validation::rod_simulation;

fn main() {
    let mut sim = rod_simulation(40);
    let tau = sim.auto_timestep(0.9);
    println!("tau = {tau:.3e}");
    for _ in 0..4 {
        let target = sim.state.time + 0.05;
        while sim.state.time < target - 1e-12 {
            sim.step(tau.min(target - sim.state.time)).expect("stable");
        }
        let decay = (-PI * PI * sim.state.time).exp();
        let err = sim
            .mesh
            .geometries()
            .iter()
            .zip(sim.state.temperature())
            .map(|(g, t)| (t - decay * (PI * g.center.x).sin()).abs())
            .fold(0.0, f64::max);
        println!(
            "t = {:.2}: max T {:.5}, exact {decay:.5}, relative L_inf error {:.2e}",
            sim.state.time,
            sim.state.temperature()[19],
            err / decay
        );
    }
}
