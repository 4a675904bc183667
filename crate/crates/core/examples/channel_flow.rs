//! Body-force-driven flow between no-slip plates developing towards the
//! parabolic profile `4 y (1 - y)`.

use dscflow::validation::channel_simulation;

fn main() {
    let mut sim = channel_simulation(20);
    let tau = sim.auto_timestep(0.9);
    for t_out in [0.05, 0.2, 1.0, 3.0] {
        while sim.state.time < t_out {
            sim.step(tau).expect("stable");
        }
        println!("t = {:.2}: centreline u = {:.4}", sim.state.time, sim.state.velocity(4 * 10).x);
    }
    println!("   y      u      exact");
    for j in (0..20).step_by(2) {
        let c = 4 * j;
        let y = sim.mesh.geometry(c).center.y;
        println!("{y:.3}  {:.4}  {:.4}", sim.state.velocity(c).x, 4.0 * y * (1.0 - y));
    }
}
