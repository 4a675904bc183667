//! Differentially heated cavity at Ra = 1e3. Pass the cell count per side as
//! the first argument (default 16; the benchmark resolution is 32).

use dscflow::solver::{relative_change, Snapshot};
use dscflow::validation::{cavity_simulation, wall_nusselt, CAVITY_NUSSELT_REF};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(16);
    let mut sim = cavity_simulation(n);
    let tau = sim.auto_timestep(0.9);
    let mut snap = Snapshot::of(&sim.state);
    loop {
        for _ in 0..200 {
            sim.step(tau).expect("stable");
        }
        let now = Snapshot::of(&sim.state);
        let (dt, du) = relative_change(&now, &snap);
        println!(
            "t = {:.3}  Nu = {:.4}  dT {dt:.1e}  du {du:.1e}",
            sim.state.time,
            wall_nusselt(&sim, "xmin", 1.0, 1.0)
        );
        if dt.max(du) < 1e-6 || sim.state.time > 3.0 {
            break;
        }
        snap = now;
    }
    println!("reference Nu = {CAVITY_NUSSELT_REF}");
}
