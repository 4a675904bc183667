//! Natural convection of air between the conductors of a coaxial line,
//! with the inner conductor's losses as a heat source next to it. Writes
//! VTK snapshots to `DSC_OUTPUT_DIR` (default `output/coax`).

use std::path::PathBuf;

use dscflow::output::write_vtk;
use dscflow::validation::{annulus_asymmetry, annulus_plume, annulus_simulation, ANNULUS_SOURCE, ANNULUS_TAU};

fn main() {
    let (nr, ntheta) = (10, 48);
    let out = std::env::var_os("DSC_OUTPUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output/coax"));
    std::fs::create_dir_all(&out).expect("output directory");
    let mut sim = annulus_simulation(nr, ntheta, ANNULUS_SOURCE);
    for frame in 0..=6 {
        if frame > 0 {
            for _ in 0..2000 {
                sim.step(ANNULUS_TAU).expect("stable");
            }
        }
        let max_t = sim.state.temperature().iter().copied().fold(f64::MIN, f64::max);
        println!("t = {:>5.0} s  peak |u| = {:.4} m/s  max T = {max_t:.3} K", sim.state.time, sim.state.max_speed());
        write_vtk(&sim.mesh, &sim.state, out.join(format!("coax_{frame:02}.vtk"))).expect("write");
    }
    println!("plume above inner conductor: {}", annulus_plume(&sim, nr, ntheta));
    println!("left/right asymmetry of |u|: {:.2e}", annulus_asymmetry(&sim, nr, ntheta));
}
