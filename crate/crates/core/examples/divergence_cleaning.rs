//! A uniform upward velocity in a closed box is projected back to a
//! divergence-free field; the pressure rises towards the top wall.

use dscflow::pressure::{divergence_integrals, projection_loop, PressureOperator, SorParams};
use dscflow::reflection::FluidProperties;
use dscflow::validation::kicked_box;

fn main() {
    let (mesh, mut state) = kicked_box(8, 0.01);
    let props = FluidProperties { rho_inf: 1.0, ..FluidProperties::air() };
    let before: f64 = divergence_integrals(&mesh, &state).iter().map(|d| d.abs()).sum();
    let params = SorParams::for_mesh(&mesh, 0.01);
    let stats =
        projection_loop(&mesh, &PressureOperator::new(&mesh), &mut state, &props, 0.01, &params).expect("converges");
    let after: f64 = divergence_integrals(&mesh, &state).iter().map(|d| d.abs()).sum();
    println!(
        "sum |I| {before:.3e} -> {after:.3e} in {} outer / {} SOR sweeps",
        stats.outer_iterations, stats.inner_sweeps
    );
    let column: Vec<String> = (0..8).map(|j| format!("{:+.3e}", state.pressure()[3 + 8 * j + 64 * 3])).collect();
    println!("pressure up the centre column: {}", column.join(" "));
}
