//! Node vectors, face vectors and the dual basis of a skewed cell, and exact
//! gradient reconstruction of a linear field from its face samples.

use dscflow::connection::face_gradient_from;
use dscflow::geometry::{CellGeometry, HexVertices, Vec3};
use dscflow::reflection::nodal_gradient;

fn main() {
    let hex = HexVertices::parallelepiped(
        Vec3::zeros(),
        Vec3::new(1.0, 0.1, 0.0),
        Vec3::new(0.3, 0.9, 0.0),
        Vec3::new(0.0, 0.2, 0.5),
    );
    let g = CellGeometry::new(&hex).expect("valid cell");
    println!("volume {:.6}", g.volume);
    for (mu, b) in g.node_vectors.iter().enumerate() {
        println!("b{mu} = [{:.3}, {:.3}, {:.3}]", b.x, b.y, b.z);
    }
    for (iota, f) in g.faces.iter().enumerate() {
        println!("f{iota} = [{:+.3}, {:+.3}, {:+.3}]  w = {:.4}", f.x, f.y, f.z, g.normal_weight(iota));
    }

    let a = Vec3::new(2.0, -1.0, 0.5);
    let ports: [f64; 6] = std::array::from_fn(|i| 3.0 + a.dot(&g.face_centers[i]));
    let node = 3.0 + a.dot(&g.center);
    println!("nodal gradient error {:.2e}", (nodal_gradient(&g, &ports) - a).norm());
    let worst = (0..6).map(|i| (face_gradient_from(&g, i, node, &ports, ports[i]) - a).norm()).fold(0.0, f64::max);
    println!("worst face gradient error {worst:.2e}");
}
