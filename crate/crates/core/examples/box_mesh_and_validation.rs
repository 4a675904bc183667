//! Structured box meshes: counts, patches, grading and the quality report.

use dscflow::mesh::{generate_box, BoxSpec};

fn main() {
    let mesh = generate_box(&BoxSpec::new([10, 10, 1], [1.0, 1.0, 0.1])).expect("valid box");
    println!(
        "{} cells, {} interior faces, {} boundary faces",
        mesh.num_cells(),
        mesh.num_interior_faces(),
        mesh.num_boundary_faces()
    );
    println!("patches: {}", mesh.patches().join(", "));

    let graded =
        generate_box(&BoxSpec::new([8, 8, 2], [2.0, 1.0, 0.5]).with_grading([4.0, 0.25, 1.0])).expect("valid box");
    print!("{}", graded.validate());

    let sheared = graded.map_vertices(|v| v + dscflow::Vec3::new(0.3 * v.y, 0.0, 0.1 * v.x)).expect("still valid");
    print!("{}", sheared.validate());
}
