//! Writing a tagged mesh to the text format and reading it back.

use dscflow::mesh::{generate_annulus, read_mesh, write_mesh, BoundaryTag, ThermalCondition};

fn main() {
    let mut mesh = generate_annulus(2, 12, 1, 0.05, 0.115, 0.02).expect("valid annulus");
    mesh.set_patch_tag("outer", BoundaryTag::NoSlipWall(ThermalCondition::FixedTemperature(313.15))).expect("patch");
    mesh.set_patch_tag("zmin", BoundaryTag::FreeSlip(ThermalCondition::Adiabatic)).expect("patch");
    let text = write_mesh(&mesh);
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("... {} lines", text.lines().count());
    let back = read_mesh(&text).expect("parses");
    println!("vertices identical: {}", back.vertices() == mesh.vertices());
    println!("text identical after second write: {}", write_mesh(&back) == text);
    println!("patches after reading: {}", back.patches().join(" | "));
}
