use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dscflow::connection::{flux_from_port, interior_port_value, Side};
use dscflow::geometry::{CellGeometry, HexVertices, Mat3, Vec3};
use dscflow::mesh::{generate_box, BoxSpec, FaceSlot};
use dscflow::validation::random_hexahedron;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn face_vectors_close_and_dual_basis_inverts(seed in any::<u64>()) {
        let (_, g) = random_hexahedron(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(g.faces.iter().sum::<Vec3>().norm() < 1e-12 * g.faces[0].norm().max(1.0));
        prop_assert!((g.gamma * g.beta.transpose() - Mat3::identity()).abs().max() < 1e-12);
        prop_assert!(g.volume > 0.0);
        for l in 0..6 {
            prop_assert!(g.normal_weight(l) < 0.0);
        }
    }

    #[test]
    fn translation_leaves_geometry_unchanged(seed in any::<u64>(), shift in vec3()) {
        let (hex, g) = random_hexahedron(&mut ChaCha8Rng::seed_from_u64(seed));
        let moved = CellGeometry::new(&HexVertices::from_fn(|k| hex.0[k] + shift)).unwrap();
        prop_assert!((moved.volume - g.volume).abs() < 1e-12 * g.volume);
        for l in 0..6 {
            prop_assert!((moved.faces[l] - g.faces[l]).norm() < 1e-12);
        }
    }

    #[test]
    fn interior_connection_conserves_flux(seed in any::<u64>(), nodes in (-5.0..5.0f64, -5.0..5.0f64),
                                          ports in proptest::array::uniform12(-5.0..5.0f64)) {
        // two cells glued along a shared face: +x face of `a`, -x face of `b`
        let (hex_a, a) = random_hexahedron(&mut ChaCha8Rng::seed_from_u64(seed));
        let shared: Vec<Vec3> = [1, 3, 5, 7].iter().map(|&k| hex_a.0[k]).collect();
        let offset = a.faces[1] / a.faces[1].norm();
        let hex_b = HexVertices::from_fn(|k| if k % 2 == 0 { shared[k / 2] } else { shared[k / 2] + offset });
        let Ok(b) = CellGeometry::new(&hex_b) else { return Ok(()) };
        prop_assume!((0..6).all(|l| b.normal_weight(l) < 0.0));
        let pa: [f64; 6] = std::array::from_fn(|i| ports[i]);
        let pb: [f64; 6] = std::array::from_fn(|i| ports[6 + i]);
        let sa = Side { geom: &a, local: 1, node: nodes.0, ports_prev: &pa };
        let sb = Side { geom: &b, local: 0, node: nodes.1, ports_prev: &pb };
        let z = interior_port_value(sa, sb);
        let fa = flux_from_port(&a, 1, nodes.0, &pa, z);
        let fb = flux_from_port(&b, 0, nodes.1, &pb, z);
        let scale = 1.0 + fa.abs().max(fb.abs());
        prop_assert!((fa + fb).abs() < 1e-10 * scale, "{fa} vs {fb}");
    }

    #[test]
    fn box_adjacency_is_involutive(nx in 1usize..5, ny in 1usize..5, nz in 1usize..4, periodic in any::<[bool; 3]>()) {
        let periodic = [periodic[0] && nx > 1, periodic[1] && ny > 1, periodic[2] && nz > 1];
        let m = generate_box(&BoxSpec::new([nx, ny, nz], [1.0, 2.0, 0.5]).with_periodic(periodic)).unwrap();
        let mut interior = 0;
        for c in 0..m.num_cells() {
            for l in 0..6 {
                let s = FaceSlot::new(c, l);
                match m.neighbor(s) {
                    Some(n) => {
                        interior += 1;
                        prop_assert_eq!(m.neighbor(n), Some(s));
                        let (ga, gb) = (m.geometry(c), m.geometry(n.cell));
                        prop_assert!((ga.faces[l].norm() - gb.faces[n.local].norm()).abs() < 1e-12);
                    }
                    None => prop_assert!(m.boundary_tag(s).is_some()),
                }
            }
        }
        prop_assert_eq!(interior, 2 * m.num_interior_faces());
        prop_assert!((m.total_volume() - 1.0).abs() < 1e-12);
    }
}
