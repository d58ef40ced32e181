//! Exactness of the discrete complexes on small cube meshes.

use std::sync::Arc;

use quadcurl::mesh::build_uniform_cube_mesh;
use quadcurl::spaces::{verify_complex, ComplexVariant};

#[test]
fn complexes_exact_on_two_cubes_per_axis() {
    let m = Arc::new(build_uniform_cube_mesh(2).unwrap());
    for k in 1..=2 {
        for v in [ComplexVariant::Zero, ComplexVariant::Partial] {
            let r = verify_complex(m.clone(), k, v).unwrap();
            assert!(r.passed(), "{r:?}");
            if k == 1 && v == ComplexVariant::Zero {
                assert_eq!(r.dims, [27, 412, 432, 47]);
            }
        }
    }
}
