use std::f64::consts::PI;

use minmove::geometry::{check_domain, discrete_lipschitz, mesh_domain, mesh_domain_jittered, min_uniform_convexity_radius};
use minmove::{ConvexDomain, Point, Vec2};
use proptest::prelude::*;

#[test]
fn disk_mesh_covers_the_disk() {
    let dom = ConvexDomain::unit_disk();
    let mesh = mesh_domain(&dom, 0.1).unwrap();
    // Inscribed polygon area of the boundary vertices, computed from the vertex count.
    let nb = mesh.boundary_indices().len() as f64;
    let polygon = 0.5 * nb * (2.0 * PI / nb).sin();
    assert!((mesh.total_area() - polygon).abs() < 1e-10, "{} vs {polygon}", mesh.total_area());
    for i in mesh.boundary_indices() {
        assert!((mesh.vertices()[i].norm() - 1.0).abs() < 1e-12);
    }
    assert!(mesh.min_angle_deg() > 20.0);
    assert!(mesh.max_edge() < 0.2);
}

#[test]
fn disks_and_ellipses_are_uniformly_convex_but_squares_are_not() {
    assert!(check_domain(&ConvexDomain::unit_disk(), 64).pass);
    let ellipse = ConvexDomain::ellipse(Point::new(0.2, -0.1), 1.5, 1.0);
    let rep = check_domain(&ellipse, 128);
    assert!(rep.pass, "{rep:?}");
    // the largest curvature radius of the ellipse is a²/b
    let r = min_uniform_convexity_radius(&ellipse, 256);
    assert!(r <= 2.25 + 1e-6 && r > 2.0, "{r}");
    let square = ConvexDomain::square(Point::zeros(), 1.0);
    assert!(min_uniform_convexity_radius(&square, 64).is_infinite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_fields_have_their_slope_as_lipschitz_constant(a in -5.0f64..5.0, b in -5.0f64..5.0, seed in 0u64..50) {
        let mesh = mesh_domain_jittered(&ConvexDomain::unit_disk(), 0.3, seed, 0.3).unwrap();
        let slope = Vec2::new(a, b);
        let u = mesh.interpolate(|p| slope.dot(p) + 1.0);
        prop_assert!((discrete_lipschitz(&u, &mesh) - slope.norm()).abs() < 1e-9 * (1.0 + slope.norm()));
    }

    #[test]
    fn jittered_meshes_are_valid(seed in 0u64..200) {
        let mesh = mesh_domain_jittered(&ConvexDomain::unit_disk(), 0.25, seed, 0.3).unwrap();
        prop_assert!(mesh.areas().iter().all(|&a| a > 0.0));
        let nb = mesh.boundary_indices().len() as f64;
        prop_assert!((mesh.total_area() - 0.5 * nb * (2.0 * PI / nb).sin()).abs() < 1e-10);
    }
}
