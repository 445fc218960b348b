use std::f64::consts::PI;
use std::sync::Arc;

use minmove::barrier::{build, sublevel_boundary, sublevel_geometry, verify, Barrier, BarrierError, BarrierSign};
use minmove::boundary::{certify_tbsc, widen_slopes, Fourier, FourierTerm, RotatingAffine};
use minmove::{BoundaryDatum, ConvexDomain, ConvexIntegrand, Point};

#[test]
fn explicit_barrier_sublevel_set_is_a_fixed_ball() {
    let b = Barrier::rotating_example(2.0, PI).unwrap();
    for t in [0.0, 1.0, 2.0, 3.0] {
        for x in sublevel_boundary(&b, t, 24).unwrap() {
            assert!(((x - Point::new(1.0, 0.0)).norm() - 2.0).abs() < 1e-9);
        }
    }
}

#[test]
fn explicit_barrier_changes_with_alpha() {
    for alpha in [1.0, 2.0, 4.0] {
        let rep = verify(&Barrier::rotating_example(alpha, PI).unwrap(), 32, 32).unwrap();
        assert!(rep.subsol_viol <= 1e-8, "{alpha}: {rep:?}");
        assert!(rep.ordering_viol <= 1e-10, "{alpha}: {rep:?}");
        assert!(rep.lip_const <= 2.0 + alpha / 2.0 + 1e-12);
    }
    assert!(matches!(Barrier::rotating_example(0.0, PI), Err(BarrierError::ZeroAlpha)));
}

#[test]
fn constructed_barriers_bracket_harmonic_data() {
    let dom = ConvexDomain::unit_disk();
    let term = FourierTerm { k: 2, omega: 1.0, phase: 0.0, re: 0.5, im: 0.2 };
    let data = BoundaryDatum::new(Arc::new(Fourier { terms: vec![term] }), 1.0, &dom);
    let f = ConvexIntegrand::quadratic(1.0);
    let x_o = dom.boundary_point(0.7);
    let cert = widen_slopes(&certify_tbsc(&data, &dom, &x_o, 33, 128).unwrap(), &data, &dom).unwrap();
    for (alpha, sign) in [(4.0, BarrierSign::Lower), (-4.0, BarrierSign::Upper)] {
        let b = build(&f, &dom, &data, &cert, alpha).unwrap();
        assert_eq!(b.sign(), sign);
        let rep = verify(&b, 32, 12).unwrap();
        assert!(rep.pin_err < 1e-9 && rep.ordering_viol < 1e-9 && rep.subsol_viol < 1e-6, "{rep:?}");
        for x in dom.closure_samples(40, 20) {
            let gap = b.eval(&x, 0.5).unwrap() - data.value(&x, 0.5);
            assert!(sign.factor() * gap <= 1e-9);
        }
        let geo = sublevel_geometry(&b, 0.5, 64).unwrap();
        assert!(geo.x_o_on_boundary && geo.omega_contained, "{geo:?}");
    }
}

#[test]
fn rotating_pipeline_matches_the_explicit_pin() {
    let dom = ConvexDomain::unit_disk();
    let data = BoundaryDatum::new(Arc::new(RotatingAffine::unit()), PI, &dom);
    let x_o = Point::new(-1.0, 0.0);
    let cert = widen_slopes(&certify_tbsc(&data, &dom, &x_o, 65, 128).unwrap(), &data, &dom).unwrap();
    let b = build(&ConvexIntegrand::quadratic(1.0), &dom, &data, &cert, 2.0).unwrap();
    for t in [0.0, 0.8, 2.2] {
        assert!((b.eval(&x_o, t).unwrap() + t.cos()).abs() < 1e-10);
    }
}
