use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use speclap::{pt, Face, HeatKernel, KernelEvaluator, Side, SpectralDomain, SpectralField};

fn interval() -> Arc<SpectralDomain> {
    Arc::new(SpectralDomain::interval(PI, 256).unwrap())
}

fn half(d: &Arc<SpectralDomain>) -> KernelEvaluator {
    KernelEvaluator::new(d.clone(), 0.5).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn green_half_order_matches_log_formula() {
    let d = interval();
    let k = half(&d);
    for &(x, y) in &[(0.3, 2.1), (PI / 3.0, PI / 2.0), (1.0, 1.2), (0.01, 3.0)] {
        let want = ((0.5 * (x + y)).sin() / (0.5 * f64::abs(x - y)).sin()).ln() / PI;
        let got = k.green(&pt(x), &pt(y)).unwrap();
        assert!(rel(got, want) < 1e-6, "x={x} y={y}: {got} vs {want}");
    }
    let g = k.green(&pt(PI / 3.0), &pt(PI / 2.0)).unwrap();
    assert!((g - 0.4192007).abs() < 1e-6);
}

#[test]
fn poisson_and_killing_half_order() {
    let d = interval();
    let k = half(&d);
    let z = d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
    for &x in &[1e-3, 0.05, 0.7, 1.9, PI - 0.01] {
        let p = k.poisson(&pt(x), &z).unwrap();
        assert!(rel(p, 1.0 / ((0.5 * x).tan() * PI)) < 1e-4, "poisson at {x}");
    }
    for &x in &[0.02, 0.4, PI / 2.0, 2.9] {
        let want = 2.0 / (PI * x.sin());
        assert!(rel(k.killing_measure(&pt(x)).unwrap(), want) < 1e-3, "killing at {x}");
        assert!(rel(k.h1(&pt(x)).unwrap(), want) < 1e-6, "h1 at {x}");
    }
}

#[test]
fn diagonal_is_rejected() {
    let d = interval();
    let k = half(&d);
    assert!(matches!(k.green(&pt(1.0), &pt(1.0)), Err(speclap::Error::OnDiagonal(_))));
}

#[test]
fn rectangle_green_is_symmetric_under_reflection() {
    let d = Arc::new(SpectralDomain::rectangle(PI, PI, 48).unwrap());
    let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
    let a = k.green(&[0.6, 1.1], &[2.0, 1.7]).unwrap();
    let b = k.green(&[PI - 0.6, 1.1], &[PI - 2.0, 1.7]).unwrap();
    let c = k.green(&[1.1, 0.6], &[1.7, 2.0]).unwrap();
    assert!(rel(b, a) < 1e-9 && rel(c, a) < 1e-9);
}

#[test]
fn spectral_power_of_eigenfunction() {
    let d = interval();
    let phi = SpectralField::eigenfunction(d.clone(), [3, 1]).unwrap();
    let image = phi.apply_spectral(0.4).unwrap();
    let x = pt(0.8);
    assert!(rel(image.evaluate(&x), 9f64.powf(0.4) * phi.evaluate(&x)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_is_symmetric_and_positive(
        x in 0.05..PI - 0.05,
        y in 0.05..PI - 0.05,
        s in 0.1f64..0.9,
    ) {
        prop_assume!((x - y).abs() > 1e-2);
        let k = KernelEvaluator::new(interval(), s).unwrap();
        let a = k.green(&pt(x), &pt(y)).unwrap();
        let b = k.green(&pt(y), &pt(x)).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(rel(b, a) < 1e-10);
    }

    #[test]
    fn poisson_mirrors_between_endpoints(x in 0.01..PI - 0.01, s in 0.1f64..0.9) {
        let d = interval();
        let k = KernelEvaluator::new(d.clone(), s).unwrap();
        let lo = d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
        let hi = d.boundary_point(Face { axis: 0, side: Side::High }, 0.0);
        let a = k.poisson(&pt(x), &lo).unwrap();
        let b = k.poisson(&pt(PI - x), &hi).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(rel(b, a) < 1e-9);
    }

    #[test]
    fn heat_kernel_images_agree_with_series(
        t in 0.05f64..3.0,
        x in 0.01..PI - 0.01,
        y in 0.01..PI - 0.01,
    ) {
        let h = HeatKernel::new(interval());
        let axis = &h.axes()[0];
        let a = axis.kernel_images(t, x, y);
        let b = axis.kernel_series(t, x, y);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-3));
    }

    #[test]
    fn spectral_inverse_undoes_power(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..12),
        s in 0.1f64..0.9,
        x in 0.1..PI - 0.1,
    ) {
        let d = interval();
        let mut full = vec![0.0; d.mode_count()];
        full[..coeffs.len()].copy_from_slice(&coeffs);
        let f = SpectralField::new(d, full).unwrap();
        let back = f.apply_spectral(s).unwrap().inverse_apply(s).unwrap();
        prop_assert!((back.evaluate(&pt(x)) - f.evaluate(&pt(x))).abs() < 1e-12);
    }
}
