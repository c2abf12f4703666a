use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use speclap::dirichlet::{solve_linear, trace_report};
use speclap::grid::{Grid, GridOptions};
use speclap::measure::{parse_measures, BoundaryMeasure, InteriorMeasure, InteriorProfile};
use speclap::rate::fit_boundary_rate;
use speclap::semilinear::{solve_semilinear, IterationOptions, Nonlinearity, Start};
use speclap::{pt, Error, KernelEvaluator, Point, SpectralDomain};

fn interval() -> Arc<SpectralDomain> {
    Arc::new(SpectralDomain::interval(PI, 256).unwrap())
}

fn small_grid(d: &Arc<SpectralDomain>) -> Arc<Grid> {
    Arc::new(
        Grid::new(
            d.clone(),
            GridOptions {
                nodes: 48,
                ..GridOptions::default()
            },
        )
        .unwrap(),
    )
}

#[test]
fn constant_boundary_datum_gives_h1() {
    let d = interval();
    let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
    let sol = solve_linear(&k, &InteriorMeasure::zero(), &BoundaryMeasure::constant(1.0), small_grid(&d)).unwrap();
    for &x in &[0.1, 1.0, 2.5] {
        let h = k.h1(&pt(x)).unwrap();
        assert!((sol.value(&pt(x)) - h).abs() < 1e-8 * h);
    }
    let report = trace_report(&k, |x: &Point| sol.value(x), |_: &Point| 1.0, 0.05, 1e-4).unwrap();
    assert!((report.extrapolated - 2.0).abs() < 1e-2);
}

#[test]
fn linear_semilinear_oracle_at_midpoint() {
    let d = interval();
    let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
    let grid = Arc::new(Grid::new(d.clone(), GridOptions::default()).unwrap());
    let sol = solve_semilinear(
        &k,
        &Nonlinearity::Linear(1.0),
        &BoundaryMeasure::constant(1.0),
        grid,
        IterationOptions::default(),
    )
    .unwrap();
    let want = 2.0 / PI * (1.0 - 2f64.ln());
    assert!((sol.u.interpolate(&pt(PI / 2.0)) - want).abs() < 1e-4);
}

#[test]
fn sub_and_super_starts_meet() {
    let d = interval();
    let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
    let g = Nonlinearity::Power(1.5);
    let run = |start| {
        let opts = IterationOptions {
            start,
            ..IterationOptions::default()
        };
        solve_semilinear(&k, &g, &BoundaryMeasure::constant(1.0), small_grid(&d), opts).unwrap()
    };
    let (a, b) = (run(Start::Supersolution), run(Start::Subsolution));
    assert_eq!(a.bracket_violation, 0.0);
    for (x, y) in a.u.values().iter().zip(b.u.values()) {
        assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
    }
}

#[test]
fn nonlinearity_names_parse() {
    assert_eq!(Nonlinearity::parse("zero").unwrap(), Nonlinearity::Zero);
    assert_eq!(Nonlinearity::parse("power(1.5)").unwrap(), Nonlinearity::Power(1.5));
    assert!(matches!(Nonlinearity::parse("cubic"), Err(Error::InvalidNonlinearity(_))));
}

#[test]
fn measure_errors_carry_line_numbers() {
    let d = interval();
    let text = "[interior]\natom 1.0 2\n\ndensity nowhere\n";
    match parse_measures(&d, text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let ok = parse_measures(&d, "[boundary]\natom 0 1\natom 3.141592653589793 2\n").unwrap();
    assert_eq!(ok.boundary.atoms.len(), 2);
}

#[test]
fn rate_fit_needs_samples_in_window() {
    let samples = [(0.5, 1.0), (0.6, 2.0)];
    assert!(matches!(fit_boundary_rate(samples, (1e-3, 1e-1)), Err(Error::FitDomain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_solution_scales_with_data(
        a in 0.1f64..5.0,
        x0 in 0.3..PI - 0.3,
        w in 0.1f64..2.0,
    ) {
        let d = interval();
        let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
        let grid = small_grid(&d);
        let mu = InteriorMeasure::atom(pt(x0), w);
        let zeta = BoundaryMeasure::constant(1.0);
        let base = solve_linear(&k, &mu, &zeta, grid.clone()).unwrap();
        let scaled = solve_linear(&k, &mu.scaled(a), &zeta.scaled(a), grid).unwrap();
        for (u, v) in base.values().values().iter().zip(scaled.values().values()) {
            if u.is_nan() {
                continue;
            }
            prop_assert!((a * u - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn nonnegative_data_give_nonnegative_solutions(
        s in 0.2f64..0.8,
        x0 in 0.2..PI - 0.2,
        w in 0.0f64..3.0,
        rho in 0.0f64..2.0,
    ) {
        let d = interval();
        let k = KernelEvaluator::new(d.clone(), s).unwrap();
        let mut mu = InteriorMeasure::density(InteriorProfile::Sine, rho);
        mu.atoms.push((pt(x0), w));
        let sol = solve_linear(&k, &mu, &BoundaryMeasure::zero(), small_grid(&d)).unwrap();
        prop_assert!(sol.min() >= -1e-10);
    }

    #[test]
    fn rate_fit_recovers_power_laws(exponent in -2.0f64..1.0, c in 0.1f64..10.0) {
        let samples: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let dist = 1e-3 * 100f64.powf(i as f64 / 29.0);
                (dist, c * dist.powf(exponent))
            })
            .collect();
        let fit = fit_boundary_rate(samples, (1e-3, 1e-1)).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-9);
        prop_assert!((fit.prefactor / c - 1.0).abs() < 1e-8);
    }
}
