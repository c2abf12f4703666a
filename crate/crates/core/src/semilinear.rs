//! Semilinear absorption problems `(-Delta|_Omega)^s u + g(u) = 0`,
//! `u / h1 = zeta`, by monotone iteration between `0` and `w = P^s zeta`.
//!
//! The unknown is the absorbed part `v = w - u = G^s[g(u)]`. Each sweep
//! solves the shifted problem
//! `(I + K C) v_{k+1} = K (g(w - v_k) + C v_k)`, with `K` the discrete Green
//! operator and `C >= 0` a diagonal slope. With `C = 0` this is the plain
//! Picard step; a slope above `g'` keeps the map order preserving while
//! damping the unit spectral radius of `K` on long domains.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dirichlet::boundary_potential;
use crate::domain::Point;
use crate::error::{check_open_order, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernels::KernelEvaluator;
use crate::measure::BoundaryMeasure;
use crate::nystrom::GreenOperator;
use crate::quadrature::composite;
use crate::spectral::{SpectralField, TestFunction};

/// Absorption `g(x, t)`, independent of `x` in the built-in registry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Zero,
    /// `c t` with `c >= 0`.
    Linear(f64),
    /// `t^p` for `t >= 0`, zero below.
    Power(f64),
}

impl Nonlinearity {
    /// Parses `zero`, `linear`, `linear(c)` or `power(p)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let arg = |name: &str| -> Option<Result<f64>> {
            let inner = t.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidNonlinearity(format!("bad argument in '{t}'"))),
            )
        };
        let g = match t {
            "zero" => Nonlinearity::Zero,
            "linear" => Nonlinearity::Linear(1.0),
            _ => {
                if let Some(c) = arg("linear") {
                    Nonlinearity::Linear(c?)
                } else if let Some(p) = arg("power") {
                    Nonlinearity::Power(p?)
                } else {
                    return Err(Error::InvalidNonlinearity(format!(
                        "unknown nonlinearity '{t}' (expected zero, linear, linear(c) or power(p))"
                    )));
                }
            }
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Linear(c) if !(c >= 0.0 && c.is_finite()) => Err(Error::InvalidNonlinearity(
                format!("linear coefficient {c} must be finite and nonnegative"),
            )),
            Nonlinearity::Power(p) if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidNonlinearity(
                format!("power {p} must be at least 1"),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::Linear(c) => format!("linear({c})"),
            Nonlinearity::Power(p) => format!("power({p})"),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(c) => c * t.max(0.0),
            Nonlinearity::Power(p) => t.max(0.0).powf(p),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(c) => c,
            Nonlinearity::Power(p) => {
                if t > 0.0 {
                    p * t.powf(p - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Nondecreasing in `t`; true for the whole registry.
    pub fn is_monotone(&self) -> bool {
        true
    }

    /// Exponent `q` of the majorant `h(t) = t^q`.
    pub fn growth(&self) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(_) => 1.0,
            Nonlinearity::Power(p) => p,
        }
    }

    /// Checks that `h(delta^{-(2-2s)}) delta` is integrable, which holds
    /// exactly when `q (2 - 2s) < 2`, and returns the grid value of the
    /// integral.
    pub fn certificate(&self, s: f64, grid: &Grid) -> Result<f64> {
        check_open_order(s)?;
        let q = self.growth();
        let limit = 1.0 / (1.0 - s);
        if q >= limit {
            return Err(Error::InvalidNonlinearity(format!(
                "{} grows too fast for s = {s}: exponent must stay below {limit}",
                self.name()
            )));
        }
        let e = 1.0 - q * (2.0 - 2.0 * s);
        Ok(grid
            .weights()
            .iter()
            .zip(grid.distances())
            .map(|(w, d)| w * d.powf(e))
            .sum())
    }

    /// Checks `g(0) = 0` and monotonicity on a set of probe values.
    pub fn check_probes(&self, probes: &[f64]) -> Result<()> {
        if self.value(0.0) != 0.0 {
            return Err(Error::InvalidNonlinearity("g(0) must vanish".into()));
        }
        let mut sorted = probes.to_vec();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if self.is_monotone() && self.value(w[1]) < self.value(w[0]) {
                return Err(Error::InvalidNonlinearity(format!(
                    "not monotone between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        if probes.iter().any(|t| self.value(*t) < 0.0) {
            return Err(Error::InvalidNonlinearity("g must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Starting point of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// `u_0 = w`: iterates decrease to the maximal solution.
    Supersolution,
    /// `u_0 = 0`: iterates increase to the minimal solution.
    Subsolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub start: Start,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: 1e-8,
            max_iter: 500,
            start: Start::Supersolution,
        }
    }
}

/// Result of [`solve_semilinear`].
#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub u: GridFunction,
    /// `P^s zeta` at the nodes.
    pub w: Vec<f64>,
    /// Weighted `L^1` norms of successive increments.
    pub increments: Vec<f64>,
    /// Largest violation of monotone bracketing over all iterates: how far
    /// an iterate stepped backwards or left `[0, w]`.
    pub bracket_violation: f64,
}

impl SemilinearSolution {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }
}

/// Discrete Green operator, boundary datum and nodes shared by the solves
/// of one problem.
#[derive(Debug, Clone)]
pub struct SemilinearSetup {
    pub green: Arc<GreenOperator>,
    pub w: Vec<f64>,
}

impl SemilinearSetup {
    /// Builds the Green operator with the boundary exponent of `g(w)` and
    /// evaluates `w = P^s zeta` at the nodes.
    pub fn new(
        k: &KernelEvaluator,
        g: &Nonlinearity,
        zeta: &BoundaryMeasure,
        grid: Arc<Grid>,
    ) -> Result<Self> {
        let s = k.order();
        check_open_order(s)?;
        zeta.validate(k.domain())?;
        if !zeta.is_continuous_nonnegative(k.domain()) {
            return Err(Error::InvalidMeasure(
                "boundary datum must be a continuous nonnegative density".into(),
            ));
        }
        g.certificate(s, &grid)?;
        let beta = if zeta.is_zero() {
            0.0
        } else {
            g.growth() * (2.0 - 2.0 * s)
        };
        let green = Arc::new(GreenOperator::with_boundary_exponent(k, grid.clone(), beta)?);
        let w: Vec<f64> = grid
            .nodes()
            .par_iter()
            .map(|x| boundary_potential(k, zeta, x))
            .collect();
        Ok(SemilinearSetup { green, w })
    }

    /// Same operator with the datum scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        SemilinearSetup {
            green: self.green.clone(),
            w: self.w.iter().map(|v| v * factor).collect(),
        }
    }
}

pub fn solve_semilinear(
    k: &KernelEvaluator,
    g: &Nonlinearity,
    zeta: &BoundaryMeasure,
    grid: Arc<Grid>,
    options: IterationOptions,
) -> Result<SemilinearSolution> {
    let setup = SemilinearSetup::new(k, g, zeta, grid)?;
    iterate(&setup, g, options)
}

/// Runs the monotone iteration on a prepared setup.
pub fn iterate(setup: &SemilinearSetup, g: &Nonlinearity, options: IterationOptions) -> Result<SemilinearSolution> {
    let grid = setup.green.grid().clone();
    let n = grid.len();
    let w = &setup.w;
    let weights: Vec<f64> = grid
        .weights()
        .iter()
        .zip(grid.distances())
        .map(|(a, b)| a * b)
        .collect();
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let slack = 1e-10 * scale;
    if matches!(g, Nonlinearity::Zero) || w.iter().all(|v| *v == 0.0) {
        return Ok(SemilinearSolution {
            u: GridFunction::new(grid, w.clone())?,
            w: w.clone(),
            increments: Vec::new(),
            bracket_violation: 0.0,
        });
    }
    let kmat = setup.green.matrix();
    let mut v: Vec<f64> = match options.start {
        Start::Supersolution => vec![0.0; n],
        Start::Subsolution => w.clone(),
    };
    // fixed slope for the subsolution start, refreshed Newton slope otherwise
    let fixed: Option<Vec<f64>> = match options.start {
        Start::Subsolution => Some(w.iter().map(|t| g.derivative(*t)).collect()),
        Start::Supersolution => None,
    };
    let mut lu_cache: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
    let mut increments = Vec::new();
    let mut violation = 0.0f64;
    for _ in 0..options.max_iter {
        let u: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - b).collect();
        let slope: Vec<f64> = match &fixed {
            Some(c) => c.clone(),
            None => u.iter().map(|t| g.derivative(*t)).collect(),
        };
        let rhs: Vec<f64> = (0..n).map(|i| g.value(u[i]) + slope[i] * v[i]).collect();
        let krhs = DVector::from_vec(setup.green.apply(&rhs));
        if lu_cache.is_none() || fixed.is_none() {
            let mut m = DMatrix::identity(n, n);
            for j in 0..n {
                let c = slope[j];
                if c != 0.0 {
                    for i in 0..n {
                        m[(i, j)] += kmat[(i, j)] * c;
                    }
                }
            }
            lu_cache = Some(m.lu());
        }
        let next = lu_cache
            .as_ref()
            .and_then(|lu| lu.solve(&krhs))
            .ok_or_else(|| Error::NumericInput("singular iteration matrix".into()))?;
        let mut inc = 0.0;
        for i in 0..n {
            let d = next[i] - v[i];
            inc += weights[i] * d.abs();
            let backwards = match options.start {
                Start::Supersolution => -d,
                Start::Subsolution => d,
            };
            violation = violation
                .max(backwards - slack)
                .max(-next[i] - slack)
                .max(next[i] - w[i] - slack);
        }
        v = next.as_slice().to_vec();
        increments.push(inc);
        if !inc.is_finite() {
            break;
        }
        if inc < options.tol {
            let u: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a - b).collect();
            return Ok(SemilinearSolution {
                u: GridFunction::new(grid, u)?,
                w: w.clone(),
                increments,
                bracket_violation: violation.max(0.0),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: increments.len(),
        increment: increments.last().copied().unwrap_or(f64::NAN),
    })
}

/// Convex functions with `Phi(0) = 0` for the Kato inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convex {
    Identity,
    Square,
    /// `sqrt(t^2 + 1/j^2)/2 + t/2 - 1/(2j)`, increasing to `t^+`.
    PositivePart(f64),
}

impl Convex {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Convex::Identity => t,
            Convex::Square => t * t,
            Convex::PositivePart(j) => 0.5 * (t * t + 1.0 / (j * j)).sqrt() + 0.5 * t - 0.5 / j,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Convex::Identity => 1.0,
            Convex::Square => 2.0 * t,
            Convex::PositivePart(j) => 0.5 * t / (t * t + 1.0 / (j * j)).sqrt() + 0.5,
        }
    }
}

/// Slack `int f Phi'(w) psi - int Phi(w) (-Delta)^s psi` of Kato's
/// inequality for `w = G^s f` against the test function of a bump.
pub fn kato_check(f: &SpectralField, phi: Convex, test: &TestFunction) -> Result<f64> {
    let s = test.order();
    let d = f.domain().clone();
    let w = f.inverse_apply(s)?;
    let psi = test.psi();
    let nodes: Vec<Vec<(f64, f64)>> = (0..d.dim())
        .map(|a| composite(0.0, d.length(a), 48, 8))
        .collect();
    let integrand = |x: &Point| {
        let wv = w.evaluate(x);
        f.evaluate(x) * phi.derivative(wv) * psi.evaluate(x) - phi.value(wv) * test.operator_image(x)
    };
    // collected before summing so the result does not depend on the thread count
    let terms: Vec<f64> = if d.dim() == 1 {
        nodes[0].par_iter().map(|&(x, wx)| wx * integrand(&[x, 0.0])).collect()
    } else {
        nodes[0]
            .par_iter()
            .map(|&(x, wx)| wx * nodes[1].iter().map(|&(y, wy)| wy * integrand(&[x, y])).sum::<f64>())
            .collect()
    };
    Ok(terms.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{pt, SpectralDomain};
    use crate::grid::GridOptions;
    use crate::spectral::{Bump, BumpShape};
    use std::f64::consts::PI;

    fn setup(s: f64, nodes: usize) -> (KernelEvaluator, Arc<Grid>) {
        let d = Arc::new(SpectralDomain::interval(PI, 256).unwrap());
        let k = KernelEvaluator::new(d.clone(), s).unwrap();
        let g = Arc::new(
            Grid::new(
                d,
                GridOptions {
                    nodes,
                    ..GridOptions::default()
                },
            )
            .unwrap(),
        );
        (k, g)
    }

    #[test]
    fn registry() {
        assert_eq!(Nonlinearity::parse("power(1.5)").unwrap(), Nonlinearity::Power(1.5));
        assert_eq!(Nonlinearity::parse("linear").unwrap(), Nonlinearity::Linear(1.0));
        assert!(Nonlinearity::parse("cubic").is_err());
        let (_, g) = setup(0.5, 32);
        assert!(Nonlinearity::Power(1.9).certificate(0.5, &g).is_ok());
        assert!(matches!(
            Nonlinearity::Power(2.0).certificate(0.5, &g),
            Err(Error::InvalidNonlinearity(_))
        ));
        Nonlinearity::Power(1.5).check_probes(&[0.0, 0.5, 1.0, 3.0]).unwrap();
    }

    #[test]
    fn zero_absorption_returns_h1() {
        let (k, g) = setup(0.5, 64);
        let sol = solve_semilinear(&k, &Nonlinearity::Zero, &BoundaryMeasure::constant(1.0), g.clone(), IterationOptions::default()).unwrap();
        for (x, v) in g.nodes().iter().zip(sol.u.values()) {
            assert!((v - k.h1(x).unwrap()).abs() < 1e-10 * v);
        }
        let none = solve_semilinear(&k, &Nonlinearity::Power(1.5), &BoundaryMeasure::zero(), g, IterationOptions::default()).unwrap();
        assert!(none.u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_absorption_from_both_sides() {
        let (k, g) = setup(0.5, 64);
        let zeta = BoundaryMeasure::constant(1.0);
        let lin = Nonlinearity::Linear(1.0);
        let a = solve_semilinear(&k, &lin, &zeta, g.clone(), IterationOptions::default()).unwrap();
        let b = solve_semilinear(
            &k,
            &lin,
            &zeta,
            g.clone(),
            IterationOptions {
                start: Start::Subsolution,
                ..IterationOptions::default()
            },
        )
        .unwrap();
        let diff: Vec<f64> = a.u.values().iter().zip(b.u.values()).map(|(x, y)| x - y).collect();
        assert!(crate::dirichlet::l1_delta(&g, &diff) < 1e-7);
        assert!(a.bracket_violation == 0.0 && b.bracket_violation == 0.0, "{} {}", a.bracket_violation, b.bracket_violation);
        let mid = a.u.interpolate(&pt(PI / 2.0));
        assert!(mid > 0.0 && mid < 2.0 / PI, "{mid}");
        // (A + 1) v = h1 in coefficients gives v = (4/pi) sum_{j odd} sin(jx)/(j+1)
        assert!((a.u.interpolate(&pt(PI / 2.0)) - 2.0 / PI * (1.0 - 2f64.ln())).abs() < 2e-4);
        for i in [5usize, 20, 32, 50] {
            let x = g.nodes()[i][0];
            let mut series = 0.0;
            let mut j = 1usize;
            while j < 4_000_000 {
                series += (j as f64 * x).sin() / (j as f64 + 1.0);
                j += 2;
            }
            let want = k.h1(&pt(x)).unwrap() - 4.0 / PI * series;
            assert!((a.u.values()[i] - want).abs() < 1e-5, "{x}: {} vs {want}", a.u.values()[i]);
        }
    }

    #[test]
    fn power_absorption_is_bracketed() {
        let (k, g) = setup(0.5, 64);
        let zeta = BoundaryMeasure::constant(2.0);
        let pw = Nonlinearity::Power(1.5);
        let a = solve_semilinear(&k, &pw, &zeta, g.clone(), IterationOptions::default()).unwrap();
        let b = solve_semilinear(
            &k,
            &pw,
            &zeta,
            g.clone(),
            IterationOptions {
                start: Start::Subsolution,
                ..IterationOptions::default()
            },
        )
        .unwrap();
        let diff: Vec<f64> = a.u.values().iter().zip(b.u.values()).map(|(x, y)| x - y).collect();
        println!("{} {} {} {}", crate::dirichlet::l1_delta(&g, &diff), a.iterations(), b.iterations(), b.bracket_violation);
        assert!(crate::dirichlet::l1_delta(&g, &diff) < 1e-7);
        assert!(a.bracket_violation == 0.0 && b.bracket_violation == 0.0);
        assert!(a.u.values().iter().zip(&a.w).all(|(u, w)| *u >= 0.0 && u <= w));
    }

    #[test]
    fn kato_slack() {
        let d = Arc::new(SpectralDomain::interval(PI, 128).unwrap());
        let f = SpectralField::new(d.clone(), {
            let mut c = vec![0.0; 128];
            c[0] = 0.7;
            c[1] = -0.5;
            c[4] = 0.3;
            c
        })
        .unwrap();
        let t = TestFunction::new(d.clone(), Bump::family(&d, BumpShape::Polynomial)[2], 0.5).unwrap();
        let lin = kato_check(&f, Convex::Identity, &t).unwrap();
        assert!(lin.abs() < 1e-8, "{lin}");
        for phi in [Convex::Square, Convex::PositivePart(10.0)] {
            let v = kato_check(&f, phi, &t).unwrap();
            assert!(v >= -1e-6, "{phi:?}: {v}");
        }
    }
}
