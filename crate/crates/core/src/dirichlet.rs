//! Linear Dirichlet problems with measure data.
//!
//! The solution is the kernel superposition
//! `u(x) = int G^s(x, y) dmu(y) + int P^s(x, z) dzeta(z)`, kept in a form
//! that can be evaluated exactly anywhere: atoms through the kernels,
//! interior densities through the discrete Green operator, boundary
//! densities through `h1` or a surface rule.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{BoundaryPoint, Point, SpectralDomain};
use crate::error::{check_open_order, Error, Result};
use crate::grid::{Grid, GridFunction, Weight};
use crate::kernels::KernelEvaluator;
use crate::measure::{BoundaryMeasure, BoundaryProfile, InteriorMeasure};
use crate::nystrom::GreenOperator;
use crate::quadrature::{composite, Grading};
use crate::spectral::TestFunction;

/// Grading for integrals against bumps and across boundary strips.
const SPATIAL: Grading = Grading {
    ratio: 0.3,
    levels: 24,
    points: 8,
};

/// Output of [`solve_linear`].
#[derive(Debug, Clone)]
pub struct LinearSolution {
    kernels: KernelEvaluator,
    mu: InteriorMeasure,
    zeta: BoundaryMeasure,
    density: Option<(Arc<GreenOperator>, Vec<f64>)>,
    values: GridFunction,
    singular: Vec<usize>,
    l1_norm: f64,
    data_norm: f64,
}

/// Solves `(-Delta|_Omega)^s u = mu` with `u / h1 = zeta` on the boundary.
pub fn solve_linear(
    kernels: &KernelEvaluator,
    mu: &InteriorMeasure,
    zeta: &BoundaryMeasure,
    grid: Arc<Grid>,
) -> Result<LinearSolution> {
    check_open_order(kernels.order())?;
    let domain = kernels.domain().clone();
    if *domain != **grid.domain() {
        return Err(Error::InvalidArgument("grid and kernels use different domains".into()));
    }
    mu.validate(&domain)?;
    zeta.validate(&domain)?;
    let density = match mu.density {
        Some(_) => {
            let op = GreenOperator::new(kernels, grid.clone())?;
            let rho: Vec<f64> = grid.nodes().iter().map(|x| mu.density_at(&domain, x)).collect();
            Some((Arc::new(op), rho))
        }
        None => None,
    };
    let mut sol = LinearSolution {
        kernels: kernels.clone(),
        mu: mu.clone(),
        zeta: zeta.clone(),
        density,
        values: GridFunction::zeros(grid.clone()),
        singular: Vec::new(),
        l1_norm: 0.0,
        data_norm: 0.0,
    };
    let density_values = sol
        .density
        .as_ref()
        .map(|(op, rho)| op.apply(rho))
        .unwrap_or_else(|| vec![0.0; grid.len()]);
    let tol = 1e-14 * domain.diameter();
    let parts: Vec<(f64, f64, bool)> = grid
        .nodes()
        .par_iter()
        .zip(density_values.par_iter())
        .map(|(x, dv)| {
            let hit = mu
                .atoms
                .iter()
                .any(|(y, w)| *w != 0.0 && crate::domain::euclid(domain.dim(), x, y) <= tol);
            let regular = dv + sol.boundary_part(x);
            let atoms = if hit { f64::NAN } else { sol.atom_part(x) };
            (atoms, regular, hit)
        })
        .collect();
    let mut values = Vec::with_capacity(parts.len());
    for (i, (a, r, hit)) in parts.into_iter().enumerate() {
        values.push(a + r);
        if hit {
            sol.singular.push(i);
        }
    }
    sol.values = GridFunction::new(grid.clone(), values)?;

    let mut l1 = 0.0;
    let mut dens = 0.0;
    for i in 0..grid.len() {
        let w = grid.weights()[i] * grid.distances()[i];
        if !sol.singular.contains(&i) {
            l1 += w * sol.values.values()[i].abs();
        }
        dens += w * mu.density_at(&domain, &grid.nodes()[i]).abs();
    }
    sol.l1_norm = l1;
    sol.data_norm = mu.weighted_variation(&domain, dens) + zeta.total_variation(&domain);
    Ok(sol)
}

impl LinearSolution {
    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn kernels(&self) -> &KernelEvaluator {
        &self.kernels
    }

    /// Nodes that coincide with an atom; their values are NaN.
    pub fn singular_nodes(&self) -> &[usize] {
        &self.singular
    }

    /// `||u||_{L^1(delta dx)}` over the regular nodes.
    pub fn l1_delta_norm(&self) -> f64 {
        self.l1_norm
    }

    /// `||delta mu|| + ||zeta||`.
    pub fn data_norm(&self) -> f64 {
        self.data_norm
    }

    /// Empirical constant of the stability bound, `||u|| / data`.
    pub fn stability_ratio(&self) -> f64 {
        if self.data_norm > 0.0 {
            self.l1_norm / self.data_norm
        } else {
            0.0
        }
    }

    /// Smallest value over the regular nodes.
    pub fn min(&self) -> f64 {
        self.values
            .values()
            .iter()
            .filter(|v| !v.is_nan())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `sum_a w_a G^s(x, y_a)`.
    pub fn atom_part(&self, x: &Point) -> f64 {
        self.mu
            .atoms
            .iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(y, w)| w * self.kernels.green_unchecked(x, y))
            .sum()
    }

    /// Potential of the interior density at `x`.
    pub fn density_part(&self, x: &Point) -> f64 {
        match &self.density {
            Some((op, rho)) => op.evaluate(rho, x),
            None => 0.0,
        }
    }

    /// `int P^s(x, z) dzeta(z)`.
    pub fn boundary_part(&self, x: &Point) -> f64 {
        boundary_potential(&self.kernels, &self.zeta, x)
    }

    /// Exact evaluation of the representation at an interior point.
    pub fn value(&self, x: &Point) -> f64 {
        self.atom_part(x) + self.density_part(x) + self.boundary_part(x)
    }

    /// Residual of the weak formulation against the test function of a bump.
    ///
    /// The atom and boundary potentials are integrated against the bump with
    /// graded quadrature at the atoms; the density potential uses the grid
    /// rule.
    pub fn weak_residual(&self, test: &TestFunction) -> Result<WeakResidual> {
        let k = &self.kernels;
        let d = k.domain();
        let grid = self.grid();
        let bump = test.bump();
        let dim = d.dim();
        let breaks: Vec<Point> = self.mu.atoms.iter().map(|a| a.0).collect();
        let exact = integrate_over_bump(d, test, &breaks, |x| self.atom_part(x) + self.boundary_part(x));
        let dens = match &self.density {
            Some((op, rho)) => {
                let v = op.apply(rho);
                grid.nodes()
                    .iter()
                    .zip(grid.weights())
                    .zip(&v)
                    .map(|((x, w), r)| w * r * bump.value(dim, x))
                    .sum()
            }
            None => 0.0,
        };
        let psi = test.psi();
        let mut against_mu: f64 = self.mu.atoms.iter().map(|(y, w)| w * psi.evaluate(y)).sum();
        if let Some((_, rho)) = &self.density {
            against_mu += grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .zip(rho)
                .map(|((x, w), r)| w * r * psi.evaluate(x))
                .sum::<f64>();
        }
        let against_zeta = flux_against(d, test, &self.zeta);
        Ok(WeakResidual::new(exact + dens, against_mu, against_zeta))
    }
}

/// `int P^s(x, z) dzeta(z)` at an interior point.
pub fn boundary_potential(k: &KernelEvaluator, zeta: &BoundaryMeasure, x: &Point) -> f64 {
    let d = k.domain();
    let mut sum: f64 = zeta
        .atoms
        .iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(z, w)| w * k.poisson_unchecked(x, z))
        .sum();
    if let Some((profile, c)) = zeta.density {
        if c == 0.0 {
            return sum;
        }
        if profile == BoundaryProfile::One {
            sum += c * k.h1_unchecked(x);
        } else if d.dim() == 1 {
            for face in d.faces() {
                let z = d.boundary_point(face, 0.0);
                sum += zeta.density_at(d, &z) * k.poisson_unchecked(x, &z);
            }
        } else {
            // Subtract the value at the nearest boundary point so that the
            // surface integrand vanishes where the kernel peaks.
            let near = d.nearest_boundary_point(x);
            let base = zeta.density_at(d, &near);
            sum += base * k.h1_unchecked(x);
            for (z, w) in d.boundary_rule(8, 8) {
                let diff = zeta.density_at(d, &z) - base;
                if diff != 0.0 {
                    sum += w * diff * k.poisson_unchecked(x, &z);
                }
            }
        }
    }
    sum
}

/// `int (d psi / d nu) dzeta`, from the cached surface rule and the atoms.
fn flux_against(d: &SpectralDomain, test: &TestFunction, zeta: &BoundaryMeasure) -> f64 {
    let mut sum: f64 = zeta.atoms.iter().map(|(z, w)| -w * test.inward_flux(z)).sum();
    if zeta.density.is_some() {
        sum -= test
            .boundary_flux()
            .map(|(z, w, f)| w * f * zeta.density_at(d, z))
            .sum::<f64>();
    }
    sum
}

/// Terms of the weak formulation and their combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    /// `int u (-Delta)^s psi`
    pub against_operator: f64,
    /// `int psi dmu`
    pub against_mu: f64,
    /// `int (d psi / d nu) dzeta`
    pub against_zeta: f64,
    pub residual: f64,
    /// Sum of the absolute values of the three terms.
    pub scale: f64,
}

impl WeakResidual {
    fn new(against_operator: f64, against_mu: f64, against_zeta: f64) -> Self {
        WeakResidual {
            against_operator,
            against_mu,
            against_zeta,
            residual: against_operator - against_mu + against_zeta,
            scale: against_operator.abs() + against_mu.abs() + against_zeta.abs(),
        }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// Weak residual of an arbitrary function given pointwise. `singular` lists
/// points where `u` may blow up, used as quadrature breakpoints.
pub fn weak_residual<F>(
    u: F,
    singular: &[Point],
    mu: &InteriorMeasure,
    zeta: &BoundaryMeasure,
    test: &TestFunction,
) -> Result<WeakResidual>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let d = test.psi().domain().clone();
    mu.validate(&d)?;
    zeta.validate(&d)?;
    let mut breaks = singular.to_vec();
    breaks.extend(mu.atoms.iter().map(|a| a.0));
    let against_operator = integrate_over_bump(&d, test, &breaks, &u);
    let psi = test.psi();
    let mut against_mu: f64 = mu.atoms.iter().map(|(y, w)| w * psi.evaluate(y)).sum();
    if mu.density.is_some() {
        let hi = [d.length(0), if d.dim() == 2 { d.length(1) } else { 0.0 }];
        against_mu += integrate_box(&d, &[], [0.0; 2], hi, |x| mu.density_at(&d, x) * psi.evaluate(x));
    }
    let against_zeta = flux_against(&d, test, zeta);
    Ok(WeakResidual::new(against_operator, against_mu, against_zeta))
}

/// `int u f` over the support of the bump of a test function.
fn integrate_over_bump<F>(d: &SpectralDomain, test: &TestFunction, breaks: &[Point], u: F) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    let bump = *test.bump();
    let dim = d.dim();
    let r = bump.radius;
    let lo = [bump.center[0] - r, bump.center[1] - r];
    let hi = [bump.center[0] + r, bump.center[1] + r];
    integrate_box(d, breaks, lo, hi, |x| {
        let f = bump.value(dim, x);
        if f == 0.0 {
            0.0
        } else {
            u(x) * f
        }
    })
}

/// Tensor graded quadrature over a box, split at the coordinates of the
/// breakpoints. The second axis is ignored on the interval.
fn integrate_box<F>(d: &SpectralDomain, breaks: &[Point], lo: [f64; 2], hi: [f64; 2], f: F) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    let axis_nodes = |a: usize| -> Vec<(f64, f64)> {
        let cuts: Vec<f64> = breaks.iter().map(|p| p[a]).collect();
        SPATIAL.nodes_singular_at(lo[a], hi[a], &cuts, false)
    };
    let n0 = axis_nodes(0);
    if d.dim() == 1 {
        let terms: Vec<f64> = n0.par_iter().map(|&(x, w)| w * f(&[x, 0.0])).collect();
        return terms.iter().sum();
    }
    let n1 = axis_nodes(1);
    let terms: Vec<f64> = n0
        .par_iter()
        .map(|&(x, wx)| wx * n1.iter().map(|&(y, wy)| wy * f(&[x, y])).sum::<f64>())
        .collect();
    terms.iter().sum()
}

/// Strip average `(1/t) int_{delta < t} (u / h1) phi`.
pub fn boundary_trace<U, P>(
    k: &KernelEvaluator,
    u: U,
    phi: P,
    t: f64,
    resolution: f64,
) -> Result<f64>
where
    U: Fn(&Point) -> f64 + Sync,
    P: Fn(&Point) -> f64 + Sync,
{
    let d = k.domain();
    if !(t > 4.0 * resolution && t < d.diameter() / 8.0) {
        return Err(Error::Resolution(format!(
            "strip width {t:e} outside ({:e}, {:e})",
            4.0 * resolution,
            d.diameter() / 8.0
        )));
    }
    let integrand = |x: &Point| {
        let h = k.h1_unchecked(x);
        u(x) / h * phi(x)
    };
    // Nodes in the normal coordinate, graded toward the face. The ratio is
    // bounded, so the last `1e-10 L` is one midpoint node; closer in, the
    // far face would round onto the boundary.
    let cut = 1e-10 * d.diameter();
    let mut normal = SPATIAL.nodes_singular_at(cut, t, &[cut], false);
    normal.push((0.5 * cut, cut));
    let mut total = 0.0;
    if d.dim() == 1 {
        let l = d.length(0);
        for &(v, w) in &normal {
            total += w * (integrand(&[v, 0.0]) + integrand(&[l - v, 0.0]));
        }
        return Ok(total / t);
    }
    let lens = [d.length(0), d.length(1)];
    for axis in 0..2 {
        let other = 1 - axis;
        // the faces normal to axis 0 skip the corner squares already covered
        let (a, b) = if axis == 0 { (t, lens[other] - t) } else { (0.0, lens[other]) };
        let mut tang = Vec::new();
        for (p, q) in [(a, a + t.min(b - a)), (a + t.min(b - a), b - t.min(b - a)), (b - t.min(b - a), b)] {
            if q > p {
                tang.extend(composite(p, q, 2, SPATIAL.points));
            }
        }
        let parts: Vec<f64> = normal
            .par_iter()
            .map(|&(v, wv)| {
                let mut acc = 0.0;
                for &(tau, wt) in &tang {
                    let mut lo = [0.0; 2];
                    let mut hi = [0.0; 2];
                    lo[axis] = v;
                    hi[axis] = lens[axis] - v;
                    lo[other] = tau;
                    hi[other] = tau;
                    acc += wt * (integrand(&lo) + integrand(&hi));
                }
                wv * acc
            })
            .collect();
        total += parts.iter().sum::<f64>();
    }
    Ok(total / t)
}

/// Strip averages at `t0`, `t0/2`, `t0/4` and their Richardson limit.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub widths: [f64; 3],
    pub values: [f64; 3],
    pub extrapolated: f64,
}

pub fn trace_report<U, P>(k: &KernelEvaluator, u: U, phi: P, t0: f64, resolution: f64) -> Result<TraceReport>
where
    U: Fn(&Point) -> f64 + Sync,
    P: Fn(&Point) -> f64 + Sync,
{
    let widths = [t0, t0 / 2.0, t0 / 4.0];
    let mut values = [0.0; 3];
    for (v, t) in values.iter_mut().zip(widths) {
        *v = boundary_trace(k, &u, &phi, t, resolution)?;
    }
    // exact for T(t) = T0 + a t + b t^2
    let extrapolated = (8.0 * values[2] - 6.0 * values[1] + values[0]) / 3.0;
    Ok(TraceReport {
        widths,
        values,
        extrapolated,
    })
}

/// Behaviour of `sup_y int (G(x, y) / delta(y))^p delta(x) dx` as the probe
/// approaches the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct LpScan {
    pub p: f64,
    /// `(delta(y), integral)` in the order scanned.
    pub values: Vec<(f64, f64)>,
    pub sup: f64,
    /// `(N + 1) / (N + 1 - 2s)`.
    pub threshold: f64,
    /// Increments shrink and the last one is below 2% of the value.
    pub stabilizes: bool,
    /// Increasing, with increments that do not shrink.
    pub grows: bool,
}

/// Scans the weighted `L^p` integral of `G(., y) / delta(y)` over probes at
/// the given distances from the low face of the first axis, centred along
/// the second axis on the rectangle.
pub fn lp_threshold_scan(k: &KernelEvaluator, p: f64, distances: &[f64]) -> Result<LpScan> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be at least 1")));
    }
    let d = k.domain();
    let dim = d.dim();
    let mut probes: Vec<f64> = distances.to_vec();
    probes.sort_by(|a, b| b.total_cmp(a));
    let mut values = Vec::with_capacity(probes.len());
    for &dy in &probes {
        let y = if dim == 1 { [dy, 0.0] } else { [dy, 0.5 * d.length(1)] };
        if !d.contains(&y) || d.distance(&y) < dy * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!("probe distance {dy} not attainable")));
        }
        let hi = if dim == 1 { [d.length(0), 0.0] } else { [d.length(0), d.length(1)] };
        let v = integrate_box(d, &[y], [0.0; 2], hi, |x| {
            if x == &y {
                return 0.0;
            }
            (k.green_unchecked(x, &y) / dy).abs().powf(p) * d.distance(x)
        });
        values.push((dy, v));
    }
    let sup = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let incs: Vec<f64> = values.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let n = incs.len();
    let (stabilizes, grows) = if n >= 2 {
        let last = incs[n - 1];
        let prev = incs[n - 2];
        let stab = last.abs() < prev.abs() && last.abs() < 0.02 * values[n].1;
        let grow = incs.iter().all(|i| *i > 0.0) && last >= 0.9 * prev;
        (stab, grow)
    } else {
        (false, false)
    };
    Ok(LpScan {
        p,
        values,
        sup,
        threshold: (dim as f64 + 1.0) / (dim as f64 + 1.0 - 2.0 * k.order()),
        stabilizes,
        grows,
    })
}

/// Largest `|u / h1 - zeta(z(x))|` over regular nodes with `delta < window`,
/// where `z(x)` is the nearest boundary point.
pub fn boundary_ratio_defect(sol: &LinearSolution, zeta: &BoundaryMeasure, window: f64) -> f64 {
    let g = sol.grid();
    let d = g.domain();
    let k = sol.kernels();
    g.nodes()
        .par_iter()
        .enumerate()
        .filter(|(i, _)| g.distances()[*i] < window && !sol.singular.contains(i))
        .map(|(i, x)| {
            let z: BoundaryPoint = d.nearest_boundary_point(x);
            (sol.values.values()[i] / k.h1_unchecked(x) - zeta.density_at(d, &z)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `||f||_{L^1(delta dx)}` of grid values, skipping NaN entries.
pub fn l1_delta(grid: &Grid, values: &[f64]) -> f64 {
    let clean: Vec<f64> = values.iter().map(|v| if v.is_nan() { 0.0 } else { v.abs() }).collect();
    grid.weighted_integral(&clean, Weight::Distance).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{pt, Face, Side};
    use crate::grid::GridOptions;
    use crate::spectral::Bump;
    use std::f64::consts::PI;

    fn setup(s: f64) -> (KernelEvaluator, Arc<Grid>) {
        let d = Arc::new(SpectralDomain::interval(PI, 256).unwrap());
        let k = KernelEvaluator::new(d.clone(), s).unwrap();
        let g = Arc::new(
            Grid::new(
                d,
                GridOptions {
                    nodes: 64,
                    ..GridOptions::default()
                },
            )
            .unwrap(),
        );
        (k, g)
    }

    fn ends(d: &SpectralDomain) -> BoundaryMeasure {
        BoundaryMeasure {
            atoms: d.faces().into_iter().map(|f| (d.boundary_point(f, 0.0), 1.0)).collect(),
            density: None,
        }
    }

    #[test]
    fn unit_endpoint_atoms_give_h1() {
        let (k, g) = setup(0.5);
        let sol = solve_linear(&k, &InteriorMeasure::zero(), &ends(k.domain()), g.clone()).unwrap();
        for (x, v) in g.nodes().iter().zip(sol.values().values()) {
            let h = k.h1(x).unwrap();
            assert!((v - h).abs() < 1e-10 * h, "{x:?}");
        }
    }

    #[test]
    fn atom_matches_green_oracle() {
        let (k, g) = setup(0.5);
        let sol = solve_linear(&k, &InteriorMeasure::atom(pt(PI / 2.0), 1.0), &BoundaryMeasure::zero(), g).unwrap();
        assert!((sol.value(&pt(PI / 3.0)) - 0.419_200_7).abs() < 1e-7);
        let zero = solve_linear(&k, &InteriorMeasure::zero(), &BoundaryMeasure::zero(), setup(0.5).1).unwrap();
        assert!(zero.values().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn atom_on_node_is_flagged() {
        let (k, g) = setup(0.5);
        let y = g.nodes()[20];
        let sol = solve_linear(&k, &InteriorMeasure::atom(y, 1.0), &BoundaryMeasure::zero(), g).unwrap();
        assert_eq!(sol.singular_nodes(), &[20]);
        assert!(sol.l1_delta_norm().is_finite());
    }

    #[test]
    fn weak_residuals_vanish() {
        let (k, g) = setup(0.5);
        let d = k.domain().clone();
        let mu = InteriorMeasure {
            atoms: vec![(pt(1.0), 0.7), (pt(2.2), -0.3)],
            density: Some((crate::measure::InteriorProfile::Sine, 0.5)),
        };
        let zeta = BoundaryMeasure {
            atoms: vec![(d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0), 0.4)],
            density: Some((BoundaryProfile::One, 1.0)),
        };
        let sol = solve_linear(&k, &mu, &zeta, g).unwrap();
        for bump in Bump::family(&d, crate::spectral::BumpShape::Polynomial) {
            let t = TestFunction::new(d.clone(), bump, 0.5).unwrap();
            let r = sol.weak_residual(&t).unwrap();
            assert!(r.relative() < 1e-4, "{bump:?}: {r:?}");
        }
        // perturbing by an eigenfunction breaks it
        let t = TestFunction::new(d.clone(), Bump::family(&d, crate::spectral::BumpShape::Polynomial)[2], 0.5).unwrap();
        let r = weak_residual(|x| sol.value(x) + x[0].sin(), &[pt(1.0), pt(2.2)], &mu, &zeta, &t).unwrap();
        assert!(r.relative() > 1e-2, "{r:?}");
    }

    #[test]
    fn traces() {
        let (k, _) = setup(0.5);
        let d = k.domain().clone();
        let h1 = |x: &Point| k.h1_unchecked(x);
        let r = trace_report(&k, h1, |_| 1.0, 0.05, 1e-4).unwrap();
        assert!((r.extrapolated - 2.0).abs() < 1e-6, "{r:?}");
        let z = d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
        let r = trace_report(&k, |x| k.poisson_unchecked(x, &z), |_| 1.0, 0.05, 1e-4).unwrap();
        assert!((r.extrapolated - 1.0).abs() < 1e-3, "{r:?}");
        let r = trace_report(&k, |x| k.green_unchecked(x, &pt(PI / 2.0)), |_| 1.0, 0.05, 1e-4).unwrap();
        assert!(r.extrapolated.abs() < 1e-2, "{r:?}");
        assert!(matches!(boundary_trace(&k, h1, |_| 1.0, 1e-5, 1e-4), Err(Error::Resolution(_))));
    }

    #[test]
    fn lp_scan_threshold() {
        let (k, _) = setup(0.5);
        let probes = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4];
        let low = lp_threshold_scan(&k, 1.5, &probes).unwrap();
        let high = lp_threshold_scan(&k, 2.5, &probes).unwrap();
        println!("{low:?}\n{high:?}");
        assert!(low.stabilizes && !low.grows);
        assert!(high.grows && !high.stabilizes);
        assert_eq!(low.threshold, 2.0);
    }
}
