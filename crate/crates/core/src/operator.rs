//! Pointwise and semigroup realizations of the operator.

use crate::domain::{Point, SpectralDomain};
use crate::error::{check_open_order, Error, Result};
use crate::grid::{Field, GridFunction};
use crate::kernels::KernelEvaluator;
use crate::quadrature::{composite, Grading};
use crate::special::{gamma, upper_gamma};
use crate::spectral::SpectralField;

/// Grading used next to the excision center. It stops at about `1e-4`
/// of the excision radius: closer in, the subtracted integrand is rounding
/// noise amplified by the kernel.
const INNER: Grading = Grading {
    ratio: 0.25,
    levels: 7,
    points: 8,
};

/// Inner nodes on `(eps, rho]` and the cutoff `eps`.
fn inner_nodes(rho: f64, cap: f64) -> (Vec<(f64, f64)>, f64) {
    let panels = INNER.panels_toward_start(0.0, rho);
    let eps = panels.last().map_or(0.0, |p| p.1);
    let mut out = Vec::new();
    for &(a, b) in &panels[..panels.len() - 1] {
        out.extend(INNER.nodes_capped(a, b, false, false, cap));
    }
    (out, eps)
}

/// Grading used toward the boundary in the outer region.
const OUTER: Grading = Grading {
    ratio: 0.3,
    levels: 30,
    points: 8,
};

/// `PV int (u(x) - u(y)) J(x, y) dy + kappa(x) u(x)` for a field with known
/// value and gradient.
///
/// The principal value is taken over a symmetric excision of radius
/// `delta(x) / 2`: the first-order Taylor term is subtracted inside it and
/// its odd part is added back through `int h (J(x, x+h) - J(x, x-h)) dh`,
/// which converges absolutely.
pub fn apply_pointwise<F: Field + ?Sized>(k: &KernelEvaluator, u: &F, x: &Point) -> Result<f64> {
    let s = k.order();
    check_open_order(s)?;
    let d = k.domain();
    if !d.contains(x) {
        return Err(Error::InvalidArgument(format!(
            "{x:?} must be an interior point"
        )));
    }
    let ux = u.value(x);
    let grad = u.gradient(x);
    if !ux.is_finite() || !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::NumericInput(format!("field at {x:?} is {ux}, {grad:?}")));
    }
    let rho = 0.5 * d.distance(x);
    let pv = if d.dim() == 1 {
        pv_interval(k, u, x[0], ux, grad[0], rho, d)
    } else {
        pv_rectangle(k, u, x, ux, grad, rho, d)
    };
    Ok(pv + k.killing_unchecked(x) * ux)
}

/// [`apply_pointwise`] on the interpolant of a grid function. Points in a
/// cell touching the boundary are rejected.
pub fn apply_pointwise_grid(k: &KernelEvaluator, u: &GridFunction, x: &Point) -> Result<f64> {
    let g = u.grid();
    if g.domain().contains(x) && g.in_outermost_cell(x) {
        return Err(Error::NearBoundary {
            point: *x,
            cell: g.cell_width(x),
        });
    }
    let patch = CellPatch::new(u, x);
    apply_pointwise(k, &patch, x)
}

/// The interpolant of a grid function, replaced around `x` by one
/// polynomial through the nodes of the cell of `x` and its nearest
/// neighbour, so that no cell-edge kink sits at the center.
struct CellPatch<'a> {
    u: &'a GridFunction,
    /// Per axis: node index range and covered interval.
    ranges: Vec<(std::ops::Range<usize>, f64, f64)>,
}

/// Lagrange basis (or its derivative) of arbitrary nodes at `x`.
fn lagrange(t: &[f64], x: f64, derivative: bool, out: &mut Vec<f64>) {
    out.clear();
    for j in 0..t.len() {
        if !derivative {
            let mut v = 1.0;
            for k in 0..t.len() {
                if k != j {
                    v *= (x - t[k]) / (t[j] - t[k]);
                }
            }
            out.push(v);
        } else {
            let mut sum = 0.0;
            for m in 0..t.len() {
                if m == j {
                    continue;
                }
                let mut v = 1.0 / (t[j] - t[m]);
                for k in 0..t.len() {
                    if k != j && k != m {
                        v *= (x - t[k]) / (t[j] - t[k]);
                    }
                }
                sum += v;
            }
            out.push(sum);
        }
    }
}

impl<'a> CellPatch<'a> {
    fn new(u: &'a GridFunction, x: &Point) -> Self {
        let g = u.grid();
        let cells = g.locate(x);
        let mut ranges = Vec::new();
        for (a, axis) in g.axes().iter().enumerate() {
            let c = cells[a];
            let (lo, hi) = axis.cell_bounds(c);
            let other = if x[a] - lo < hi - x[a] {
                c.checked_sub(1)
            } else if c + 1 < axis.cell_count() {
                Some(c + 1)
            } else {
                None
            };
            let (first, last) = match other {
                Some(o) => (c.min(o), c.max(o)),
                None => (c, c),
            };
            let start = axis.cell_nodes(first).start;
            let end = axis.cell_nodes(last).end;
            ranges.push((start..end, axis.cell_bounds(first).0, axis.cell_bounds(last).1));
        }
        CellPatch { u, ranges }
    }

    fn near(&self, y: &Point) -> bool {
        self.ranges
            .iter()
            .enumerate()
            .all(|(a, (_, lo, hi))| y[a] > *lo && y[a] < *hi)
    }

    fn cell_value(&self, y: &Point, derivative: Option<usize>) -> f64 {
        let g = self.u.grid();
        let axes = g.axes();
        let mut basis = [Vec::new(), Vec::new()];
        for (a, axis) in axes.iter().enumerate() {
            let t = &axis.nodes()[self.ranges[a].0.clone()];
            lagrange(t, y[a], derivative == Some(a), &mut basis[a]);
        }
        let v = self.u.values();
        let r0 = self.ranges[0].0.clone();
        if axes.len() == 1 {
            return r0.zip(&basis[0]).map(|(i, b)| b * v[i]).sum();
        }
        let r1 = self.ranges[1].0.clone();
        let mut sum = 0.0;
        for (i, b0) in r0.zip(&basis[0]) {
            for (j, b1) in r1.clone().zip(&basis[1]) {
                sum += b0 * b1 * v[g.flat_index([i, j])];
            }
        }
        sum
    }
}

impl Field for CellPatch<'_> {
    fn value(&self, y: &Point) -> f64 {
        if self.near(y) {
            self.cell_value(y, None)
        } else {
            self.u.interpolate(y)
        }
    }

    fn gradient(&self, y: &Point) -> Point {
        if self.near(y) {
            let dim = self.u.grid().domain().dim();
            let mut g = [0.0, 0.0];
            for (a, slot) in g.iter_mut().enumerate().take(dim) {
                *slot = self.cell_value(y, Some(a));
            }
            g
        } else {
            self.u.interpolate_gradient(y)
        }
    }
}

fn jump(k: &KernelEvaluator, x: &Point, y: &Point) -> f64 {
    k.jump_unchecked(x, y)
}

fn pv_interval<F: Field + ?Sized>(
    k: &KernelEvaluator,
    u: &F,
    x: f64,
    ux: f64,
    du: f64,
    rho: f64,
    d: &SpectralDomain,
) -> f64 {
    let l = d.length(0);
    let xp = [x, 0.0];
    let mut sum = 0.0;
    // inner: symmetric pairs h and -h
    let cap = l / 64.0;
    let integrand = |h: f64| {
        let yp = [x + h, 0.0];
        let ym = [x - h, 0.0];
        let jp = jump(k, &xp, &yp);
        let jm = jump(k, &xp, &ym);
        let ep = ux - u.value(&yp) + du * h;
        let em = ux - u.value(&ym) - du * h;
        ep * jp + em * jm - du * h * (jp - jm)
    };
    let (nodes, eps) = inner_nodes(rho, cap);
    for (h, w) in nodes {
        sum += w * integrand(h);
    }
    // below eps the integrand behaves like A h^{1-2s}
    sum += integrand(eps) * eps / (2.0 - 2.0 * k.order());
    // outer: [0, x - rho] and [x + rho, L], graded toward the boundary
    let mut outer = |a: f64, b: f64, toward_start: bool| {
        for (y, w) in OUTER.nodes_capped(a, b, toward_start, !toward_start, cap) {
            let yp = [y, 0.0];
            sum += w * (ux - u.value(&yp)) * jump(k, &xp, &yp);
        }
    };
    outer(0.0, x - rho, true);
    outer(x + rho, l, false);
    sum
}

fn pv_rectangle<F: Field + ?Sized>(
    k: &KernelEvaluator,
    u: &F,
    x: &Point,
    ux: f64,
    grad: Point,
    rho: f64,
    d: &SpectralDomain,
) -> f64 {
    let cap = d.length(0).max(d.length(1)) / 12.0;
    let inner = INNER.nodes_capped(0.0, rho, true, false, cap);
    let _ = inner_nodes;
    let mut sum = 0.0;
    // inner box as four quadrants folded into one, pairing h with -h
    for (h0, w0) in &inner {
        for (h1, w1) in &inner {
            for sign in [1.0, -1.0] {
                let h = [*h0, sign * h1];
                let yp = [x[0] + h[0], x[1] + h[1]];
                let ym = [x[0] - h[0], x[1] - h[1]];
                let jp = jump(k, x, &yp);
                let jm = jump(k, x, &ym);
                let lin = grad[0] * h[0] + grad[1] * h[1];
                let ep = ux - u.value(&yp) + lin;
                let em = ux - u.value(&ym) - lin;
                sum += w0 * w1 * (ep * jp + em * jm - lin * (jp - jm));
            }
        }
    }
    // outer region: the domain minus the box, as a 3 x 3 block layout
    let cuts = |a: usize| {
        let l = d.length(a);
        [
            (0.0, x[a] - rho, true, false),
            (x[a] - rho, x[a] + rho, false, false),
            (x[a] + rho, l, false, true),
        ]
    };
    let c0 = cuts(0);
    let c1 = cuts(1);
    let rule = |seg: (f64, f64, bool, bool)| -> Vec<(f64, f64)> {
        OUTER.nodes_capped(seg.0, seg.1, seg.2, seg.3, cap)
    };
    for (i, a) in c0.iter().enumerate() {
        let ra = rule(*a);
        for (j, b) in c1.iter().enumerate() {
            if i == 1 && j == 1 {
                continue;
            }
            let rb = rule(*b);
            for (y0, w0) in &ra {
                for (y1, w1) in &rb {
                    let y = [*y0, *y1];
                    sum += w0 * w1 * (ux - u.value(&y)) * jump(k, x, &y);
                }
            }
        }
    }
    sum
}

/// `(s / Gamma(1-s)) int_0^inf (u(x) - e^{t Delta} u(x)) t^{-1-s} dt`.
///
/// The propagated values come from the heat semigroup on the field. Below
/// `t_lo` the integrand is replaced by its second-order expansion, above
/// `40 / lambda_1` by the exact incomplete-gamma tail; in between a Gauss
/// rule in `ln t` is used.
pub fn apply_semigroup(field: &SpectralField, s: f64, x: &Point) -> Result<f64> {
    check_open_order(s)?;
    let d = field.domain();
    if !d.contains(x) {
        return Err(Error::InvalidArgument(format!(
            "{x:?} must be an interior point"
        )));
    }
    let modes = d.modes();
    let mut terms = Vec::new();
    for (m, c) in modes.iter().zip(field.coefficients()) {
        if *c != 0.0 {
            terms.push((m.lambda, c * d.eigenfunction(m, x)));
        }
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    let lambda_max = terms.iter().map(|t| t.0).fold(0.0, f64::max);
    let t_lo = 1e-4 / lambda_max;
    let t_hi = 40.0 / d.smallest_eigenvalue();
    // u(x) - e^{t Delta} u(x), free of cancellation
    let deficit = |t: f64| -> f64 { terms.iter().map(|(l, c)| -c * (-l * t).exp_m1()).sum() };
    let panels = ((t_hi / t_lo).ln() / 0.5).ceil() as usize;
    let mut body = 0.0;
    for (v, w) in composite(t_lo.ln(), t_hi.ln(), panels, 8) {
        let t = v.exp();
        body += w * deficit(t) * t.powf(-s);
    }
    // -Delta u and Delta^2 u at x for the small-time expansion
    let lap: f64 = terms.iter().map(|(l, c)| l * c).sum();
    let bilap: f64 = terms.iter().map(|(l, c)| l * l * c).sum();
    let head = lap * t_lo.powf(1.0 - s) / (1.0 - s) - 0.5 * bilap * t_lo.powf(2.0 - s) / (2.0 - s);
    let tail: f64 = terms
        .iter()
        .map(|(l, c)| c * (t_hi.powf(-s) / s - l.powf(s) * upper_gamma(-s, l * t_hi)))
        .sum();
    let third: f64 = terms.iter().map(|(l, c)| (l.powi(3) * c).abs()).sum::<f64>()
        * t_lo.powf(3.0 - s)
        / 6.0;
    let value = s / gamma(1.0 - s) * (head + body + tail);
    let scale = terms.iter().map(|(l, c)| l.powf(s) * c.abs()).sum::<f64>();
    if third > 1e-8 * scale.max(1e-300) {
        return Err(Error::QuadratureNonConvergence {
            estimate: third,
            tolerance: 1e-8 * scale,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::pt;
    use std::f64::consts::PI;
    use crate::grid::FnField;
    use crate::spectral::{Bump, BumpShape};
    use std::sync::Arc;

    fn interval() -> Arc<SpectralDomain> {
        Arc::new(SpectralDomain::interval(PI, 256).unwrap())
    }

    #[test]
    fn eigenfunction_all_routes() {
        let d = interval();
        let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
        for j in [1usize, 2, 3] {
            let phi = SpectralField::eigenfunction(d.clone(), [j, 0]).unwrap();
            for &x in &[PI / 4.0, PI / 2.0, 2.0] {
                let want = j as f64 * phi.evaluate(&pt(x));
                let pw = apply_pointwise(&k, &phi, &pt(x)).unwrap();
                let sg = apply_semigroup(&phi, 0.5, &pt(x)).unwrap();
                assert!((pw - want).abs() < 1e-6 * want.abs().max(1.0), "pw {j} {x}: {pw} vs {want}");
                assert!((sg - want).abs() < 1e-9 * want.abs().max(1.0), "sg {j} {x}: {sg} vs {want}");
            }
        }
        let phi1 = SpectralField::eigenfunction(d.clone(), [1, 0]).unwrap();
        let v = apply_pointwise(&k, &phi1, &pt(PI / 2.0)).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn constant_gives_killing_measure() {
        let k = KernelEvaluator::new(interval(), 0.5).unwrap();
        let one = FnField {
            value: |_: &Point| 1.0,
            gradient: |_: &Point| [0.0, 0.0],
        };
        let v = apply_pointwise(&k, &one, &pt(PI / 2.0)).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-10);
        let zero = FnField {
            value: |_: &Point| 0.0,
            gradient: |_: &Point| [0.0, 0.0],
        };
        assert_eq!(apply_pointwise(&k, &zero, &pt(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn bumps_agree_across_routes() {
        let d = interval();
        for &s in &[0.3, 0.7] {
            let k = KernelEvaluator::new(d.clone(), s).unwrap();
            for bump in Bump::family(&d, BumpShape::Polynomial).into_iter().take(2) {
                let f = SpectralField::project(d.clone(), |x| bump.value(1, x), 2048).unwrap();
                let spec = f.apply_spectral(s).unwrap();
                let x = bump.center;
                let want = spec.evaluate(&x);
                let pw = apply_pointwise(&k, &f, &x).unwrap();
                let sg = apply_semigroup(&f, s, &x).unwrap();
                assert!((pw - want).abs() < 1e-4 * want.abs(), "s={s}: {pw} vs {want}");
                assert!((sg - want).abs() < 1e-8 * want.abs(), "s={s}: {sg} vs {want}");
            }
        }
    }

    #[test]
    fn grid_version_rejects_outer_cells() {
        let d = interval();
        let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
        let g = Arc::new(crate::grid::boundary_graded_grid(d.clone(), 64, 0.7).unwrap());
        let u = GridFunction::sample(g.clone(), |x| x[0].sin());
        let x = g.nodes()[0];
        assert!(matches!(apply_pointwise_grid(&k, &u, &x), Err(Error::NearBoundary { .. })));
        let v = apply_pointwise_grid(&k, &u, &pt(PI / 2.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "{v}");
    }

    #[test]
    fn rectangle_eigenfunction() {
        let d = Arc::new(SpectralDomain::rectangle(PI, PI, 32).unwrap());
        let k = KernelEvaluator::new(d.clone(), 0.5).unwrap();
        let phi = SpectralField::eigenfunction(d.clone(), [1, 2]).unwrap();
        let x = [1.2, 1.4];
        let want = 5f64.sqrt() * phi.evaluate(&x);
        let pw = apply_pointwise(&k, &phi, &x).unwrap();
        assert!((pw - want).abs() < 1e-4 * want.abs(), "{pw} vs {want}");
        let sg = apply_semigroup(&phi, 0.5, &x).unwrap();
        assert!((sg - want).abs() < 1e-9 * want.abs());
    }
}
