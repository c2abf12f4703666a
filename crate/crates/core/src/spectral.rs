//! Functions represented by their Dirichlet eigen-coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domain::{BoundaryPoint, Point, SpectralDomain};
use crate::error::{check_order, Error, Result};
use crate::quadrature::composite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Raw,
    /// `(-Delta)^{-s}` of a smooth compactly supported profile.
    TestFunction,
}

/// Truncated eigen-expansion `sum_j u_j phi_j`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    domain: Arc<SpectralDomain>,
    coefficients: Vec<f64>,
    regularity: Regularity,
}

/// Per-axis table `sin(j pi x / L)` for `j = 1..=n`, by the Chebyshev
/// recurrence.
pub(crate) fn sine_table(length: f64, x: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    if n == 0 {
        return;
    }
    let theta = PI * x / length;
    let s1 = theta.sin();
    let c2 = 2.0 * theta.cos();
    out.push(s1);
    let (mut prev, mut cur) = (0.0, s1);
    for _ in 1..n {
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
}

/// Rough default for the number of Gauss points per axis used by
/// [`SpectralField::project`].
pub fn default_quadrature_order(domain: &SpectralDomain) -> usize {
    match domain.dim() {
        1 => (8 * domain.truncation()).max(512),
        _ => (4 * domain.truncation()).max(128),
    }
}

impl SpectralField {
    pub fn new(domain: Arc<SpectralDomain>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != domain.mode_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                domain.mode_count(),
                coefficients.len()
            )));
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::NumericInput(format!("coefficient {i} is not finite")));
        }
        Ok(SpectralField {
            domain,
            coefficients,
            regularity: Regularity::Raw,
        })
    }

    pub fn zero(domain: Arc<SpectralDomain>) -> Self {
        let n = domain.mode_count();
        SpectralField {
            domain,
            coefficients: vec![0.0; n],
            regularity: Regularity::Raw,
        }
    }

    /// The eigenfunction with per-axis indices `index` (1-based; the second
    /// entry is ignored on the interval).
    pub fn eigenfunction(domain: Arc<SpectralDomain>, index: [usize; 2]) -> Result<Self> {
        let index = if domain.dim() == 1 { [index[0], 0] } else { index };
        let pos = domain.mode_position(index).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {index:?} beyond the truncation"))
        })?;
        let mut f = Self::zero(domain);
        f.coefficients[pos] = 1.0;
        Ok(f)
    }

    /// Coefficients `int u phi_j` by composite Gauss quadrature with
    /// `quadrature_order` points per axis.
    pub fn project<F>(domain: Arc<SpectralDomain>, u: F, quadrature_order: usize) -> Result<Self>
    where
        F: Fn(&Point) -> f64,
    {
        let per_panel = 16;
        let panels = quadrature_order.div_ceil(per_panel).max(1);
        let rules: Vec<Vec<(f64, f64)>> = (0..domain.dim())
            .map(|a| composite(0.0, domain.length(a), panels, per_panel))
            .collect();
        let t = domain.truncation();
        let mut table = Vec::with_capacity(t);
        // Weighted axis basis matrices: rows are quadrature nodes.
        let basis = |axis: usize, table: &mut Vec<f64>| {
            let rule = &rules[axis];
            let scale = (2.0 / domain.length(axis)).sqrt();
            let mut m = DMatrix::<f64>::zeros(rule.len(), t);
            for (i, &(x, w)) in rule.iter().enumerate() {
                sine_table(domain.length(axis), x, t, table);
                for j in 0..t {
                    m[(i, j)] = w * scale * table[j];
                }
            }
            m
        };
        let coefficients = match domain.dim() {
            1 => {
                let b = basis(0, &mut table);
                let mut vals = Vec::with_capacity(rules[0].len());
                for &(x, _) in &rules[0] {
                    let v = u(&[x, 0.0]);
                    if !v.is_finite() {
                        return Err(Error::NumericInput(format!("sample at x = {x} is {v}")));
                    }
                    vals.push(v);
                }
                let v = nalgebra::DVector::from_vec(vals);
                (b.transpose() * v).as_slice().to_vec()
            }
            _ => {
                let b0 = basis(0, &mut table);
                let b1 = basis(1, &mut table);
                let (n0, n1) = (rules[0].len(), rules[1].len());
                let mut samples = DMatrix::<f64>::zeros(n0, n1);
                for (i, &(x, _)) in rules[0].iter().enumerate() {
                    for (k, &(y, _)) in rules[1].iter().enumerate() {
                        let v = u(&[x, y]);
                        if !v.is_finite() {
                            return Err(Error::NumericInput(format!(
                                "sample at ({x}, {y}) is {v}"
                            )));
                        }
                        samples[(i, k)] = v;
                    }
                }
                let c = b0.transpose() * samples * b1;
                // mode order is a-major: position (a-1) T + (b-1)
                let mut out = vec![0.0; t * t];
                for a in 0..t {
                    for b in 0..t {
                        out[a * t + b] = c[(a, b)];
                    }
                }
                out
            }
        };
        Self::new(domain, coefficients)
    }

    pub fn domain(&self) -> &Arc<SpectralDomain> {
        &self.domain
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    /// Coefficients multiplied by `lambda_j^power`, any real power.
    pub(crate) fn scaled_by_power(&self, power: f64) -> SpectralField {
        let coefficients = self
            .domain
            .modes()
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| if *c == 0.0 { 0.0 } else { m.lambda.powf(power) * c })
            .collect();
        SpectralField {
            domain: self.domain.clone(),
            coefficients,
            regularity: Regularity::Raw,
        }
    }

    /// `(-Delta)^s u`: coefficients `lambda_j^s u_j`.
    pub fn apply_spectral(&self, s: f64) -> Result<SpectralField> {
        check_order(s)?;
        Ok(self.scaled_by_power(s))
    }

    /// `(-Delta)^{-s} u`: coefficients `lambda_j^{-s} u_j`.
    pub fn inverse_apply(&self, s: f64) -> Result<SpectralField> {
        check_order(s)?;
        Ok(self.scaled_by_power(-s))
    }

    /// Squared `H(2s)` norm `sum lambda_j^{2s} u_j^2`.
    pub fn h2s_norm_squared(&self, s: f64) -> f64 {
        self.domain
            .modes()
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| m.lambda.powf(2.0 * s) * c * c)
            .sum()
    }

    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, factor: f64) -> SpectralField {
        SpectralField {
            domain: self.domain.clone(),
            coefficients: self.coefficients.iter().map(|c| factor * c).collect(),
            regularity: self.regularity,
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        SpectralField {
            domain: self.domain.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a + b)
                .collect(),
            regularity: Regularity::Raw,
        }
    }

    /// Largest mode index per axis carrying a nonzero coefficient.
    fn active_extent(&self) -> [usize; 2] {
        let mut ext = [0usize; 2];
        for (m, c) in self.domain.modes().iter().zip(&self.coefficients) {
            if *c != 0.0 {
                ext[0] = ext[0].max(m.index[0]);
                ext[1] = ext[1].max(m.index[1]);
            }
        }
        ext
    }

    fn fold<F>(&self, x: &Point, mut weight: F) -> f64
    where
        F: FnMut(usize, &[Vec<f64>; 2], f64) -> f64,
    {
        let ext = self.active_extent();
        let d = &self.domain;
        let mut tables = [Vec::new(), Vec::new()];
        for a in 0..d.dim() {
            sine_table(d.length(a), x[a], ext[a], &mut tables[a]);
        }
        let mut sum = 0.0;
        for (k, (m, c)) in d.modes().iter().zip(&self.coefficients).enumerate() {
            if *c != 0.0 {
                sum += weight(k, &tables, m.lambda) * c;
            }
        }
        sum
    }

    pub fn evaluate(&self, x: &Point) -> f64 {
        let d = self.domain.clone();
        let scale: f64 = (0..d.dim()).map(|a| (2.0 / d.length(a)).sqrt()).product();
        let modes = d.modes();
        scale
            * self.fold(x, |k, t, _| {
                let m = &modes[k];
                let mut v = t[0][m.index[0] - 1];
                if d.dim() == 2 {
                    v *= t[1][m.index[1] - 1];
                }
                v
            })
    }

    /// `e^{t Delta} u (x)`.
    pub fn evaluate_propagated(&self, t: f64, x: &Point) -> f64 {
        let d = self.domain.clone();
        let scale: f64 = (0..d.dim()).map(|a| (2.0 / d.length(a)).sqrt()).product();
        let modes = d.modes();
        scale
            * self.fold(x, |k, tab, lambda| {
                let m = &modes[k];
                let mut v = tab[0][m.index[0] - 1];
                if d.dim() == 2 {
                    v *= tab[1][m.index[1] - 1];
                }
                (-lambda * t).exp() * v
            })
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let d = &self.domain;
        let mut g = [0.0; 2];
        for (m, c) in d.modes().iter().zip(&self.coefficients) {
            if *c == 0.0 {
                continue;
            }
            for (a, ga) in g.iter_mut().enumerate().take(d.dim()) {
                let l = d.length(a);
                let j = m.index[a] as f64;
                let mut v = (2.0 / l).sqrt() * j * PI / l * (j * PI * x[a] / l).cos();
                if d.dim() == 2 {
                    let o = 1 - a;
                    v *= d.axis_eigenfunction(o, m.index[o], x[o]);
                }
                *ga += c * v;
            }
        }
        g
    }

    /// Outward normal derivative at a boundary point.
    pub fn normal_derivative(&self, z: &BoundaryPoint) -> f64 {
        self.domain
            .modes()
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| c * self.domain.eigenfunction_normal_derivative(m, z))
            .sum()
    }

    /// Checks `|u_j| <= C lambda_j^{-power}`: reports the constant over the
    /// resolved modes and the log-log slope of the coefficient envelope over
    /// the upper half of the resolved range.
    pub fn decay_check(&self, power: u32) -> DecayFit {
        let mut pairs: Vec<(f64, f64)> = self
            .domain
            .modes()
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| (m.lambda, c.abs()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let peak = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
        // Coefficients below the quadrature noise floor carry no information.
        let floor = 1e-12 * peak;
        let last = pairs.iter().rposition(|p| p.1 > floor).map_or(0, |i| i + 1);
        let resolved = &pairs[..last];
        let constant = resolved
            .iter()
            .filter(|p| p.1 > floor)
            .map(|(l, c)| c * l.powi(power as i32))
            .fold(0.0, f64::max);
        // Envelope: block maxima of eight consecutive modes.
        let block = 8;
        let env: Vec<(f64, f64)> = resolved
            .chunks(block)
            .filter(|c| c.len() == block)
            .filter_map(|c| {
                let m = c.iter().map(|p| p.1).fold(0.0, f64::max);
                (m > floor).then(|| (c[block - 1].0.ln(), m.ln()))
            })
            .collect();
        let tail = &env[env.len() / 2..];
        let slope = if tail.len() >= 2 {
            let n = tail.len() as f64;
            let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
            let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        } else {
            // everything below the floor: faster than any power
            f64::NEG_INFINITY
        };
        DecayFit {
            power,
            constant,
            resolved_modes: last,
            envelope_slope: slope,
        }
    }
}

/// Result of [`SpectralField::decay_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub power: u32,
    /// `max_j |u_j| lambda_j^power` over resolved modes.
    pub constant: f64,
    pub resolved_modes: usize,
    /// Fitted exponent of `|u_j| ~ lambda_j^slope` over the resolved tail.
    pub envelope_slope: f64,
}

impl DecayFit {
    /// Finite constant, and the tail decays at least like `lambda^{-power}`.
    pub fn beats(&self) -> bool {
        self.constant.is_finite() && self.envelope_slope < -(self.power as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpShape {
    /// `(1 - r^2)^4`, with exact polynomial moments.
    Polynomial,
    /// `exp(1 - 1 / (1 - r^2))`, infinitely smooth.
    Smooth,
}

/// Radial bump of unit height supported in the ball `|x - center| < radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub shape: BumpShape,
    pub center: Point,
    pub radius: f64,
}

impl Bump {
    pub fn polynomial(center: Point, radius: f64) -> Self {
        Bump {
            shape: BumpShape::Polynomial,
            center,
            radius,
        }
    }

    pub fn smooth(center: Point, radius: f64) -> Self {
        Bump {
            shape: BumpShape::Smooth,
            center,
            radius,
        }
    }

    fn r2(&self, dim: usize, x: &Point) -> f64 {
        (0..dim)
            .map(|a| ((x[a] - self.center[a]) / self.radius).powi(2))
            .sum()
    }

    fn profile(&self, r2: f64) -> (f64, f64) {
        // value and derivative with respect to r^2
        if r2 >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - r2;
        match self.shape {
            BumpShape::Polynomial => (q.powi(4), -4.0 * q.powi(3)),
            BumpShape::Smooth => {
                let v = (1.0 - 1.0 / q).exp();
                (v, -v / (q * q))
            }
        }
    }

    pub fn value(&self, dim: usize, x: &Point) -> f64 {
        self.profile(self.r2(dim, x)).0
    }

    pub fn gradient(&self, dim: usize, x: &Point) -> Point {
        let (_, d) = self.profile(self.r2(dim, x));
        let mut g = [0.0; 2];
        for a in 0..dim {
            g[a] = d * 2.0 * (x[a] - self.center[a]) / (self.radius * self.radius);
        }
        g
    }

    /// Support strictly inside the domain.
    pub fn inside(&self, domain: &SpectralDomain) -> bool {
        (0..domain.dim()).all(|a| {
            self.center[a] - self.radius > 0.0 && self.center[a] + self.radius < domain.length(a)
        })
    }

    /// A fixed family of five bumps spread over the domain.
    pub fn family(domain: &SpectralDomain, shape: BumpShape) -> Vec<Bump> {
        const CENTERS: [f64; 5] = [0.3, 0.42, 0.5, 0.6, 0.7];
        const SECOND: [f64; 5] = [0.5, 0.35, 0.5, 0.62, 0.45];
        const RADII: [f64; 5] = [0.15, 0.2, 0.3, 0.2, 0.15];
        (0..5)
            .map(|k| {
                let l0 = domain.length(0);
                let (center, radius) = if domain.dim() == 1 {
                    ([CENTERS[k] * l0, 0.0], RADII[k] * l0)
                } else {
                    let l1 = domain.length(1);
                    let r = RADII[k] * l0.min(l1);
                    ([CENTERS[k] * l0, SECOND[k] * l1], r)
                };
                Bump {
                    shape,
                    center,
                    radius,
                }
            })
            .collect()
    }
}

/// `psi = (-Delta)^{-s} f` for a bump `f`, with its boundary flux cached on
/// a surface quadrature.
#[derive(Debug, Clone)]
pub struct TestFunction {
    bump: Bump,
    s: f64,
    psi: SpectralField,
    boundary: Vec<(BoundaryPoint, f64)>,
    inward_flux: Vec<f64>,
}

impl TestFunction {
    pub fn new(domain: Arc<SpectralDomain>, bump: Bump, s: f64) -> Result<Self> {
        check_order(s)?;
        if !bump.inside(&domain) {
            return Err(Error::InvalidArgument(format!(
                "bump support {bump:?} not strictly inside the domain"
            )));
        }
        let dim = domain.dim();
        let order = default_quadrature_order(&domain);
        let f = SpectralField::project(domain.clone(), |x| bump.value(dim, x), order)?;
        let psi = f.inverse_apply(s)?.with_regularity(Regularity::TestFunction);
        let boundary = domain.boundary_rule(16, 8);
        let inward_flux = boundary.iter().map(|(z, _)| -psi.normal_derivative(z)).collect();
        Ok(TestFunction {
            bump,
            s,
            psi,
            boundary,
            inward_flux,
        })
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn psi(&self) -> &SpectralField {
        &self.psi
    }

    /// `(-Delta)^s psi`, which is the bump itself.
    pub fn operator_image(&self, x: &Point) -> f64 {
        self.bump.value(self.psi.domain().dim(), x)
    }

    /// Surface quadrature nodes with `-d psi / d nu` at each.
    pub fn boundary_flux(&self) -> impl Iterator<Item = (&BoundaryPoint, f64, f64)> {
        self.boundary
            .iter()
            .zip(&self.inward_flux)
            .map(|((z, w), f)| (z, *w, *f))
    }

    /// `-d psi / d nu` at an arbitrary boundary point.
    pub fn inward_flux(&self, z: &BoundaryPoint) -> f64 {
        -self.psi.normal_derivative(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::pt;

    fn interval() -> Arc<SpectralDomain> {
        Arc::new(SpectralDomain::interval(PI, 64).unwrap())
    }

    #[test]
    fn project_eigenfunction_and_constant() {
        let d = interval();
        let f = SpectralField::project(d.clone(), |x| d.eigenfunction(&d.modes()[2], x), 512).unwrap();
        for (j, c) in f.coefficients().iter().enumerate() {
            let want = if j == 2 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12, "{j}: {c}");
        }
        let one = SpectralField::project(d.clone(), |_| 1.0, 512).unwrap();
        for (j, c) in one.coefficients().iter().enumerate() {
            let jj = j + 1;
            let want = if jj % 2 == 1 {
                (2.0 / PI).sqrt() * 2.0 / jj as f64
            } else {
                0.0
            };
            assert!((c - want).abs() < 1e-12, "{jj}: {c} vs {want}");
        }
        let two = SpectralField::project(d, |x| x[0].sin() + (2.0 * x[0]).sin(), 512).unwrap();
        let want = (PI / 2.0).sqrt();
        assert!((two.coefficients()[0] - want).abs() < 1e-12);
        assert!((two.coefficients()[1] - want).abs() < 1e-12);
    }

    #[test]
    fn project_rejects_non_finite_samples() {
        let d = interval();
        let r = SpectralField::project(d, |x| 1.0 / (x[0] - x[0]), 64);
        assert!(matches!(r, Err(Error::NumericInput(_))));
    }

    #[test]
    fn powers_and_evaluation() {
        let d = interval();
        let phi2 = SpectralField::eigenfunction(d.clone(), [2, 0]).unwrap();
        let a = phi2.apply_spectral(0.5).unwrap();
        assert!((a.coefficients()[1] - 2.0).abs() < 1e-15);
        let phi3 = SpectralField::eigenfunction(d.clone(), [3, 0]).unwrap();
        let b = phi3.inverse_apply(0.5).unwrap();
        assert!((b.coefficients()[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(phi2.apply_spectral(1.5).is_err());
        assert!(phi2.inverse_apply(0.0).is_err());
        let x = pt(0.7);
        assert!((phi2.evaluate(&x) - d.eigenfunction(&d.modes()[1], &x)).abs() < 1e-15);
        let g = phi2.gradient(&x)[0];
        let want = (2.0 / PI).sqrt() * 2.0 * (1.4f64).cos();
        assert!((g - want).abs() < 1e-14);
    }

    #[test]
    fn rectangle_projection_is_tensor() {
        let d = Arc::new(SpectralDomain::rectangle(PI, 2.0, 12).unwrap());
        let m = d.modes()[d.mode_position([2, 3]).unwrap()];
        let f = SpectralField::project(d.clone(), |x| d.eigenfunction(&m, x), 96).unwrap();
        let pos = d.mode_position([2, 3]).unwrap();
        for (k, c) in f.coefficients().iter().enumerate() {
            let want = if k == pos { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12);
        }
        let x = [0.4, 1.3];
        assert!((f.evaluate(&x) - d.eigenfunction(&m, &x)).abs() < 1e-12);
    }

    #[test]
    fn smooth_bump_decays_faster_than_polynomial_bump() {
        let d = Arc::new(SpectralDomain::interval(PI, 256).unwrap());
        let order = default_quadrature_order(&d);
        let smooth = Bump::smooth([1.5, 0.0], 0.8);
        let poly = Bump::polynomial([1.5, 0.0], 0.8);
        let fs = SpectralField::project(d.clone(), |x| smooth.value(1, x), order).unwrap();
        let fp = SpectralField::project(d, |x| poly.value(1, x), order).unwrap();
        for m in 1..=3 {
            let c = fs.decay_check(m);
            assert!(c.beats(), "{c:?}");
        }
        // (1 - r^2)^4 has coefficients of order j^{-5} = lambda^{-5/2}
        let p3 = fp.decay_check(3);
        assert!(!p3.beats(), "{p3:?}");
        assert!((p3.envelope_slope + 2.5).abs() < 0.25, "{p3:?}");
        assert!(fp.decay_check(2).beats());
    }
}
