//! Green function, Poisson kernel, jumping kernel, killing measure and `h1`.
//!
//! Every kernel is a time integral of the Dirichlet heat kernel against a
//! power of `t`. The integral is split at the switch time `t_s`. Below it the
//! heat kernel is a finite sum of signed Gaussians and each Gaussian
//! integrates in closed form to an incomplete gamma function; above it the
//! heat kernel is a sine series and each mode integrates to
//! `lambda^{-nu} Gamma(nu, lambda t_s)`. Only the near-time part of
//! products of survival probabilities on the rectangle is left to
//! quadrature.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{BoundaryPoint, Point, Side, SpectralDomain};
use crate::error::{check_order, Error, Result};
use crate::heat::{HeatKernel, DEFAULT_IMAGES};
use crate::quadrature::{composite, GaussRule};
use crate::special::{gamma, upper_gamma};

/// Gaussians whose exponent at the switch time exceeds this are dropped.
const IMAGE_CUTOFF: f64 = 50.0;
/// Modes with `lambda t_s` above this are dropped from the series part.
const MODE_CUTOFF: f64 = 50.0;

/// Node counts for the time quadratures that are not done in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePlan {
    /// Gauss points on the near field `(t0 / 1000, t0]`, in `ln t`.
    pub near_points: usize,
    /// Gauss points per far-field panel in `ln t`.
    pub far_points: usize,
    /// Far-field panel width in `ln t`.
    pub far_panel: f64,
    /// Relative bound on the truncated series tail.
    pub tolerance: f64,
}

impl Default for TimePlan {
    fn default() -> Self {
        TimePlan {
            near_points: 64,
            far_points: 8,
            far_panel: 1.0,
            tolerance: 1e-9,
        }
    }
}

impl TimePlan {
    /// `int_0^horizon f(t) dt` for an integrand that vanishes faster than any
    /// power below the scale `t0`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, t0: f64, horizon: f64, mut f: F) -> f64 {
        let lo = (t0 * 1e-3).ln();
        let mid = t0.min(horizon).ln();
        let hi = horizon.ln();
        let mut sum = 0.0;
        if mid > lo {
            let rule = GaussRule::legendre(self.near_points);
            sum += rule.integrate(lo, mid, |u| {
                let t = u.exp();
                f(t) * t
            });
        }
        if hi > mid {
            let panels = ((hi - mid) / self.far_panel).ceil().max(1.0) as usize;
            for (u, w) in composite(mid, hi, panels, self.far_points) {
                let t = u.exp();
                sum += w * f(t) * t;
            }
        }
        sum
    }
}

/// `int_0^{ts} (4 pi t)^{-N/2} e^{-rho^2/4t} t^{nu-1} dt`.
pub(crate) fn gaussian_time_integral(dim: usize, nu: f64, rho: f64, ts: f64) -> f64 {
    let half = 0.5 * dim as f64;
    let norm = (4.0 * PI).powf(-half);
    if rho == 0.0 {
        return if nu > half {
            norm * ts.powf(nu - half) / (nu - half)
        } else {
            f64::INFINITY
        };
    }
    let a = half - nu;
    let q = 0.25 * rho * rho;
    norm * q.powf(-a) * upper_gamma(a, q / ts)
}

/// `int_0^{ts} erfc(b / sqrt(4t)) t^{nu-1} dt`, by parts from the Gaussian
/// integral.
fn erfc_time_integral(nu: f64, b: f64, ts: f64) -> f64 {
    let boundary = ts.powf(nu) * libm::erfc(b / (4.0 * ts).sqrt());
    (boundary - b * gaussian_time_integral(1, nu, b, ts)) / nu
}

#[derive(Debug, Clone, Copy)]
struct FarMode {
    index: [usize; 2],
    /// `lambda^{-s} Gamma(s, lambda ts)`
    green: f64,
    /// `lambda^{s} Gamma(-s, lambda ts)`, zero when `s = 1`.
    jump: f64,
    /// `int_Omega phi`.
    integral: f64,
}

/// Signed one-dimensional image offsets `(r, sign)` of the heat kernel at
/// `(x, y)` that matter at times up to `ts`.
fn axis_images(length: f64, x: f64, y: f64, ts: f64, images: usize, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let m = images as i64;
    let cut = 4.0 * ts * IMAGE_CUTOFF;
    for n in -m..=m {
        let shift = 2.0 * n as f64 * length;
        let a = x - y + shift;
        if a * a < cut {
            out.push((a, 1.0));
        }
        let b = x + y + shift;
        if b * b < cut {
            out.push((b, -1.0));
        }
    }
}

/// Offsets `b > 0` and signs of the killed-probability erfc series.
fn killed_images(length: f64, x: f64, ts: f64, images: usize, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let cut = (4.0 * ts * IMAGE_CUTOFF).sqrt();
    let mut sign = 1.0;
    for m in 0..(2 * images + 2) {
        let b = x + m as f64 * length;
        if b > cut {
            break;
        }
        out.push((b, sign));
        sign = -sign;
    }
    let mut sign = 1.0;
    for k in 1..(2 * images + 2) {
        let b = k as f64 * length - x;
        if b > cut {
            break;
        }
        out.push((b, sign));
        sign = -sign;
    }
}

/// Evaluates the fractional kernels of one order `s` on one domain.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    domain: Arc<SpectralDomain>,
    heat: HeatKernel,
    s: f64,
    split: f64,
    plan: TimePlan,
    images: usize,
    modes: Vec<FarMode>,
    extent: [usize; 2],
    gamma_s: f64,
    jump_scale: f64,
    series_tail: f64,
}

impl KernelEvaluator {
    pub fn new(domain: Arc<SpectralDomain>, s: f64) -> Result<Self> {
        Self::with_plan(domain, s, TimePlan::default())
    }

    pub fn with_plan(domain: Arc<SpectralDomain>, s: f64, plan: TimePlan) -> Result<Self> {
        check_order(s)?;
        if plan.near_points == 0 || plan.far_points == 0 || !(plan.far_panel > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "time plan needs positive node counts and panel width, got {plan:?}"
            )));
        }
        let heat = HeatKernel::new(domain.clone());
        let split = heat
            .axes()
            .iter()
            .map(|a| a.t_switch)
            .fold(f64::INFINITY, f64::min);
        let mut modes = Vec::new();
        let mut extent = [0usize; 2];
        let mut next_excluded = f64::INFINITY;
        for m in domain.modes() {
            let z = m.lambda * split;
            if z > MODE_CUTOFF {
                continue;
            }
            extent[0] = extent[0].max(m.index[0]);
            extent[1] = extent[1].max(m.index[1]);
            let jump = if s < 1.0 {
                m.lambda.powf(s) * upper_gamma(-s, z)
            } else {
                0.0
            };
            modes.push(FarMode {
                index: m.index,
                green: m.lambda.powf(-s) * upper_gamma(s, z),
                jump,
                integral: domain.mode_integral(m),
            });
        }
        // The first eigenvalue the truncation cuts off, if it still matters.
        for a in 0..domain.dim() {
            let l = domain.length(a);
            let lambda = (((domain.truncation() + 1) as f64) * PI / l).powi(2)
                + (0..domain.dim())
                    .filter(|&b| b != a)
                    .map(|b| (PI / domain.length(b)).powi(2))
                    .sum::<f64>();
            if lambda * split <= MODE_CUTOFF {
                next_excluded = next_excluded.min(lambda);
            }
        }
        let series_tail = if next_excluded.is_finite() {
            let amp: f64 = (0..domain.dim()).map(|a| 2.0 / domain.length(a)).product();
            let count = if domain.dim() == 2 {
                domain.truncation() as f64
            } else {
                1.0
            };
            // int_ts^inf e^{-lambda t} t^{nu-1} dt <= ts^{nu-1} e^{-lambda ts} / lambda,
            // doubled for the geometric sum over further modes.
            2.0 * count * amp * next_excluded.sqrt() * split.powf(-s - 1.0).max(split.powf(s - 1.0))
                * (-next_excluded * split).exp()
                / next_excluded
        } else {
            0.0
        };
        let jump_scale = if s < 1.0 { s / gamma(1.0 - s) } else { 0.0 };
        Ok(KernelEvaluator {
            domain,
            heat,
            s,
            split,
            plan,
            images: DEFAULT_IMAGES,
            modes,
            extent,
            gamma_s: gamma(s),
            jump_scale,
            series_tail,
        })
    }

    pub fn domain(&self) -> &Arc<SpectralDomain> {
        &self.domain
    }

    pub fn heat(&self) -> &HeatKernel {
        &self.heat
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn plan(&self) -> &TimePlan {
        &self.plan
    }

    /// Time at which the integrals switch from images to the sine series.
    pub fn split_time(&self) -> f64 {
        self.split
    }

    /// Absolute bound on the part of the series cut off by the truncation.
    pub fn series_tail(&self) -> f64 {
        self.series_tail
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn check_tail(&self, value: f64) -> Result<f64> {
        if self.series_tail > self.plan.tolerance * value.abs().max(1e-300) {
            Err(Error::QuadratureNonConvergence {
                estimate: self.series_tail,
                tolerance: self.plan.tolerance * value.abs(),
            })
        } else {
            Ok(value)
        }
    }

    fn check_point(&self, x: &Point, what: &str) -> Result<()> {
        let d = &self.domain;
        for (a, v) in x.iter().enumerate().take(d.dim()) {
            if !v.is_finite() {
                return Err(Error::NumericInput(format!("{what} = {x:?}")));
            }
            if *v < 0.0 || *v > d.length(a) {
                return Err(Error::InvalidArgument(format!(
                    "{what} = {x:?} lies outside the domain"
                )));
            }
        }
        Ok(())
    }

    fn check_interior(&self, x: &Point, what: &str) -> Result<()> {
        self.check_point(x, what)?;
        if !self.domain.contains(x) {
            return Err(Error::InvalidArgument(format!(
                "{what} = {x:?} must be an interior point"
            )));
        }
        Ok(())
    }

    fn require_jump(&self) -> Result<()> {
        if self.s < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(
                "jumping kernel and killing measure need s < 1".into(),
            ))
        }
    }

    fn tables(&self, x: &Point) -> [Vec<f64>; 2] {
        let d = &self.domain;
        let mut t = [Vec::new(), Vec::new()];
        for a in 0..d.dim() {
            let mut v = Vec::new();
            crate::spectral::sine_table(d.length(a), x[a], self.extent[a], &mut v);
            let scale = (2.0 / d.length(a)).sqrt();
            v.iter_mut().for_each(|e| *e *= scale);
            t[a] = v;
        }
        t
    }

    #[inline]
    fn phi(&self, tab: &[Vec<f64>; 2], index: [usize; 2]) -> f64 {
        let mut v = tab[0][index[0] - 1];
        if self.dim() == 2 {
            v *= tab[1][index[1] - 1];
        }
        v
    }

    /// Signed Gaussian sum `sum sigma I_N(nu, rho)` of the near-time part.
    fn near_images(&self, x: &Point, y: &Point, nu: f64) -> f64 {
        let d = &self.domain;
        let ts = self.split;
        let mut a0 = Vec::new();
        axis_images(d.length(0), x[0], y[0], ts, self.images, &mut a0);
        if d.dim() == 1 {
            return a0
                .iter()
                .map(|&(r, sg)| sg * gaussian_time_integral(1, nu, r.abs(), ts))
                .sum();
        }
        let mut a1 = Vec::new();
        axis_images(d.length(1), x[1], y[1], ts, self.images, &mut a1);
        let cut = 4.0 * ts * IMAGE_CUTOFF;
        let mut sum = 0.0;
        for &(r0, s0) in &a0 {
            for &(r1, s1) in &a1 {
                let q = r0 * r0 + r1 * r1;
                if q < cut {
                    sum += s0 * s1 * gaussian_time_integral(2, nu, q.sqrt(), ts);
                }
            }
        }
        sum
    }

    fn same_point(&self, x: &Point, y: &Point) -> bool {
        (0..self.dim()).all(|a| x[a] == y[a])
    }

    /// `G^s(x, y) = (1/Gamma(s)) int_0^inf p(t, x, y) t^{s-1} dt`.
    pub fn green(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x, "x")?;
        self.check_point(y, "y")?;
        if self.same_point(x, y) {
            return Err(Error::OnDiagonal(*x));
        }
        if !self.domain.contains(x) || !self.domain.contains(y) {
            return Ok(0.0);
        }
        self.check_tail(self.green_unchecked(x, y))
    }

    pub(crate) fn green_unchecked(&self, x: &Point, y: &Point) -> f64 {
        let near = self.near_images(x, y, self.s);
        let tx = self.tables(x);
        let ty = self.tables(y);
        let far: f64 = self
            .modes
            .iter()
            .map(|m| m.green * self.phi(&tx, m.index) * self.phi(&ty, m.index))
            .sum();
        (near + far) / self.gamma_s
    }

    /// Green kernel against many points sharing the first argument.
    pub(crate) fn green_row(&self, x: &Point, ys: &[Point], out: &mut Vec<f64>) {
        out.clear();
        let tx = self.tables(x);
        let weights: Vec<f64> = self
            .modes
            .iter()
            .map(|m| m.green * self.phi(&tx, m.index))
            .collect();
        for y in ys {
            let near = self.near_images(x, y, self.s);
            let ty = self.tables(y);
            let far: f64 = self
                .modes
                .iter()
                .zip(&weights)
                .map(|(m, w)| w * self.phi(&ty, m.index))
                .sum();
            out.push((near + far) / self.gamma_s);
        }
    }

    /// Normal coordinate of `x` measured from the face of `z`.
    fn normal_coordinate(&self, x: &Point, axis: usize, side: Side) -> f64 {
        match side {
            Side::Low => x[axis],
            Side::High => self.domain.length(axis) - x[axis],
        }
    }

    /// Near-time part of `int flux(t) t^{nu-1}` for the face of `z`, with the
    /// tangential kernel at `z.param` on the rectangle.
    fn near_flux(&self, x: &Point, z: &BoundaryPoint, nu: f64) -> f64 {
        let d = &self.domain;
        let ts = self.split;
        let axis = z.face.axis;
        let l = d.length(axis);
        let xi = self.normal_coordinate(x, axis, z.face.side);
        let m = self.images as i64;
        let cut = 4.0 * ts * IMAGE_CUTOFF;
        let normals: Vec<f64> = (-m..=m)
            .map(|n| xi + 2.0 * n as f64 * l)
            .filter(|a| a * a < cut)
            .collect();
        if d.dim() == 1 {
            return normals
                .iter()
                .map(|&a| a * gaussian_time_integral(1, nu - 1.0, a.abs(), ts))
                .sum();
        }
        let other = 1 - axis;
        let mut tang = Vec::new();
        axis_images(d.length(other), x[other], z.param, ts, self.images, &mut tang);
        let mut sum = 0.0;
        for &a in &normals {
            for &(r, sg) in &tang {
                let q = a * a + r * r;
                if q < cut {
                    sum += sg * a * gaussian_time_integral(2, nu - 1.0, q.sqrt(), ts);
                }
            }
        }
        sum
    }

    /// Inward derivative of the axis factor of index `j` at the face.
    fn inward_slope(&self, axis: usize, side: Side, j: usize) -> f64 {
        let l = self.domain.length(axis);
        let slope = (2.0 / l).sqrt() * j as f64 * PI / l;
        match side {
            Side::Low => slope,
            Side::High => {
                if j.is_multiple_of(2) {
                    -slope
                } else {
                    slope
                }
            }
        }
    }

    /// `P^s(x, z) = -(1/Gamma(s)) int_0^inf d_nu p(t, x, z) t^{s-1} dt`.
    pub fn poisson(&self, x: &Point, z: &BoundaryPoint) -> Result<f64> {
        self.check_interior(x, "x")?;
        self.check_boundary(z)?;
        self.check_tail(self.poisson_unchecked(x, z))
    }

    fn check_boundary(&self, z: &BoundaryPoint) -> Result<()> {
        let d = &self.domain;
        if z.face.axis >= d.dim() {
            return Err(Error::InvalidArgument(format!("{z:?} is not a face of the domain")));
        }
        if d.dim() == 2 {
            let len = d.length(1 - z.face.axis);
            if !(z.param >= 0.0 && z.param <= len) {
                return Err(Error::InvalidArgument(format!(
                    "{z:?} is not on the boundary"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn poisson_unchecked(&self, x: &Point, z: &BoundaryPoint) -> f64 {
        let near = self.near_flux(x, z, self.s);
        let tx = self.tables(x);
        let axis = z.face.axis;
        let d = &self.domain;
        let far: f64 = if d.dim() == 1 {
            self.modes
                .iter()
                .map(|m| m.green * self.phi(&tx, m.index) * self.inward_slope(0, z.face.side, m.index[0]))
                .sum()
        } else {
            let other = 1 - axis;
            let mut tz = Vec::new();
            crate::spectral::sine_table(d.length(other), z.param, self.extent[other], &mut tz);
            let scale = (2.0 / d.length(other)).sqrt();
            self.modes
                .iter()
                .map(|m| {
                    m.green
                        * self.phi(&tx, m.index)
                        * self.inward_slope(axis, z.face.side, m.index[axis])
                        * scale
                        * tz[m.index[other] - 1]
                })
                .sum()
        };
        (near + far) / self.gamma_s
    }

    /// `J(x, y) = (s / Gamma(1-s)) int_0^inf p(t, x, y) t^{-1-s} dt`.
    pub fn jumping_kernel(&self, x: &Point, y: &Point) -> Result<f64> {
        self.require_jump()?;
        self.check_point(x, "x")?;
        self.check_point(y, "y")?;
        if self.same_point(x, y) {
            return Err(Error::OnDiagonal(*x));
        }
        if !self.domain.contains(x) || !self.domain.contains(y) {
            return Ok(0.0);
        }
        self.check_tail(self.jump_unchecked(x, y))
    }

    pub(crate) fn jump_unchecked(&self, x: &Point, y: &Point) -> f64 {
        let near = self.near_images(x, y, -self.s);
        let tx = self.tables(x);
        let ty = self.tables(y);
        let far: f64 = self
            .modes
            .iter()
            .map(|m| m.jump * self.phi(&tx, m.index) * self.phi(&ty, m.index))
            .sum();
        self.jump_scale * (near + far)
    }

    /// Near-time `int_0^{ts} killed_axis(t) t^{nu-1} dt` for one axis.
    fn near_killed_axis(&self, axis: usize, x: f64, nu: f64) -> f64 {
        let mut imgs = Vec::new();
        killed_images(self.domain.length(axis), x, self.split, self.images, &mut imgs);
        imgs.iter()
            .map(|&(b, sg)| sg * erfc_time_integral(nu, b, self.split))
            .sum()
    }

    /// `int_0^{ts} k_0(t) k_1(t) t^{nu-1} dt` on the rectangle.
    fn near_killed_product(&self, x: &Point, nu: f64) -> f64 {
        let axes = self.heat.axes();
        let d = &self.domain;
        let d0 = x[0].min(d.length(0) - x[0]);
        let d1 = x[1].min(d.length(1) - x[1]);
        let t0 = d0 * d0 + d1 * d1;
        self.plan.integrate(t0, self.split, |t| {
            axes[0].killed(t, x[0]) * axes[1].killed(t, x[1]) * t.powf(nu - 1.0)
        })
    }

    /// `kappa(x) = (s / Gamma(1-s)) int_0^inf (1 - survival(t, x)) t^{-1-s} dt`.
    pub fn killing_measure(&self, x: &Point) -> Result<f64> {
        self.require_jump()?;
        self.check_interior(x, "x")?;
        self.check_tail(self.killing_unchecked(x))
    }

    pub(crate) fn killing_unchecked(&self, x: &Point) -> f64 {
        let s = self.s;
        let mut near = 0.0;
        for a in 0..self.dim() {
            near += self.near_killed_axis(a, x[a], -s);
        }
        if self.dim() == 2 {
            near -= self.near_killed_product(x, -s);
        }
        let tx = self.tables(x);
        let survival: f64 = self
            .modes
            .iter()
            .map(|m| m.jump * m.integral * self.phi(&tx, m.index))
            .sum();
        let far = self.split.powf(-s) / s - survival;
        self.jump_scale * (near + far)
    }

    /// `h1(x) = int_{boundary} P^s(x, z) d sigma(z)`.
    pub fn h1(&self, x: &Point) -> Result<f64> {
        self.check_interior(x, "x")?;
        self.check_tail(self.h1_unchecked(x))
    }

    pub(crate) fn h1_unchecked(&self, x: &Point) -> f64 {
        let d = &self.domain;
        let s = self.s;
        let tx = self.tables(x);
        let mut near = 0.0;
        let mut far = 0.0;
        for face in d.faces() {
            let axis = face.axis;
            let z = d.boundary_point(face, 0.0);
            if d.dim() == 1 {
                near += self.near_flux(x, &z, s);
                far += self
                    .modes
                    .iter()
                    .map(|m| m.green * self.phi(&tx, m.index) * self.inward_slope(0, face.side, m.index[0]))
                    .sum::<f64>();
            } else {
                let other = 1 - axis;
                // Tangential integral of the kernel is the other axis'
                // survival, 1 minus its killed probability.
                let mut images = 0.0;
                let xi = self.normal_coordinate(x, axis, face.side);
                let l = d.length(axis);
                let m = self.images as i64;
                let cut = 4.0 * self.split * IMAGE_CUTOFF;
                for n in -m..=m {
                    let a = xi + 2.0 * n as f64 * l;
                    if a * a < cut {
                        images += a * gaussian_time_integral(1, s - 1.0, a.abs(), self.split);
                    }
                }
                let axes = self.heat.axes();
                let dn = xi.min(l - xi);
                let dt = x[other].min(d.length(other) - x[other]);
                let correction = self.plan.integrate(dn * dn + dt * dt, self.split, |t| {
                    axes[axis].flux(t, x[axis], face.side)
                        * axes[other].killed(t, x[other])
                        * t.powf(s - 1.0)
                });
                near += images - correction;
                far += self
                    .modes
                    .iter()
                    .map(|mo| {
                        mo.green
                            * self.phi(&tx, mo.index)
                            * self.inward_slope(axis, face.side, mo.index[axis])
                            * d.axis_integral(other, mo.index[other])
                    })
                    .sum::<f64>();
            }
        }
        (near + far) / self.gamma_s
    }

    /// `int_Omega G^s(x, y) dy`, the potential of the constant 1.
    pub fn green_mass(&self, x: &Point) -> Result<f64> {
        self.check_point(x, "x")?;
        if !self.domain.contains(x) {
            return Ok(0.0);
        }
        self.check_tail(self.green_mass_unchecked(x))
    }

    pub(crate) fn green_mass_unchecked(&self, x: &Point) -> f64 {
        let s = self.s;
        let mut near = self.split.powf(s) / s;
        for a in 0..self.dim() {
            near -= self.near_killed_axis(a, x[a], s);
        }
        if self.dim() == 2 {
            near += self.near_killed_product(x, s);
        }
        let tx = self.tables(x);
        let far: f64 = self
            .modes
            .iter()
            .map(|m| m.green * m.integral * self.phi(&tx, m.index))
            .sum();
        (near + far) / self.gamma_s
    }

    /// Horizon beyond which only the analytic tail is kept.
    fn horizon(&self, t0: f64) -> f64 {
        (40.0 / self.domain.smallest_eigenvalue()).max(4.0 * t0)
    }

    /// Green function by direct time quadrature of the heat kernel, split at
    /// `t0 = |x - y|^2`. Slower than [`Self::green`]; used as a cross-check.
    pub fn green_by_quadrature(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_interior(x, "x")?;
        self.check_interior(y, "y")?;
        if self.same_point(x, y) {
            return Err(Error::OnDiagonal(*x));
        }
        let t0 = crate::domain::euclid(self.dim(), x, y).powi(2);
        let s = self.s;
        let v = self.plan.integrate(t0, self.horizon(t0), |t| {
            self.heat.kernel_unchecked(t, x, y) * t.powf(s - 1.0)
        });
        Ok(v / self.gamma_s)
    }

    /// Poisson kernel by direct time quadrature, split at `|x - z|^2`.
    pub fn poisson_by_quadrature(&self, x: &Point, z: &BoundaryPoint) -> Result<f64> {
        self.check_interior(x, "x")?;
        self.check_boundary(z)?;
        let t0 = self.domain.distance_to(x, z).powi(2);
        let s = self.s;
        let v = self.plan.integrate(t0, self.horizon(t0), |t| {
            self.heat.flux_unchecked(t, x, z) * t.powf(s - 1.0)
        });
        Ok(v / self.gamma_s)
    }

    /// Jumping kernel by direct time quadrature, split at `|x - y|^2`.
    pub fn jumping_kernel_by_quadrature(&self, x: &Point, y: &Point) -> Result<f64> {
        self.require_jump()?;
        self.check_interior(x, "x")?;
        self.check_interior(y, "y")?;
        if self.same_point(x, y) {
            return Err(Error::OnDiagonal(*x));
        }
        let t0 = crate::domain::euclid(self.dim(), x, y).powi(2);
        let s = self.s;
        let v = self.plan.integrate(t0, self.horizon(t0), |t| {
            self.heat.kernel_unchecked(t, x, y) * t.powf(-1.0 - s)
        });
        Ok(self.jump_scale * v)
    }

    /// Killing measure by direct time quadrature, split at `delta(x)^2`, with
    /// the `int_T^inf t^{-1-s} dt` tail added analytically.
    pub fn killing_measure_by_quadrature(&self, x: &Point) -> Result<f64> {
        self.require_jump()?;
        self.check_interior(x, "x")?;
        let t0 = self.domain.distance(x).powi(2);
        let s = self.s;
        let horizon = self.horizon(t0);
        let v = self.plan.integrate(t0, horizon, |t| {
            self.heat.killed_unchecked(t, x) * t.powf(-1.0 - s)
        });
        Ok(self.jump_scale * (v + horizon.powf(-s) / s))
    }
}

/// Per-axis helper used by tests of the closed-form pieces.
#[cfg(test)]
fn axis_heat(length: f64) -> crate::heat::AxisHeat {
    crate::heat::AxisHeat::new(length, DEFAULT_IMAGES, 256)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{pt, Face};

    fn interval(s: f64) -> KernelEvaluator {
        KernelEvaluator::new(Arc::new(SpectralDomain::interval(PI, 256).unwrap()), s).unwrap()
    }

    fn green_half(x: f64, y: f64) -> f64 {
        (((x + y) / 2.0).sin() / ((x - y).abs() / 2.0).sin()).ln() / PI
    }

    #[test]
    fn green_matches_half_order_closed_form() {
        let k = interval(0.5);
        for &(x, y) in &[(PI / 3.0, PI / 2.0), (PI / 4.0, 3.0 * PI / 4.0), (0.01, 0.02), (1e-4, 3.0), (2.0, 2.0 + 1e-9)] {
            let g = k.green(&pt(x), &pt(y)).unwrap();
            let want = green_half(x, y);
            assert!((g - want).abs() < 1e-11 * want.abs(), "({x}, {y}): {g} vs {want}");
        }
        assert!((k.green(&pt(PI / 3.0), &pt(PI / 2.0)).unwrap() - 0.419_200_7).abs() < 1e-6);
        assert!((k.green(&pt(PI / 4.0), &pt(3.0 * PI / 4.0)).unwrap() - 0.110318).abs() < 1e-6);
        assert!(matches!(k.green(&pt(1.0), &pt(1.0)), Err(Error::OnDiagonal(_))));
        assert_eq!(k.green(&pt(0.0), &pt(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn classical_green_and_poisson() {
        let k = interval(1.0);
        let g = k.green(&pt(PI / 3.0), &pt(PI / 2.0)).unwrap();
        assert!((g - PI / 6.0).abs() < 1e-12, "{g}");
        let low = k.domain().boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
        for &x in &[0.1, 1.0, 2.5] {
            let p = k.poisson(&pt(x), &low).unwrap();
            assert!((p - (PI - x) / PI).abs() < 1e-12);
            let m = k.green_mass(&pt(x)).unwrap();
            assert!((m - x * (PI - x) / 2.0).abs() < 1e-12);
        }
        assert!(k.jumping_kernel(&pt(1.0), &pt(2.0)).is_err());
    }

    #[test]
    fn poisson_kappa_h1_half_order() {
        let k = interval(0.5);
        let d = k.domain().clone();
        let low = d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
        let high = d.boundary_point(Face { axis: 0, side: Side::High }, 0.0);
        for &x in &[1e-3, 0.2, PI / 3.0, PI / 2.0, 3.0] {
            let p = k.poisson(&pt(x), &low).unwrap();
            let want = 1.0 / (PI * (x / 2.0).tan());
            assert!((p - want).abs() < 1e-11 * want, "{x}: {p} vs {want}");
            let q = k.poisson(&pt(PI - x), &high).unwrap();
            assert!((q - want).abs() < 1e-11 * want);
            let kappa = k.killing_measure(&pt(x)).unwrap();
            let want = 2.0 / (PI * x.sin());
            assert!((kappa - want).abs() < 1e-10 * want, "{x}: {kappa} vs {want}");
            let h = k.h1(&pt(x)).unwrap();
            assert!((h - want).abs() < 1e-10 * want, "{x}: {h} vs {want}");
        }
        assert!((k.poisson(&pt(PI / 3.0), &low).unwrap() - 0.551329).abs() < 1e-6);
        assert!((k.killing_measure(&pt(PI / 4.0)).unwrap() - 0.90032).abs() < 1e-5);
        assert!((k.h1(&pt(PI / 3.0)).unwrap() - 0.735105).abs() < 1e-6);
    }

    #[test]
    fn closed_forms_match_direct_time_quadrature() {
        for &s in &[0.25, 0.5, 0.8] {
            let k = interval(s);
            let low = k.domain().boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
            for &(x, y) in &[(0.3, 0.9), (1.2, 2.9), (0.05, 0.07)] {
                let (x, y) = (pt(x), pt(y));
                let a = k.green(&x, &y).unwrap();
                let b = k.green_by_quadrature(&x, &y).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "G s={s}: {a} vs {b}");
                let a = k.jumping_kernel(&x, &y).unwrap();
                let b = k.jumping_kernel_by_quadrature(&x, &y).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "J s={s}: {a} vs {b}");
                let a = k.poisson(&x, &low).unwrap();
                let b = k.poisson_by_quadrature(&x, &low).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "P s={s}: {a} vs {b}");
                let a = k.killing_measure(&x).unwrap();
                let b = k.killing_measure_by_quadrature(&x).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "kappa s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rectangle_kernels_are_consistent() {
        let d = Arc::new(SpectralDomain::rectangle(PI, 2.0, 64).unwrap());
        let k = KernelEvaluator::new(d.clone(), 0.6).unwrap();
        let x = [0.7, 0.5];
        let y = [1.9, 1.4];
        let g = k.green(&x, &y).unwrap();
        let gq = k.green_by_quadrature(&x, &y).unwrap();
        assert!((g - gq).abs() < 1e-9 * g, "{g} vs {gq}");
        assert!((g - k.green(&y, &x).unwrap()).abs() < 1e-14 * g);
        let j = k.jumping_kernel(&x, &y).unwrap();
        let jq = k.jumping_kernel_by_quadrature(&x, &y).unwrap();
        assert!((j - jq).abs() < 1e-9 * j, "{j} vs {jq}");
        let kap = k.killing_measure(&x).unwrap();
        let kq = k.killing_measure_by_quadrature(&x).unwrap();
        assert!((kap - kq).abs() < 1e-8 * kap, "{kap} vs {kq}");
        let z = d.boundary_point(Face { axis: 1, side: Side::High }, 1.1);
        let p = k.poisson(&x, &z).unwrap();
        let pq = k.poisson_by_quadrature(&x, &z).unwrap();
        assert!((p - pq).abs() < 1e-9 * p, "{p} vs {pq}");
        // h1 against edge quadrature of the Poisson kernel
        let g = crate::quadrature::Grading::default();
        let mut edge = 0.0;
        for face in d.faces() {
            let len = d.length(1 - face.axis);
            let foot = x[1 - face.axis];
            edge += g.integrate(0.0, len, &[foot], |t| {
                k.poisson(&x, &d.boundary_point(face, t)).unwrap()
            });
        }
        let h = k.h1(&x).unwrap();
        assert!((h - edge).abs() < 1e-8 * h, "{h} vs {edge}");
        let m = k.green_mass(&x).unwrap();
        let g = crate::quadrature::Grading { ratio: 0.3, levels: 16, points: 8 };
        let direct = g.integrate(0.0, PI, &[x[0]], |a| {
            g.integrate(0.0, 2.0, &[x[1]], |b| if a == x[0] && b == x[1] { 0.0 } else { k.green(&x, &[a, b]).unwrap() })
        });
        assert!((m - direct).abs() < 1e-6 * m, "{m} vs {direct}");
    }

    #[test]
    fn axis_helper_is_consistent_with_the_evaluator_split() {
        let h = axis_heat(PI);
        let k = interval(0.5);
        assert_eq!(h.t_switch, k.split_time());
    }

    #[test]
    #[ignore]
    fn evaluation_cost() {
        let d = Arc::new(SpectralDomain::rectangle(PI, PI, 96).unwrap());
        let k = KernelEvaluator::new(d, 0.6).unwrap();
        let n = 2000;
        let start = std::time::Instant::now();
        let mut acc = 0.0;
        for i in 0..n {
            let a = 0.01 + 3.0 * i as f64 / n as f64;
            acc += k.green(&[a, 1.0], &[1.3, 2.0]).unwrap();
        }
        eprintln!("green {:?} per call ({acc})", start.elapsed() / n);
        let start = std::time::Instant::now();
        for i in 0..n {
            let a = 0.01 + 3.0 * i as f64 / n as f64;
            acc += k.killing_measure(&[a, 1.0]).unwrap();
        }
        eprintln!("kappa {:?} per call ({acc})", start.elapsed() / n);
        let start = std::time::Instant::now();
        for i in 0..n {
            let a = 0.01 + 3.0 * i as f64 / n as f64;
            acc += k.h1(&[a, 1.0]).unwrap();
        }
        eprintln!("h1 {:?} per call ({acc})", start.elapsed() / n);
    }

    #[test]
    fn small_truncation_is_reported() {
        let d = Arc::new(SpectralDomain::interval(PI, 3).unwrap());
        let k = KernelEvaluator::new(d, 0.5).unwrap();
        assert!(k.series_tail() > 0.0);
        assert!(matches!(
            k.green(&pt(1.0), &pt(2.0)),
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
