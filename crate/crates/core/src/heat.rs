//! Dirichlet heat kernel of the model domains.
//!
//! Each axis carries two representations of the one-dimensional kernel on
//! `(0, L)`: the reflected Gaussian sum, which converges geometrically for
//! small times, and the sine series, which converges geometrically for large
//! times. The switch time `L^2 / (2 pi^2)` balances the two. Rectangle
//! kernels are products of axis kernels.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{BoundaryPoint, Point, Side, SpectralDomain};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Exponent beyond which `exp(-x)` is treated as zero.
const NEGLIGIBLE_EXPONENT: f64 = 745.0;

/// Free-space Gaussian in one dimension.
#[inline]
pub(crate) fn gauss(t: f64, r: f64) -> f64 {
    let arg = r * r / (4.0 * t);
    if arg > NEGLIGIBLE_EXPONENT {
        0.0
    } else {
        (-arg).exp() / (4.0 * PI * t).sqrt()
    }
}

/// One-dimensional Dirichlet heat kernel on `(0, length)`.
#[derive(Debug, Clone, Copy)]
pub struct AxisHeat {
    pub length: f64,
    pub t_switch: f64,
    pub images: usize,
    pub truncation: usize,
}

impl AxisHeat {
    pub fn new(length: f64, images: usize, truncation: usize) -> Self {
        AxisHeat {
            length,
            t_switch: length * length / (2.0 * PI * PI),
            images,
            truncation,
        }
    }

    #[inline]
    fn lambda(&self, j: usize) -> f64 {
        (j as f64 * PI / self.length).powi(2)
    }

    pub fn kernel(&self, t: f64, x: f64, y: f64) -> f64 {
        let l = self.length;
        if x <= 0.0 || x >= l || y <= 0.0 || y >= l {
            return 0.0;
        }
        if t < self.t_switch {
            self.kernel_images(t, x, y)
        } else {
            self.kernel_series(t, x, y)
        }
    }

    pub fn kernel_images(&self, t: f64, x: f64, y: f64) -> f64 {
        let l = self.length;
        let m = self.images as i64;
        let mut sum = 0.0;
        for n in -m..=m {
            let shift = 2.0 * n as f64 * l;
            let a = x - y + shift;
            let b = x + y + shift;
            if a.abs().min(b.abs()).powi(2) / (4.0 * t) > NEGLIGIBLE_EXPONENT {
                continue;
            }
            // g(a) - g(b) without cancellation: b^2 - a^2 = 4 y (x + shift).
            let d = y * (x + shift) / t;
            if d >= 0.0 {
                sum -= gauss(t, a) * (-d).exp_m1();
            } else {
                sum += gauss(t, b) * d.exp_m1();
            }
        }
        sum
    }

    pub fn kernel_series(&self, t: f64, x: f64, y: f64) -> f64 {
        let l = self.length;
        let (tx, ty) = (PI * x / l, PI * y / l);
        let mut sum = 0.0;
        for j in 1..=self.truncation {
            let e = (-self.lambda(j) * t).exp();
            if e < 1e-300 {
                break;
            }
            let jf = j as f64;
            sum += e * (jf * tx).sin() * (jf * ty).sin();
            if e < 1e-18 * sum.abs() {
                break;
            }
        }
        2.0 / l * sum
    }

    /// `p - g(x - y)`: the kernel with the free Gaussian removed.
    pub fn reflected(&self, t: f64, x: f64, y: f64) -> f64 {
        if t < self.t_switch {
            let l = self.length;
            let m = self.images as i64;
            let mut sum = 0.0;
            for n in -m..=m {
                let shift = 2.0 * n as f64 * l;
                if n != 0 {
                    sum += gauss(t, x - y + shift);
                }
                sum -= gauss(t, x + y + shift);
            }
            sum
        } else {
            self.kernel_series(t, x, y) - gauss(t, x - y)
        }
    }

    /// Probability of having been killed by time `t`, i.e. `1 - survival`.
    pub fn killed(&self, t: f64, x: f64) -> f64 {
        let l = self.length;
        if x <= 0.0 || x >= l {
            return 1.0;
        }
        if t < self.t_switch {
            let sigma = (4.0 * t).sqrt();
            let mut sum = 0.0;
            let mut sign = 1.0;
            for m in 0..(2 * self.images + 2) {
                let arg = (x + m as f64 * l) / sigma;
                if arg > 27.5 {
                    break;
                }
                sum += sign * libm::erfc(arg);
                sign = -sign;
            }
            let mut sign = 1.0;
            for k in 1..(2 * self.images + 2) {
                let arg = (k as f64 * l - x) / sigma;
                if arg > 27.5 {
                    break;
                }
                sum += sign * libm::erfc(arg);
                sign = -sign;
            }
            sum
        } else {
            1.0 - self.survival_series(t, x)
        }
    }

    pub fn survival(&self, t: f64, x: f64) -> f64 {
        if t < self.t_switch {
            1.0 - self.killed(t, x)
        } else {
            self.survival_series(t, x)
        }
    }

    fn survival_series(&self, t: f64, x: f64) -> f64 {
        let l = self.length;
        let tx = PI * x / l;
        let mut sum = 0.0;
        // c_j phi_j(x) = (2/L) (L / (j pi)) (1 - (-1)^j) sin(j pi x / L)
        for j in (1..=self.truncation).step_by(2) {
            let e = (-self.lambda(j) * t).exp();
            if e < 1e-300 {
                break;
            }
            sum += e * 4.0 / (j as f64 * PI) * (j as f64 * tx).sin();
            if e < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    /// Inward flux `d/dy p(t, x, y)` at `y = 0`; equals `-d/dnu p` there.
    pub fn flux_low(&self, t: f64, x: f64) -> f64 {
        let l = self.length;
        if x <= 0.0 || x >= l {
            return 0.0;
        }
        if t < self.t_switch {
            let m = self.images as i64;
            let mut sum = 0.0;
            for n in -m..=m {
                let a = x + 2.0 * n as f64 * l;
                sum += a / t * gauss(t, a);
            }
            sum
        } else {
            let tx = PI * x / l;
            let mut sum = 0.0;
            for j in 1..=self.truncation {
                let e = (-self.lambda(j) * t).exp();
                if e < 1e-300 {
                    break;
                }
                let jf = j as f64;
                sum += e * jf * (jf * tx).sin();
                if e * jf < 1e-18 * sum.abs() {
                    break;
                }
            }
            2.0 / l * PI / l * sum
        }
    }

    /// `-d/dnu p(t, x, z)` at the face on the given side.
    pub fn flux(&self, t: f64, x: f64, side: Side) -> f64 {
        match side {
            Side::Low => self.flux_low(t, x),
            Side::High => self.flux_low(t, self.length - x),
        }
    }
}

/// Heat kernel `p(t, x, y)` of a model domain.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    domain: Arc<SpectralDomain>,
    axes: Vec<AxisHeat>,
}

/// Default number of reflections per side in the image sum.
pub const DEFAULT_IMAGES: usize = 8;

impl HeatKernel {
    pub fn new(domain: Arc<SpectralDomain>) -> Self {
        Self::with_images(domain, DEFAULT_IMAGES)
    }

    pub fn with_images(domain: Arc<SpectralDomain>, images: usize) -> Self {
        let axes = (0..domain.dim())
            .map(|a| AxisHeat::new(domain.length(a), images, domain.truncation()))
            .collect();
        HeatKernel { domain, axes }
    }

    pub fn domain(&self) -> &Arc<SpectralDomain> {
        &self.domain
    }

    pub fn axes(&self) -> &[AxisHeat] {
        &self.axes
    }

    /// Switch time of the first axis (the interval's only axis).
    pub fn t_switch(&self) -> f64 {
        self.axes[0].t_switch
    }

    fn check_time(t: f64) -> Result<()> {
        if t.is_finite() && t > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("time t = {t} must be positive")))
        }
    }

    pub fn kernel(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.kernel_unchecked(t, x, y))
    }

    #[inline]
    pub(crate) fn kernel_unchecked(&self, t: f64, x: &Point, y: &Point) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(a, h)| h.kernel(t, x[a], y[a]))
            .product()
    }

    /// Whole-space Gaussian `(4 pi t)^{-N/2} exp(-|x-y|^2 / 4t)`.
    #[cfg(test)]
    pub(crate) fn free(&self, t: f64, x: &Point, y: &Point) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(a, _)| gauss(t, x[a] - y[a]))
            .product()
    }

    /// `p - free`: nonpositive, and bounded near the diagonal.
    #[cfg(test)]
    pub(crate) fn reflected_unchecked(&self, t: f64, x: &Point, y: &Point) -> f64 {
        match self.axes.len() {
            1 => self.axes[0].reflected(t, x[0], y[0]),
            _ => {
                let (h1, h2) = (&self.axes[0], &self.axes[1]);
                let g1 = gauss(t, x[0] - y[0]);
                let g2 = gauss(t, x[1] - y[1]);
                let r1 = h1.reflected(t, x[0], y[0]);
                let r2 = h2.reflected(t, x[1], y[1]);
                r1 * g2 + g1 * r2 + r1 * r2
            }
        }
    }

    pub fn survival(&self, t: f64, x: &Point) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.survival_unchecked(t, x))
    }

    pub(crate) fn survival_unchecked(&self, t: f64, x: &Point) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(a, h)| h.survival(t, x[a]))
            .product()
    }

    /// `1 - survival`, accurate when small.
    pub fn killed(&self, t: f64, x: &Point) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.killed_unchecked(t, x))
    }

    pub(crate) fn killed_unchecked(&self, t: f64, x: &Point) -> f64 {
        let mut alive = 1.0;
        let mut killed = 0.0;
        for (a, h) in self.axes.iter().enumerate() {
            let k = h.killed(t, x[a]);
            // 1 - (1 - K)(1 - k) = K + k - K k
            killed = killed + k - killed * k;
            alive *= 1.0 - k;
        }
        debug_assert!((alive + killed - 1.0).abs() < 1e-9);
        killed
    }

    /// `-d/dnu_z p(t, x, z)` for a boundary point `z`.
    pub fn boundary_normal_derivative(&self, t: f64, x: &Point, z: &BoundaryPoint) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.flux_unchecked(t, x, z))
    }

    pub(crate) fn flux_unchecked(&self, t: f64, x: &Point, z: &BoundaryPoint) -> f64 {
        let axis = z.face.axis;
        let normal = self.axes[axis].flux(t, x[axis], z.face.side);
        if self.axes.len() == 1 {
            normal
        } else {
            let other = 1 - axis;
            normal * self.axes[other].kernel(t, x[other], z.param)
        }
    }

    /// `e^{t Delta} u (x)` for a spectral field.
    pub fn propagate(&self, field: &SpectralField, t: f64, x: &Point) -> Result<f64> {
        Self::check_time(t)?;
        let d = &self.domain;
        Ok(d
            .modes()
            .iter()
            .zip(field.coefficients())
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| (-m.lambda * t).exp() * c * d.eigenfunction(m, x))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{pt, Face};
    use crate::quadrature::composite;

    fn interval() -> HeatKernel {
        HeatKernel::new(Arc::new(SpectralDomain::interval(PI, 256).unwrap()))
    }

    #[test]
    fn small_time_diagonal_value() {
        let h = interval();
        let v = h.kernel(0.01, &pt(PI / 2.0), &pt(PI / 2.0)).unwrap();
        assert!((v - 1.0 / (4.0 * PI * 0.01f64).sqrt()).abs() < 1e-12);
        assert!((v - 2.82095).abs() < 1e-5);
    }

    #[test]
    fn unit_time_diagonal_value() {
        let h = interval();
        let v = h.kernel(1.0, &pt(PI / 2.0), &pt(PI / 2.0)).unwrap();
        let series: f64 = (0..50)
            .map(|k| {
                let j = (2 * k + 1) as f64;
                (-j * j).exp()
            })
            .sum::<f64>()
            * 2.0
            / PI;
        assert!((v - series).abs() < 1e-15);
        assert!((v - 0.23427).abs() < 1e-5);
    }

    #[test]
    fn vanishes_on_boundary_and_rejects_bad_time() {
        let h = interval();
        assert_eq!(h.kernel(0.3, &pt(0.0), &pt(1.0)).unwrap(), 0.0);
        assert_eq!(h.kernel(3.0, &pt(1.0), &pt(PI)).unwrap(), 0.0);
        assert!(matches!(h.kernel(0.0, &pt(1.0), &pt(1.0)), Err(Error::InvalidArgument(_))));
        assert!(h.kernel(-1.0, &pt(1.0), &pt(1.0)).is_err());
    }

    #[test]
    fn representations_agree_at_switch_time() {
        let h = interval();
        let ax = h.axes()[0];
        let t = ax.t_switch;
        for &(x, y) in &[(0.1, 0.2), (1.0, 2.0), (PI / 2.0, PI / 2.0), (3.0, 0.05), (1e-3, 2e-3)] {
            let a = ax.kernel_images(t, x, y);
            let b = ax.kernel_series(t, x, y);
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{x} {y}: {a} {b}");
            let fa = ax.flux_low(t * (1.0 - 1e-12), x);
            let fb = ax.flux_low(t, x);
            assert!((fa - fb).abs() <= 1e-9 * fb.abs(), "{fa} {fb}");
            let ka = ax.killed(t * (1.0 - 1e-12), x);
            let kb = ax.killed(t, x);
            assert!((ka - kb).abs() <= 1e-10, "{ka} {kb}");
        }
    }

    #[test]
    fn survival_value_and_bounds() {
        let h = interval();
        let s = h.survival(1.0, &pt(PI / 2.0)).unwrap();
        let series = 4.0 / PI * ((-1.0f64).exp() - (-9.0f64).exp() / 3.0 + (-25.0f64).exp() / 5.0);
        assert!((s - series).abs() < 1e-12);
        assert!((s - 0.468346).abs() < 1e-6);
        assert!((h.survival(1e-6, &pt(PI / 2.0)).unwrap() - 1.0).abs() < 1e-15);
        for &t in &[1e-4, 0.01, 0.3, 1.0, 4.0] {
            for &x in &[1e-4, 0.5, 1.5, 3.0] {
                let s = h.survival(t, &pt(x)).unwrap();
                assert!((0.0..=1.0 + 1e-12).contains(&s));
            }
        }
    }

    #[test]
    fn survival_matches_kernel_integral() {
        let h = interval();
        for &t in &[0.05, 0.7] {
            let q = composite(0.0, PI, 128, 8);
            let x = pt(0.8);
            let integral: f64 = q.iter().map(|&(y, w)| w * h.kernel(t, &x, &pt(y)).unwrap()).sum();
            assert!((integral - h.survival(t, &x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_values() {
        let h = interval();
        let low = Face { axis: 0, side: Side::Low };
        let high = Face { axis: 0, side: Side::High };
        let z0 = h.domain().boundary_point(low, 0.0);
        let zpi = h.domain().boundary_point(high, 0.0);
        let v = h.boundary_normal_derivative(1.0, &pt(PI / 2.0), &z0).unwrap();
        let series = 2.0 / PI * ((-1.0f64).exp() - 3.0 * (-9.0f64).exp() + 5.0 * (-25.0f64).exp());
        assert!((v - series).abs() < 1e-12);
        assert!((v - 0.23397).abs() < 1e-5);
        let w = h.boundary_normal_derivative(1.0, &pt(PI / 2.0), &zpi).unwrap();
        assert!((v - w).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for t in [2.0, 4.0, 8.0, 16.0] {
            let v = h.boundary_normal_derivative(t, &pt(PI / 2.0), &z0).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn flux_matches_finite_difference_of_kernel() {
        let h = interval();
        let ax = h.axes()[0];
        let eps = 1e-7;
        for &t in &[0.02, 0.9] {
            for &x in &[0.3, 1.7] {
                let fd = ax.kernel(t, x, eps) / eps;
                assert!((fd - ax.flux_low(t, x)).abs() < 1e-5 * fd.abs());
            }
        }
    }

    #[test]
    fn rectangle_kernel_is_product() {
        let d = Arc::new(SpectralDomain::rectangle(PI, 2.0, 96).unwrap());
        let h = HeatKernel::new(d);
        let x = [0.4, 1.1];
        let y = [1.2, 0.7];
        let a = h.axes();
        let t = 0.37;
        let expect = a[0].kernel(t, 0.4, 1.2) * a[1].kernel(t, 1.1, 0.7);
        assert!((h.kernel(t, &x, &y).unwrap() - expect).abs() < 1e-15);
        let k = h.killed(t, &x).unwrap();
        let s = h.survival(t, &x).unwrap();
        assert!((k + s - 1.0).abs() < 1e-12);
        let r = h.reflected_unchecked(t, &x, &y);
        assert!((r - (h.kernel_unchecked(t, &x, &y) - h.free(t, &x, &y))).abs() < 1e-14);
    }
}
