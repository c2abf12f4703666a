//! Model domains with explicit Dirichlet eigenbases.
//!
//! Two geometries are supported, the interval `(0, L)` and the rectangle
//! `(0, L1) x (0, L2)`. On both the eigenpairs of the Dirichlet Laplacian,
//! the distance to the boundary and the outward normals are exact.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point of the plane. Interval domains only use the first coordinate.
pub type Point = [f64; 2];

/// Shorthand for a point of an interval domain.
pub fn pt(x: f64) -> Point {
    [x, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Interval { length: f64 },
    Rectangle { lengths: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// A boundary face: the set where coordinate `axis` equals `0` (low) or the
/// axis length (high).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn outward_normal(&self) -> Point {
        let mut n = [0.0; 2];
        n[self.axis] = match self.side {
            Side::Low => -1.0,
            Side::High => 1.0,
        };
        n
    }
}

/// A point on a face. `param` is the tangential coordinate on rectangle
/// edges and is ignored on the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub face: Face,
    pub param: f64,
}

/// Dirichlet eigenmode. `index[1]` is zero on the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: [usize; 2],
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDomain {
    kind: DomainKind,
    truncation: usize,
    modes: Vec<Mode>,
}

impl SpectralDomain {
    /// Builds a domain keeping `truncation` eigenmodes per axis.
    pub fn new(kind: DomainKind, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidConfiguration(
                "truncation must be at least 1".into(),
            ));
        }
        let lengths: &[f64] = match &kind {
            DomainKind::Interval { length } => std::slice::from_ref(length),
            DomainKind::Rectangle { lengths } => lengths,
        };
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidConfiguration(format!(
                "domain lengths must be positive, got {lengths:?}"
            )));
        }
        let mut modes = Vec::new();
        match kind {
            DomainKind::Interval { length } => {
                for j in 1..=truncation {
                    modes.push(Mode {
                        index: [j, 0],
                        lambda: axis_eigenvalue(length, j),
                    });
                }
            }
            DomainKind::Rectangle { lengths } => {
                for a in 1..=truncation {
                    for b in 1..=truncation {
                        modes.push(Mode {
                            index: [a, b],
                            lambda: axis_eigenvalue(lengths[0], a)
                                + axis_eigenvalue(lengths[1], b),
                        });
                    }
                }
            }
        }
        Ok(SpectralDomain {
            kind,
            truncation,
            modes,
        })
    }

    pub fn interval(length: f64, truncation: usize) -> Result<Self> {
        Self::new(DomainKind::Interval { length }, truncation)
    }

    pub fn rectangle(l1: f64, l2: f64, truncation: usize) -> Result<Self> {
        Self::new(
            DomainKind::Rectangle {
                lengths: [l1, l2],
            },
            truncation,
        )
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Spatial dimension `N`.
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Rectangle { .. } => 2,
        }
    }

    pub fn length(&self, axis: usize) -> f64 {
        match self.kind {
            DomainKind::Interval { length } => {
                debug_assert_eq!(axis, 0);
                length
            }
            DomainKind::Rectangle { lengths } => lengths[axis],
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Position of the mode with the given per-axis indices (1-based).
    pub fn mode_position(&self, index: [usize; 2]) -> Option<usize> {
        let t = self.truncation;
        match self.kind {
            DomainKind::Interval { .. } => (index[0] >= 1 && index[0] <= t).then(|| index[0] - 1),
            DomainKind::Rectangle { .. } => (index[0] >= 1
                && index[0] <= t
                && index[1] >= 1
                && index[1] <= t)
                .then(|| (index[0] - 1) * t + index[1] - 1),
        }
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        (0..self.dim())
            .map(|a| axis_eigenvalue(self.length(a), 1))
            .sum()
    }

    /// One-dimensional factor `sqrt(2/L) sin(j pi x / L)` along `axis`.
    pub fn axis_eigenfunction(&self, axis: usize, j: usize, x: f64) -> f64 {
        let l = self.length(axis);
        (2.0 / l).sqrt() * (j as f64 * PI * x / l).sin()
    }

    pub fn eigenfunction(&self, mode: &Mode, x: &Point) -> f64 {
        (0..self.dim())
            .map(|a| self.axis_eigenfunction(a, mode.index[a], x[a]))
            .product()
    }

    /// Outward normal derivative of an eigenfunction at a boundary point.
    pub fn eigenfunction_normal_derivative(&self, mode: &Mode, z: &BoundaryPoint) -> f64 {
        let axis = z.face.axis;
        let l = self.length(axis);
        let j = mode.index[axis] as f64;
        // d/dx sqrt(2/L) sin(j pi x/L) at x = 0 is sqrt(2/L) j pi/L, at x = L
        // it is that times cos(j pi) = (-1)^j.
        let slope = (2.0 / l).sqrt() * j * PI / l;
        let normal = match z.face.side {
            Side::Low => -slope,
            Side::High => {
                if mode.index[axis].is_multiple_of(2) {
                    slope
                } else {
                    -slope
                }
            }
        };
        if self.dim() == 1 {
            normal
        } else {
            let other = 1 - axis;
            normal * self.axis_eigenfunction(other, mode.index[other], z.param)
        }
    }

    /// Exact distance to the boundary.
    pub fn distance(&self, x: &Point) -> f64 {
        (0..self.dim())
            .map(|a| x[a].min(self.length(a) - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// A smooth positive function comparable to the distance: it equals
    /// `(L/pi) sin(pi x / L)` along each axis, combined by a smooth minimum on
    /// the rectangle.
    pub fn regularized_distance(&self, x: &Point) -> f64 {
        let axis = |a: usize| {
            let l = self.length(a);
            l / PI * (PI * x[a] / l).sin()
        };
        match self.dim() {
            1 => axis(0),
            _ => {
                const Q: f64 = 8.0;
                let (r1, r2) = (axis(0), axis(1));
                (r1.powf(-Q) + r2.powf(-Q)).powf(-1.0 / Q)
            }
        }
    }

    /// Gradient of [`Self::regularized_distance`].
    pub fn regularized_distance_gradient(&self, x: &Point) -> Point {
        let axis = |a: usize| {
            let l = self.length(a);
            (l / PI * (PI * x[a] / l).sin(), (PI * x[a] / l).cos())
        };
        match self.dim() {
            1 => [axis(0).1, 0.0],
            _ => {
                const Q: f64 = 8.0;
                let (r1, d1) = axis(0);
                let (r2, d2) = axis(1);
                let rho = (r1.powf(-Q) + r2.powf(-Q)).powf(-1.0 / Q);
                let c = rho.powf(Q + 1.0);
                [c * r1.powf(-Q - 1.0) * d1, c * r2.powf(-Q - 1.0) * d2]
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim()).all(|a| x[a] > 0.0 && x[a] < self.length(a))
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.length(a).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.length(a)).product()
    }

    pub fn faces(&self) -> Vec<Face> {
        (0..self.dim())
            .flat_map(|axis| {
                [Side::Low, Side::High]
                    .into_iter()
                    .map(move |side| Face { axis, side })
            })
            .collect()
    }

    /// Surface measure of a face (counting measure on the interval).
    pub fn face_measure(&self, face: &Face) -> f64 {
        match self.dim() {
            1 => 1.0,
            _ => self.length(1 - face.axis),
        }
    }

    /// Total surface measure of the boundary.
    pub fn boundary_measure(&self) -> f64 {
        self.faces().iter().map(|f| self.face_measure(f)).sum()
    }

    pub fn boundary_point(&self, face: Face, param: f64) -> BoundaryPoint {
        BoundaryPoint {
            face,
            param: if self.dim() == 1 { 0.0 } else { param },
        }
    }

    pub fn boundary_coordinates(&self, z: &BoundaryPoint) -> Point {
        let mut p = [0.0; 2];
        p[z.face.axis] = match z.face.side {
            Side::Low => 0.0,
            Side::High => self.length(z.face.axis),
        };
        if self.dim() == 2 {
            p[1 - z.face.axis] = z.param;
        }
        p
    }

    /// Whether `p` lies on the boundary (within `tol`) and, if so, which face.
    pub fn locate_boundary(&self, p: &Point, tol: f64) -> Option<BoundaryPoint> {
        for face in self.faces() {
            let target = match face.side {
                Side::Low => 0.0,
                Side::High => self.length(face.axis),
            };
            if (p[face.axis] - target).abs() <= tol {
                let param = if self.dim() == 2 { p[1 - face.axis] } else { 0.0 };
                if self.dim() == 1 || (param >= -tol && param <= self.length(1 - face.axis) + tol)
                {
                    return Some(BoundaryPoint { face, param });
                }
            }
        }
        None
    }

    /// Foot of the perpendicular to the nearest face.
    pub fn nearest_boundary_point(&self, x: &Point) -> BoundaryPoint {
        let mut best = (f64::INFINITY, Face { axis: 0, side: Side::Low });
        for face in self.faces() {
            let d = match face.side {
                Side::Low => x[face.axis],
                Side::High => self.length(face.axis) - x[face.axis],
            };
            if d < best.0 {
                best = (d, face);
            }
        }
        let face = best.1;
        self.boundary_point(face, if self.dim() == 2 { x[1 - face.axis] } else { 0.0 })
    }

    /// Euclidean distance between an interior point and a boundary point.
    pub fn distance_to(&self, x: &Point, z: &BoundaryPoint) -> f64 {
        let p = self.boundary_coordinates(z);
        euclid(self.dim(), x, &p)
    }

    /// `int_0^L phi_j` for the axis factor of index `j`.
    pub fn axis_integral(&self, axis: usize, j: usize) -> f64 {
        if j.is_multiple_of(2) {
            0.0
        } else {
            let l = self.length(axis);
            (2.0 / l).sqrt() * 2.0 * l / (j as f64 * PI)
        }
    }

    /// `int_Omega phi` for an eigenmode.
    pub fn mode_integral(&self, mode: &Mode) -> f64 {
        (0..self.dim())
            .map(|a| self.axis_integral(a, mode.index[a]))
            .product()
    }

    /// Surface quadrature: the two endpoints with unit weight on the
    /// interval, composite Gauss rules along each edge of the rectangle.
    pub fn boundary_rule(&self, panels: usize, points: usize) -> Vec<(BoundaryPoint, f64)> {
        let mut out = Vec::new();
        for face in self.faces() {
            if self.dim() == 1 {
                out.push((self.boundary_point(face, 0.0), 1.0));
            } else {
                let len = self.length(1 - face.axis);
                for (t, w) in crate::quadrature::composite(0.0, len, panels, points) {
                    out.push((self.boundary_point(face, t), w));
                }
            }
        }
        out
    }
}

pub(crate) fn euclid(dim: usize, a: &Point, b: &Point) -> f64 {
    (0..dim).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn axis_eigenvalue(length: f64, j: usize) -> f64 {
    (j as f64 * PI / length).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;

    #[test]
    fn interval_eigenvalues() {
        let d = SpectralDomain::interval(PI, 64).unwrap();
        assert!((d.modes()[0].lambda - 1.0).abs() < 1e-15);
        assert!((d.modes()[1].lambda - 4.0).abs() < 1e-15);
        assert_eq!(d.mode_count(), 64);
    }

    #[test]
    fn rectangle_smallest_eigenvalue_is_two() {
        let d = SpectralDomain::rectangle(PI, PI, 32).unwrap();
        let min = d.modes().iter().map(|m| m.lambda).fold(f64::INFINITY, f64::min);
        assert!((min - 2.0).abs() < 1e-14);
        assert!((d.smallest_eigenvalue() - 2.0).abs() < 1e-14);
        assert_eq!(d.mode_count(), 32 * 32);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        assert!(matches!(
            SpectralDomain::interval(PI, 0),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(SpectralDomain::interval(-1.0, 4).is_err());
        assert!(SpectralDomain::rectangle(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        let d = SpectralDomain::interval(2.5, 12).unwrap();
        let q = composite(0.0, 2.5, 64, 8);
        for a in d.modes() {
            for b in d.modes() {
                let ip: f64 = q
                    .iter()
                    .map(|&(x, w)| w * d.eigenfunction(a, &pt(x)) * d.eigenfunction(b, &pt(x)))
                    .sum();
                let expect = if a.index == b.index { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_is_min_over_faces() {
        let d = SpectralDomain::rectangle(2.0, 1.0, 4).unwrap();
        assert_eq!(d.distance(&[0.3, 0.5]), 0.3);
        assert_eq!(d.distance(&[1.0, 0.9]), 0.09999999999999998);
        let nb = d.nearest_boundary_point(&[1.0, 0.9]);
        assert_eq!(nb.face, Face { axis: 1, side: Side::High });
        assert_eq!(d.boundary_coordinates(&nb), [1.0, 1.0]);
    }

    #[test]
    fn normal_derivative_matches_finite_difference() {
        let d = SpectralDomain::interval(PI, 8).unwrap();
        let h = 1e-6;
        for m in d.modes() {
            let low = d.boundary_point(Face { axis: 0, side: Side::Low }, 0.0);
            let high = d.boundary_point(Face { axis: 0, side: Side::High }, 0.0);
            let fd_low = -(d.eigenfunction(m, &pt(h)) - 0.0) / h;
            let fd_high = (0.0 - d.eigenfunction(m, &pt(PI - h))) / h;
            assert!((d.eigenfunction_normal_derivative(m, &low) - fd_low).abs() < 1e-4);
            assert!((d.eigenfunction_normal_derivative(m, &high) - fd_high).abs() < 1e-4);
        }
    }
}
