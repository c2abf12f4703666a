//! Discrete Green operator `f -> int G^s(., y) f(y) dy` on a grid.
//!
//! On the interval the weights come from product integration: in the cells
//! next to the evaluation point the kernel is integrated exactly against the
//! Lagrange basis of the cell, so the logarithmic or power singularity of
//! `G^s` costs nothing in accuracy. Densities that blow up like
//! `delta^{-beta}` at the boundary are handled by interpolating `f delta^beta`
//! in the outermost cells. On the rectangle the diagonal is corrected by
//! singularity subtraction against the exact potential of the constant.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::KernelEvaluator;
use crate::quadrature::{composite, Grading};

const PRODUCT: Grading = Grading {
    ratio: 0.2,
    levels: 40,
    points: 8,
};

/// Fraction of the axis length below which the boundary layer of the
/// outermost cells is integrated analytically.
const BOUNDARY_CUT: f64 = 1e-12;


#[derive(Debug, Clone)]
pub struct GreenOperator {
    kernels: KernelEvaluator,
    grid: Arc<Grid>,
    beta: f64,
    matrix: DMatrix<f64>,
}

impl GreenOperator {
    pub fn new(kernels: &KernelEvaluator, grid: Arc<Grid>) -> Result<Self> {
        Self::with_boundary_exponent(kernels, grid, 0.0)
    }

    /// Operator exact for densities `f = delta^{-beta} q` with `q` smooth up
    /// to the boundary. Needs `beta < 2` so that `G f` stays integrable; on the
    /// rectangle `beta` is ignored.
    pub fn with_boundary_exponent(kernels: &KernelEvaluator, grid: Arc<Grid>, beta: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "boundary exponent {beta} outside [0, 2)"
            )));
        }
        if !Arc::ptr_eq(kernels.domain(), grid.domain()) && **kernels.domain() != **grid.domain() {
            return Err(Error::InvalidArgument("grid and kernels use different domains".into()));
        }
        let mut op = GreenOperator {
            kernels: kernels.clone(),
            grid,
            beta,
            matrix: DMatrix::zeros(0, 0),
        };
        let n = op.grid.len();
        let rows: Vec<Vec<f64>> = op
            .grid
            .nodes()
            .par_iter()
            .map(|x| op.row(x))
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        for v in m.iter() {
            if !v.is_finite() {
                return Err(Error::NumericInput(format!("non-finite Green operator weight {v}")));
            }
        }
        op.matrix = m;
        Ok(op)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernels(&self) -> &KernelEvaluator {
        &self.kernels
    }

    pub fn boundary_exponent(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(f);
        v.as_slice().to_vec()
    }

    /// Weights `W_j` with `int G(x, y) f(y) dy ~ sum_j W_j f(y_j)` at an
    /// arbitrary interior point.
    pub fn row(&self, x: &Point) -> Vec<f64> {
        if self.grid.domain().dim() == 1 {
            self.row_interval(x[0])
        } else {
            self.row_rectangle(x)
        }
    }

    fn row_interval(&self, x: f64) -> Vec<f64> {
        let g = &self.grid;
        let axis = &g.axes()[0];
        let k = &self.kernels;
        let len = axis.length();
        let weighted = self.beta > 0.0;
        let mut out = vec![0.0; g.len()];
        let xc = axis.locate(x);
        let (xa, xb) = axis.cell_bounds(xc);
        let own = xb - xa;
        let cut = (BOUNDARY_CUT * len).min(1e-4 * x.min(len - x));

        let mut far_nodes = Vec::new();
        let mut far_index = Vec::new();
        // (y, weight times omega(y), cell)
        let mut prod: Vec<(Point, f64, usize)> = Vec::new();
        let mut tails: Vec<(usize, f64, f64)> = Vec::new();
        for c in 0..axis.cell_count() {
            let (a, b) = axis.cell_bounds(c);
            let gap = if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            };
            let boundary = weighted && axis.is_outermost(c);
            let near = gap < (b - a).max(own);
            if !near && !boundary {
                if weighted {
                    for (y, w) in composite(a, b, 2, PRODUCT.points) {
                        prod.push(([y, 0.0], w * self.omega(y), c));
                    }
                } else {
                    for j in axis.cell_nodes(c) {
                        far_nodes.push([axis.nodes()[j], 0.0]);
                        far_index.push(j);
                    }
                }
                continue;
            }
            // Local variable u: distance to the face for boundary cells.
            let (origin, sign) = if boundary && c + 1 == axis.cell_count() && c != 0 {
                (len, -1.0)
            } else {
                (0.0, 1.0)
            };
            let to_u = |y: f64| sign * (y - origin);
            let (mut lo, mut hi) = (to_u(a), to_u(b));
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            if boundary {
                lo = cut;
            }
            let ux = to_u(x);
            let mut bps = Vec::new();
            if ux > lo && ux < hi {
                bps.push(ux);
            } else if near {
                bps.push(if ux <= lo { lo } else { hi });
            }
            if boundary && !bps.contains(&lo) {
                bps.push(lo);
            }
            for (u, w) in PRODUCT.nodes_singular_at(lo, hi, &bps, false) {
                let y = origin + sign * u;
                if y == x {
                    // rounding put the node on the pole; its weight is negligible
                    continue;
                }
                let omega = if boundary {
                    (u * (len - u) / len).powf(-self.beta)
                } else {
                    self.omega(y)
                };
                prod.push(([y, 0.0], w * omega, c));
            }
            if boundary {
                // G(x, .) vanishes linearly at the face.
                let factor = cut.powf(1.0 - self.beta) / (2.0 - self.beta);
                tails.push((c, origin + sign * cut, factor));
            }
        }
        let mut gv = Vec::new();
        k.green_row(&[x, 0.0], &far_nodes, &mut gv);
        for (j, gval) in far_index.iter().zip(&gv) {
            out[*j] += gval * axis.weights()[*j];
        }
        let ys: Vec<Point> = prod.iter().map(|p| p.0).collect();
        k.green_row(&[x, 0.0], &ys, &mut gv);
        let mut basis = Vec::new();
        for ((y, w, c), gval) in prod.iter().zip(&gv) {
            axis.basis(*c, y[0], &mut basis);
            for (j, l) in axis.cell_nodes(*c).zip(&basis) {
                out[j] += w * gval * l / self.omega(axis.nodes()[j]);
            }
        }
        for (c, y, factor) in tails {
            let gval = k.green_unchecked(&[x, 0.0], &[y, 0.0]);
            let face = if y < 0.5 * len { 0.0 } else { len };
            axis.basis(c, face, &mut basis);
            for (j, l) in axis.cell_nodes(c).zip(&basis) {
                out[j] += gval * factor * l / self.omega(axis.nodes()[j]);
            }
        }
        out
    }

    /// Boundary weight `(y (L - y) / L)^{-beta}`, smooth inside the interval.
    fn omega(&self, y: f64) -> f64 {
        if self.beta == 0.0 {
            return 1.0;
        }
        let len = self.grid.axes()[0].length();
        (y * (len - y) / len).powf(-self.beta)
    }

    fn row_rectangle(&self, x: &Point) -> Vec<f64> {
        let g = &self.grid;
        let k = &self.kernels;
        let mut gv = Vec::new();
        k.green_row(x, g.nodes(), &mut gv);
        let mut out = vec![0.0; g.len()];
        let mut sum = 0.0;
        for (j, (y, w)) in g.nodes().iter().zip(g.weights()).enumerate() {
            if y[0] == x[0] && y[1] == x[1] {
                continue;
            }
            out[j] = gv[j] * w;
            sum += out[j];
        }
        let rest = k.green_mass_unchecked(x) - sum;
        for (j, l) in g.interpolation_stencil(x) {
            out[j] += rest * l;
        }
        out
    }

    /// Applies the operator at an arbitrary interior point.
    pub fn evaluate(&self, f: &[f64], x: &Point) -> f64 {
        self.row(x).iter().zip(f).map(|(w, v)| w * v).sum()
    }
}
