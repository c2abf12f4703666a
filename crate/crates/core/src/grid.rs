//! Boundary-graded interior grids and functions sampled on them.
//!
//! Each axis is split into cells whose widths grow geometrically away from
//! both ends; every cell carries a Gauss-Legendre rule, so the nodes never
//! touch the boundary and the weights integrate polynomials of degree
//! `2q - 1` exactly on each cell.

use std::sync::Arc;

use crate::domain::{Point, SpectralDomain};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Gauss points per cell.
pub const POINTS_PER_CELL: usize = 4;

/// Grid construction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Nodes per axis.
    pub nodes: usize,
    /// Width ratio between neighbouring cells, in `(0, 1)`.
    pub ratio: f64,
    /// Lower bound on node distance to the boundary, relative to the
    /// diameter.
    pub min_distance: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            nodes: 128,
            ratio: 0.75,
            min_distance: 1e-4,
        }
    }
}

/// One axis of a grid: cells, nodes and weights.
#[derive(Debug, Clone)]
pub struct AxisGrid {
    length: f64,
    edges: Vec<f64>,
    /// Offset of the first node of each cell.
    starts: Vec<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ratio: f64,
}

fn innermost_node(length: f64, cells: usize, leftover: usize, r: f64) -> f64 {
    let (d1, _) = widths(length, cells, leftover, r);
    let xi = 0.5 * (1.0 + GaussRule::legendre(POINTS_PER_CELL).nodes()[0]);
    xi * d1
}

/// Smallest and largest cell width for `cells` graded cells per half.
fn widths(length: f64, cells: usize, leftover: usize, r: f64) -> (f64, f64) {
    let c = cells as f64;
    let half = if (1.0 - r).abs() < 1e-12 {
        c
    } else {
        (1.0 - r.powf(c)) / (1.0 - r)
    };
    let big = length / (2.0 * half + leftover as f64 / POINTS_PER_CELL as f64);
    (big * r.powf(c - 1.0), big)
}

impl AxisGrid {
    fn new(length: f64, n: usize, ratio: f64, min_distance: f64) -> Self {
        let q = POINTS_PER_CELL;
        let cells = n / (2 * q);
        let leftover = n - 2 * q * cells;
        // Raise the ratio until the innermost node clears the minimum distance.
        let mut r = ratio;
        if innermost_node(length, cells, leftover, r) < min_distance {
            let (mut lo, mut hi) = (ratio, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if innermost_node(length, cells, leftover, mid) < min_distance {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            r = hi;
        }
        let (_, big) = widths(length, cells, leftover, r);
        let mut left = vec![0.0];
        for k in 0..cells {
            let w = big * r.powf((cells - 1 - k) as f64);
            left.push(left[k] + w);
        }
        let mut edges = left.clone();
        if leftover > 0 {
            edges.push(length - left[cells]);
        } else {
            edges[cells] = 0.5 * length;
        }
        for k in (0..cells).rev() {
            edges.push(length - left[k]);
        }
        let mut starts = Vec::new();
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for c in 0..edges.len() - 1 {
            let points = if leftover > 0 && c == cells { leftover } else { q };
            starts.push(nodes.len());
            for (x, w) in GaussRule::legendre(points).mapped(edges[c], edges[c + 1]) {
                nodes.push(x);
                weights.push(w);
            }
        }
        starts.push(nodes.len());
        AxisGrid {
            length,
            edges,
            starts,
            nodes,
            weights,
            ratio: r,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cell_count(&self) -> usize {
        self.edges.len() - 1
    }

    /// Width ratio actually used after the minimum-distance adjustment.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Node index range of a cell.
    pub fn cell_nodes(&self, cell: usize) -> std::ops::Range<usize> {
        self.starts[cell]..self.starts[cell + 1]
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        (self.edges[cell], self.edges[cell + 1])
    }

    /// Cell containing `x`, clamped to the axis.
    pub fn locate(&self, x: f64) -> usize {
        let k = self.edges.partition_point(|e| *e <= x);
        k.clamp(1, self.edges.len() - 1) - 1
    }

    /// Cell index of a node.
    pub fn cell_of_node(&self, node: usize) -> usize {
        self.starts.partition_point(|s| *s <= node) - 1
    }

    /// Lagrange basis of the cell at `x`, written to `out`.
    pub fn basis(&self, cell: usize, x: f64, out: &mut Vec<f64>) {
        let range = self.cell_nodes(cell);
        let t = &self.nodes[range];
        out.clear();
        for j in 0..t.len() {
            let mut v = 1.0;
            for k in 0..t.len() {
                if k != j {
                    v *= (x - t[k]) / (t[j] - t[k]);
                }
            }
            out.push(v);
        }
    }

    /// Derivative of the Lagrange basis at `x`.
    pub fn basis_derivative(&self, cell: usize, x: f64, out: &mut Vec<f64>) {
        let range = self.cell_nodes(cell);
        let t = &self.nodes[range];
        out.clear();
        for j in 0..t.len() {
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

    /// Whether the cell touches an end of the axis.
    pub fn is_outermost(&self, cell: usize) -> bool {
        cell == 0 || cell + 1 == self.cell_count()
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

/// Tensor grid of Gauss nodes clustered toward the boundary.
#[derive(Debug, Clone)]
pub struct Grid {
    domain: Arc<SpectralDomain>,
    axes: Vec<AxisGrid>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    distances: Vec<f64>,
    options: GridOptions,
}

/// `n` nodes per axis with the given cell ratio and the default minimum
/// distance.
pub fn boundary_graded_grid(domain: Arc<SpectralDomain>, n: usize, ratio: f64) -> Result<Grid> {
    Grid::new(
        domain,
        GridOptions {
            nodes: n,
            ratio,
            ..GridOptions::default()
        },
    )
}

impl Grid {
    pub fn new(domain: Arc<SpectralDomain>, options: GridOptions) -> Result<Self> {
        if options.nodes < 16 {
            return Err(Error::InvalidConfiguration(format!(
                "grid needs at least 16 nodes per axis, got {}",
                options.nodes
            )));
        }
        if !(options.ratio > 0.0 && options.ratio < 1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "grading ratio {} outside (0, 1)",
                options.ratio
            )));
        }
        if !(options.min_distance > 0.0 && options.min_distance < 0.01) {
            return Err(Error::InvalidConfiguration(format!(
                "minimum node distance {} outside (0, 0.01) diameters",
                options.min_distance
            )));
        }
        let floor = options.min_distance * domain.diameter();
        let axes: Vec<AxisGrid> = (0..domain.dim())
            .map(|a| AxisGrid::new(domain.length(a), options.nodes, options.ratio, floor))
            .collect();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if axes.len() == 1 {
            for (x, w) in axes[0].nodes.iter().zip(&axes[0].weights) {
                nodes.push([*x, 0.0]);
                weights.push(*w);
            }
        } else {
            for (x, wx) in axes[0].nodes.iter().zip(&axes[0].weights) {
                for (y, wy) in axes[1].nodes.iter().zip(&axes[1].weights) {
                    nodes.push([*x, *y]);
                    weights.push(wx * wy);
                }
            }
        }
        let distances = nodes.iter().map(|x| domain.distance(x)).collect();
        Ok(Grid {
            domain,
            axes,
            nodes,
            weights,
            distances,
            options,
        })
    }

    pub fn domain(&self) -> &Arc<SpectralDomain> {
        &self.domain
    }

    pub fn options(&self) -> &GridOptions {
        &self.options
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Distance to the boundary of every node.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Per-axis node indices of a flat node index.
    pub fn split_index(&self, node: usize) -> [usize; 2] {
        if self.axes.len() == 1 {
            [node, 0]
        } else {
            let n1 = self.axes[1].nodes.len();
            [node / n1, node % n1]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.axes.len() == 1 {
            idx[0]
        } else {
            idx[0] * self.axes[1].nodes.len() + idx[1]
        }
    }

    /// Cells containing `x`, one per axis.
    pub fn locate(&self, x: &Point) -> [usize; 2] {
        let mut c = [0, 0];
        for (a, axis) in self.axes.iter().enumerate() {
            c[a] = axis.locate(x[a]);
        }
        c
    }

    /// Whether `x` lies in a cell touching the boundary.
    pub fn in_outermost_cell(&self, x: &Point) -> bool {
        let c = self.locate(x);
        self.axes
            .iter()
            .enumerate()
            .any(|(a, axis)| axis.is_outermost(c[a]))
    }

    /// Width of the cell containing `x` along its most constrained axis.
    pub fn cell_width(&self, x: &Point) -> f64 {
        let c = self.locate(x);
        self.axes
            .iter()
            .enumerate()
            .map(|(a, axis)| {
                let (lo, hi) = axis.cell_bounds(c[a]);
                hi - lo
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Interpolation weights of `x` against the nodes of its cell.
    pub fn interpolation_stencil(&self, x: &Point) -> Vec<(usize, f64)> {
        let c = self.locate(x);
        let mut b0 = Vec::new();
        self.axes[0].basis(c[0], x[0], &mut b0);
        let r0 = self.axes[0].cell_nodes(c[0]);
        if self.axes.len() == 1 {
            return r0.zip(b0).collect();
        }
        let mut b1 = Vec::new();
        self.axes[1].basis(c[1], x[1], &mut b1);
        let r1 = self.axes[1].cell_nodes(c[1]);
        let mut out = Vec::with_capacity(b0.len() * b1.len());
        for (i, v0) in r0.zip(&b0) {
            for (j, v1) in r1.clone().zip(&b1) {
                out.push((self.flat_index([i, j]), v0 * v1));
            }
        }
        out
    }

    /// Quadrature sum `sum w_i f_i W(delta_i)`.
    pub fn weighted_integral(&self, values: &[f64], weight: Weight) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} nodes",
                values.len(),
                self.len()
            )));
        }
        let mut sum = 0.0;
        for ((v, w), d) in values.iter().zip(&self.weights).zip(&self.distances) {
            if !v.is_finite() {
                return Err(Error::NumericInput(format!("node value {v}")));
            }
            sum += w * match weight {
                Weight::One => *v,
                Weight::Distance => v * d,
                Weight::PowerDistance(p) => v.abs().powf(p) * d,
            };
        }
        Ok(sum)
    }
}

/// Weight of [`Grid::weighted_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `int f`
    One,
    /// `int f delta`
    Distance,
    /// `int |f|^p delta`
    PowerDistance(f64),
}

/// Anything that can be evaluated with its gradient at interior points.
pub trait Field: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
}

impl Field for crate::spectral::SpectralField {
    fn value(&self, x: &Point) -> f64 {
        self.evaluate(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        crate::spectral::SpectralField::gradient(self, x)
    }
}

/// A field given by closures for the value and the gradient.
pub struct FnField<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> Field for FnField<F, G>
where
    F: Fn(&Point) -> f64 + Sync,
    G: Fn(&Point) -> Point + Sync,
{
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        (self.gradient)(x)
    }
}

/// Values on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn sample<F: Fn(&Point) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.nodes().iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise polynomial interpolant through the Gauss nodes of each cell.
    pub fn interpolate(&self, x: &Point) -> f64 {
        self.grid
            .interpolation_stencil(x)
            .into_iter()
            .map(|(i, w)| w * self.values[i])
            .sum()
    }

    pub fn interpolate_gradient(&self, x: &Point) -> Point {
        let g = &self.grid;
        let c = g.locate(x);
        let axes = g.axes();
        let mut b0 = Vec::new();
        let mut d0 = Vec::new();
        axes[0].basis(c[0], x[0], &mut b0);
        axes[0].basis_derivative(c[0], x[0], &mut d0);
        let r0 = axes[0].cell_nodes(c[0]);
        if axes.len() == 1 {
            let v = r0.zip(&d0).map(|(i, d)| d * self.values[i]).sum();
            return [v, 0.0];
        }
        let mut b1 = Vec::new();
        let mut d1 = Vec::new();
        axes[1].basis(c[1], x[1], &mut b1);
        axes[1].basis_derivative(c[1], x[1], &mut d1);
        let r1 = axes[1].cell_nodes(c[1]);
        let mut grad = [0.0, 0.0];
        for (k0, i) in r0.enumerate() {
            for (k1, j) in r1.clone().enumerate() {
                let v = self.values[g.flat_index([i, j])];
                grad[0] += d0[k0] * b1[k1] * v;
                grad[1] += b0[k0] * d1[k1] * v;
            }
        }
        grad
    }

    pub fn weighted_integral(&self, weight: Weight) -> Result<f64> {
        self.grid.weighted_integral(&self.values, weight)
    }

    /// `(delta, value)` pairs of the nodes, sorted by distance.
    pub fn boundary_profile(&self) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let d = g.domain();
        let mut out: Vec<(f64, f64)> = g
            .nodes()
            .iter()
            .zip(&self.values)
            .zip(g.distances())
            .filter(|((x, _), _)| {
                // keep clear of the corners on the rectangle
                d.dim() == 1 || {
                    let mut ds: Vec<f64> = (0..2).map(|a| x[a].min(d.length(a) - x[a])).collect();
                    ds.sort_by(f64::total_cmp);
                    ds[1] >= 0.25 * d.length(0).min(d.length(1))
                }
            })
            .map(|((_, v), dist)| (*dist, *v))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Field for GridFunction {
    fn value(&self, x: &Point) -> f64 {
        self.interpolate(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        self.interpolate_gradient(x)
    }
}
