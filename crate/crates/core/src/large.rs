//! Boundary blow-up solutions of `(-Delta|_Omega)^s u + u^p = 0`.
//!
//! The solution is the increasing limit of the solutions `u_j` with boundary
//! datum `u_j / h1 = j`. Every `u_j` lies below the explicit supersolution
//! `mu G^s[1] + lambda rho^{-alpha}`, `alpha = 2s / (p - 1)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::SpectralDomain;
use crate::error::{check_open_order, Error, Result};
use crate::grid::{FnField, Grid, GridFunction, GridOptions};
use crate::kernels::KernelEvaluator;
use crate::measure::BoundaryMeasure;
use crate::operator::apply_pointwise;
use crate::rate::{fit_boundary_rate, RateFit};
use crate::semilinear::{iterate, IterationOptions, Nonlinearity, SemilinearSetup, SemilinearSolution, Start};

#[derive(Debug, Clone, PartialEq)]
pub struct LargeRunConfig {
    pub s: f64,
    pub p: f64,
    /// Increasing boundary data `j`. Defaults to `1, 2, 4, ..., 4096`.
    pub schedule: Vec<f64>,
    /// Largest relative change on the core that counts as stagnation.
    pub stagnation_tol: f64,
    /// Core `{delta >= core * diam}` where stagnation is measured.
    pub core: f64,
    /// Distance window of the rate fit.
    pub fit_window: (f64, f64),
    /// Band `{delta <= band * diam}` where the supersolution constant is
    /// estimated.
    pub band: f64,
    pub grid: GridOptions,
    pub iteration: IterationOptions,
}

impl LargeRunConfig {
    pub fn new(s: f64, p: f64) -> Result<Self> {
        let config = LargeRunConfig {
            s,
            p,
            schedule: (0..13).map(|k| 2f64.powi(k)).collect(),
            stagnation_tol: 1e-3,
            core: 0.2,
            fit_window: (1e-3, 1e-1),
            band: 0.1,
            grid: GridOptions {
                nodes: 256,
                ratio: 0.6,
                min_distance: 1e-8,
            },
            iteration: IterationOptions::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_open_order(self.s)?;
        let (lo, hi) = (1.0 + self.s, 1.0 / (1.0 - self.s));
        if !(self.p > lo && self.p < hi) {
            return Err(Error::InvalidConfiguration(format!(
                "p outside ({lo}, {hi})"
            )));
        }
        if self.schedule.is_empty()
            || self.schedule.iter().any(|j| !(*j >= 0.0 && j.is_finite()))
            || self.schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfiguration(format!(
                "schedule {:?} must be increasing and nonnegative",
                self.schedule
            )));
        }
        if !(self.stagnation_tol > 0.0) || !(self.core > 0.0 && self.core < 0.5) {
            return Err(Error::InvalidConfiguration(
                "stagnation tolerance must be positive and the core fraction in (0, 0.5)".into(),
            ));
        }
        if !(self.band > 0.0 && self.band < 0.5) {
            return Err(Error::InvalidConfiguration(format!("band {} outside (0, 0.5)", self.band)));
        }
        Ok(())
    }

    /// `2s / (p - 1)`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.s / (self.p - 1.0)
    }
}

/// Explicit supersolution and its pointwise certificate.
#[derive(Debug, Clone)]
pub struct Supersolution {
    pub lambda: f64,
    pub mu: f64,
    /// `sup_band -(-Delta)^s rho^{-alpha} rho^{alpha + 2s}`, clipped at 0.
    pub c: f64,
    /// Band edge as a distance.
    pub delta0: f64,
    pub values: GridFunction,
    /// `((-Delta)^s u + u^p) / local scale` at each node.
    pub normalized_residuals: Vec<f64>,
}

impl Supersolution {
    pub fn min_normalized_residual(&self) -> f64 {
        self.normalized_residuals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct LargeSolution {
    /// `(j, u_j)` for every solved schedule entry.
    pub sequence: Vec<(f64, GridFunction)>,
    /// Schedule entry at which the core stagnated, if it did.
    pub stagnant_at: Option<f64>,
    /// Relative core changes between consecutive entries.
    pub core_changes: Vec<f64>,
    /// Largest relative decrease `(u_j - u_{j'}) / max(u_{j'}, 1)` for
    /// consecutive entries `j < j'`.
    pub monotone_violation: f64,
    /// Largest `(u_j - ubar) / max(ubar, 1)` over all entries.
    pub domination_violation: f64,
    pub fit: RateFit,
    /// `sup u delta^alpha` over the nodes.
    pub bound_constant: f64,
    /// `u / h1` at the node closest to the boundary.
    pub boundary_ratio: f64,
    pub supersolution: Supersolution,
}

impl LargeSolution {
    pub fn limit(&self) -> &GridFunction {
        &self.sequence.last().expect("schedule is never empty").1
    }
}

/// Shared state of one large-solution run.
#[derive(Debug, Clone)]
pub struct LargeProblem {
    config: LargeRunConfig,
    kernels: KernelEvaluator,
    grid: Arc<Grid>,
    unit: SemilinearSetup,
    g: Nonlinearity,
}

impl LargeProblem {
    pub fn new(domain: Arc<SpectralDomain>, config: LargeRunConfig) -> Result<Self> {
        config.validate()?;
        let kernels = KernelEvaluator::new(domain.clone(), config.s)?;
        let grid = Arc::new(Grid::new(domain, config.grid)?);
        let g = Nonlinearity::Power(config.p);
        let unit = SemilinearSetup::new(&kernels, &g, &BoundaryMeasure::constant(1.0), grid.clone())?;
        Ok(LargeProblem {
            config,
            kernels,
            grid,
            unit,
            g,
        })
    }

    pub fn config(&self) -> &LargeRunConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernels(&self) -> &KernelEvaluator {
        &self.kernels
    }

    /// `u_j`, from the supersolution start `j h1`.
    pub fn solve_datum_j(&self, j: f64) -> Result<SemilinearSolution> {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::InvalidArgument(format!("datum j = {j} must be nonnegative")));
        }
        let options = IterationOptions {
            start: Start::Supersolution,
            ..self.config.iteration
        };
        iterate(&self.unit.scaled(j), &self.g, options)
    }

    /// Builds `mu G^s[1] + lambda rho^{-alpha}` and checks it at every node.
    pub fn build_supersolution(&self) -> Result<Supersolution> {
        let k = &self.kernels;
        let d = k.domain().clone();
        let s = self.config.s;
        let p = self.config.p;
        let alpha = self.config.alpha();
        let dd = d.clone();
        let power = FnField {
            value: move |x: &crate::domain::Point| dd.regularized_distance(x).powf(-alpha),
            gradient: {
                let dd = d.clone();
                move |x: &crate::domain::Point| {
                    let r = dd.regularized_distance(x);
                    let g = dd.regularized_distance_gradient(x);
                    let f = -alpha * r.powf(-alpha - 1.0);
                    [f * g[0], f * g[1]]
                }
            },
        };
        let nodes = self.grid.nodes();
        let image: Vec<f64> = nodes
            .par_iter()
            .map(|x| apply_pointwise(k, &power, x))
            .collect::<Result<_>>()?;
        let delta0 = self.config.band * d.diameter();
        let mut c = 0.0f64;
        let mut interior = 0.0f64;
        for ((x, a), dist) in nodes.iter().zip(&image).zip(self.grid.distances()) {
            if *dist <= delta0 {
                let r = d.regularized_distance(x);
                c = c.max(-a * r.powf(alpha + 2.0 * s));
            } else {
                interior = interior.max(a.abs());
            }
        }
        let lambda = c.powf(1.0 / (p - 1.0)).max(1.0);
        let mu = 1.1 * lambda * interior;
        let mass: Vec<f64> = nodes.par_iter().map(|x| k.green_mass_unchecked(x)).collect();
        let mut values = Vec::with_capacity(nodes.len());
        let mut normalized = Vec::with_capacity(nodes.len());
        for (i, x) in nodes.iter().enumerate() {
            let rpow = d.regularized_distance(x).powf(-alpha);
            let u = mu * mass[i] + lambda * rpow;
            // (-Delta)^s G^s[1] = 1
            let op = mu + lambda * image[i];
            let up = u.powf(p);
            let residual = op + up;
            let scale = mu + lambda * image[i].abs() + up;
            let r = residual / scale;
            if r < -1e-6 {
                return Err(Error::SupersolutionFailure {
                    node: i,
                    point: *x,
                    residual: r,
                });
            }
            values.push(u);
            normalized.push(r);
        }
        Ok(Supersolution {
            lambda,
            mu,
            c,
            delta0,
            values: GridFunction::new(self.grid.clone(), values)?,
            normalized_residuals: normalized,
        })
    }

    /// Runs the schedule, checks monotonicity and domination, and fits the
    /// boundary rate of the last iterate.
    pub fn solve_large(&self) -> Result<LargeSolution> {
        let supersolution = self.build_supersolution()?;
        let grid = &self.grid;
        let d = grid.domain();
        let core_min = self.config.core * d.diameter();
        let core: Vec<usize> = (0..grid.len())
            .filter(|i| grid.distances()[*i] >= core_min)
            .collect();
        let mut sequence: Vec<(f64, GridFunction)> = Vec::new();
        let mut core_changes = Vec::new();
        let mut stagnant_at = None;
        let mut monotone_violation = 0.0f64;
        let mut domination_violation = 0.0f64;
        let ubar = supersolution.values.values();
        for &j in &self.config.schedule {
            let u = self.solve_datum_j(j)?.u;
            for (v, b) in u.values().iter().zip(ubar) {
                domination_violation = domination_violation.max((v - b) / b.max(1.0));
            }
            if let Some((_, prev)) = sequence.last() {
                let mut change = 0.0f64;
                for (a, b) in prev.values().iter().zip(u.values()) {
                    monotone_violation = monotone_violation.max((a - b) / b.abs().max(1.0));
                }
                for &i in &core {
                    let (a, b) = (prev.values()[i], u.values()[i]);
                    change = change.max((b - a).abs() / b.abs().max(1e-300));
                }
                core_changes.push(change);
                if stagnant_at.is_none() && change < self.config.stagnation_tol {
                    stagnant_at = Some(j);
                }
            }
            sequence.push((j, u));
        }
        let last = &sequence.last().expect("schedule is never empty").1;
        let fit = fit_boundary_rate(last.boundary_profile(), self.config.fit_window)?;
        let alpha = self.config.alpha();
        let bound_constant = last
            .values()
            .iter()
            .zip(grid.distances())
            .map(|(u, dist)| u * dist.powf(alpha))
            .fold(0.0, f64::max);
        let inner = (0..grid.len())
            .min_by(|a, b| grid.distances()[*a].total_cmp(&grid.distances()[*b]))
            .expect("grid is never empty");
        let boundary_ratio = last.values()[inner] / self.kernels.h1_unchecked(&grid.nodes()[inner]);
        Ok(LargeSolution {
            sequence,
            stagnant_at,
            core_changes,
            monotone_violation: monotone_violation.max(0.0),
            domination_violation: domination_violation.max(0.0),
            fit,
            bound_constant,
            boundary_ratio,
            supersolution,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponent_range_is_enforced() {
        match LargeRunConfig::new(0.5, 2.5) {
            Err(Error::InvalidConfiguration(m)) => assert_eq!(m, "p outside (1.5, 2)"),
            other => panic!("{other:?}"),
        }
        assert!(LargeRunConfig::new(0.5, 1.5).is_err());
        assert!((LargeRunConfig::new(0.5, 1.75).unwrap().alpha() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn short_schedule_is_monotone_and_dominated() {
        let d = Arc::new(SpectralDomain::interval(PI, 128).unwrap());
        let mut cfg = LargeRunConfig::new(0.5, 1.75).unwrap();
        cfg.schedule = vec![0.0, 1.0, 2.0, 4.0];
        cfg.grid.nodes = 128;
        let prob = LargeProblem::new(d, cfg).unwrap();
        let sol = prob.solve_large().unwrap();
        assert!(sol.sequence[0].1.values().iter().all(|v| *v == 0.0));
        assert_eq!(sol.monotone_violation, 0.0);
        assert_eq!(sol.domination_violation, 0.0);
        assert!(sol.supersolution.min_normalized_residual() >= -1e-6);
        assert!(sol.stagnant_at.is_none());
    }
}
