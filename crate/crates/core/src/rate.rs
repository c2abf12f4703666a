//! Log-log least squares of a boundary profile against the distance.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Fit of `value ~ prefactor * delta^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum number of samples a fit accepts.
pub const MIN_SAMPLES: usize = 8;

/// Fits `(delta, value)` samples whose distance lies in `window`.
pub fn fit_boundary_rate<I>(samples: I, window: (f64, f64)) -> Result<RateFit>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::FitDomain(format!("window {window:?} is empty")));
    }
    let mut pts = Vec::new();
    for (d, v) in samples {
        if d < lo || d > hi {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::FitDomain(format!(
                "value {v} at distance {d:e} is not positive"
            )));
        }
        pts.push((d.ln(), v.ln()));
    }
    if pts.len() < MIN_SAMPLES {
        return Err(Error::FitDomain(format!(
            "{} samples in window {window:?}, need {MIN_SAMPLES}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitDomain("all samples share one distance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - resid / syy };
    Ok(RateFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        window,
        samples: pts.len(),
    })
}

impl GridFunction {
    /// Fits the node values against their distance to the boundary. The
    /// window must lie inside `(0, diam / 4)`.
    pub fn fit_boundary_rate(&self, window: (f64, f64)) -> Result<RateFit> {
        let diam = self.grid().domain().diameter();
        if window.1 > 0.25 * diam {
            return Err(Error::FitDomain(format!(
                "window {window:?} reaches beyond a quarter diameter {}",
                0.25 * diam
            )));
        }
        fit_boundary_rate(self.boundary_profile(), window)
    }
}
