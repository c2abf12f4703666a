//! Interior and boundary data measures and their text format.
//!
//! ```text
//! # comment
//! [interior]
//! atom 1.5707963 0.5
//! density sine 2.0
//! [boundary]
//! atom 0 1.0
//! density one
//! ```
//!
//! Interior atoms give the point coordinates then the weight. Boundary atoms
//! give the coordinates of a boundary point then the weight. A density line
//! names a profile and an optional scale.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use crate::domain::{BoundaryPoint, Point, SpectralDomain};
use crate::error::{Error, Result};
use crate::spectral::{default_quadrature_order, SpectralField};

/// Named interior density profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteriorProfile {
    /// Constant.
    One,
    /// Product of `sin(pi x_a / L_a)`, the shape of the first eigenfunction.
    Sine,
    /// Polynomial bump `(1 - r^2)^4` of radius a quarter of the smallest side
    /// at the center.
    Bump,
    /// Distance to the boundary.
    Distance,
}

impl InteriorProfile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "one" | "constant" => Some(InteriorProfile::One),
            "sine" => Some(InteriorProfile::Sine),
            "bump" => Some(InteriorProfile::Bump),
            "distance" => Some(InteriorProfile::Distance),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InteriorProfile::One => "one",
            InteriorProfile::Sine => "sine",
            InteriorProfile::Bump => "bump",
            InteriorProfile::Distance => "distance",
        }
    }

    pub fn value(&self, domain: &SpectralDomain, x: &Point) -> f64 {
        match self {
            InteriorProfile::One => 1.0,
            InteriorProfile::Sine => (0..domain.dim())
                .map(|a| (PI * x[a] / domain.length(a)).sin())
                .product(),
            InteriorProfile::Bump => {
                let r = 0.25 * (0..domain.dim()).map(|a| domain.length(a)).fold(f64::INFINITY, f64::min);
                let q: f64 = (0..domain.dim())
                    .map(|a| ((x[a] - 0.5 * domain.length(a)) / r).powi(2))
                    .sum();
                if q < 1.0 {
                    (1.0 - q).powi(4)
                } else {
                    0.0
                }
            }
            InteriorProfile::Distance => domain.distance(x),
        }
    }
}

/// Named boundary density profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    /// Constant.
    One,
    /// `1 + x_0 / L_0`, positive and continuous along the boundary.
    Linear,
    /// `1 + cos(2 pi x_0 / L_0) / 2`.
    Cosine,
}

impl BoundaryProfile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "one" | "constant" => Some(BoundaryProfile::One),
            "linear" => Some(BoundaryProfile::Linear),
            "cosine" => Some(BoundaryProfile::Cosine),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryProfile::One => "one",
            BoundaryProfile::Linear => "linear",
            BoundaryProfile::Cosine => "cosine",
        }
    }

    pub fn value(&self, domain: &SpectralDomain, z: &BoundaryPoint) -> f64 {
        let p = domain.boundary_coordinates(z);
        let l = domain.length(0);
        match self {
            BoundaryProfile::One => 1.0,
            BoundaryProfile::Linear => 1.0 + p[0] / l,
            BoundaryProfile::Cosine => 1.0 + 0.5 * (2.0 * PI * p[0] / l).cos(),
        }
    }
}

/// Interior data `mu`: finitely many atoms plus an optional density.
#[derive(Debug, Clone, Default)]
pub struct InteriorMeasure {
    pub atoms: Vec<(Point, f64)>,
    pub density: Option<(InteriorProfile, f64)>,
}

/// Boundary data `zeta`: finitely many atoms plus an optional density
/// against surface measure.
#[derive(Debug, Clone, Default)]
pub struct BoundaryMeasure {
    pub atoms: Vec<(BoundaryPoint, f64)>,
    pub density: Option<(BoundaryProfile, f64)>,
}

impl InteriorMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(x: Point, weight: f64) -> Self {
        InteriorMeasure {
            atoms: vec![(x, weight)],
            density: None,
        }
    }

    pub fn density(profile: InteriorProfile, scale: f64) -> Self {
        InteriorMeasure {
            atoms: Vec::new(),
            density: Some((profile, scale)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.1 == 0.0) && self.density.is_none_or(|d| d.1 == 0.0)
    }

    /// Density value at `x`, zero without a density.
    pub fn density_at(&self, domain: &SpectralDomain, x: &Point) -> f64 {
        self.density.map_or(0.0, |(p, c)| c * p.value(domain, x))
    }

    pub fn validate(&self, domain: &SpectralDomain) -> Result<()> {
        for (x, w) in &self.atoms {
            if !w.is_finite() || !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericInput(format!("atom {x:?} with weight {w}")));
            }
            if !domain.contains(x) {
                return Err(Error::InvalidMeasure(format!(
                    "interior atom at {x:?} is not strictly inside the domain"
                )));
            }
        }
        if let Some((_, c)) = self.density {
            if !c.is_finite() {
                return Err(Error::NumericInput(format!("density scale {c}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InteriorMeasure {
            atoms: self.atoms.iter().map(|(x, w)| (*x, w * factor)).collect(),
            density: self.density.map(|(p, c)| (p, c * factor)),
        }
    }

    /// `int delta d|mu|`, with the density part by the given quadrature.
    pub fn weighted_variation(&self, domain: &SpectralDomain, density_part: f64) -> f64 {
        self.atoms
            .iter()
            .map(|(x, w)| w.abs() * domain.distance(x))
            .sum::<f64>()
            + density_part
    }
}

impl BoundaryMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(z: BoundaryPoint, weight: f64) -> Self {
        BoundaryMeasure {
            atoms: vec![(z, weight)],
            density: None,
        }
    }

    pub fn density(profile: BoundaryProfile, scale: f64) -> Self {
        BoundaryMeasure {
            atoms: Vec::new(),
            density: Some((profile, scale)),
        }
    }

    /// Surface measure itself, `zeta = c sigma`.
    pub fn constant(c: f64) -> Self {
        Self::density(BoundaryProfile::One, c)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.1 == 0.0) && self.density.is_none_or(|d| d.1 == 0.0)
    }

    pub fn density_at(&self, domain: &SpectralDomain, z: &BoundaryPoint) -> f64 {
        self.density.map_or(0.0, |(p, c)| c * p.value(domain, z))
    }

    pub fn validate(&self, domain: &SpectralDomain) -> Result<()> {
        for (z, w) in &self.atoms {
            if !w.is_finite() || !z.param.is_finite() {
                return Err(Error::NumericInput(format!("boundary atom {z:?} with weight {w}")));
            }
            if z.face.axis >= domain.dim() {
                return Err(Error::InvalidMeasure(format!("{z:?} is not on a face")));
            }
            if domain.dim() == 2 {
                let len = domain.length(1 - z.face.axis);
                if !(z.param >= 0.0 && z.param <= len) {
                    return Err(Error::InvalidMeasure(format!("{z:?} is not on the boundary")));
                }
            }
        }
        if let Some((_, c)) = self.density {
            if !c.is_finite() {
                return Err(Error::NumericInput(format!("density scale {c}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BoundaryMeasure {
            atoms: self.atoms.iter().map(|(z, w)| (*z, w * factor)).collect(),
            density: self.density.map(|(p, c)| (p, c * factor)),
        }
    }

    /// `|zeta|(boundary)`, with the density integrated by a surface rule.
    pub fn total_variation(&self, domain: &SpectralDomain) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(_, w)| w.abs()).sum();
        let density = match self.density {
            None => 0.0,
            Some(_) => domain
                .boundary_rule(16, 8)
                .iter()
                .map(|(z, w)| w * self.density_at(domain, z).abs())
                .sum(),
        };
        atoms + density
    }

    /// Whether the measure is a nonnegative continuous density only.
    pub fn is_continuous_nonnegative(&self, domain: &SpectralDomain) -> bool {
        self.atoms.is_empty()
            && self.density.is_none_or(|_| {
                domain
                    .boundary_rule(16, 8)
                    .iter()
                    .all(|(z, _)| self.density_at(domain, z) >= 0.0)
            })
    }
}

/// `(-Delta)^{-s} mu` as a spectral field: an atom at `y` contributes
/// `phi_j(y)` to the data coefficients, a density its projection.
pub fn inverse_apply_measure(
    domain: Arc<SpectralDomain>,
    mu: &InteriorMeasure,
    s: f64,
) -> Result<SpectralField> {
    mu.validate(&domain)?;
    let mut coeffs = vec![0.0; domain.mode_count()];
    for (x, w) in &mu.atoms {
        for (c, m) in coeffs.iter_mut().zip(domain.modes()) {
            *c += w * domain.eigenfunction(m, x);
        }
    }
    if mu.density.is_some() {
        let order = default_quadrature_order(&domain);
        let d = domain.clone();
        let f = SpectralField::project(domain.clone(), |x| mu.density_at(&d, x), order)?;
        for (c, v) in coeffs.iter_mut().zip(f.coefficients()) {
            *c += v;
        }
    }
    SpectralField::new(domain, coeffs)?.inverse_apply(s)
}

/// Both measures read from one file.
#[derive(Debug, Clone, Default)]
pub struct MeasureData {
    pub interior: InteriorMeasure,
    pub boundary: BoundaryMeasure,
}

pub fn read_measure_file(domain: &SpectralDomain, path: &Path) -> Result<MeasureData> {
    let text = std::fs::read_to_string(path)?;
    parse_measures(domain, &text)
}

pub fn parse_measures(domain: &SpectralDomain, text: &str) -> Result<MeasureData> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Interior,
        Boundary,
    }
    let mut section = Section::None;
    let mut data = MeasureData::default();
    let dim = domain.dim();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[interior]" => Section::Interior,
                "[boundary]" => Section::Boundary,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        let numbers = |items: &[&str]| -> Result<Vec<f64>> {
            items
                .iter()
                .map(|w| {
                    w.parse::<f64>()
                        .map_err(|_| err(format!("'{w}' is not a number")))
                })
                .collect()
        };
        match (keyword, &section) {
            (_, Section::None) => {
                return Err(err("data before any [interior] or [boundary] section".into()))
            }
            ("atom", _) => {
                if rest.len() != dim + 1 {
                    return Err(err(format!(
                        "atom needs {dim} coordinate(s) and a weight, got {} values",
                        rest.len()
                    )));
                }
                let v = numbers(&rest)?;
                let mut x = [0.0; 2];
                x[..dim].copy_from_slice(&v[..dim]);
                let w = v[dim];
                if section == Section::Interior {
                    if !domain.contains(&x) {
                        return Err(err(format!("interior atom {x:?} is not inside the domain")));
                    }
                    data.interior.atoms.push((x, w));
                } else {
                    let tol = 1e-12 * domain.diameter();
                    let z = domain
                        .locate_boundary(&x, tol)
                        .ok_or_else(|| err(format!("boundary atom {x:?} is not on the boundary")))?;
                    data.boundary.atoms.push((z, w));
                }
            }
            ("density", _) => {
                if rest.is_empty() || rest.len() > 2 {
                    return Err(err("density needs a profile name and an optional scale".into()));
                }
                let scale = if rest.len() == 2 { numbers(&rest[1..])?[0] } else { 1.0 };
                if section == Section::Interior {
                    let p = InteriorProfile::parse(rest[0])
                        .ok_or_else(|| err(format!("unknown interior profile '{}'", rest[0])))?;
                    data.interior.density = Some((p, scale));
                } else {
                    let p = BoundaryProfile::parse(rest[0])
                        .ok_or_else(|| err(format!("unknown boundary profile '{}'", rest[0])))?;
                    data.boundary.density = Some((p, scale));
                }
            }
            (other, _) => return Err(err(format!("unknown keyword '{other}'"))),
        }
    }
    data.interior.validate(domain)?;
    data.boundary.validate(domain)?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::pt;

    fn interval() -> Arc<SpectralDomain> {
        Arc::new(SpectralDomain::interval(PI, 256).unwrap())
    }

    #[test]
    fn parses_sections() {
        let d = interval();
        let text = "# data\n[interior]\natom 1.5 0.25\ndensity sine 2\n\n[boundary]\natom 0 1\natom 3.141592653589793 2 # far end\n";
        let m = parse_measures(&d, text).unwrap();
        assert_eq!(m.interior.atoms, vec![(pt(1.5), 0.25)]);
        assert_eq!(m.interior.density, Some((InteriorProfile::Sine, 2.0)));
        assert_eq!(m.boundary.atoms.len(), 2);
        assert_eq!(m.boundary.atoms[1].1, 2.0);
    }

    #[test]
    fn reports_line_numbers() {
        let d = interval();
        let cases = [
            ("[interior]\natom 1.0\n", 2),
            ("atom 1 1\n", 1),
            ("[interior]\n\natom 0 1\n", 3),
            ("[boundary]\natom 1.0 1\n", 2),
            ("[interior]\ndensity wiggly\n", 2),
            ("[weird]\n", 1),
        ];
        for (text, line) in cases {
            match parse_measures(&d, text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn atom_potential_matches_green_function() {
        let d = interval();
        let mu = InteriorMeasure::atom(pt(PI / 2.0), 1.0);
        let u = inverse_apply_measure(d.clone(), &mu, 0.75).unwrap();
        let k = crate::kernels::KernelEvaluator::new(d, 0.75).unwrap();
        for x in [0.3, PI / 3.0, 2.5] {
            let want = k.green(&pt(x), &pt(PI / 2.0)).unwrap();
            // the truncated series converges like N^{-3/2}
            assert!((u.evaluate(&pt(x)) - want).abs() < 1e-3, "{x}");
        }
        let boundary = InteriorMeasure::atom(pt(0.0), 1.0);
        assert!(matches!(
            inverse_apply_measure(interval(), &boundary, 0.5),
            Err(Error::InvalidMeasure(_))
        ));
    }
}
