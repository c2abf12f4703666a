//! Run configuration: flat `key = value` text with `[section]` headers,
//! overridden by command-line flags.
//!
//! ```text
//! # comment
//! domain = interval:pi
//! s = 0.5
//! [grid]
//! nodes = 128
//! [large]
//! p = 1.75
//! schedule = 1, 2, 4, 8
//! ```
//!
//! Keys inside a section are addressed as `section.key`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use speclap::grid::GridOptions;
use speclap::semilinear::{Nonlinearity, Start};
use speclap::{DomainKind, Point, TimePlan};

/// Every key the configuration understands.
pub const KEYS: &[&str] = &[
    "domain",
    "s",
    "truncation",
    "output",
    "seed",
    "grid.nodes",
    "grid.ratio",
    "grid.min_distance",
    "quadrature.near_points",
    "quadrature.far_points",
    "quadrature.far_panel",
    "quadrature.tolerance",
    "probe.x",
    "probe.y",
    "probe.z",
    "probe.count",
    "measure.file",
    "semilinear.nonlinearity",
    "semilinear.start",
    "semilinear.tol",
    "semilinear.max_iter",
    "large.p",
    "large.schedule",
    "large.stagnation_tol",
    "large.core",
    "large.band",
    "fit.window",
    "trace.width",
    "trace.resolution",
    "verify.trials",
    "verify.pairs",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// Raw settings before validation.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Origin)>,
}

impl Settings {
    /// Reads a configuration file. Syntax errors are collected, not fatal.
    pub fn read_file(&mut self, path: &Path, errors: &mut Vec<String>) {
        match std::fs::read_to_string(path) {
            Ok(text) => self.parse(&text, path, errors),
            Err(e) => errors.push(format!("{}: cannot read configuration: {e}", path.display())),
        }
    }

    pub fn parse(&mut self, text: &str, path: &Path, errors: &mut Vec<String>) {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: n + 1,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => section = name.trim().to_string(),
                    _ => errors.push(format!("{origin}: malformed section header '{line}'")),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("{origin}: expected 'key = value', got '{line}'"));
                continue;
            };
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !KEYS.contains(&full.as_str()) {
                errors.push(format!("{origin}: unknown key '{full}'"));
                continue;
            }
            self.values.insert(full, (value.trim().to_string(), origin));
        }
    }

    pub fn set_flag(&mut self, key: &str, value: impl ToString) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), (value.to_string(), Origin::Flag));
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.values.get(key)
    }
}

/// Validated configuration shared by all commands. Unset optional fields
/// take command-specific defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub domain_text: String,
    pub s: f64,
    pub truncation: usize,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub grid_nodes: Option<usize>,
    pub grid_ratio: Option<f64>,
    pub grid_min_distance: Option<f64>,
    pub plan: TimePlan,
    pub x: Option<Point>,
    pub y: Option<Point>,
    pub z: Option<Point>,
    pub count: Option<usize>,
    pub measure: Option<PathBuf>,
    pub nonlinearity: Option<Nonlinearity>,
    pub start: Start,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub p: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    pub stagnation_tol: Option<f64>,
    pub core: Option<f64>,
    pub band: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub trace_width: f64,
    pub trace_resolution: f64,
    pub trials: usize,
    pub pairs: usize,
}

impl RunConfig {
    /// Grid options from the command defaults with any configured fields
    /// replaced.
    pub fn grid_options(&self, default: GridOptions) -> GridOptions {
        GridOptions {
            nodes: self.grid_nodes.unwrap_or(default.nodes),
            ratio: self.grid_ratio.unwrap_or(default.ratio),
            min_distance: self.grid_min_distance.unwrap_or(default.min_distance),
        }
    }
}

/// A length: a decimal number, `pi`, or a multiple or fraction of `pi`
/// such as `2pi`, `2*pi` or `pi/2`.
pub fn parse_length(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    if let Some(rest) = t.strip_prefix("pi") {
        if rest.is_empty() {
            return Some(PI);
        }
        return rest.strip_prefix('/').and_then(|d| d.trim().parse::<f64>().ok()).map(|d| PI / d);
    }
    let head = t.strip_suffix("pi")?;
    let head = head.strip_suffix('*').unwrap_or(head);
    head.trim().parse::<f64>().ok().map(|c| c * PI)
}

/// `interval:L` or `rectangle:L1xL2`.
pub fn parse_domain(text: &str) -> Result<DomainKind, String> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| format!("domain '{text}' must look like interval:L or rectangle:L1xL2"))?;
    let bad = |part: &str| format!("'{part}' is not a length");
    match kind.trim() {
        "interval" => {
            let length = parse_length(rest).ok_or_else(|| bad(rest))?;
            Ok(DomainKind::Interval { length })
        }
        "rectangle" => {
            let (a, b) = rest
                .split_once('x')
                .ok_or_else(|| format!("rectangle '{rest}' must look like L1xL2"))?;
            Ok(DomainKind::Rectangle {
                lengths: [parse_length(a).ok_or_else(|| bad(a))?, parse_length(b).ok_or_else(|| bad(b))?],
            })
        }
        other => Err(format!("unknown domain kind '{other}'")),
    }
}

fn parse_point(text: &str) -> Option<Point> {
    let parts: Vec<f64> = text.split(',').map(parse_length).collect::<Option<_>>()?;
    match parts[..] {
        [a] => Some([a, 0.0]),
        [a, b] => Some([a, b]),
        _ => None,
    }
}

fn parse_list(text: &str) -> Option<Vec<f64>> {
    text.split(',').map(|w| w.trim().parse::<f64>().ok()).collect()
}

/// Collects typed values and every error on the way.
struct Reader<'a> {
    settings: &'a Settings,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn field<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (text, origin) = self.settings.get(key)?;
        match parse(text) {
            Some(v) => Some(v),
            None => {
                self.errors.push(format!("{origin}: {key} = '{text}' is not {what}"));
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        self.field(key, "a finite number", |t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        self.field(key, "a positive number", |t| t.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0))
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.field(key, "a positive integer", |t| t.parse::<usize>().ok().filter(|v| *v > 0))
    }

    fn check(&mut self, key: &str, ok: bool, message: &str) {
        if !ok {
            let origin = self
                .settings
                .get(key)
                .map(|(_, o)| o.to_string())
                .unwrap_or_else(|| "configuration".into());
            self.errors.push(format!("{origin}: {message}"));
        }
    }
}

/// Validates the settings. All problems are reported together.
pub fn build(settings: &Settings) -> Result<RunConfig, Vec<String>> {
    let mut r = Reader {
        settings,
        errors: Vec::new(),
    };
    let domain_text = settings
        .get("domain")
        .map(|v| v.0.clone())
        .unwrap_or_else(|| "interval:pi".into());
    let domain = match parse_domain(&domain_text) {
        Ok(d) => Some(d),
        Err(e) => {
            let origin = settings.get("domain").map(|v| v.1.to_string()).unwrap_or_default();
            r.errors.push(format!("{origin}: {e}"));
            None
        }
    };
    let s = r.number("s");
    if settings.get("s").is_none() {
        r.errors.push("configuration: the order s is required (--s or 's = ...')".into());
    }
    if let Some(s) = s {
        r.check("s", s > 0.0 && s < 1.0, &format!("order s = {s} outside (0, 1)"));
    }
    let dim = match domain {
        Some(DomainKind::Rectangle { .. }) => 2,
        _ => 1,
    };
    let truncation = r.count("truncation").unwrap_or(if dim == 1 { 256 } else { 48 });
    let output = settings.get("output").map(|v| PathBuf::from(&v.0));
    let seed = r
        .field("seed", "an unsigned integer", |t| t.parse::<u64>().ok())
        .unwrap_or(speclap::conformance::DEFAULT_SEED);

    let grid_nodes = r.count("grid.nodes");
    let grid_ratio = r.number("grid.ratio");
    if let Some(v) = grid_ratio {
        r.check("grid.ratio", v > 0.0 && v < 1.0, &format!("grid.ratio = {v} outside (0, 1)"));
    }
    let grid_min_distance = r.positive("grid.min_distance");

    let defaults = TimePlan::default();
    let plan = TimePlan {
        near_points: r.count("quadrature.near_points").unwrap_or(defaults.near_points),
        far_points: r.count("quadrature.far_points").unwrap_or(defaults.far_points),
        far_panel: r.positive("quadrature.far_panel").unwrap_or(defaults.far_panel),
        tolerance: r.positive("quadrature.tolerance").unwrap_or(defaults.tolerance),
    };

    let point = |t: &str| parse_point(t).filter(|p: &Point| p.iter().all(|v| v.is_finite()));
    let x = r.field("probe.x", "a point like 1.2 or 1.2,0.4", point);
    let y = r.field("probe.y", "a point like 1.2 or 1.2,0.4", point);
    let z = r.field("probe.z", "a point like 0 or 0,0.4", point);
    let count = r.count("probe.count");
    let measure = settings.get("measure.file").map(|v| PathBuf::from(&v.0));
    let nonlinearity = {
        let v = settings.get("semilinear.nonlinearity");
        match v.map(|(t, o)| (Nonlinearity::parse(t), o)) {
            Some((Ok(g), _)) => Some(g),
            Some((Err(e), o)) => {
                r.errors.push(format!("{o}: {e}"));
                None
            }
            None => None,
        }
    };
    let start = r
        .field("semilinear.start", "'super' or 'sub'", |t| match t {
            "super" | "supersolution" => Some(Start::Supersolution),
            "sub" | "subsolution" => Some(Start::Subsolution),
            _ => None,
        })
        .unwrap_or(Start::Supersolution);
    let tol = r.positive("semilinear.tol");
    let max_iter = r.count("semilinear.max_iter");
    let p = r.number("large.p");
    let schedule = r.field("large.schedule", "a comma-separated list of numbers", parse_list);
    let stagnation_tol = r.positive("large.stagnation_tol");
    let core = r.positive("large.core");
    let band = r.positive("large.band");
    let fit_window = r.field("fit.window", "two distances lo,hi", |t| {
        parse_list(t).and_then(|v| match v[..] {
            [a, b] if a > 0.0 && b > a => Some((a, b)),
            _ => None,
        })
    });
    let trace_width = r.positive("trace.width").unwrap_or(0.05);
    let trace_resolution = r.positive("trace.resolution").unwrap_or(1e-4);
    let trials = r.count("verify.trials").unwrap_or(50);
    let pairs = r.count("verify.pairs").unwrap_or(50);

    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    Ok(RunConfig {
        domain: domain.expect("checked above"),
        domain_text,
        s: s.expect("checked above"),
        truncation,
        output,
        seed,
        grid_nodes,
        grid_ratio,
        grid_min_distance,
        plan,
        x,
        y,
        z,
        count,
        measure,
        nonlinearity,
        start,
        tol,
        max_iter,
        p,
        schedule,
        stagnation_tol,
        core,
        band,
        fit_window,
        trace_width,
        trace_resolution,
        trials,
        pairs,
    })
}
