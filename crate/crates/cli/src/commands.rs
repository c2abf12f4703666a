//! The subcommands. Each one turns a validated [`RunConfig`] into a table.

use std::sync::Arc;

use rayon::prelude::*;
use speclap::conformance::{format_number, verify_all, ConformanceConfig};
use speclap::dirichlet::{solve_linear, trace_report};
use speclap::grid::{Grid, GridOptions};
use speclap::large::{LargeProblem, LargeRunConfig};
use speclap::measure::{read_measure_file, BoundaryMeasure, InteriorMeasure, MeasureData};
use speclap::rate::fit_boundary_rate;
use speclap::semilinear::{solve_semilinear, IterationOptions};
use speclap::{DomainKind, Error, Face, KernelEvaluator, Point, Side, SpectralDomain};

use crate::config::RunConfig;
use crate::output::Table;

/// What a command produced.
pub struct Outcome {
    pub table: Table,
    /// Set when the table is a partial result of a run that missed its
    /// convergence criterion.
    pub incomplete: Option<String>,
    /// Set when `verify` found failing checks.
    pub failures: Vec<String>,
}

impl Outcome {
    fn done(table: Table) -> Self {
        Outcome {
            table,
            incomplete: None,
            failures: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Basis,
    Kernel,
    Poisson,
    H1,
    SolveLinear,
    SolveSemilinear,
    Large,
    Trace,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Kernel => "kernel",
            Command::Poisson => "poisson",
            Command::H1 => "h1",
            Command::SolveLinear => "solve-linear",
            Command::SolveSemilinear => "solve-semilinear",
            Command::Large => "large",
            Command::Trace => "trace",
            Command::Verify => "verify",
        }
    }

    fn anchor(self) -> &'static str {
        match self {
            Command::Basis => "dirichlet-eigenpairs",
            Command::Kernel => "green-function-and-jumping-kernel",
            Command::Poisson => "poisson-kernel-normal-profile",
            Command::H1 => "h1-boundary-blow-up",
            Command::SolveLinear => "representation-by-green-and-poisson-potentials",
            Command::SolveSemilinear => "semilinear-monotone-iteration",
            Command::Large => "large-solution-as-limit-of-boundary-data",
            Command::Trace => "weighted-boundary-trace",
            Command::Verify => "conformance-suite",
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> speclap::Result<Outcome> {
    match command {
        Command::Basis => basis(cfg),
        Command::Kernel => kernel(cfg),
        Command::Poisson => poisson(cfg),
        Command::H1 => h1(cfg),
        Command::SolveLinear => linear(cfg),
        Command::SolveSemilinear => semilinear(cfg),
        Command::Large => large(cfg),
        Command::Trace => trace(cfg),
        Command::Verify => verify(cfg),
    }
}

fn provenance(command: Command, cfg: &RunConfig, extra: &str) -> String {
    let mut line = format!(
        "speclap {}: {}; domain={}; s={}; truncation={}; seed={}",
        command.name(),
        command.anchor(),
        cfg.domain_text,
        cfg.s,
        cfg.truncation,
        cfg.seed
    );
    if !extra.is_empty() {
        line.push_str("; ");
        line.push_str(extra);
    }
    line
}

fn domain(cfg: &RunConfig) -> speclap::Result<Arc<SpectralDomain>> {
    Ok(Arc::new(SpectralDomain::new(cfg.domain, cfg.truncation)?))
}

fn kernels(cfg: &RunConfig, d: &Arc<SpectralDomain>) -> speclap::Result<KernelEvaluator> {
    KernelEvaluator::with_plan(d.clone(), cfg.s, cfg.plan)
}

fn coordinate_columns(dim: usize, name: &str) -> Vec<String> {
    if dim == 1 {
        vec![name.to_string()]
    } else {
        vec![format!("{name}1"), format!("{name}2")]
    }
}

fn coordinates(dim: usize, x: &Point) -> Vec<f64> {
    x[..dim].to_vec()
}

fn header(parts: Vec<Vec<String>>) -> Vec<String> {
    parts.into_iter().flatten().collect()
}

fn table(command: Command, cfg: &RunConfig, extra: &str, columns: &[String]) -> Table {
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    Table::new(provenance(command, cfg, extra), &cols)
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Default interior probe: a third of the way along the first axis, centred
/// along the second.
fn default_x(d: &SpectralDomain) -> Point {
    match d.kind() {
        DomainKind::Interval { length } => [length / 3.0, 0.0],
        DomainKind::Rectangle { lengths } => [lengths[0] / 3.0, lengths[1] / 2.0],
    }
}

fn check_inside(d: &SpectralDomain, x: &Point, what: &str) -> speclap::Result<()> {
    if d.contains(x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {:?} is not inside the domain", &x[..d.dim()])))
    }
}

/// `n` distances spaced geometrically on `[lo, hi]`.
fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn basis(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let count = cfg.count.unwrap_or(d.mode_count()).min(d.mode_count());
    let mut t = table(
        Command::Basis,
        cfg,
        "",
        &names(&["mode", "i", "j", "lambda", "lambda_pow_s", "integral"]),
    );
    for (k, m) in d.modes().iter().take(count).enumerate() {
        t.raw_row(&[
            k.to_string(),
            m.index[0].to_string(),
            m.index[1].to_string(),
            format_number(m.lambda),
            format_number(m.lambda.powf(cfg.s)),
            format_number(d.mode_integral(m)),
        ]);
    }
    Ok(Outcome::done(t))
}

fn kernel(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let k = kernels(cfg, &d)?;
    let dim = d.dim();
    let x = cfg.x.unwrap_or_else(|| default_x(&d));
    check_inside(&d, &x, "probe x")?;
    let ys: Vec<Point> = match cfg.y {
        Some(y) => {
            check_inside(&d, &y, "probe y")?;
            vec![y]
        }
        None => {
            // sweep along the first axis through x, skipping the diagonal
            let n = cfg.count.unwrap_or(64);
            let l = d.length(0);
            (1..=n)
                .map(|i| [l * (i as f64 - 0.5) / n as f64, x[1]])
                .filter(|y| (y[0] - x[0]).abs() > 1e-9 * l)
                .collect()
        }
    };
    let columns = header(vec![
        coordinate_columns(dim, "x"),
        coordinate_columns(dim, "y"),
        names(&["green", "jumping_kernel"]),
    ]);
    let mut t = table(Command::Kernel, cfg, "", &columns);
    let rows: Vec<speclap::Result<Vec<f64>>> = ys
        .par_iter()
        .map(|y| {
            let mut row = coordinates(dim, &x);
            row.extend(coordinates(dim, y));
            row.push(k.green(&x, y)?);
            row.push(k.jumping_kernel(&x, y)?);
            Ok(row)
        })
        .collect();
    for r in rows {
        t.row(&r?);
    }
    Ok(Outcome::done(t))
}

/// The boundary point nearest to `z`, defaulting to the low end of the first
/// axis.
fn boundary_point(d: &SpectralDomain, z: Option<Point>) -> speclap::Result<speclap::BoundaryPoint> {
    match z {
        Some(p) => d
            .locate_boundary(&p, 1e-12 * d.diameter())
            .ok_or_else(|| Error::InvalidArgument(format!("probe z {:?} is not on the boundary", &p[..d.dim()]))),
        None => {
            let param = if d.dim() == 1 { 0.0 } else { d.length(1) / 2.0 };
            Ok(d.boundary_point(
                Face {
                    axis: 0,
                    side: Side::Low,
                },
                param,
            ))
        }
    }
}

fn poisson(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let k = kernels(cfg, &d)?;
    let dim = d.dim();
    let z = boundary_point(&d, cfg.z)?;
    let zc = d.boundary_coordinates(&z);
    let inward = z.face.outward_normal().map(|v| -v);
    let reach = 0.5 * d.length(z.face.axis);
    let n = cfg.count.unwrap_or(41);
    let power = dim as f64 + 1.0 - 2.0 * cfg.s;
    let columns = header(vec![
        coordinate_columns(dim, "x"),
        names(&["delta", "poisson", "poisson_times_delta_pow_n_plus_1_minus_2s"]),
    ]);
    let extra = format!("z={}", zc[..dim].iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" "));
    let mut t = table(Command::Poisson, cfg, &extra, &columns);
    let dists = log_spaced(1e-3 * reach, reach, n);
    let rows: Vec<speclap::Result<Vec<f64>>> = dists
        .par_iter()
        .map(|&r| {
            let x = [zc[0] + r * inward[0], zc[1] + r * inward[1]];
            let p = k.poisson(&x, &z)?;
            let mut row = coordinates(dim, &x);
            row.extend([d.distance(&x), p, p * r.powf(power)]);
            Ok(row)
        })
        .collect();
    for r in rows {
        t.row(&r?);
    }
    Ok(Outcome::done(t))
}

fn h1(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let k = kernels(cfg, &d)?;
    let dim = d.dim();
    let window = cfg.fit_window.unwrap_or((1e-3, 1e-1));
    let n = cfg.count.unwrap_or(81);
    let half = 0.5 * d.length(0);
    let lo = (0.1 * window.0).min(1e-4);
    let across = if dim == 1 { 0.0 } else { 0.5 * d.length(1) };
    let columns = header(vec![
        coordinate_columns(dim, "x"),
        names(&["delta", "h1", "delta_pow_2_minus_2s_times_h1"]),
    ]);
    let mut t = table(Command::H1, cfg, "", &columns);
    let power = 2.0 - 2.0 * cfg.s;
    let dists = log_spaced(lo, half, n);
    let rows: Vec<speclap::Result<(f64, f64, Vec<f64>)>> = dists
        .par_iter()
        .map(|&r| {
            let x = [r, across];
            let h = k.h1(&x)?;
            let delta = d.distance(&x);
            let mut row = coordinates(dim, &x);
            row.extend([delta, h, delta.powf(power) * h]);
            Ok((delta, h, row))
        })
        .collect();
    let mut samples = Vec::new();
    for r in rows {
        let (delta, h, row) = r?;
        samples.push((delta, h));
        t.row(&row);
    }
    let fit = fit_boundary_rate(samples, window)?;
    t.rate_fit("h1", &fit);
    Ok(Outcome::done(t))
}

fn measures(cfg: &RunConfig, d: &SpectralDomain, required: bool) -> speclap::Result<MeasureData> {
    match &cfg.measure {
        Some(path) => read_measure_file(d, path).map_err(|e| match e {
            Error::Parse { line, message } => Error::InvalidMeasure(format!("{}:{line}: {message}", path.display())),
            other => other,
        }),
        None if required => Err(Error::InvalidArgument(
            "a measure file is required (--measure or 'file' under [measure])".into(),
        )),
        None => Ok(MeasureData {
            interior: InteriorMeasure::zero(),
            boundary: BoundaryMeasure::constant(1.0),
        }),
    }
}

fn grid(cfg: &RunConfig, d: &Arc<SpectralDomain>, default: GridOptions) -> speclap::Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(d.clone(), cfg.grid_options(default))?))
}

fn node_columns(dim: usize, values: &[&str]) -> Vec<String> {
    header(vec![coordinate_columns(dim, "x"), names(&["delta"]), names(values)])
}

fn linear(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let data = measures(cfg, &d, true)?;
    let k = kernels(cfg, &d)?;
    let g = grid(cfg, &d, GridOptions::default())?;
    let sol = solve_linear(&k, &data.interior, &data.boundary, g.clone())?;
    let dim = d.dim();
    let extra = format!("nodes={}", g.len());
    let mut t = table(Command::SolveLinear, cfg, &extra, &node_columns(dim, &["u"]));
    for (i, x) in g.nodes().iter().enumerate() {
        let mut row = coordinates(dim, x);
        row.extend([g.distances()[i], sol.values().values()[i]]);
        t.row(&row);
    }
    Ok(Outcome::done(t))
}

fn iteration_options(cfg: &RunConfig) -> IterationOptions {
    let defaults = IterationOptions::default();
    IterationOptions {
        tol: cfg.tol.unwrap_or(defaults.tol),
        max_iter: cfg.max_iter.unwrap_or(defaults.max_iter),
        start: cfg.start,
    }
}

fn semilinear(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let g = cfg.nonlinearity.ok_or_else(|| {
        Error::InvalidNonlinearity("a nonlinearity is required (--nonlinearity zero | linear | power(p))".into())
    })?;
    let data = measures(cfg, &d, false)?;
    if !data.interior.is_zero() {
        return Err(Error::InvalidMeasure(
            "the semilinear problem takes boundary data only; remove the [interior] section".into(),
        ));
    }
    let k = kernels(cfg, &d)?;
    let grid = grid(cfg, &d, GridOptions::default())?;
    let opts = iteration_options(cfg);
    let sol = solve_semilinear(&k, &g, &data.boundary, grid.clone(), opts)?;
    let dim = d.dim();
    let extra = format!(
        "nonlinearity={}; iterations={}; nodes={}",
        g.name(),
        sol.iterations(),
        grid.len()
    );
    let mut t = table(Command::SolveSemilinear, cfg, &extra, &node_columns(dim, &["u", "w"]));
    for (i, x) in grid.nodes().iter().enumerate() {
        let mut row = coordinates(dim, x);
        row.extend([grid.distances()[i], sol.u.values()[i], sol.w[i]]);
        t.row(&row);
    }
    Ok(Outcome::done(t))
}

fn large(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let p = cfg
        .p
        .ok_or_else(|| Error::InvalidConfiguration("the exponent p is required (--p)".into()))?;
    let mut lc = LargeRunConfig::new(cfg.s, p)?;
    if let Some(s) = &cfg.schedule {
        lc.schedule = s.clone();
    }
    if let Some(v) = cfg.stagnation_tol {
        lc.stagnation_tol = v;
    }
    if let Some(v) = cfg.core {
        lc.core = v;
    }
    if let Some(v) = cfg.band {
        lc.band = v;
    }
    if let Some(w) = cfg.fit_window {
        lc.fit_window = w;
    }
    lc.grid = cfg.grid_options(lc.grid);
    lc.iteration = IterationOptions {
        tol: cfg.tol.unwrap_or(lc.iteration.tol),
        max_iter: cfg.max_iter.unwrap_or(lc.iteration.max_iter),
        start: lc.iteration.start,
    };
    lc.validate()?;
    let d = domain(cfg)?;
    let problem = LargeProblem::new(d.clone(), lc)?;
    let sol = problem.solve_large()?;
    let grid = problem.grid();
    let dim = d.dim();
    let last_j = sol.sequence.last().map(|(j, _)| *j).unwrap_or(0.0);
    let stagnant = match sol.stagnant_at {
        Some(j) => format_number(j),
        None => "none".into(),
    };
    let extra = format!(
        "p={p}; j_max={}; stagnant_at={stagnant}; monotone_violation={}; domination_violation={}; \
         supersolution_min_residual={}",
        format_number(last_j),
        format_number(sol.monotone_violation),
        format_number(sol.domination_violation),
        format_number(sol.supersolution.min_normalized_residual()),
    );
    let mut t = table(Command::Large, cfg, &extra, &node_columns(dim, &["u", "supersolution", "u_over_h1"]));
    let u = sol.limit();
    let ubar = sol.supersolution.values.values();
    for (i, x) in grid.nodes().iter().enumerate() {
        let h = problem.kernels().h1(x)?;
        let mut row = coordinates(dim, x);
        row.extend([grid.distances()[i], u.values()[i], ubar[i], u.values()[i] / h]);
        t.row(&row);
    }
    t.rate_fit("u", &sol.fit);
    let incomplete = match sol.stagnant_at {
        Some(_) => None,
        None => Some(format!(
            "u_j did not stagnate on the core by j = {}: last relative change {:e} exceeds {:e}",
            last_j,
            sol.core_changes.last().copied().unwrap_or(f64::NAN),
            problem.config().stagnation_tol
        )),
    };
    Ok(Outcome {
        table: t,
        incomplete,
        failures: Vec::new(),
    })
}

fn trace(cfg: &RunConfig) -> speclap::Result<Outcome> {
    let d = domain(cfg)?;
    let data = measures(cfg, &d, false)?;
    let k = kernels(cfg, &d)?;
    let g = grid(cfg, &d, GridOptions::default())?;
    let sol = solve_linear(&k, &data.interior, &data.boundary, g)?;
    let report = trace_report(&k, |x: &Point| sol.value(x), |_: &Point| 1.0, cfg.trace_width, cfg.trace_resolution)?;
    let extra = format!("test_function=1; resolution={}", format_number(cfg.trace_resolution));
    let mut t = table(Command::Trace, cfg, &extra, &names(&["width", "trace"]));
    for (w, v) in report.widths.iter().zip(report.values) {
        t.row(&[*w, v]);
    }
    t.row(&[0.0, report.extrapolated]);
    Ok(Outcome::done(t))
}

fn verify(cfg: &RunConfig) -> speclap::Result<Outcome> {
    match cfg.domain {
        DomainKind::Interval { length } if (length - std::f64::consts::PI).abs() < 1e-12 => {}
        _ => {
            return Err(Error::InvalidConfiguration(
                "verify runs on interval:pi, where the closed forms are known".into(),
            ))
        }
    }
    let mut c = ConformanceConfig::new(cfg.s);
    c.seed = cfg.seed;
    c.trials = cfg.trials;
    c.pairs = cfg.pairs;
    c.truncation = cfg.truncation;
    let report = verify_all(&c)?;
    let failures = report
        .failures()
        .map(|e| format!("{} ({}): {:e}", e.check, e.anchor, e.max_violation))
        .collect();
    let mut t = table(
        Command::Verify,
        cfg,
        "",
        &names(&["check", "anchor", "probes", "max_violation", "window_lo", "window_hi", "pass"]),
    );
    let csv = report.to_csv();
    for line in csv.lines().skip(1) {
        t.raw_row(&[line.to_string()]);
    }
    Ok(Outcome {
        table: t,
        incomplete: None,
        failures,
    })
}
