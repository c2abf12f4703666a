mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use speclap::Error;

use commands::Command;
use config::Settings;

#[derive(Parser)]
#[command(name = "speclap", version, about = "Spectral fractional Laplacian on intervals and rectangles")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dirichlet eigenpairs, their powers and integrals.
    Basis(Common),
    /// Green function and jumping kernel at x along a sweep of y.
    Kernel(Common),
    /// Poisson kernel along the inward normal of a boundary point z.
    Poisson(Common),
    /// Boundary profile of h1 with its fitted blow-up rate.
    H1(Common),
    /// Linear Dirichlet problem with measure data from --measure.
    SolveLinear(Common),
    /// Semilinear problem by monotone iteration.
    SolveSemilinear(Common),
    /// Large solution as the limit of increasing boundary data.
    Large(Common),
    /// Weighted boundary traces of the linear solution.
    Trace(Common),
    /// Conformance suite on the interval (0, pi).
    Verify(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Configuration file (key = value lines with [section] headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// interval:L or rectangle:L1xL2; lengths accept pi multiples.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    truncation: Option<String>,
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    min_distance: Option<String>,
    #[arg(long)]
    near_points: Option<String>,
    #[arg(long)]
    far_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    /// zero, linear, linear(c) or power(p).
    #[arg(long)]
    nonlinearity: Option<String>,
    /// super or sub.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated boundary data j.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    stagnation_tol: Option<String>,
    /// Rate-fit window lo,hi.
    #[arg(long)]
    fit_window: Option<String>,
    /// Initial trace strip width.
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    pairs: Option<String>,
}

impl Common {
    fn apply(&self, settings: &mut Settings) {
        let flags = [
            ("domain", &self.domain),
            ("s", &self.s),
            ("truncation", &self.truncation),
            ("output", &self.output),
            ("seed", &self.seed),
            ("grid.nodes", &self.nodes),
            ("grid.ratio", &self.ratio),
            ("grid.min_distance", &self.min_distance),
            ("quadrature.near_points", &self.near_points),
            ("quadrature.far_points", &self.far_points),
            ("probe.x", &self.x),
            ("probe.y", &self.y),
            ("probe.z", &self.z),
            ("probe.count", &self.count),
            ("measure.file", &self.measure),
            ("semilinear.nonlinearity", &self.nonlinearity),
            ("semilinear.start", &self.start),
            ("semilinear.tol", &self.tol),
            ("semilinear.max_iter", &self.max_iter),
            ("large.p", &self.p),
            ("large.schedule", &self.schedule),
            ("large.stagnation_tol", &self.stagnation_tol),
            ("fit.window", &self.fit_window),
            ("trace.width", &self.width),
            ("trace.resolution", &self.resolution),
            ("verify.trials", &self.trials),
            ("verify.pairs", &self.pairs),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.set_flag(key, v);
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::QuadratureNonConvergence { .. } | Error::SupersolutionFailure { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("SPECLAP_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("speclap: ignoring SPECLAP_THREADS={v:?}; expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Sub::Basis(c) => (Command::Basis, c),
        Sub::Kernel(c) => (Command::Kernel, c),
        Sub::Poisson(c) => (Command::Poisson, c),
        Sub::H1(c) => (Command::H1, c),
        Sub::SolveLinear(c) => (Command::SolveLinear, c),
        Sub::SolveSemilinear(c) => (Command::SolveSemilinear, c),
        Sub::Large(c) => (Command::Large, c),
        Sub::Trace(c) => (Command::Trace, c),
        Sub::Verify(c) => (Command::Verify, c),
    };
    init_threads();

    let mut settings = Settings::default();
    let mut errors = Vec::new();
    if let Some(path) = &common.config {
        settings.read_file(path, &mut errors);
    }
    common.apply(&mut settings);
    let cfg = match config::build(&settings) {
        Ok(cfg) if errors.is_empty() => cfg,
        Ok(_) => {
            report(&errors);
            return ExitCode::from(2);
        }
        Err(more) => {
            errors.extend(more);
            report(&errors);
            return ExitCode::from(2);
        }
    };

    let outcome = match commands::run(command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("speclap {}: {e}", command.name());
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = outcome.table.render();
    let written = match &cfg.output {
        Some(path) => output::write_atomic(path, &text),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("speclap {}: cannot write output: {e}", command.name());
        return ExitCode::from(1);
    }
    if let Some(msg) = outcome.incomplete {
        eprintln!("speclap {}: {msg}; partial table written", command.name());
        return ExitCode::from(3);
    }
    if !outcome.failures.is_empty() {
        for f in &outcome.failures {
            eprintln!("speclap verify: FAIL {f}");
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn report(errors: &[String]) {
    eprintln!("speclap: {} configuration error(s)", errors.len());
    for e in errors {
        eprintln!("  {e}");
    }
}
