use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use tau_core::cli_reports::{run, Command, OutputFormat, RunConfig};
use tau_core::Complex64;

const COMMANDS: [&str; 15] = [
    "info",
    "tau",
    "moments",
    "faber",
    "invert-moments",
    "ward1",
    "hessian",
    "reconstruct-g",
    "metric",
    "identities",
    "theta",
    "zinst",
    "ward-genus",
    "fay-torus",
    "verify-all",
];

/// Tau-function and theta-function computations with Ward-identity verification.
///
/// Contour commands read {"r", "b0": [re, im], "coeffs": [[re, im], ...]}. `invert-moments`
/// reads {"t0", "t": [[re, im], ...]}. Genus commands read {"Omega": [[[re, im], ...], ...],
/// "xi_a": [...], "xi_b": [...]} with an optional "Z". `verify-all` takes a contour file and
/// optionally a genus file.
///
/// Exit status: 0 when every check passes, 1 on a failed check, 2 on bad input.
#[derive(Parser, Debug)]
#[command(name = "tau", version)]
struct Cli {
    #[arg(value_parser = PossibleValuesParser::new(COMMANDS))]
    command: String,
    /// Input JSON file(s).
    inputs: Vec<PathBuf>,
    /// Boundary samples M (power of two, at least 64).
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Grid size of the area oracle.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// Finite-difference step [default: 1e-4 for contours, 1e-3 for genus commands].
    #[arg(long)]
    fd_step: Option<f64>,
    /// Moment order N.
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Radius of the outer contour, 1 < rho <= 4.
    #[arg(long, default_value_t = 1.5)]
    rho: f64,
    /// Tolerance of iterative solves and truncated sums.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value = "json", value_parser = PossibleValuesParser::new(["json", "csv"]))]
    format: String,
    /// Also write the sampled contour as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Series truncation K for reconstruct-g and identities.
    #[arg(long)]
    terms: Option<usize>,
    /// Evaluation point "re,im" for reconstruct-g and identities.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<Complex64>,
    /// Run the grid oracle alongside the boundary formula in `tau`.
    #[arg(long)]
    oracle: bool,
}

fn parse_point(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Command = cli.command.parse().expect("clap restricts the command names");
    let mut config = RunConfig::new(command, cli.inputs);
    config.samples = cli.samples;
    config.grid_n = cli.grid;
    config.fd_step = cli.fd_step;
    config.order = cli.order;
    config.rho = cli.rho;
    config.tol = cli.tol;
    config.format = cli.format.parse::<OutputFormat>().expect("clap restricts the formats");
    config.svg = cli.svg;
    config.terms = cli.terms;
    config.point = cli.point;
    config.oracle = cli.oracle;

    match run(&config) {
        Ok(report) => {
            print!("{}", report.render(config.format));
            eprint!("{}", report.failure_table());
            eprintln!("{}: {}/{} checks passed", command, report.summary.passed, report.summary.checks);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("tau {command}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
