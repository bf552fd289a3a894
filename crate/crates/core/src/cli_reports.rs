//! Command runner behind the `tau` binary.
//!
//! A run parses its input files, computes one command (or every suite for `verify-all`) and
//! returns a [`Report`]. JSON is the canonical output; CSV flattens the check table. Reports
//! carry the configuration that produced them, and floats are written in shortest round-trip
//! form, so identical runs give byte-identical output.

mod contour;
mod genus;
mod input;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Error;
use crate::linalg::Mat;
use crate::Complex64;

pub use input::{load_contour, load_genus, load_moments, parse_contour, parse_genus, GenusInput};
pub use svg::{emit_svg, svg_string};

/// Kernel double quadratures use this many nodes per contour.
pub const QUAD_NODES: usize = 256;

/// Finite-difference step used by the genus suites unless `--fd-step` is given.
pub const GENUS_FD_STEP: f64 = 1e-3;

/// Finite-difference step used by the contour suites unless `--fd-step` is given.
pub const CONTOUR_FD_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Info,
    Tau,
    Moments,
    Faber,
    InvertMoments,
    Ward1,
    Hessian,
    ReconstructG,
    Metric,
    Identities,
    Theta,
    Zinst,
    WardGenus,
    FayTorus,
    VerifyAll,
}

impl Command {
    pub const ALL: [Command; 15] = [
        Command::Info,
        Command::Tau,
        Command::Moments,
        Command::Faber,
        Command::InvertMoments,
        Command::Ward1,
        Command::Hessian,
        Command::ReconstructG,
        Command::Metric,
        Command::Identities,
        Command::Theta,
        Command::Zinst,
        Command::WardGenus,
        Command::FayTorus,
        Command::VerifyAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Info => "info",
            Command::Tau => "tau",
            Command::Moments => "moments",
            Command::Faber => "faber",
            Command::InvertMoments => "invert-moments",
            Command::Ward1 => "ward1",
            Command::Hessian => "hessian",
            Command::ReconstructG => "reconstruct-g",
            Command::Metric => "metric",
            Command::Identities => "identities",
            Command::Theta => "theta",
            Command::Zinst => "zinst",
            Command::WardGenus => "ward-genus",
            Command::FayTorus => "fay-torus",
            Command::VerifyAll => "verify-all",
        }
    }

    fn is_genus(self) -> bool {
        matches!(self, Command::Theta | Command::Zinst | Command::WardGenus | Command::FayTorus)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| RunError::Input(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(RunError::Input(format!("format must be json or csv, got `{s}`"))),
        }
    }
}

/// Everything that determines a run. Embedded verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    /// Boundary samples M; a power of two, at least 64.
    pub samples: usize,
    /// Grid size of the area oracle.
    pub grid_n: usize,
    /// Finite-difference step; `None` uses [`CONTOUR_FD_STEP`] or [`GENUS_FD_STEP`].
    pub fd_step: Option<f64>,
    /// Moment order N.
    pub order: usize,
    /// Radius of the outer contour g(|w| = ρ).
    pub rho: f64,
    /// Target of iterative solves and truncated sums whose values are reported.
    pub tol: f64,
    pub format: OutputFormat,
    pub svg: Option<PathBuf>,
    /// Series truncation K for `reconstruct-g` (default 8) and `identities` (default 10).
    pub terms: Option<usize>,
    /// Evaluation point for `reconstruct-g` (default 5) and `identities` (default 6, with w = z).
    pub point: Option<Complex64>,
    /// Also run the grid oracle in `tau`.
    pub oracle: bool,
}

impl RunConfig {
    pub fn new(command: Command, inputs: Vec<PathBuf>) -> Self {
        Self {
            command,
            inputs,
            samples: 4096,
            grid_n: 200,
            fd_step: None,
            order: 4,
            rho: 1.5,
            tol: 1e-8,
            format: OutputFormat::Json,
            svg: None,
            terms: None,
            point: None,
            oracle: false,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.samples < 64 || !self.samples.is_power_of_two() {
            return Err(RunError::Input(format!("samples must be a power of two >= 64, got {}", self.samples)));
        }
        if !(self.rho > 1.0 && self.rho <= 4.0) {
            return Err(RunError::Input(format!("rho must satisfy 1 < rho <= 4, got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(RunError::Input(format!("tol must be positive, got {}", self.tol)));
        }
        if self.grid_n < 8 {
            return Err(RunError::Input(format!("grid must be at least 8, got {}", self.grid_n)));
        }
        if self.order == 0 {
            return Err(RunError::Input("order must be at least 1".into()));
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(RunError::Input(format!("fd-step must be positive, got {h}")));
            }
        }
        if self.terms == Some(0) {
            return Err(RunError::Input("terms must be at least 1".into()));
        }
        let wanted = match self.command {
            Command::VerifyAll => 1..=2,
            _ => 1..=1,
        };
        if !wanted.contains(&self.inputs.len()) {
            return Err(RunError::Input(format!(
                "`{}` takes {} input file(s), got {}",
                self.command,
                if self.command == Command::VerifyAll { "1 or 2" } else { "1" },
                self.inputs.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn contour_fd(&self) -> f64 {
        self.fd_step.unwrap_or(CONTOUR_FD_STEP)
    }

    pub(crate) fn genus_fd(&self) -> f64 {
        self.fd_step.unwrap_or(GENUS_FD_STEP)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Unreadable or invalid input; exit status 2.
    #[error("input error: {0}")]
    Input(String),
    /// A computation failed on valid input; exit status 1.
    #[error("{0}")]
    Compute(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Compute(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::NonpositiveArea(_)
            | Error::OriginOutside
            | Error::UnivalenceFailure(_)
            | Error::DegenerateImOmega(_)
            | Error::InteriorPoint
            | Error::NearBoundary
            | Error::LatticePoint => RunError::Input(e.to_string()),
            other => RunError::Compute(other),
        }
    }
}

/// A real or complex value in a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Real(f64),
    Complex([f64; 2]),
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Real(x)
    }
}

impl From<Complex64> for Quantity {
    fn from(z: Complex64) -> Self {
        Quantity::Complex([z.re, z.im])
    }
}

impl Quantity {
    fn parts(self) -> (f64, f64) {
        match self {
            Quantity::Real(x) => (x, 0.0),
            Quantity::Complex([a, b]) => (a, b),
        }
    }
}

/// One identity: both sides, their residual and the tolerance it must meet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub lhs: Option<Quantity>,
    pub rhs: Option<Quantity>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckEntry {
    pub fn new(
        name: impl Into<String>,
        lhs: impl Into<Quantity>,
        rhs: impl Into<Quantity>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            lhs: Some(lhs.into()),
            rhs: Some(rhs.into()),
            residual,
            tolerance,
            pass: residual <= tolerance,
            error: None,
        }
    }

    /// Passes iff `value > 0`; the residual is the amount by which it falls short.
    pub fn positive(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            lhs: Some(value.into()),
            rhs: Some(0.0.into()),
            residual: (-value).max(0.0),
            tolerance: 0.0,
            pass: value > 0.0,
            error: None,
        }
    }

    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        Self {
            name: name.into(),
            lhs: None,
            rhs: None,
            residual: f64::NAN,
            tolerance: 0.0,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: Command,
    pub config: RunConfig,
    pub data: Value,
    pub checks: Vec<CheckEntry>,
    pub summary: Summary,
}

impl Report {
    fn new(config: &RunConfig, data: Value, checks: Vec<CheckEntry>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let summary =
            Summary { checks: checks.len(), passed, failed: checks.len() - passed, all_pass: passed == checks.len() };
        Self { command: config.command, config: config.clone(), data, checks, summary }
    }

    /// 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.all_pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One row per check: name, both sides split into real and imaginary parts, residual, tolerance, pass.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "tolerance", "pass"])
            .expect("in-memory write");
        let side = |q: Option<Quantity>| match q {
            Some(q) => {
                let (a, b) = q.parts();
                (a.to_string(), b.to_string())
            }
            None => (String::new(), String::new()),
        };
        for c in &self.checks {
            let (lr, li) = side(c.lhs);
            let (rr, ri) = side(c.rhs);
            w.write_record([
                c.name.as_str(),
                &lr,
                &li,
                &rr,
                &ri,
                &c.residual.to_string(),
                &c.tolerance.to_string(),
                if c.pass { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    /// Human-readable residual table for standard error.
    pub fn failure_table(&self) -> String {
        let mut out = String::new();
        for c in self.checks.iter().filter(|c| !c.pass) {
            let detail = c.error.clone().unwrap_or_else(|| format!("residual {:e} > {:e}", c.residual, c.tolerance));
            out.push_str(&format!("FAIL {}: {}\n", c.name, detail));
        }
        out
    }
}

/// Data and checks produced by one suite.
#[derive(Default)]
pub(crate) struct Section {
    pub data: Map<String, Value>,
    pub checks: Vec<CheckEntry>,
}

impl Section {
    pub fn put(&mut self, key: &str, value: impl Serialize) {
        self.data.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn check(&mut self, entry: CheckEntry) {
        self.checks.push(entry);
    }
}

pub(crate) fn cjson(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub(crate) fn cvec(zs: &[Complex64]) -> Vec<[f64; 2]> {
    zs.iter().map(|&z| cjson(z)).collect()
}

pub(crate) fn cmat(m: &Mat<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows).map(|i| cvec(m.row(i))).collect()
}

/// Run one command to completion.
pub fn run(config: &RunConfig) -> Result<Report, RunError> {
    config.validate()?;
    let first = &config.inputs[0];
    let section = match config.command {
        Command::InvertMoments => contour::invert(config, &load_moments(first)?)?,
        Command::VerifyAll => return verify_all(config),
        cmd if cmd.is_genus() => {
            let g = load_genus(first)?;
            genus::run_command(cmd, config, &g)?
        }
        cmd => {
            let map = load_contour(first)?;
            write_svg(config, &map)?;
            contour::Context::new(config, map).run_command(cmd)?
        }
    };
    Ok(Report::new(config, Value::Object(section.data), section.checks))
}

fn write_svg(config: &RunConfig, map: &crate::ExteriorMap64) -> Result<(), RunError> {
    if let Some(path) = &config.svg {
        let contour = crate::contour_geometry::sample(map, config.samples)?;
        emit_svg(&contour, path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Every contour suite on the first input, every genus suite on the second (or on the built-in
/// genus-one and genus-two examples). A suite that errors becomes a single failed check.
fn verify_all(config: &RunConfig) -> Result<Report, RunError> {
    let map = load_contour(&config.inputs[0])?;
    let genus_inputs = match config.inputs.get(1) {
        Some(path) => vec![load_genus(path)?],
        None => genus::builtin_inputs(),
    };
    write_svg(config, &map)?;
    let mut data = Map::new();
    let mut checks = Vec::new();
    let mut absorb = |name: String, result: Result<Section, RunError>| match result {
        Ok(s) => {
            let tag = name.find('[').map(|i| name[i..].to_string()).unwrap_or_default();
            checks.extend(s.checks.into_iter().map(|mut c| {
                c.name.push_str(&tag);
                c
            }));
            data.insert(name, Value::Object(s.data));
        }
        Err(e) => {
            let err = match e {
                RunError::Compute(err) => err,
                RunError::Input(msg) => Error::InvalidInput(msg),
            };
            checks.push(CheckEntry::failed(name, &err));
        }
    };
    let ctx = contour::Context::new(config, map);
    for cmd in contour::SUITE {
        absorb(cmd.name().to_string(), ctx.run_command(cmd));
    }
    for (k, g) in genus_inputs.iter().enumerate() {
        for cmd in genus::SUITE {
            absorb(format!("{}[{k}]", cmd.name()), genus::run_command(cmd, config, g));
        }
    }
    Ok(Report::new(config, Value::Object(data), checks))
}
