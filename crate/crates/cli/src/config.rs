//! Run configuration: command-line flags layered over an optional
//! `key=value` file, layered over defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use edg_core::{Diagonal, TraceMode, BUILTIN_PROBLEMS};

use crate::exit::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproachChoice {
    Od,
    Do,
    /// Solve with both and report their discrepancy.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// How boundary skeleton nodes are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceChoice {
    /// Every node on the domain boundary takes the boundary value.
    Constrained,
    /// Only nodes of boundary faces are prescribed.
    Free,
}

impl From<TraceChoice> for TraceMode {
    fn from(c: TraceChoice) -> Self {
        match c {
            TraceChoice::Constrained => TraceMode::ConstrainBoundaryNodes,
            TraceChoice::Free => TraceMode::FreeInteriorFaceNodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagonalChoice {
    /// Lower-left to upper-right.
    Up,
    /// Upper-left to lower-right.
    Down,
}

impl From<DiagonalChoice> for Diagonal {
    fn from(c: DiagonalChoice) -> Self {
        match c {
            DiagonalChoice::Up => Diagonal::LowerLeftToUpperRight,
            DiagonalChoice::Down => Diagonal::UpperLeftToLowerRight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub k: usize,
    pub approach: ApproachChoice,
    pub levels: Vec<usize>,
    pub gamma: f64,
    pub tau1: f64,
    pub tau2_override: Option<f64>,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub dump_matrices: Option<PathBuf>,
    pub dump_mesh: Option<PathBuf>,
    pub trace: TraceChoice,
    pub diagonal: DiagonalChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "paper".into(),
            k: 0,
            approach: ApproachChoice::Od,
            levels: vec![8, 16, 32, 64],
            gamma: 1.0,
            tau1: 1.0,
            tau2_override: None,
            output: PathBuf::from("convergence.csv"),
            format: OutputFormat::Csv,
            dump_matrices: None,
            dump_mesh: None,
            trace: TraceChoice::Constrained,
            diagonal: DiagonalChoice::Up,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !BUILTIN_PROBLEMS.contains(&self.problem.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown problem '{}' (expected one of {})",
                self.problem,
                BUILTIN_PROBLEMS.join(", ")
            )));
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(CliError::Usage("levels must be a nonempty list of positive integers".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("levels must be strictly increasing".into()));
        }
        for (name, v) in [("gamma", self.gamma), ("tau1", self.tau1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.tau2_override {
            if !t.is_finite() {
                return Err(CliError::Usage(format!("tau2-override must be finite, got {t}")));
            }
        }
        Ok(())
    }

    /// Path of the discrepancy table written next to a CSV report.
    pub fn discrepancy_path(&self) -> PathBuf {
        let stem = self
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "convergence".into());
        self.output.with_file_name(format!("{stem}_discrepancy.csv"))
    }
}

const EXIT_STATUS_HELP: &str = "\
Exit status:
  0  success
  2  usage error: bad flag, config key or value
  3  I/O error: output, dump or config file could not be read or written
  4  invalid problem: data or stabilization assumptions violated
  5  solver failure: local elimination or sparse factorization failed";

/// Convergence studies for EDG discretizations of distributed optimal
/// control of convection-diffusion.
#[derive(Debug, Parser)]
#[command(name = "edg-control", version, after_help = EXIT_STATUS_HELP)]
pub struct Cli {
    /// Built-in problem: paper, sink or linear [default: paper]
    #[arg(long)]
    pub problem: Option<String>,
    /// Flux degree; the scalar and trace spaces use k + 1 [default: 0]
    #[arg(long)]
    pub k: Option<usize>,
    /// Solution path [default: od]
    #[arg(long, value_enum)]
    pub approach: Option<ApproachChoice>,
    /// Comma-separated subdivisions per axis [default: 8,16,32,64]
    #[arg(long, value_parser = parse_levels)]
    pub levels: Option<Levels>,
    /// Control cost weight [default: 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// State stabilization constant [default: 1]
    #[arg(long)]
    pub tau1: Option<f64>,
    /// Use a constant adjoint stabilization instead of tau1 - beta.n
    #[arg(long = "tau2-override", allow_negative_numbers = true)]
    pub tau2_override: Option<f64>,
    /// Report file [default: convergence.csv or convergence.json]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the assembled blocks of every level into this directory
    #[arg(long = "dump-matrices")]
    pub dump_matrices: Option<PathBuf>,
    /// Write the mesh of every level into this directory
    #[arg(long = "dump-mesh")]
    pub dump_mesh: Option<PathBuf>,
    /// Boundary skeleton nodes [default: constrained]
    #[arg(long, value_enum)]
    pub trace: Option<TraceChoice>,
    /// Cell diagonal [default: up]
    #[arg(long, value_enum)]
    pub diagonal: Option<DiagonalChoice>,
    /// File of key=value lines using the long flag names; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Comma-separated list of mesh levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels(pub Vec<usize>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{}' is not a nonnegative integer", t.trim()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Levels)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| CliError::Usage(format!("invalid value '{v}' for {key}: {e}")))
}

fn parse_enum<T: ValueEnum>(key: &str, v: &str) -> Result<T, CliError> {
    T::from_str(v, true).map_err(|e| CliError::Usage(format!("invalid value '{v}' for {key}: {e}")))
}

/// Reads a `key=value` file. Blank lines and lines starting with `#` are
/// skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

fn apply_file(cfg: &mut RunConfig, entries: &BTreeMap<String, String>) -> Result<bool, CliError> {
    let mut output_given = false;
    for (key, v) in entries {
        match key.as_str() {
            "problem" => cfg.problem = v.clone(),
            "k" => cfg.k = parse_value(key, v)?,
            "approach" => cfg.approach = parse_enum(key, v)?,
            "levels" => cfg.levels = parse_levels(v).map_err(CliError::Usage)?.0,
            "gamma" => cfg.gamma = parse_value(key, v)?,
            "tau1" => cfg.tau1 = parse_value(key, v)?,
            "tau2-override" => cfg.tau2_override = Some(parse_value(key, v)?),
            "output" => {
                cfg.output = PathBuf::from(v);
                output_given = true;
            }
            "format" => cfg.format = parse_enum(key, v)?,
            "dump-matrices" => cfg.dump_matrices = Some(PathBuf::from(v)),
            "dump-mesh" => cfg.dump_mesh = Some(PathBuf::from(v)),
            "trace" => cfg.trace = parse_enum(key, v)?,
            "diagonal" => cfg.diagonal = parse_enum(key, v)?,
            other => return Err(CliError::Usage(format!("unknown config key '{other}'"))),
        }
    }
    Ok(output_given)
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let mut output_given = match &self.config {
            Some(path) => apply_file(&mut cfg, &read_config_file(path)?)?,
            None => false,
        };
        if let Some(v) = self.problem {
            cfg.problem = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.approach {
            cfg.approach = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v.0;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.tau1 {
            cfg.tau1 = v;
        }
        if self.tau2_override.is_some() {
            cfg.tau2_override = self.tau2_override;
        }
        if let Some(v) = self.output {
            cfg.output = v;
            output_given = true;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if self.dump_matrices.is_some() {
            cfg.dump_matrices = self.dump_matrices;
        }
        if self.dump_mesh.is_some() {
            cfg.dump_mesh = self.dump_mesh;
        }
        if let Some(v) = self.trace {
            cfg.trace = v;
        }
        if let Some(v) = self.diagonal {
            cfg.diagonal = v;
        }
        if !output_given {
            cfg.output = PathBuf::from(format!("convergence.{}", cfg.format.extension()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses command-line arguments (including the program name) into a
/// validated configuration. `--help` and `--version` come back as
/// [`CliError::Help`] carrying the rendered text.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Help(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    cli.into_config()
}
