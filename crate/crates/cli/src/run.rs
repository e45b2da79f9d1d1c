//! Executes a configured study and writes its reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use edg_core::harness::{format_error, run_convergence_with, LevelResult};
use edg_core::{
    assemble_blocks, derive_data, Approach, ConvergenceConfig, ConvergenceReport, Discretization,
    ProblemSpec, Tau2,
};

use crate::config::{ApproachChoice, OutputFormat, RunConfig};
use crate::exit::CliError;

pub fn study_config(cfg: &RunConfig) -> Result<ConvergenceConfig, CliError> {
    let problem = ProblemSpec::builtin(&cfg.problem, cfg.gamma, cfg.tau1)?;
    let mut c = ConvergenceConfig::new(problem, cfg.k, cfg.levels.clone());
    c.approach = match cfg.approach {
        ApproachChoice::Do => Approach::Do,
        ApproachChoice::Od | ApproachChoice::Both => Approach::Od,
    };
    c.compare = cfg.approach == ApproachChoice::Both;
    c.tau2 = cfg.tau2_override.map_or(Tau2::Commuting, Tau2::Constant);
    c.trace_mode = cfg.trace.into();
    c.diagonal = cfg.diagonal.into();
    Ok(c)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn check_directory(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{} is not an existing directory", dir.display())))
    }
}

fn dump_level(cfg: &RunConfig, study: &ConvergenceConfig, r: &LevelResult) -> Result<(), CliError> {
    let n = r.mesh.n();
    if let Some(dir) = &cfg.dump_mesh {
        let path = dir.join(format!("mesh_n{n}.txt"));
        let mut out = create(&path)?;
        r.mesh.write_text(&mut out).map_err(|e| io_error(&path, e))?;
        out.flush().map_err(|e| io_error(&path, e))?;
    }
    if let Some(dir) = &cfg.dump_matrices {
        let data = derive_data(&study.problem)?;
        let d = Discretization::new(&r.mesh, &r.spaces, &data);
        let d = d.with_params(d.params.with_tau2(study.tau2));
        assemble_blocks(&d)?
            .write_coordinate_files(dir, &format!("n{n}_"))
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

/// Human-readable table. Values are the same strings the CSV report holds.
pub fn write_table<W: Write>(report: &ConvergenceReport, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "problem {}  k = {}  approach {}  gamma = {}  tau1 = {}{}",
        report.problem,
        report.k,
        report.approach,
        report.gamma,
        report.tau1,
        report
            .tau2_override
            .map(|t| format!("  tau2 = {t}"))
            .unwrap_or_default()
    )?;
    writeln!(out, "{:>6}  {:>8}  {:>5}  {:>14}  {:>9}", "level", "h/sqrt2", "field", "error", "order")?;
    for r in report.rows() {
        writeln!(
            out,
            "{:>6}  {:>8}  {:>5}  {:>14}  {:>9}",
            r.level, r.h_over_sqrt2, r.field, r.error, r.order
        )?;
    }
    writeln!(out, "optimality residuals:")?;
    for (n, v) in report.levels.iter().zip(&report.optimality_residuals) {
        writeln!(out, "{n:>6}  {}", format_error(*v))?;
    }
    if let Some(disc) = &report.discrepancies {
        writeln!(out, "OD/DO relative discrepancy:")?;
        writeln!(out, "{:>6}  {:>7}  {:>14}", "level", "field", "discrepancy")?;
        for d in disc {
            for (name, v) in d.discrepancy.entries() {
                writeln!(out, "{:>6}  {:>7}  {:>14}", d.level, name, format_error(v))?;
            }
        }
    }
    Ok(())
}

/// Runs the study, echoes the table to `stdout`, progress to `stderr`, and
/// writes the report files.
pub fn run<O: Write, E: Write>(cfg: &RunConfig, stdout: &mut O, stderr: &mut E) -> Result<ConvergenceReport, CliError> {
    let study = study_config(cfg)?;
    for dir in [&cfg.dump_mesh, &cfg.dump_matrices].into_iter().flatten() {
        check_directory(dir)?;
    }
    if let Some(parent) = cfg.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        check_directory(parent)?;
    }
    let report = run_convergence_with(&study, |r| {
        let _ = writeln!(
            stderr,
            "n = {:>4}: {} elements, linear residual {}",
            r.mesh.n(),
            r.mesh.num_elements(),
            format_error(r.solution.linear_residual)
        );
        dump_level(cfg, &study, r).map_err(|e| match e {
            CliError::Core(e) => e,
            other => edg_core::EdgError::Io(std::io::Error::other(other.to_string())),
        })
    })?;

    let mut out = create(&cfg.output)?;
    match cfg.format {
        OutputFormat::Csv => {
            report.write_csv(&mut out).map_err(|e| io_error(&cfg.output, e))?;
            if report.discrepancies.is_some() {
                let path = cfg.discrepancy_path();
                let mut d = create(&path)?;
                report.write_discrepancy_csv(&mut d).map_err(|e| io_error(&path, e))?;
                d.flush().map_err(|e| io_error(&path, e))?;
            }
        }
        OutputFormat::Json => report.write_json(&mut out)?,
    }
    out.flush().map_err(|e| io_error(&cfg.output, e))?;
    write_table(&report, stdout).map_err(|e| CliError::Io(format!("standard output: {e}")))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> RunConfig {
        RunConfig {
            levels: vec![2, 4],
            output: dir.join("out.csv"),
            ..RunConfig::default()
        }
    }

    #[test]
    fn table_uses_csv_strings() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let report = run(&cfg, &mut out, &mut err).unwrap();
        let table = String::from_utf8(out).unwrap();
        let csv = std::fs::read_to_string(&cfg.output).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 5);
        for row in report.rows() {
            assert!(csv.contains(&format!("{},{},{},{},{}", row.level, row.h_over_sqrt2, row.field, row.error, row.order)));
            assert!(table.contains(&row.error));
        }
    }

    #[test]
    fn both_writes_discrepancy_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            approach: ApproachChoice::Both,
            ..small(dir.path())
        };
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let report = run(&cfg, &mut out, &mut err).unwrap();
        let disc = report.discrepancies.unwrap();
        assert!(disc.iter().all(|d| d.discrepancy.max() <= 1e-8));
        let text = std::fs::read_to_string(cfg.discrepancy_path()).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 7);
        assert!(String::from_utf8(out).unwrap().contains("discrepancy"));
    }

    #[test]
    fn missing_output_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            output: dir.path().join("absent").join("out.csv"),
            ..small(dir.path())
        };
        let err = run(&cfg, &mut Vec::new(), &mut Vec::new()).unwrap_err();
        assert!(matches!(err, CliError::Io(_)));
    }

    #[test]
    fn study_config_maps_choices() {
        let cfg = RunConfig {
            approach: ApproachChoice::Both,
            tau2_override: Some(1.0),
            ..RunConfig::default()
        };
        let s = study_config(&cfg).unwrap();
        assert!(s.compare);
        assert_eq!(s.approach, Approach::Od);
        assert_eq!(s.tau2, Tau2::Constant(1.0));
    }
}
