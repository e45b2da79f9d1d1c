//! Mesh-refinement studies: L2 errors, convergence orders and report
//! output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assembly::{Discretization, Tau2};
use crate::basis::{triangle_quadrature, ElementMap, SpaceSet, TraceMode};
use crate::error::{EdgError, Result};
use crate::mesh::{Diagonal, Mesh, Point};
use crate::problems::{derive_data, ProblemData, ProblemSpec};
use crate::solve::{check_commutativity, solve, Approach, Discrepancy, SolutionFields};

/// Fields reported by a study, in output order.
pub const FIELDS: [&str; 5] = ["q", "p", "y", "z", "u"];

/// CSV header of [`ConvergenceReport::write_csv`].
pub const CSV_HEADER: &str = "level,h_over_sqrt2,field,error,order";

/// Quadrature exactness used for error norms.
pub fn error_exactness(k: usize) -> usize {
    2 * (k + 2) + 4
}

/// `||exact - w_h||` for a scalar field.
pub fn l2_error<F: Fn(Point) -> f64>(coeffs: &[f64], exact: F, mesh: &Mesh, spaces: &SpaceSet) -> Result<f64> {
    let rule = triangle_quadrature(error_exactness(spaces.k()))?;
    let basis: Vec<Vec<f64>> = rule.points.iter().map(|&xi| spaces.scalar_basis().values(xi)).collect();
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let map = ElementMap::new(mesh.element_vertices(e));
        let c = &coeffs[spaces.scalar_range(e)];
        for ((xi, w), phi) in rule.iter().zip(&basis) {
            let uh: f64 = phi.iter().zip(c).map(|(a, b)| a * b).sum();
            let d = exact(map.to_physical(*xi)) - uh;
            sum += w * map.det() * d * d;
        }
    }
    Ok(sum.sqrt())
}

/// `||exact - v_h||` for a vector field.
pub fn l2_error_flux<F: Fn(Point) -> [f64; 2]>(
    coeffs: &[f64],
    exact: F,
    mesh: &Mesh,
    spaces: &SpaceSet,
) -> Result<f64> {
    let rule = triangle_quadrature(error_exactness(spaces.k()))?;
    let m = spaces.flux_basis().dim();
    let basis: Vec<Vec<f64>> = rule.points.iter().map(|&xi| spaces.flux_basis().values(xi)).collect();
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let map = ElementMap::new(mesh.element_vertices(e));
        let c = &coeffs[spaces.flux_range(e)];
        for ((xi, w), phi) in rule.iter().zip(&basis) {
            let vx: f64 = phi.iter().zip(&c[..m]).map(|(a, b)| a * b).sum();
            let vy: f64 = phi.iter().zip(&c[m..]).map(|(a, b)| a * b).sum();
            let ex = exact(map.to_physical(*xi));
            sum += w * map.det() * ((ex[0] - vx).powi(2) + (ex[1] - vy).powi(2));
        }
    }
    Ok(sum.sqrt())
}

/// Errors of every reported field, in [`FIELDS`] order.
pub fn field_errors(sol: &SolutionFields, data: &ProblemData, mesh: &Mesh, spaces: &SpaceSet) -> Result<[f64; 5]> {
    Ok([
        l2_error_flux(&sol.q, |x| data.q(x), mesh, spaces)?,
        l2_error_flux(&sol.p, |x| data.p(x), mesh, spaces)?,
        l2_error(&sol.y, |x| data.y(x), mesh, spaces)?,
        l2_error(&sol.z, |x| data.z(x), mesh, spaces)?,
        l2_error(&sol.u, |x| data.u(x), mesh, spaces)?,
    ])
}

/// `log(e_i / e_{i+1}) / log(n_{i+1} / n_i)`; on dyadic levels this is
/// `log2` of consecutive error ratios.
pub fn convergence_orders(levels: &[usize], errors: &[f64]) -> Vec<f64> {
    levels
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub problem: ProblemSpec,
    pub k: usize,
    pub approach: Approach,
    /// Also solve with the other approach and record the discrepancy.
    pub compare: bool,
    pub levels: Vec<usize>,
    pub tau2: Tau2,
    pub trace_mode: TraceMode,
    pub diagonal: Diagonal,
}

impl ConvergenceConfig {
    pub fn new(problem: ProblemSpec, k: usize, levels: Vec<usize>) -> Self {
        Self {
            problem,
            k,
            approach: Approach::Od,
            compare: false,
            levels,
            tau2: Tau2::Commuting,
            trace_mode: TraceMode::default(),
            diagonal: Diagonal::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(EdgError::InvalidArgument("at least one mesh level is required".into()));
        }
        if self.levels.contains(&0) {
            return Err(EdgError::InvalidArgument("mesh levels must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EdgError::InvalidArgument("mesh levels must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Errors and orders of one field across levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSeries {
    pub field: String,
    pub errors: Vec<f64>,
    /// One entry per consecutive pair of levels.
    pub orders: Vec<f64>,
}

/// Discrepancy between the two approaches at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiscrepancy {
    pub level: usize,
    #[serde(flatten)]
    pub discrepancy: Discrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub k: usize,
    pub gamma: f64,
    pub tau1: f64,
    /// `None` for the commuting choice `tau1 - beta.n`.
    pub tau2_override: Option<f64>,
    pub approach: Approach,
    pub levels: Vec<usize>,
    pub fields: Vec<FieldSeries>,
    /// `||gamma u + z|| / ||z||` per level.
    pub optimality_residuals: Vec<f64>,
    pub linear_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discrepancies: Option<Vec<LevelDiscrepancy>>,
}

/// One discrete problem, solved.
pub struct LevelResult {
    pub mesh: Mesh,
    pub spaces: SpaceSet,
    pub solution: SolutionFields,
    pub errors: [f64; 5],
    pub discrepancy: Option<Discrepancy>,
}

/// Solves a single level of a study.
pub fn run_level(config: &ConvergenceConfig, data: &ProblemData, n: usize) -> Result<LevelResult> {
    let mesh = Mesh::build_structured(n, config.diagonal)?;
    let spaces = SpaceSet::new(&mesh, config.k, config.trace_mode);
    let d = Discretization::new(&mesh, &spaces, data);
    let d = d.with_params(d.params.with_tau2(config.tau2));
    let solution = solve(&d, config.approach)?;
    let discrepancy = if config.compare {
        let other = match config.approach {
            Approach::Od => Approach::Do,
            Approach::Do => Approach::Od,
        };
        let other = solve(&d, other)?;
        let (od, do_) = match config.approach {
            Approach::Od => (&solution, &other),
            Approach::Do => (&other, &solution),
        };
        Some(check_commutativity(od, do_)?)
    } else {
        None
    };
    let errors = field_errors(&solution, data, &mesh, &spaces)?;
    Ok(LevelResult {
        mesh,
        spaces,
        solution,
        errors,
        discrepancy,
    })
}

/// Runs the study level by level, calling `on_level` after each solve.
pub fn run_convergence_with<F>(config: &ConvergenceConfig, mut on_level: F) -> Result<ConvergenceReport>
where
    F: FnMut(&LevelResult) -> Result<()>,
{
    config.validate()?;
    let data = derive_data(&config.problem)?;
    let mut errors: Vec<[f64; 5]> = Vec::new();
    let mut optimality = Vec::new();
    let mut linear = Vec::new();
    let mut disc = Vec::new();
    for &n in &config.levels {
        let r = run_level(config, &data, n)?;
        on_level(&r)?;
        errors.push(r.errors);
        optimality.push(r.solution.optimality_residual());
        linear.push(r.solution.linear_residual);
        if let Some(d) = r.discrepancy {
            disc.push(LevelDiscrepancy {
                level: n,
                discrepancy: d,
            });
        }
    }
    let fields = FIELDS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let e: Vec<f64> = errors.iter().map(|row| row[i]).collect();
            FieldSeries {
                field: name.to_string(),
                orders: convergence_orders(&config.levels, &e),
                errors: e,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        problem: config.problem.name.clone(),
        k: config.k,
        gamma: config.problem.gamma,
        tau1: config.problem.tau1,
        tau2_override: match config.tau2 {
            Tau2::Commuting => None,
            Tau2::Constant(t) => Some(t),
        },
        approach: config.approach,
        levels: config.levels.clone(),
        fields,
        optimality_residuals: optimality,
        linear_residuals: linear,
        discrepancies: config.compare.then_some(disc),
    })
}

pub fn run_convergence(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    run_convergence_with(config, |_| Ok(()))
}

/// Scientific notation with a two-digit signed exponent, e.g. `2.877500E-01`.
pub fn format_error(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.6E}");
    }
    let s = format!("{v:.6E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

pub fn format_order(v: f64) -> String {
    format!("{v:.5}")
}

/// One CSV record per level and field, as strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub level: String,
    pub h_over_sqrt2: String,
    pub field: String,
    pub error: String,
    /// Empty on the coarsest level.
    pub order: String,
}

impl ConvergenceReport {
    pub fn field(&self, name: &str) -> Option<&FieldSeries> {
        self.fields.iter().find(|f| f.field == name)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for (i, &n) in self.levels.iter().enumerate() {
            for f in &self.fields {
                rows.push(ReportRow {
                    level: n.to_string(),
                    h_over_sqrt2: format!("1/{n}"),
                    field: f.field.clone(),
                    error: format_error(f.errors[i]),
                    order: if i == 0 {
                        String::new()
                    } else {
                        format_order(f.orders[i - 1])
                    },
                });
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in self.rows() {
            writeln!(out, "{},{},{},{},{}", r.level, r.h_over_sqrt2, r.field, r.error, r.order)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)
            .map_err(|e| EdgError::Io(std::io::Error::other(e)))
    }

    /// Discrepancy section as CSV, one record per level and field.
    pub fn write_discrepancy_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,field,relative_discrepancy")?;
        for d in self.discrepancies.iter().flatten() {
            for (name, v) in d.discrepancy.entries() {
                writeln!(out, "{},{},{}", d.level, name, format_error(v))?;
            }
        }
        Ok(())
    }
}
