//! Discrete optimality systems, solved either directly (OD) or through the
//! condensed quadratic program (DO).

mod do_path;
mod linear;
mod od;

pub use do_path::{reduced_problem, solve_do, ReducedProblem};
pub use linear::{relative_residual, sparse_solve, sparse_solve_with_residual, RESIDUAL_TOLERANCE};
pub use od::{od_system, solve_od};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assembly::Discretization;
use crate::error::{EdgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Optimize, then discretize.
    Od,
    /// Discretize, then optimize.
    Do,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Od => "od",
            Approach::Do => "do",
        })
    }
}

/// Coefficient vectors of a discrete solution. Trace vectors hold the free
/// skeleton dofs only.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub y_trace: Vec<f64>,
    pub z_trace: Vec<f64>,
    pub approach: Approach,
    /// Relative residual of the final linear solve.
    pub linear_residual: f64,
    pub gamma: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

impl SolutionFields {
    /// `||gamma u + z|| / ||z||` over coefficient vectors.
    pub fn optimality_residual(&self) -> f64 {
        let r: Vec<f64> = self
            .u
            .iter()
            .zip(&self.z)
            .map(|(u, z)| self.gamma * u + z)
            .collect();
        let nz = norm(&self.z);
        if nz == 0.0 {
            norm(&r)
        } else {
            norm(&r) / nz
        }
    }

    fn fields(&self) -> [(&'static str, &[f64]); 7] {
        [
            ("q", &self.q),
            ("p", &self.p),
            ("y", &self.y),
            ("z", &self.z),
            ("u", &self.u),
            ("y_trace", &self.y_trace),
            ("z_trace", &self.z_trace),
        ]
    }
}

/// Relative discrepancy `||a - b|| / max(||a||, ||b||)` per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub q: f64,
    pub p: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub y_trace: f64,
    pub z_trace: f64,
}

impl Discrepancy {
    pub fn max(&self) -> f64 {
        self.entries().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("q", self.q),
            ("p", self.p),
            ("y", self.y),
            ("z", self.z),
            ("u", self.u),
            ("y_trace", self.y_trace),
            ("z_trace", self.z_trace),
        ]
    }
}

/// Compares two solutions of the same discretization field by field.
pub fn check_commutativity(od: &SolutionFields, do_: &SolutionFields) -> Result<Discrepancy> {
    let mut d = [0.0; 7];
    for (slot, ((name, a), (_, b))) in d.iter_mut().zip(od.fields().into_iter().zip(do_.fields())) {
        if a.len() != b.len() {
            return Err(EdgError::InvalidComparison(format!(
                "field {name} has {} coefficients on one side and {} on the other",
                a.len(),
                b.len()
            )));
        }
        *slot = relative_difference(a, b);
    }
    Ok(Discrepancy {
        q: d[0],
        p: d[1],
        y: d[2],
        z: d[3],
        u: d[4],
        y_trace: d[5],
        z_trace: d[6],
    })
}

/// Solves with the requested approach.
pub fn solve(d: &Discretization, approach: Approach) -> Result<SolutionFields> {
    match approach {
        Approach::Od => solve_od(d),
        Approach::Do => solve_do(d),
    }
}
