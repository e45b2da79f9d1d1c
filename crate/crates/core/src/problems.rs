//! Manufactured optimal control problems on the unit square.
//!
//! A problem fixes the exact state `y` and adjoint `z` (with analytic
//! derivatives) together with the convection field. The data `f`, `g` and
//! `y_d` are then generated so that `(y, z, u = -z/gamma)` solves the
//! optimality system
//!
//! ```text
//!   -Δy + β·∇y     = f + u     in Ω,   y = g on ∂Ω,
//!   -Δz - ∇·(β z)  = y - y_d   in Ω,   z = 0 on ∂Ω,
//!    z + γ u       = 0.
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{EdgError, Result};
use crate::mesh::Point;

/// Exact fields of a manufactured problem, with hand-coded derivatives.
pub trait ExactSolution: Send + Sync {
    fn y(&self, x: Point) -> f64;
    fn grad_y(&self, x: Point) -> [f64; 2];
    fn laplacian_y(&self, x: Point) -> f64;
    fn z(&self, x: Point) -> f64;
    fn grad_z(&self, x: Point) -> [f64; 2];
    fn laplacian_z(&self, x: Point) -> f64;
    fn beta(&self, x: Point) -> [f64; 2];
    fn div_beta(&self, x: Point) -> f64;
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub exact: Arc<dyn ExactSolution>,
    /// Control cost weight.
    pub gamma: f64,
    /// Constant state stabilization.
    pub tau1: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("gamma", &self.gamma)
            .field("tau1", &self.tau1)
            .finish_non_exhaustive()
    }
}

/// Names accepted by [`ProblemSpec::builtin`].
pub const BUILTIN_PROBLEMS: [&str; 3] = ["paper", "sink", "linear"];

impl ProblemSpec {
    pub fn builtin(name: &str, gamma: f64, tau1: f64) -> Result<Self> {
        let exact: Arc<dyn ExactSolution> = match name {
            "paper" => Arc::new(SineProblem),
            "sink" => Arc::new(SinkProblem { strength: 0.5 }),
            "linear" => Arc::new(LinearState),
            other => {
                return Err(EdgError::InvalidProblem(format!(
                    "unknown problem '{other}' (expected one of {})",
                    BUILTIN_PROBLEMS.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            exact,
            gamma,
            tau1,
        })
    }

    /// `y = sin(pi x1)`, `z = sin(pi x1) sin(pi x2)`, `beta = (x2, x1)`,
    /// `gamma = tau1 = 1`.
    pub fn paper() -> Self {
        Self::builtin("paper", 1.0, 1.0).expect("builtin")
    }
}

/// `y = sin(pi x1)`, `z = sin(pi x1) sin(pi x2)`, divergence-free `beta = (x2, x1)`.
#[derive(Debug, Clone, Copy)]
pub struct SineProblem;

impl ExactSolution for SineProblem {
    fn y(&self, x: Point) -> f64 {
        (PI * x[0]).sin()
    }
    fn grad_y(&self, x: Point) -> [f64; 2] {
        [PI * (PI * x[0]).cos(), 0.0]
    }
    fn laplacian_y(&self, x: Point) -> f64 {
        -PI * PI * (PI * x[0]).sin()
    }
    fn z(&self, x: Point) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin()
    }
    fn grad_z(&self, x: Point) -> [f64; 2] {
        [
            PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
        ]
    }
    fn laplacian_z(&self, x: Point) -> f64 {
        -2.0 * PI * PI * self.z(x)
    }
    fn beta(&self, x: Point) -> [f64; 2] {
        [x[1], x[0]]
    }
    fn div_beta(&self, _x: Point) -> f64 {
        0.0
    }
}

/// Compressive convection `beta = -s (x1, x2)` with `div beta = -2s`, so the
/// divergence terms are active. `y = e^{x1} cos(pi x2)`,
/// `z = x1 (1 - x1) sin(pi x2)`.
#[derive(Debug, Clone, Copy)]
pub struct SinkProblem {
    pub strength: f64,
}

impl ExactSolution for SinkProblem {
    fn y(&self, x: Point) -> f64 {
        x[0].exp() * (PI * x[1]).cos()
    }
    fn grad_y(&self, x: Point) -> [f64; 2] {
        [
            x[0].exp() * (PI * x[1]).cos(),
            -PI * x[0].exp() * (PI * x[1]).sin(),
        ]
    }
    fn laplacian_y(&self, x: Point) -> f64 {
        (1.0 - PI * PI) * self.y(x)
    }
    fn z(&self, x: Point) -> f64 {
        x[0] * (1.0 - x[0]) * (PI * x[1]).sin()
    }
    fn grad_z(&self, x: Point) -> [f64; 2] {
        [
            (1.0 - 2.0 * x[0]) * (PI * x[1]).sin(),
            PI * x[0] * (1.0 - x[0]) * (PI * x[1]).cos(),
        ]
    }
    fn laplacian_z(&self, x: Point) -> f64 {
        (-2.0 - PI * PI * x[0] * (1.0 - x[0])) * (PI * x[1]).sin()
    }
    fn beta(&self, x: Point) -> [f64; 2] {
        [-self.strength * x[0], -self.strength * x[1]]
    }
    fn div_beta(&self, _x: Point) -> f64 {
        -2.0 * self.strength
    }
}

/// Linear state `y = 1 + x1 - 2 x2` with `z = 0`; every space reproduces it.
#[derive(Debug, Clone, Copy)]
pub struct LinearState;

impl ExactSolution for LinearState {
    fn y(&self, x: Point) -> f64 {
        1.0 + x[0] - 2.0 * x[1]
    }
    fn grad_y(&self, _x: Point) -> [f64; 2] {
        [1.0, -2.0]
    }
    fn laplacian_y(&self, _x: Point) -> f64 {
        0.0
    }
    fn z(&self, _x: Point) -> f64 {
        0.0
    }
    fn grad_z(&self, _x: Point) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn laplacian_z(&self, _x: Point) -> f64 {
        0.0
    }
    fn beta(&self, x: Point) -> [f64; 2] {
        [x[1], x[0]]
    }
    fn div_beta(&self, _x: Point) -> f64 {
        0.0
    }
}

/// Problem data generated from the exact fields.
#[derive(Debug, Clone)]
pub struct ProblemData {
    spec: ProblemSpec,
}

/// Checks the problem's standing assumptions and returns the generated data.
pub fn derive_data(spec: &ProblemSpec) -> Result<ProblemData> {
    if !(spec.gamma > 0.0 && spec.gamma.is_finite()) {
        return Err(EdgError::InvalidProblem(format!(
            "gamma must be positive, got {}",
            spec.gamma
        )));
    }
    if !(spec.tau1 > 0.0 && spec.tau1.is_finite()) {
        return Err(EdgError::InvalidProblem(format!(
            "tau1 must be positive, got {}",
            spec.tau1
        )));
    }
    let samples = 32;
    for j in 0..=samples {
        for i in 0..=samples {
            let x = [i as f64 / samples as f64, j as f64 / samples as f64];
            let div = spec.exact.div_beta(x);
            if div > 1e-14 {
                return Err(EdgError::InvalidProblem(format!(
                    "div(beta) = {div} > 0 at ({}, {})",
                    x[0], x[1]
                )));
            }
            let on_boundary = i == 0 || j == 0 || i == samples || j == samples;
            if on_boundary && spec.exact.z(x).abs() > 1e-12 {
                return Err(EdgError::InvalidProblem(format!(
                    "adjoint state does not vanish at boundary point ({}, {})",
                    x[0], x[1]
                )));
            }
        }
    }
    Ok(ProblemData { spec: spec.clone() })
}

impl ProblemData {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    pub fn tau1(&self) -> f64 {
        self.spec.tau1
    }

    pub fn beta(&self, x: Point) -> [f64; 2] {
        self.spec.exact.beta(x)
    }

    pub fn div_beta(&self, x: Point) -> f64 {
        self.spec.exact.div_beta(x)
    }

    pub fn y(&self, x: Point) -> f64 {
        self.spec.exact.y(x)
    }

    pub fn z(&self, x: Point) -> f64 {
        self.spec.exact.z(x)
    }

    /// Optimal control `u = -z / gamma`.
    pub fn u(&self, x: Point) -> f64 {
        -self.spec.exact.z(x) / self.spec.gamma
    }

    /// State flux `q = -grad y`.
    pub fn q(&self, x: Point) -> [f64; 2] {
        let g = self.spec.exact.grad_y(x);
        [-g[0], -g[1]]
    }

    /// Adjoint flux `p = -grad z`.
    pub fn p(&self, x: Point) -> [f64; 2] {
        let g = self.spec.exact.grad_z(x);
        [-g[0], -g[1]]
    }

    /// `f = -Δy + β·∇y - u`
    pub fn f(&self, x: Point) -> f64 {
        let e = &self.spec.exact;
        let b = e.beta(x);
        let gy = e.grad_y(x);
        -e.laplacian_y(x) + b[0] * gy[0] + b[1] * gy[1] - self.u(x)
    }

    /// Dirichlet data, the restriction of `y`.
    pub fn g(&self, x: Point) -> f64 {
        self.spec.exact.y(x)
    }

    /// `y_d = y + Δz + ∇·(β z)`
    pub fn y_d(&self, x: Point) -> f64 {
        let e = &self.spec.exact;
        let b = e.beta(x);
        let gz = e.grad_z(x);
        let div_bz = b[0] * gz[0] + b[1] * gz[1] + e.div_beta(x) * e.z(x);
        e.y(x) + e.laplacian_z(x) + div_bz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_data_at_center() {
        let d = derive_data(&ProblemSpec::paper()).unwrap();
        let c = [0.5, 0.5];
        assert!((d.u(c) + 1.0).abs() < 1e-15);
        assert!((d.f(c) - (PI * PI + 1.0)).abs() < 1e-12);
        assert!((d.f(c) - 10.8696).abs() < 1e-4);
        assert!((d.y_d(c) - (1.0 - 2.0 * PI * PI)).abs() < 1e-12);
        assert!((d.y_d(c) + 18.7392).abs() < 1e-4);
    }

    #[test]
    fn paper_boundary_data() {
        let d = derive_data(&ProblemSpec::paper()).unwrap();
        assert!((d.g([0.5, 0.0]) - 1.0).abs() < 1e-15);
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert_eq!(d.g([x, 0.0]), (PI * x).sin());
        }
    }

    #[test]
    fn zero_fields_give_zero_data() {
        struct Zero;
        impl ExactSolution for Zero {
            fn y(&self, _: Point) -> f64 {
                0.0
            }
            fn grad_y(&self, _: Point) -> [f64; 2] {
                [0.0; 2]
            }
            fn laplacian_y(&self, _: Point) -> f64 {
                0.0
            }
            fn z(&self, _: Point) -> f64 {
                0.0
            }
            fn grad_z(&self, _: Point) -> [f64; 2] {
                [0.0; 2]
            }
            fn laplacian_z(&self, _: Point) -> f64 {
                0.0
            }
            fn beta(&self, x: Point) -> [f64; 2] {
                [x[1], x[0]]
            }
            fn div_beta(&self, _: Point) -> f64 {
                0.0
            }
        }
        let spec = ProblemSpec {
            name: "zero".into(),
            exact: Arc::new(Zero),
            gamma: 1.0,
            tau1: 1.0,
        };
        let d = derive_data(&spec).unwrap();
        for x in [[0.1, 0.2], [0.7, 0.9], [0.0, 1.0]] {
            assert_eq!((d.f(x), d.g(x), d.y_d(x)), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn unknown_name_and_bad_weights_rejected() {
        assert!(ProblemSpec::builtin("nope", 1.0, 1.0).is_err());
        let mut spec = ProblemSpec::paper();
        spec.gamma = -1.0;
        assert!(matches!(derive_data(&spec), Err(EdgError::InvalidProblem(_))));
        let mut spec = ProblemSpec::paper();
        spec.tau1 = 0.0;
        assert!(derive_data(&spec).is_err());
    }

    #[test]
    fn source_divergence_rejected() {
        struct Source;
        impl ExactSolution for Source {
            fn y(&self, _: Point) -> f64 {
                0.0
            }
            fn grad_y(&self, _: Point) -> [f64; 2] {
                [0.0; 2]
            }
            fn laplacian_y(&self, _: Point) -> f64 {
                0.0
            }
            fn z(&self, _: Point) -> f64 {
                0.0
            }
            fn grad_z(&self, _: Point) -> [f64; 2] {
                [0.0; 2]
            }
            fn laplacian_z(&self, _: Point) -> f64 {
                0.0
            }
            fn beta(&self, x: Point) -> [f64; 2] {
                [x[0], 0.0]
            }
            fn div_beta(&self, _: Point) -> f64 {
                1.0
            }
        }
        let spec = ProblemSpec {
            name: "source".into(),
            exact: Arc::new(Source),
            gamma: 1.0,
            tau1: 1.0,
        };
        assert!(derive_data(&spec).is_err());
    }

    /// Central-difference check of every hand-coded derivative.
    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let eps = 1e-5;
        for name in BUILTIN_PROBLEMS {
            let e = ProblemSpec::builtin(name, 1.0, 1.0).unwrap().exact;
            for x in [[0.3, 0.6], [0.81, 0.17], [0.5, 0.5]] {
                let fields: [(&dyn Fn(Point) -> f64, [f64; 2], f64); 2] = [
                    (&|p| e.y(p), e.grad_y(x), e.laplacian_y(x)),
                    (&|p| e.z(p), e.grad_z(x), e.laplacian_z(x)),
                ];
                for (f, grad, lap) in fields {
                    let dx = (f([x[0] + eps, x[1]]) - f([x[0] - eps, x[1]])) / (2.0 * eps);
                    let dy = (f([x[0], x[1] + eps]) - f([x[0], x[1] - eps])) / (2.0 * eps);
                    let h = 1e-3;
                    let l = (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h])
                        + f([x[0], x[1] - h])
                        - 4.0 * f(x))
                        / (h * h);
                    assert!((dx - grad[0]).abs() < 1e-8, "{name}");
                    assert!((dy - grad[1]).abs() < 1e-8, "{name}");
                    assert!((l - lap).abs() < 1e-4, "{name}: {l} vs {lap}");
                }
                let b = |p: Point| e.beta(p);
                let div = (b([x[0] + eps, x[1]])[0] - b([x[0] - eps, x[1]])[0]
                    + b([x[0], x[1] + eps])[1]
                    - b([x[0], x[1] - eps])[1])
                    / (2.0 * eps);
                assert!((div - e.div_beta(x)).abs() < 1e-8);
            }
        }
    }
}
