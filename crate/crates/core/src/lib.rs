//! Embedded discontinuous Galerkin (EDG) discretization of distributed
//! optimal control for steady convection-diffusion on the unit square.
//!
//! The optimality system can be solved either by discretizing it directly
//! ([`solve_od`]) or by discretizing the cost and state equation first and
//! solving the reduced quadratic program ([`solve_do`]).

pub mod assembly;
pub mod basis;
pub mod condensation;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod problems;
pub mod solve;
pub mod sparse;

pub use assembly::{
    apply_b1, apply_b2, assemble_adjoint_blocks, assemble_blocks, AdjointBlocks, BlockSystem,
    DiscreteTriple, Discretization, Layout, Params, Tau2,
};
pub use basis::{SpaceSet, TraceMode};
pub use condensation::{condense, CondensedOperators};
pub use error::{EdgError, Result};
pub use harness::{run_convergence, ConvergenceConfig, ConvergenceReport, FieldSeries};
pub use mesh::{Diagonal, Mesh, Point};
pub use problems::{derive_data, ExactSolution, ProblemData, ProblemSpec, BUILTIN_PROBLEMS};
pub use solve::{
    check_commutativity, solve, solve_do, solve_od, sparse_solve, Approach, Discrepancy,
    SolutionFields,
};
pub use sparse::{CsrMatrix, TripletBuilder};
