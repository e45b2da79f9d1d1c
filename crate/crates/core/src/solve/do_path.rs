//! Discretize-then-optimize: the condensed equality-constrained quadratic
//! program
//!
//! ```text
//! min  1/2 [g; c]^T [B1 B2; B3 B4] [g; c] + [b5; b6]^T [g; c]
//! s.t. G5 g + G6 c = H3
//! ```
//!
//! over free trace coefficients `g` and control coefficients `c`, solved
//! through its KKT system. The dual fields are then recovered from the
//! transposed state equation.

use nalgebra::DVector;

use crate::assembly::{assemble_blocks, BlockSystem, Discretization};
use crate::condensation::{condense, sub_vector, CondensedOperators};
use crate::error::Result;
use crate::sparse::{CsrMatrix, TripletBuilder};

use super::linear::{sparse_solve, sparse_solve_with_residual};
use super::{Approach, SolutionFields};

/// Hessian blocks, linear terms and constraint of the reduced problem.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// `G3^T A6 G3`
    pub b1: CsrMatrix,
    /// `G3^T A6 G4`
    pub b2: CsrMatrix,
    /// `G4^T A6 G3`
    pub b3: CsrMatrix,
    /// `G4^T A6 G4 + gamma A6`
    pub b4: CsrMatrix,
    /// `G3^T (A6 H2 - b1)`
    pub b5: Vec<f64>,
    /// `G4^T (A6 H2 - b1)`
    pub b6: Vec<f64>,
    pub g5: CsrMatrix,
    pub g6: CsrMatrix,
    pub h3: Vec<f64>,
}

/// Builds the reduced problem element by element; `A6` is block diagonal
/// and the rows of `G3`, `G4` are element-local.
pub fn reduced_problem(sys: &BlockSystem, ops: &CondensedOperators, gamma: f64) -> ReducedProblem {
    let l = &sys.layout;
    let (ns, nt) = (l.num_scalar(), l.num_trace);
    let mut b1 = TripletBuilder::new(nt, nt);
    let mut b2 = TripletBuilder::new(nt, ns);
    let mut b4 = TripletBuilder::new(ns, ns);
    let mut b5 = vec![0.0; nt];
    let mut b6 = vec![0.0; ns];
    for (e, c) in ops.elements.iter().enumerate() {
        let sr: Vec<usize> = l.scalar_range(e).collect();
        let a6 = c.mass();
        let a6_g3 = a6 * &c.g3;
        let a6_g4 = a6 * &c.g4;
        let lin = a6 * &c.h2 - sub_vector(&sys.b1, &sr);
        let k11 = c.g3.tr_mul(&a6_g3);
        let k12 = c.g3.tr_mul(&a6_g4);
        let k22 = c.g4.tr_mul(&a6_g4) + a6 * gamma;
        let l1: DVector<f64> = c.g3.tr_mul(&lin);
        let l2: DVector<f64> = c.g4.tr_mul(&lin);
        let td = &c.trace_dofs;
        for (jl, &j) in td.iter().enumerate() {
            for (il, &i) in td.iter().enumerate() {
                b1.push(i, j, k11[(il, jl)]);
            }
        }
        for (jl, &j) in sr.iter().enumerate() {
            for (il, &i) in td.iter().enumerate() {
                b2.push(i, j, k12[(il, jl)]);
            }
            for (il, &i) in sr.iter().enumerate() {
                b4.push(i, j, k22[(il, jl)]);
            }
        }
        for (il, &i) in td.iter().enumerate() {
            b5[i] += l1[il];
        }
        for (il, &i) in sr.iter().enumerate() {
            b6[i] += l2[il];
        }
    }
    let b2 = b2.build();
    ReducedProblem {
        b1: b1.build(),
        b3: b2.transpose(),
        b2,
        b4: b4.build(),
        b5,
        b6,
        g5: ops.g5.clone(),
        g6: ops.g6.clone(),
        h3: ops.h3.clone(),
    }
}

impl ReducedProblem {
    pub fn num_trace(&self) -> usize {
        self.b1.nrows()
    }

    pub fn num_control(&self) -> usize {
        self.b4.nrows()
    }

    /// KKT matrix and right-hand side in the ordering `(g, c, lambda)`.
    pub fn kkt_system(&self) -> (CsrMatrix, Vec<f64>) {
        let (nt, nc) = (self.num_trace(), self.num_control());
        let n = 2 * nt + nc;
        let mut t = TripletBuilder::new(n, n);
        t.push_matrix(0, 0, &self.b1);
        t.push_matrix(0, nt, &self.b2);
        t.push_matrix(0, nt + nc, &self.g5.transpose());
        t.push_matrix(nt, 0, &self.b3);
        t.push_matrix(nt, nt, &self.b4);
        t.push_matrix(nt, nt + nc, &self.g6.transpose());
        t.push_matrix(nt + nc, 0, &self.g5);
        t.push_matrix(nt + nc, nt, &self.g6);
        let mut rhs: Vec<f64> = self.b5.iter().chain(&self.b6).map(|v| -v).collect();
        rhs.extend_from_slice(&self.h3);
        (t.build(), rhs)
    }

    /// Value of the reduced objective, without its constant term.
    pub fn objective(&self, trace: &[f64], control: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut ht = self.b1.matvec(trace);
        self.b2.matvec_add(control, 1.0, &mut ht);
        let mut hc = self.b3.matvec(trace);
        self.b4.matvec_add(control, 1.0, &mut hc);
        0.5 * (dot(trace, &ht) + dot(control, &hc)) + dot(&self.b5, trace) + dot(&self.b6, control)
    }
}

/// Solves the condensed quadratic program and recovers the adjoint fields.
pub fn solve_do(d: &Discretization) -> Result<SolutionFields> {
    let sys = assemble_blocks(d)?;
    let ops = condense(&sys)?;
    let qp = reduced_problem(&sys, &ops, d.params.gamma);
    let (kkt, rhs) = qp.kkt_system();
    let (x, res) = sparse_solve_with_residual(&kkt, &rhs)?;
    let (nt, nc) = (qp.num_trace(), qp.num_control());
    let y_trace = x[..nt].to_vec();
    let u = x[nt..nt + nc].to_vec();
    let (q, y) = ops.reconstruct(&y_trace, &u)?;

    // adjoint of the state operator, driven by the cost gradient in y
    let l = &sys.layout;
    let (nf, ns) = (l.num_flux(), l.num_scalar());
    let mut dual_rhs = vec![0.0; nf + ns + nt];
    let a6y = sys.a6.matvec(&y);
    for (i, (b, m)) in sys.b1.iter().zip(&a6y).enumerate() {
        dual_rhs[nf + i] = b - m;
    }
    let lambda = sparse_solve(&sys.state_matrix().transpose(), &dual_rhs)?;
    Ok(SolutionFields {
        q,
        p: lambda[..nf].to_vec(),
        y,
        z: lambda[nf..nf + ns].iter().map(|v| -v).collect(),
        u,
        y_trace,
        z_trace: lambda[nf + ns..].to_vec(),
        approach: Approach::Do,
        linear_residual: res,
        gamma: d.params.gamma,
    })
}
