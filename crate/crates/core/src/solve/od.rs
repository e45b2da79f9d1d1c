//! Optimize-then-discretize: one coupled solve of the full optimality
//! system.

use crate::assembly::{assemble_adjoint_blocks, assemble_blocks, AdjointBlocks, BlockSystem, Discretization};
use crate::error::Result;
use crate::sparse::{CsrMatrix, TripletBuilder};

use super::linear::sparse_solve_with_residual;
use super::{Approach, SolutionFields};

/// Offsets of the unknown groups `q, p, y, z, yhat, zhat, u`.
fn offsets(sys: &BlockSystem) -> [usize; 8] {
    let l = &sys.layout;
    let (nf, ns, nt) = (l.num_flux(), l.num_scalar(), l.num_trace);
    let sizes = [nf, nf, ns, ns, nt, nt, ns];
    let mut o = [0; 8];
    for i in 0..7 {
        o[i + 1] = o[i] + sizes[i];
    }
    o
}

/// Coupled optimality matrix and right-hand side in the unknown ordering
/// `(q, p, y, z, yhat, zhat, u)`.
pub fn od_system(sys: &BlockSystem, adj: &AdjointBlocks, gamma: f64) -> (CsrMatrix, Vec<f64>) {
    let [q, p, y, z, yh, zh, u, n] = offsets(sys);
    let a2t = sys.a2.transpose();
    let a3t = sys.a3.transpose();
    let mut t = TripletBuilder::new(n, n);

    // state flux rows
    t.push_matrix(q, q, &sys.a1);
    t.push_scaled(q, y, &sys.a2, -1.0);
    t.push_matrix(q, yh, &sys.a3);
    // adjoint flux rows
    t.push_matrix(p, p, &sys.a1);
    t.push_scaled(p, z, &sys.a2, -1.0);
    t.push_matrix(p, zh, &sys.a3);
    // state scalar rows
    t.push_matrix(y, q, &a2t);
    t.push_matrix(y, y, &sys.a4);
    t.push_matrix(y, yh, &sys.a5);
    t.push_scaled(y, u, &sys.a6, -1.0);
    // adjoint scalar rows
    t.push_matrix(z, p, &a2t);
    t.push_matrix(z, z, &adj.c4);
    t.push_matrix(z, zh, &adj.c5);
    t.push_scaled(z, y, &sys.a6, -1.0);
    // state trace rows
    t.push_matrix(yh, q, &a3t);
    t.push_matrix(yh, y, &sys.a7);
    t.push_scaled(yh, yh, &sys.a8, -1.0);
    // adjoint trace rows
    t.push_matrix(zh, p, &a3t);
    t.push_matrix(zh, z, &adj.c7);
    t.push_scaled(zh, zh, &adj.c8, -1.0);
    // optimality rows
    t.push_matrix(u, z, &sys.a6);
    t.push_scaled(u, u, &sys.a6, gamma);

    let mut rhs = vec![0.0; n];
    for (r, b) in rhs[q..p].iter_mut().zip(&sys.b2) {
        *r = -b;
    }
    for ((r, f), g) in rhs[y..z].iter_mut().zip(&sys.b3).zip(&sys.b4) {
        *r = f - g;
    }
    for (r, b) in rhs[z..yh].iter_mut().zip(&sys.b1) {
        *r = -b;
    }
    rhs[yh..zh].copy_from_slice(&sys.b_trace);
    (t.build(), rhs)
}

/// Assembles and solves the discrete optimality system with the control
/// kept as an unknown.
pub fn solve_od(d: &Discretization) -> Result<SolutionFields> {
    let sys = assemble_blocks(d)?;
    let adj = assemble_adjoint_blocks(d)?;
    let (m, rhs) = od_system(&sys, &adj, d.params.gamma);
    let (x, res) = sparse_solve_with_residual(&m, &rhs)?;
    let [q, p, y, z, yh, zh, u, n] = offsets(&sys);
    Ok(SolutionFields {
        q: x[q..p].to_vec(),
        p: x[p..y].to_vec(),
        y: x[y..z].to_vec(),
        z: x[z..yh].to_vec(),
        y_trace: x[yh..zh].to_vec(),
        z_trace: x[zh..u].to_vec(),
        u: x[u..n].to_vec(),
        approach: Approach::Od,
        linear_residual: res,
        gamma: d.params.gamma,
    })
}
