//! Element-by-element elimination of the flux and scalar unknowns.
//!
//! On every element the first two block rows of the state equation are
//! solved for `(alpha, beta)` in terms of the free trace `gamma` and the
//! control `zeta`:
//!
//! ```text
//! alpha = G1 gamma + G2 zeta + H1
//! beta  = G3 gamma + G4 zeta + H2
//! ```
//!
//! Substituting into the trace row leaves `G5 gamma + G6 zeta = H3`.
//! Local factorizations of `A1` (Cholesky) and of
//! `S = A4 + A2^T A1^{-1} A2` (LU with partial pivoting) are kept for
//! back-substitution.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::assembly::BlockSystem;
use crate::error::{EdgError, Result};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Dense row/column restriction of a sparse matrix.
pub(crate) fn dense_block(m: &CsrMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m.get(rows[i], cols[j]))
}

pub(crate) fn sub_vector(v: &[f64], idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Local elimination data of one element.
#[derive(Debug, Clone)]
pub struct ElementCondensation {
    /// Free trace dofs touching the element, in local column order.
    pub trace_dofs: Vec<usize>,
    a1: Cholesky<f64, Dyn>,
    schur: LU<f64, Dyn, Dyn>,
    a2: DMatrix<f64>,
    a3: DMatrix<f64>,
    a5: DMatrix<f64>,
    a6: DMatrix<f64>,
    b2: DVector<f64>,
    b34: DVector<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub g3: DMatrix<f64>,
    pub g4: DMatrix<f64>,
    pub h1: DVector<f64>,
    pub h2: DVector<f64>,
}

impl ElementCondensation {
    /// Local scalar mass block.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.a6
    }

    /// Solves block rows 1-2 on this element for given local trace and
    /// control coefficients.
    pub fn back_substitute(&self, gamma: &DVector<f64>, zeta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let t = &self.a3 * gamma + &self.b2;
        let a1_t = self.a1.solve(&t);
        let rhs = &self.b34 + &self.a6 * zeta - &self.a5 * gamma + self.a2.tr_mul(&a1_t);
        let beta = self
            .schur
            .solve(&rhs)
            .expect("factorization checked at construction");
        let alpha = self.a1.solve(&(&self.a2 * &beta)) - a1_t;
        (alpha, beta)
    }
}

/// Result of [`condense`].
#[derive(Debug, Clone)]
pub struct CondensedOperators {
    pub elements: Vec<ElementCondensation>,
    pub g1: CsrMatrix,
    pub g2: CsrMatrix,
    pub g3: CsrMatrix,
    pub g4: CsrMatrix,
    pub g5: CsrMatrix,
    pub g6: CsrMatrix,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    flux_per_element: usize,
    scalar_per_element: usize,
}

struct Local {
    cond: ElementCondensation,
    /// `A3^T G1 + A7 G3`, local trace by local trace.
    g5: DMatrix<f64>,
    /// `A3^T G2 + A7 G4`, local trace by local scalar.
    g6: DMatrix<f64>,
    /// `A3^T H1 + A7 H2`
    h3: DVector<f64>,
}

fn condense_element(sys: &BlockSystem, e: usize) -> Result<Local> {
    let l = &sys.layout;
    let fr: Vec<usize> = l.flux_range(e).collect();
    let sr: Vec<usize> = l.scalar_range(e).collect();
    let td = l.element_trace_dofs[e].clone();
    let fail = |reason: &str| EdgError::CondensationFailure {
        element: e,
        reason: reason.to_string(),
    };

    let a1 = dense_block(&sys.a1, &fr, &fr);
    let a2 = dense_block(&sys.a2, &fr, &sr);
    let a3 = dense_block(&sys.a3, &fr, &td);
    let a4 = dense_block(&sys.a4, &sr, &sr);
    let a5 = dense_block(&sys.a5, &sr, &td);
    let a6 = dense_block(&sys.a6, &sr, &sr);
    let a7 = dense_block(&sys.a7, &td, &sr);
    let b2 = sub_vector(&sys.b2, &fr);
    let b34 = sub_vector(&sys.b3, &sr) - sub_vector(&sys.b4, &sr);

    let chol = Cholesky::new(a1).ok_or_else(|| fail("flux mass block is not positive definite"))?;
    let a1_a2 = chol.solve(&a2);
    let a1_a3 = chol.solve(&a3);
    let a1_b2 = chol.solve(&b2);
    let s = &a4 + a2.tr_mul(&a1_a2);
    let schur = s.lu();
    let solve = |m: &DMatrix<f64>| schur.solve(m).ok_or_else(|| fail("scalar Schur complement is singular"));

    let g3 = -solve(&(&a5 - a2.tr_mul(&a1_a3)))?;
    let g4 = solve(&a6)?;
    let rhs_h2 = &b34 + a2.tr_mul(&a1_b2);
    let h2 = schur
        .solve(&rhs_h2)
        .ok_or_else(|| fail("scalar Schur complement is singular"))?;
    let g1 = &a1_a2 * &g3 - a1_a3;
    let g2 = &a1_a2 * &g4;
    let h1 = &a1_a2 * &h2 - a1_b2;
    if [&g1, &g2, &g3, &g4].iter().any(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(fail("non-finite elimination operator"));
    }

    let g5 = a3.tr_mul(&g1) + &a7 * &g3;
    let g6 = a3.tr_mul(&g2) + &a7 * &g4;
    let h3 = a3.tr_mul(&h1) + &a7 * &h2;
    Ok(Local {
        cond: ElementCondensation {
            trace_dofs: td,
            a1: chol,
            schur,
            a2,
            a3,
            a5,
            a6,
            b2,
            b34,
            g1,
            g2,
            g3,
            g4,
            h1,
            h2,
        },
        g5,
        g6,
        h3,
    })
}

/// Eliminates the flux and scalar unknowns element by element.
///
/// Elements are processed in parallel; the global operators are then
/// composed serially in element order.
pub fn condense(sys: &BlockSystem) -> Result<CondensedOperators> {
    let l = &sys.layout;
    let (nfl, nsc, ntr) = (l.num_flux(), l.num_scalar(), l.num_trace);
    let locals: Vec<Local> = (0..l.num_elements)
        .into_par_iter()
        .map(|e| condense_element(sys, e))
        .collect::<Result<_>>()?;

    let mut g1 = TripletBuilder::new(nfl, ntr);
    let mut g2 = TripletBuilder::new(nfl, nsc);
    let mut g3 = TripletBuilder::new(nsc, ntr);
    let mut g4 = TripletBuilder::new(nsc, nsc);
    let mut g5 = TripletBuilder::new(ntr, ntr);
    let mut g6 = TripletBuilder::new(ntr, nsc);
    let mut h1 = vec![0.0; nfl];
    let mut h2 = vec![0.0; nsc];
    let mut h3 = sys.b_trace.clone();
    for (e, loc) in locals.iter().enumerate() {
        let c = &loc.cond;
        let f0 = e * l.flux_per_element;
        let s0 = e * l.scalar_per_element;
        let td = &c.trace_dofs;
        for (jl, &j) in td.iter().enumerate() {
            for i in 0..c.g1.nrows() {
                g1.push(f0 + i, j, c.g1[(i, jl)]);
            }
            for i in 0..c.g3.nrows() {
                g3.push(s0 + i, j, c.g3[(i, jl)]);
            }
            for (il, &i) in td.iter().enumerate() {
                g5.push(i, j, loc.g5[(il, jl)]);
            }
        }
        for jl in 0..l.scalar_per_element {
            for i in 0..c.g2.nrows() {
                g2.push(f0 + i, s0 + jl, c.g2[(i, jl)]);
            }
            for i in 0..c.g4.nrows() {
                g4.push(s0 + i, s0 + jl, c.g4[(i, jl)]);
            }
            for (il, &i) in td.iter().enumerate() {
                g6.push(i, s0 + jl, loc.g6[(il, jl)]);
            }
        }
        h1[f0..f0 + c.h1.len()].copy_from_slice(c.h1.as_slice());
        h2[s0..s0 + c.h2.len()].copy_from_slice(c.h2.as_slice());
        for (il, &i) in td.iter().enumerate() {
            h3[i] -= loc.h3[il];
        }
    }
    g5.push_scaled(0, 0, &sys.a8, -1.0);

    Ok(CondensedOperators {
        elements: locals.into_iter().map(|l| l.cond).collect(),
        g1: g1.build(),
        g2: g2.build(),
        g3: g3.build(),
        g4: g4.build(),
        g5: g5.build(),
        g6: g6.build(),
        h1,
        h2,
        h3,
        flux_per_element: l.flux_per_element,
        scalar_per_element: l.scalar_per_element,
    })
}

impl CondensedOperators {
    pub fn num_trace(&self) -> usize {
        self.g5.nrows()
    }

    pub fn num_scalar(&self) -> usize {
        self.g4.nrows()
    }

    /// Flux and scalar coefficients for given free trace and control
    /// coefficients, by element-local back-substitution.
    pub fn reconstruct(&self, trace: &[f64], control: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if trace.len() != self.num_trace() || control.len() != self.num_scalar() {
            return Err(EdgError::InvalidArgument(format!(
                "reconstruct expects {} trace and {} control coefficients, got {} and {}",
                self.num_trace(),
                self.num_scalar(),
                trace.len(),
                control.len()
            )));
        }
        let (nf, ns) = (self.flux_per_element, self.scalar_per_element);
        let parts: Vec<(DVector<f64>, DVector<f64>)> = self
            .elements
            .par_iter()
            .enumerate()
            .map(|(e, c)| {
                let gamma = sub_vector(trace, &c.trace_dofs);
                let zeta = DVector::from_column_slice(&control[e * ns..(e + 1) * ns]);
                c.back_substitute(&gamma, &zeta)
            })
            .collect();
        let mut flux = Vec::with_capacity(parts.len() * nf);
        let mut scalar = Vec::with_capacity(parts.len() * ns);
        for (a, b) in parts {
            flux.extend_from_slice(a.as_slice());
            scalar.extend_from_slice(b.as_slice());
        }
        Ok((flux, scalar))
    }

    /// Same as [`reconstruct`](Self::reconstruct), through the assembled
    /// global maps.
    pub fn apply_maps(&self, trace: &[f64], control: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut flux = self.h1.clone();
        self.g1.matvec_add(trace, 1.0, &mut flux);
        self.g2.matvec_add(control, 1.0, &mut flux);
        let mut scalar = self.h2.clone();
        self.g3.matvec_add(trace, 1.0, &mut scalar);
        self.g4.matvec_add(control, 1.0, &mut scalar);
        (flux, scalar)
    }
}
