//! Global block assembly.
//!
//! With coefficient vectors `alpha` (flux), `beta` (state), `gamma` (free
//! trace) and `zeta` (control), the discrete state equation reads
//!
//! ```text
//! [ A1   -A2   A3    0  ] [alpha]   [ -b2      ]
//! [ A2^T  A4   A5  -A6  ] [beta ] = [ b3 - b4  ]
//! [ A3^T  A7  -A8    0  ] [gamma]   [ b_trace  ]
//!                         [zeta ]
//! ```
//!
//! `b2`, `b4` and `b_trace` carry the interpolated boundary data at every
//! constrained skeleton node; `b_trace` vanishes unless an interior face
//! touches the boundary at a constrained node. The adjoint equation uses the
//! same flux blocks plus the blocks in [`AdjointBlocks`], built with the
//! adjoint stabilization `tau2`.
//!
//! Element matrices are computed in parallel chunks (each worker owns its
//! local buffers) and scattered into the global triplet lists serially, in
//! element order, so the result is bit-for-bit deterministic.

mod forms;
mod tables;

pub use forms::{apply_b1, apply_b2, DiscreteTriple};
pub(crate) use tables::ReferenceTables;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{interpolate_boundary, ElementMap, NodeRole, SpaceSet};
use crate::error::{EdgError, Result};
use crate::mesh::Mesh;
use crate::problems::ProblemData;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Adjoint stabilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau2 {
    /// `tau2 = tau1 - beta.n`, evaluated pointwise with each element's
    /// outward normal.
    Commuting,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub tau1: f64,
    pub tau2: Tau2,
    pub gamma: f64,
    /// Mesh size used in the `1/h` stabilization.
    pub h: f64,
}

impl Params {
    pub fn new(mesh: &Mesh, data: &ProblemData) -> Self {
        Self {
            tau1: data.tau1(),
            tau2: Tau2::Commuting,
            gamma: data.gamma(),
            h: mesh.h(),
        }
    }

    pub fn with_tau2(mut self, tau2: Tau2) -> Self {
        self.tau2 = tau2;
        self
    }

    /// `1/h + tau1`
    pub fn sigma1(&self) -> f64 {
        1.0 / self.h + self.tau1
    }

    pub fn tau2_at(&self, beta_n: f64) -> f64 {
        match self.tau2 {
            Tau2::Commuting => self.tau1 - beta_n,
            Tau2::Constant(t) => t,
        }
    }

    /// `1/h + tau2`
    pub fn sigma2(&self, beta_n: f64) -> f64 {
        1.0 / self.h + self.tau2_at(beta_n)
    }
}

/// Everything needed to assemble one discrete problem.
#[derive(Clone, Copy)]
pub struct Discretization<'a> {
    pub mesh: &'a Mesh,
    pub spaces: &'a SpaceSet,
    pub data: &'a ProblemData,
    pub params: Params,
}

impl<'a> Discretization<'a> {
    pub fn new(mesh: &'a Mesh, spaces: &'a SpaceSet, data: &'a ProblemData) -> Self {
        Self {
            mesh,
            spaces,
            data,
            params: Params::new(mesh, data),
        }
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    /// Quadrature exactness for assembly integrals, on triangles and edges.
    pub fn assembly_exactness(&self) -> usize {
        2 * (self.spaces.k() + 2)
    }

    /// Boundary data interpolated at the constrained skeleton nodes.
    pub fn boundary_values(&self) -> Vec<f64> {
        interpolate_boundary(|x| self.data.g(x), self.spaces)
    }
}

/// Dof layout shared by every block.
#[derive(Debug, Clone)]
pub struct Layout {
    pub num_elements: usize,
    pub flux_per_element: usize,
    pub scalar_per_element: usize,
    pub num_trace: usize,
    /// Free trace dofs on the sides of each element, sorted.
    pub element_trace_dofs: Vec<Vec<usize>>,
}

impl Layout {
    pub fn from_spaces(spaces: &SpaceSet) -> Self {
        Self {
            num_elements: spaces.num_elements(),
            flux_per_element: spaces.flux_per_element(),
            scalar_per_element: spaces.scalar_per_element(),
            num_trace: spaces.num_free_trace(),
            element_trace_dofs: (0..spaces.num_elements())
                .map(|e| spaces.trace().element_free_dofs(e).to_vec())
                .collect(),
        }
    }

    pub fn num_flux(&self) -> usize {
        self.num_elements * self.flux_per_element
    }

    pub fn num_scalar(&self) -> usize {
        self.num_elements * self.scalar_per_element
    }

    pub fn flux_range(&self, e: usize) -> std::ops::Range<usize> {
        e * self.flux_per_element..(e + 1) * self.flux_per_element
    }

    pub fn scalar_range(&self, e: usize) -> std::ops::Range<usize> {
        e * self.scalar_per_element..(e + 1) * self.scalar_per_element
    }
}

/// Sparse blocks and load vectors of the discrete state equation and cost.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    /// Flux mass, `(phi_j, phi_i)`.
    pub a1: CsrMatrix,
    /// `(w_j, div phi_i)`, flux rows by scalar columns.
    pub a2: CsrMatrix,
    /// `<mu_j, phi_i.n>`, flux rows by trace columns.
    pub a3: CsrMatrix,
    /// Convection, divergence and stabilization of the state.
    pub a4: CsrMatrix,
    /// `<(beta.n - 1/h - tau1) mu_j, w_i>`.
    pub a5: CsrMatrix,
    /// Scalar mass.
    pub a6: CsrMatrix,
    /// `<(1/h + tau1) w_j, mu_i>` on interior faces.
    pub a7: CsrMatrix,
    /// `<(1/h + tau1) mu_j, mu_i>` on interior faces.
    pub a8: CsrMatrix,
    /// `(y_d, w_i)`
    pub b1: Vec<f64>,
    /// `<I_h g, phi_i.n>`
    pub b2: Vec<f64>,
    /// `(f, w_i)`
    pub b3: Vec<f64>,
    /// `<(beta.n - 1/h - tau1) I_h g, w_i>`
    pub b4: Vec<f64>,
    /// `<(1/h + tau1) I_h g, mu_i>` on interior faces.
    pub b_trace: Vec<f64>,
    pub layout: Layout,
}

/// Adjoint counterparts of `A4, A5, A7, A8`, built with `tau2`.
#[derive(Debug, Clone)]
pub struct AdjointBlocks {
    /// `(w_j, beta.grad w_i) + <(1/h + tau2) w_j, w_i>`
    pub c4: CsrMatrix,
    /// `-<(beta.n + 1/h + tau2) mu_j, w_i>`
    pub c5: CsrMatrix,
    /// `<(1/h + tau2) w_j, mu_i>`
    pub c7: CsrMatrix,
    /// `<(1/h + tau2 + beta.n) mu_j, mu_i>`
    pub c8: CsrMatrix,
}

/// Element-local dense blocks. Trace columns are indexed by
/// `side * slots_per_face + slot`.
pub(crate) struct LocalBlocks {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub a3: DMatrix<f64>,
    pub a4: DMatrix<f64>,
    pub a5: DMatrix<f64>,
    pub a6: DMatrix<f64>,
    pub a7: DMatrix<f64>,
    pub a8: DMatrix<f64>,
    pub c4: DMatrix<f64>,
    pub c5: DMatrix<f64>,
    pub c7: DMatrix<f64>,
    pub c8: DMatrix<f64>,
    pub load_f: Vec<f64>,
    pub load_yd: Vec<f64>,
}

fn element_blocks(d: &Discretization, tables: &ReferenceTables, e: usize) -> Result<LocalBlocks> {
    let spaces = d.spaces;
    let mesh = d.mesh;
    let m = spaces.flux_basis().dim();
    let nf = 2 * m;
    let ns = spaces.scalar_per_element();
    let slots = spaces.trace().slots_per_face();
    let nt = 3 * slots;
    let map = ElementMap::new(mesh.element_vertices(e));
    let det = map.det();

    let z = DMatrix::<f64>::zeros;
    let mut b = LocalBlocks {
        a1: z(nf, nf),
        a2: z(nf, ns),
        a3: z(nf, nt),
        a4: z(ns, ns),
        a5: z(ns, nt),
        a6: z(ns, ns),
        a7: z(nt, ns),
        a8: z(nt, nt),
        c4: z(ns, ns),
        c5: z(ns, nt),
        c7: z(nt, ns),
        c8: z(nt, nt),
        load_f: vec![0.0; ns],
        load_yd: vec![0.0; ns],
    };

    let mut grad = vec![[0.0; 2]; ns];
    let mut fgrad = vec![[0.0; 2]; m];
    for qp in &tables.volume {
        let x = map.to_physical(qp.xi);
        let w = qp.weight * det;
        let beta = d.data.beta(x);
        let div_beta = d.data.div_beta(x);
        let (f, yd) = (d.data.f(x), d.data.y_d(x));
        for (g, r) in grad.iter_mut().zip(&qp.scalar_grad) {
            *g = map.physical_gradient(*r);
        }
        for (g, r) in fgrad.iter_mut().zip(&qp.flux_grad) {
            *g = map.physical_gradient(*r);
        }
        let phi = &qp.scalar;
        let psi = &qp.flux;
        for a in 0..m {
            for c in 0..m {
                let v = w * psi[a] * psi[c];
                b.a1[(a, c)] += v;
                b.a1[(m + a, m + c)] += v;
            }
            for j in 0..ns {
                b.a2[(a, j)] += w * phi[j] * fgrad[a][0];
                b.a2[(m + a, j)] += w * phi[j] * fgrad[a][1];
            }
        }
        for i in 0..ns {
            let adv = beta[0] * grad[i][0] + beta[1] * grad[i][1];
            for j in 0..ns {
                b.a4[(i, j)] -= w * phi[j] * (adv + div_beta * phi[i]);
                b.c4[(i, j)] += w * phi[j] * adv;
                b.a6[(i, j)] += w * phi[i] * phi[j];
            }
            b.load_f[i] += w * f * phi[i];
            b.load_yd[i] += w * yd * phi[i];
        }
    }

    let sigma1 = d.params.sigma1();
    let faces = mesh.element_faces(e);
    for (s, side_points) in tables.sides.iter().enumerate() {
        let face_id = faces[s];
        let face = &mesh.faces()[face_id];
        let interior = !face.is_boundary();
        let len = mesh.side_length(e, s);
        let n = mesh.outward_normal(e, s)?;
        let forward = mesh.side_vertices(e, s)[0] == face.vertices[0];
        for sp in side_points {
            let x = map.to_physical(sp.xi);
            let w = sp.weight * len;
            let beta = d.data.beta(x);
            let bn = beta[0] * n[0] + beta[1] * n[1];
            let margin = d.params.tau1 - 0.5 * bn;
            if margin <= 0.0 {
                return Err(EdgError::StabilizationCondition {
                    face: face_id,
                    element: e,
                    value: margin,
                    x: x[0],
                    y: x[1],
                });
            }
            let sigma2 = d.params.sigma2(bn);
            let phi = &sp.scalar;
            let psi = &sp.flux;
            let mu = if forward { &sp.trace_fwd } else { &sp.trace_rev };
            for i in 0..ns {
                for j in 0..ns {
                    b.a4[(i, j)] += w * sigma1 * phi[i] * phi[j];
                    b.c4[(i, j)] += w * sigma2 * phi[i] * phi[j];
                }
            }
            for (slot, &mu_c) in mu.iter().enumerate() {
                let c = s * slots + slot;
                for a in 0..m {
                    b.a3[(a, c)] += w * mu_c * psi[a] * n[0];
                    b.a3[(m + a, c)] += w * mu_c * psi[a] * n[1];
                }
                for i in 0..ns {
                    b.a5[(i, c)] += w * (bn - sigma1) * mu_c * phi[i];
                    b.c5[(i, c)] -= w * (bn + sigma2) * mu_c * phi[i];
                }
                if interior {
                    for j in 0..ns {
                        b.a7[(c, j)] += w * sigma1 * phi[j] * mu_c;
                        b.c7[(c, j)] += w * sigma2 * phi[j] * mu_c;
                    }
                    for (slot_d, &mu_d) in mu.iter().enumerate() {
                        let dd = s * slots + slot_d;
                        b.a8[(c, dd)] += w * sigma1 * mu_c * mu_d;
                        b.c8[(c, dd)] += w * (sigma2 + bn) * mu_c * mu_d;
                    }
                }
            }
        }
    }
    Ok(b)
}

const CHUNK: usize = 2048;

/// Computes element blocks in parallel chunks and hands them to `scatter`
/// one at a time, in element order.
pub(crate) fn for_each_element_block<F>(d: &Discretization, mut scatter: F) -> Result<()>
where
    F: FnMut(usize, LocalBlocks),
{
    let ex = d.assembly_exactness();
    let tables = ReferenceTables::new(d.spaces, ex, ex)?;
    let ne = d.mesh.num_elements();
    let mut start = 0;
    while start < ne {
        let end = (start + CHUNK).min(ne);
        let blocks: Vec<LocalBlocks> = (start..end)
            .into_par_iter()
            .map(|e| element_blocks(d, &tables, e))
            .collect::<Result<_>>()?;
        for (offset, lb) in blocks.into_iter().enumerate() {
            scatter(start + offset, lb);
        }
        start = end;
    }
    Ok(())
}

/// Role of every local trace column of an element.
fn local_trace_roles(mesh: &Mesh, spaces: &SpaceSet, e: usize) -> Vec<NodeRole> {
    let trace = spaces.trace();
    mesh.element_faces(e)
        .iter()
        .flat_map(|&f| trace.face_nodes(f).iter().map(|&node| trace.node_role(node)))
        .collect()
}

/// Assembles `A1..A8` and `b1..b4`, `b_trace`.
///
/// Fails if `tau1 - beta.n/2 <= 0` at any face quadrature point.
pub fn assemble_blocks(d: &Discretization) -> Result<BlockSystem> {
    let spaces = d.spaces;
    let layout = Layout::from_spaces(spaces);
    let (nfl, nsc, ntr) = (layout.num_flux(), layout.num_scalar(), layout.num_trace);
    let ghat = d.boundary_values();

    let mut a1 = TripletBuilder::new(nfl, nfl);
    let mut a2 = TripletBuilder::new(nfl, nsc);
    let mut a3 = TripletBuilder::new(nfl, ntr);
    let mut a4 = TripletBuilder::new(nsc, nsc);
    let mut a5 = TripletBuilder::new(nsc, ntr);
    let mut a6 = TripletBuilder::new(nsc, nsc);
    let mut a7 = TripletBuilder::new(ntr, nsc);
    let mut a8 = TripletBuilder::new(ntr, ntr);
    let mut b1 = vec![0.0; nsc];
    let mut b2 = vec![0.0; nfl];
    let mut b3 = vec![0.0; nsc];
    let mut b4 = vec![0.0; nsc];
    let mut b_trace = vec![0.0; ntr];

    for_each_element_block(d, |e, lb| {
        let fr = layout.flux_range(e);
        let sr = layout.scalar_range(e);
        push_dense(&mut a1, fr.start, fr.start, &lb.a1);
        push_dense(&mut a2, fr.start, sr.start, &lb.a2);
        push_dense(&mut a4, sr.start, sr.start, &lb.a4);
        push_dense(&mut a6, sr.start, sr.start, &lb.a6);
        for i in 0..lb.load_f.len() {
            b1[sr.start + i] += lb.load_yd[i];
            b3[sr.start + i] += lb.load_f[i];
        }
        let roles = local_trace_roles(d.mesh, spaces, e);
        for (c, role) in roles.iter().enumerate() {
            match *role {
                NodeRole::Free(t) => {
                    for i in 0..lb.a3.nrows() {
                        a3.push(fr.start + i, t, lb.a3[(i, c)]);
                    }
                    for i in 0..lb.a5.nrows() {
                        a5.push(sr.start + i, t, lb.a5[(i, c)]);
                    }
                }
                NodeRole::Constrained(k) => {
                    for i in 0..lb.a3.nrows() {
                        b2[fr.start + i] += lb.a3[(i, c)] * ghat[k];
                    }
                    for i in 0..lb.a5.nrows() {
                        b4[sr.start + i] += lb.a5[(i, c)] * ghat[k];
                    }
                }
            }
        }
        // test-function rows only exist for free trace dofs
        for (r, row_role) in roles.iter().enumerate() {
            let NodeRole::Free(tr) = *row_role else {
                continue;
            };
            for j in 0..lb.a7.ncols() {
                a7.push(tr, sr.start + j, lb.a7[(r, j)]);
            }
            for (c, col_role) in roles.iter().enumerate() {
                match *col_role {
                    NodeRole::Free(tc) => a8.push(tr, tc, lb.a8[(r, c)]),
                    NodeRole::Constrained(k) => b_trace[tr] += lb.a8[(r, c)] * ghat[k],
                }
            }
        }
    })?;

    Ok(BlockSystem {
        a1: a1.build(),
        a2: a2.build(),
        a3: a3.build(),
        a4: a4.build(),
        a5: a5.build(),
        a6: a6.build(),
        a7: a7.build(),
        a8: a8.build(),
        b1,
        b2,
        b3,
        b4,
        b_trace,
        layout,
    })
}

/// Assembles the adjoint stabilization blocks with the configured `tau2`.
/// The adjoint boundary value is zero, so there are no load terms.
pub fn assemble_adjoint_blocks(d: &Discretization) -> Result<AdjointBlocks> {
    let spaces = d.spaces;
    let layout = Layout::from_spaces(spaces);
    let (nsc, ntr) = (layout.num_scalar(), layout.num_trace);
    let mut c4 = TripletBuilder::new(nsc, nsc);
    let mut c5 = TripletBuilder::new(nsc, ntr);
    let mut c7 = TripletBuilder::new(ntr, nsc);
    let mut c8 = TripletBuilder::new(ntr, ntr);
    for_each_element_block(d, |e, lb| {
        let sr = layout.scalar_range(e);
        push_dense(&mut c4, sr.start, sr.start, &lb.c4);
        let roles = local_trace_roles(d.mesh, spaces, e);
        for (c, role) in roles.iter().enumerate() {
            let NodeRole::Free(t) = *role else { continue };
            for i in 0..lb.c5.nrows() {
                c5.push(sr.start + i, t, lb.c5[(i, c)]);
            }
            for j in 0..lb.c7.ncols() {
                c7.push(t, sr.start + j, lb.c7[(c, j)]);
            }
            for (c2, role2) in roles.iter().enumerate() {
                if let NodeRole::Free(t2) = *role2 {
                    c8.push(t, t2, lb.c8[(c, c2)]);
                }
            }
        }
    })?;
    Ok(AdjointBlocks {
        c4: c4.build(),
        c5: c5.build(),
        c7: c7.build(),
        c8: c8.build(),
    })
}

fn push_dense(t: &mut TripletBuilder, r0: usize, c0: usize, m: &DMatrix<f64>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            t.push(r0 + i, c0 + j, m[(i, j)]);
        }
    }
}

impl BlockSystem {
    /// Named blocks for coordinate-format dumps.
    pub fn named_blocks(&self) -> [(&'static str, &CsrMatrix); 8] {
        [
            ("A1", &self.a1),
            ("A2", &self.a2),
            ("A3", &self.a3),
            ("A4", &self.a4),
            ("A5", &self.a5),
            ("A6", &self.a6),
            ("A7", &self.a7),
            ("A8", &self.a8),
        ]
    }

    /// Writes each block to `<dir>/<prefix>A<i>.txt` in coordinate format.
    pub fn write_coordinate_files(&self, dir: &std::path::Path, prefix: &str) -> Result<()> {
        for (name, m) in self.named_blocks() {
            let file = std::fs::File::create(dir.join(format!("{prefix}{name}.txt")))?;
            m.write_coordinate(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }

    /// State-equation operator in `(alpha, beta, gamma)` ordering.
    pub fn state_matrix(&self) -> CsrMatrix {
        let l = &self.layout;
        let (nf, ns, nt) = (l.num_flux(), l.num_scalar(), l.num_trace);
        let n = nf + ns + nt;
        let mut t = TripletBuilder::new(n, n);
        t.push_matrix(0, 0, &self.a1);
        t.push_scaled(0, nf, &self.a2, -1.0);
        t.push_matrix(0, nf + ns, &self.a3);
        t.push_matrix(nf, 0, &self.a2.transpose());
        t.push_matrix(nf, nf, &self.a4);
        t.push_matrix(nf, nf + ns, &self.a5);
        t.push_matrix(nf + ns, 0, &self.a3.transpose());
        t.push_matrix(nf + ns, nf, &self.a7);
        t.push_scaled(nf + ns, nf + ns, &self.a8, -1.0);
        t.build()
    }

    /// Right-hand side of the state equation for a given control vector.
    pub fn state_rhs(&self, control: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.b2.iter().map(|v| -v).collect();
        let mut mid: Vec<f64> = self.b3.iter().zip(&self.b4).map(|(f, g)| f - g).collect();
        self.a6.matvec_add(control, 1.0, &mut mid);
        rhs.extend(mid);
        rhs.extend_from_slice(&self.b_trace);
        rhs
    }
}
