//! Direct quadrature evaluation of the state and adjoint bilinear forms.
//!
//! These do not touch the assembled matrices, which makes them usable as an
//! independent check of the assembly and of the energy identities.

use crate::basis::{ElementMap, NodeRole, SpaceSet};
use crate::error::{EdgError, Result};
use crate::mesh::Mesh;

use super::{Discretization, ReferenceTables};

/// Flux, scalar and free-trace coefficients of one discrete field triple.
/// Constrained trace nodes are taken as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTriple {
    pub flux: Vec<f64>,
    pub scalar: Vec<f64>,
    pub trace: Vec<f64>,
}

impl DiscreteTriple {
    pub fn zeros(spaces: &SpaceSet) -> Self {
        Self {
            flux: vec![0.0; spaces.num_flux_dofs()],
            scalar: vec![0.0; spaces.num_scalar_dofs()],
            trace: vec![0.0; spaces.num_free_trace()],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &Vec<f64>| v.iter().map(|x| s * x).collect();
        Self {
            flux: f(&self.flux),
            scalar: f(&self.scalar),
            trace: f(&self.trace),
        }
    }

    fn check(&self, spaces: &SpaceSet) -> Result<()> {
        if self.flux.len() != spaces.num_flux_dofs()
            || self.scalar.len() != spaces.num_scalar_dofs()
            || self.trace.len() != spaces.num_free_trace()
        {
            return Err(EdgError::InvalidArgument(format!(
                "triple lengths ({}, {}, {}) do not match spaces ({}, {}, {})",
                self.flux.len(),
                self.scalar.len(),
                self.trace.len(),
                spaces.num_flux_dofs(),
                spaces.num_scalar_dofs(),
                spaces.num_free_trace()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Form {
    State,
    Adjoint,
}

/// State form `B1(q, y, yhat; r, w, mu)`.
pub fn apply_b1(d: &Discretization, trial: &DiscreteTriple, test: &DiscreteTriple) -> Result<f64> {
    evaluate(d, trial, test, Form::State)
}

/// Adjoint form `B2(p, z, zhat; r, w, mu)`, with `tau2` from the parameters.
pub fn apply_b2(d: &Discretization, trial: &DiscreteTriple, test: &DiscreteTriple) -> Result<f64> {
    evaluate(d, trial, test, Form::Adjoint)
}

struct Local {
    vx: f64,
    vy: f64,
    s: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn local_trace(mesh: &Mesh, spaces: &SpaceSet, e: usize, s: usize, mu: &[f64], coeffs: &[f64]) -> f64 {
    let trace = spaces.trace();
    let face = mesh.element_faces(e)[s];
    trace
        .face_nodes(face)
        .iter()
        .zip(mu)
        .map(|(&node, v)| match trace.node_role(node) {
            NodeRole::Free(i) => v * coeffs[i],
            NodeRole::Constrained(_) => 0.0,
        })
        .sum()
}

fn evaluate(d: &Discretization, u: &DiscreteTriple, v: &DiscreteTriple, form: Form) -> Result<f64> {
    let spaces = d.spaces;
    let mesh = d.mesh;
    u.check(spaces)?;
    v.check(spaces)?;
    let ex = d.assembly_exactness();
    let tables = ReferenceTables::new(spaces, ex, ex)?;
    let m = spaces.flux_basis().dim();
    let inv_h = 1.0 / d.params.h;

    // sign of the convective coupling: state -(beta y, grad w), adjoint +(beta z, grad w)
    let conv = match form {
        Form::State => -1.0,
        Form::Adjoint => 1.0,
    };

    let eval = |t: &DiscreteTriple, e: usize, flux: &[f64], scalar: &[f64]| -> Local {
        let fc = &t.flux[spaces.flux_range(e)];
        let sc = &t.scalar[spaces.scalar_range(e)];
        Local {
            vx: dot(flux, &fc[..m]),
            vy: dot(flux, &fc[m..]),
            s: dot(scalar, sc),
        }
    };

    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let map = ElementMap::new(mesh.element_vertices(e));
        let det = map.det();
        let fr = spaces.flux_range(e);
        let sr = spaces.scalar_range(e);
        for qp in &tables.volume {
            let x = map.to_physical(qp.xi);
            let w = qp.weight * det;
            let beta = d.data.beta(x);
            let a = eval(u, e, &qp.flux, &qp.scalar);
            let b = eval(v, e, &qp.flux, &qp.scalar);
            let (mut div_r, mut grad_w) = (0.0, [0.0; 2]);
            for i in 0..m {
                let g = map.physical_gradient(qp.flux_grad[i]);
                div_r += v.flux[fr.start + i] * g[0] + v.flux[fr.start + m + i] * g[1];
            }
            for (i, r) in qp.scalar_grad.iter().enumerate() {
                let g = map.physical_gradient(*r);
                grad_w[0] += v.scalar[sr.start + i] * g[0];
                grad_w[1] += v.scalar[sr.start + i] * g[1];
            }
            let mut val = a.vx * b.vx + a.vy * b.vy - a.s * div_r;
            val -= a.vx * grad_w[0] + a.vy * grad_w[1];
            val += conv * a.s * (beta[0] * grad_w[0] + beta[1] * grad_w[1]);
            if let Form::State = form {
                val -= d.data.div_beta(x) * a.s * b.s;
            }
            total += w * val;
        }

        let faces = mesh.element_faces(e);
        for (s, points) in tables.sides.iter().enumerate() {
            let face = &mesh.faces()[faces[s]];
            let interior = !face.is_boundary();
            let len = mesh.side_length(e, s);
            let n = mesh.outward_normal(e, s)?;
            let forward = mesh.side_vertices(e, s)[0] == face.vertices[0];
            for sp in points {
                let x = map.to_physical(sp.xi);
                let w = sp.weight * len;
                let beta = d.data.beta(x);
                let bn = beta[0] * n[0] + beta[1] * n[1];
                let mu_basis = if forward { &sp.trace_fwd } else { &sp.trace_rev };
                let a = eval(u, e, &sp.flux, &sp.scalar);
                let b = eval(v, e, &sp.flux, &sp.scalar);
                let a_hat = local_trace(mesh, spaces, e, s, mu_basis, &u.trace);
                let b_hat = local_trace(mesh, spaces, e, s, mu_basis, &v.trace);
                let an = a.vx * n[0] + a.vy * n[1];
                let rn = b.vx * n[0] + b.vy * n[1];
                let mut val = 0.0;
                match form {
                    Form::State => {
                        let sigma = inv_h + d.params.tau1;
                        val += (an + sigma * a.s) * b.s;
                        if interior {
                            val += a_hat * rn;
                            val += (bn - sigma) * a_hat * b.s;
                            val -= (an + bn * a_hat + sigma * (a.s - a_hat)) * b_hat;
                        }
                    }
                    Form::Adjoint => {
                        let sigma = inv_h + d.params.tau2_at(bn);
                        val += (an + sigma * a.s) * b.s;
                        if interior {
                            val += a_hat * rn;
                            val -= (bn + sigma) * a_hat * b.s;
                            val -= (an - bn * a_hat + sigma * (a.s - a_hat)) * b_hat;
                        }
                    }
                }
                total += w * val;
            }
        }
    }
    Ok(total)
}
