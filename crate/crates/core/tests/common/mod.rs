//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use edg_core::basis::{edge_quadrature, reference_side_point, triangle_quadrature, ElementMap};
use edg_core::{BlockSystem, DiscreteTriple, Discretization, SpaceSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_triple(spaces: &SpaceSet, rng: &mut ChaCha8Rng) -> DiscreteTriple {
    DiscreteTriple {
        flux: random_vec(rng, spaces.num_flux_dofs()),
        scalar: random_vec(rng, spaces.num_scalar_dofs()),
        trace: random_vec(rng, spaces.num_free_trace()),
    }
}

pub fn negated(t: &DiscreteTriple, flux: f64, scalar: f64, trace: f64) -> DiscreteTriple {
    DiscreteTriple {
        flux: t.flux.iter().map(|v| flux * v).collect(),
        scalar: t.scalar.iter().map(|v| scalar * v).collect(),
        trace: t.trace.iter().map(|v| trace * v).collect(),
    }
}

#[derive(Clone, Copy)]
pub enum Energy {
    State,
    Adjoint,
}

/// Closed-form energy of `B1(v; v)` or `B2(v; v)`:
///
/// ```text
/// ||r||^2 - 1/2 (div beta w, w)
///   + sum over interior sides  <(sigma -+ beta.n/2) (w - mu)^2>
///   + sum over boundary sides  <(sigma -+ beta.n/2) w^2>
/// ```
///
/// with `sigma = 1/h + tau1, -` for the state and `sigma = 1/h + tau2, +`
/// for the adjoint. Evaluated with its own quadrature from pointwise field
/// values.
pub fn energy(d: &Discretization, v: &DiscreteTriple, which: Energy) -> f64 {
    let (mesh, spaces) = (d.mesh, d.spaces);
    let k = spaces.k();
    let tri = triangle_quadrature(2 * k + 6).unwrap();
    let edge = edge_quadrature(2 * k + 6).unwrap();
    let zeros = vec![0.0; spaces.trace().num_constrained()];
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let map = ElementMap::new(mesh.element_vertices(e));
        for (xi, w) in tri.iter() {
            let x = map.to_physical(*xi);
            let r = spaces.flux_at(&v.flux, e, *xi);
            let s = spaces.scalar_at(&v.scalar, e, *xi);
            let wt = w * map.det();
            total += wt * (r[0] * r[0] + r[1] * r[1] - 0.5 * d.data.div_beta(x) * s * s);
        }
        let faces = mesh.element_faces(e);
        for side in 0..3 {
            let interior = !mesh.faces()[faces[side]].is_boundary();
            let n = mesh.outward_normal(e, side).unwrap();
            let len = mesh.side_length(e, side);
            for (&t, w) in edge.iter() {
                let xi = reference_side_point(side, t);
                let x = map.to_physical(xi);
                let b = d.data.beta(x);
                let bn = b[0] * n[0] + b[1] * n[1];
                let coef = match which {
                    Energy::State => d.params.sigma1() - 0.5 * bn,
                    Energy::Adjoint => d.params.sigma2(bn) + 0.5 * bn,
                };
                let s = spaces.scalar_at(&v.scalar, e, xi);
                let jump = if interior {
                    s - spaces.trace_at(mesh, &v.trace, &zeros, e, side, t)
                } else {
                    s
                };
                total += w * len * coef * jump * jump;
            }
        }
    }
    total
}

/// Reduced trace equation `[G5 G6] [gamma; zeta] = H3`, obtained by dense
/// Gaussian elimination of the flux and scalar unknowns from the full state
/// equation.
pub struct DenseReduction {
    pub g5: DMatrix<f64>,
    pub g6: DMatrix<f64>,
    pub h3: DVector<f64>,
    /// `(alpha, beta)` as an affine function of `(gamma, zeta)`.
    pub interior_map: DMatrix<f64>,
    pub interior_offset: DVector<f64>,
}

pub fn dense_reduction(sys: &BlockSystem) -> DenseReduction {
    let l = &sys.layout;
    let (nf, ns, nt) = (l.num_flux(), l.num_scalar(), l.num_trace);
    let ni = nf + ns;
    let s = sys.state_matrix().to_dense();
    let a6 = sys.a6.to_dense();
    // full operator acting on (alpha, beta, gamma, zeta)
    let mut m = DMatrix::<f64>::zeros(ni + nt, ni + nt + ns);
    m.view_mut((0, 0), (ni + nt, ni + nt)).copy_from(&s);
    m.view_mut((nf, ni + nt), (ns, ns)).copy_from(&(-a6));
    let rhs = DVector::from_vec(sys.state_rhs(&vec![0.0; ns]));

    let m_ii = m.view((0, 0), (ni, ni)).into_owned();
    let m_ir = m.view((0, ni), (ni, nt + ns)).into_owned();
    let m_3i = m.view((ni, 0), (nt, ni)).into_owned();
    let m_3r = m.view((ni, ni), (nt, nt + ns)).into_owned();
    let r_i = rhs.rows(0, ni).into_owned();
    let r_3 = rhs.rows(ni, nt).into_owned();

    let lu = m_ii.lu();
    let x_ir = lu.solve(&m_ir).expect("interior block invertible");
    let x_ri = lu.solve(&r_i).expect("interior block invertible");
    let reduced = &m_3r - &m_3i * &x_ir;
    DenseReduction {
        g5: reduced.columns(0, nt).into_owned(),
        g6: reduced.columns(nt, ns).into_owned(),
        h3: &r_3 - &m_3i * &x_ri,
        interior_map: -x_ir,
        interior_offset: x_ri,
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn relative(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}
