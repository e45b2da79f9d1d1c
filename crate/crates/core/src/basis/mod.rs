//! Finite element spaces: discontinuous `[P_k]^2` fluxes, discontinuous
//! `P_{k+1}` scalars and a continuous degree-`k+1` trace space on the mesh
//! skeleton.

mod lagrange;
mod quadrature;

pub use lagrange::{triangle_dim, LagrangeEdge, LagrangeTriangle};
pub use quadrature::{edge_quadrature, triangle_quadrature, QuadratureRule, MAX_EXACTNESS};

use crate::mesh::{Mesh, Point};

/// Reference triangle vertices; local side `s` runs from vertex `s` to `s+1`.
pub const REFERENCE_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Point on local side `s` of the reference triangle at arc parameter `t`.
pub fn reference_side_point(side: usize, t: f64) -> Point {
    let a = REFERENCE_VERTICES[side];
    let b = REFERENCE_VERTICES[(side + 1) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Affine map from the reference triangle onto a mesh element.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    origin: Point,
    jac: [[f64; 2]; 2],
    det: f64,
    inv_t: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // inverse transpose of the Jacobian
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        Self {
            origin: p0,
            jac,
            det,
            inv_t,
        }
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

/// Which skeleton nodes are prescribed by the boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Every node lying on the domain boundary takes the interpolated
    /// boundary value, including endpoints of interior faces. The full trace
    /// is then globally continuous.
    #[default]
    ConstrainBoundaryNodes,
    /// Only nodes of boundary faces are prescribed. Interior faces meeting
    /// the boundary at a vertex share one free unknown there, continuous
    /// across interior faces but not with the boundary data.
    FreeInteriorFaceNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Free(usize),
    Constrained(usize),
}

/// Global numbering of the continuous skeleton space.
#[derive(Debug, Clone)]
pub struct TraceDofMap {
    mode: TraceMode,
    slots_per_face: usize,
    face_nodes: Vec<usize>,
    node_coords: Vec<Point>,
    node_roles: Vec<NodeRole>,
    free_nodes: Vec<usize>,
    constrained_nodes: Vec<usize>,
    element_free_dofs: Vec<Vec<usize>>,
}

impl TraceDofMap {
    /// Numbers the degree-`k+1` Lagrange nodes of the skeleton: one node per
    /// mesh vertex plus `k` equispaced nodes inside every face.
    pub fn build(mesh: &Mesh, k: usize, mode: TraceMode) -> Self {
        let slots = k + 2;
        let nv = mesh.vertices().len();
        let mut node_coords: Vec<Point> = mesh.vertices().to_vec();
        let mut on_boundary: Vec<bool> = (0..nv).map(|v| mesh.is_boundary_vertex(v)).collect();
        // interior-face copies of boundary vertices, created on demand
        let mut shadow: Vec<Option<usize>> = vec![None; nv];

        let mut face_nodes = Vec::with_capacity(mesh.num_faces() * slots);
        for face in mesh.faces() {
            let [a, b] = face.vertices;
            for v in [a, b] {
                let node = match mode {
                    TraceMode::FreeInteriorFaceNodes
                        if !face.is_boundary() && mesh.is_boundary_vertex(v) =>
                    {
                        *shadow[v].get_or_insert_with(|| {
                            node_coords.push(mesh.vertices()[v]);
                            on_boundary.push(false);
                            node_coords.len() - 1
                        })
                    }
                    _ => v,
                };
                face_nodes.push(node);
            }
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            for i in 1..=k {
                let t = i as f64 / (k + 1) as f64;
                node_coords.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                on_boundary.push(face.is_boundary());
                face_nodes.push(node_coords.len() - 1);
            }
        }

        let mut free_nodes = Vec::new();
        let mut constrained_nodes = Vec::new();
        let node_roles: Vec<NodeRole> = on_boundary
            .iter()
            .enumerate()
            .map(|(node, &bdry)| {
                if bdry {
                    constrained_nodes.push(node);
                    NodeRole::Constrained(constrained_nodes.len() - 1)
                } else {
                    free_nodes.push(node);
                    NodeRole::Free(free_nodes.len() - 1)
                }
            })
            .collect();

        let element_free_dofs = (0..mesh.num_elements())
            .map(|e| {
                let mut dofs: Vec<usize> = mesh
                    .element_faces(e)
                    .iter()
                    .flat_map(|&f| face_nodes[f * slots..(f + 1) * slots].iter())
                    .filter_map(|&node| match node_roles[node] {
                        NodeRole::Free(d) => Some(d),
                        NodeRole::Constrained(_) => None,
                    })
                    .collect();
                dofs.sort_unstable();
                dofs.dedup();
                dofs
            })
            .collect();

        Self {
            mode,
            slots_per_face: slots,
            face_nodes,
            node_coords,
            node_roles,
            free_nodes,
            constrained_nodes,
            element_free_dofs,
        }
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    pub fn slots_per_face(&self) -> usize {
        self.slots_per_face
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained_nodes.len()
    }

    /// Skeleton node attached to each slot of a face.
    pub fn face_nodes(&self, face: usize) -> &[usize] {
        &self.face_nodes[face * self.slots_per_face..(face + 1) * self.slots_per_face]
    }

    pub fn node_role(&self, node: usize) -> NodeRole {
        self.node_roles[node]
    }

    pub fn node_coords(&self, node: usize) -> Point {
        self.node_coords[node]
    }

    pub fn free_node_coords(&self) -> impl Iterator<Item = Point> + '_ {
        self.free_nodes.iter().map(|&n| self.node_coords[n])
    }

    pub fn constrained_node_coords(&self) -> impl Iterator<Item = Point> + '_ {
        self.constrained_nodes.iter().map(|&n| self.node_coords[n])
    }

    /// Sorted free trace dofs living on the sides of an element.
    pub fn element_free_dofs(&self, element: usize) -> &[usize] {
        &self.element_free_dofs[element]
    }
}

/// Face parameter (from the face's lower-numbered vertex) of the point at arc
/// parameter `t` along a local element side.
pub fn face_parameter(mesh: &Mesh, element: usize, local_side: usize, t: f64) -> f64 {
    let face = mesh.faces()[mesh.element_faces(element)[local_side]].vertices;
    if mesh.side_vertices(element, local_side)[0] == face[0] {
        t
    } else {
        1.0 - t
    }
}

/// The three discrete spaces on a mesh for degree parameter `k`.
#[derive(Debug, Clone)]
pub struct SpaceSet {
    k: usize,
    num_elements: usize,
    flux_basis: LagrangeTriangle,
    scalar_basis: LagrangeTriangle,
    trace_basis: LagrangeEdge,
    trace: TraceDofMap,
}

impl SpaceSet {
    pub fn new(mesh: &Mesh, k: usize, mode: TraceMode) -> Self {
        Self {
            k,
            num_elements: mesh.num_elements(),
            flux_basis: LagrangeTriangle::new(k),
            scalar_basis: LagrangeTriangle::new(k + 1),
            trace_basis: LagrangeEdge::new(k + 1),
            trace: TraceDofMap::build(mesh, k, mode),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Nodal basis for each flux component.
    pub fn flux_basis(&self) -> &LagrangeTriangle {
        &self.flux_basis
    }

    pub fn scalar_basis(&self) -> &LagrangeTriangle {
        &self.scalar_basis
    }

    pub fn trace_basis(&self) -> &LagrangeEdge {
        &self.trace_basis
    }

    pub fn trace(&self) -> &TraceDofMap {
        &self.trace
    }

    /// Both flux components: the x-component functions come first.
    pub fn flux_per_element(&self) -> usize {
        2 * self.flux_basis.dim()
    }

    pub fn scalar_per_element(&self) -> usize {
        self.scalar_basis.dim()
    }

    pub fn num_flux_dofs(&self) -> usize {
        self.num_elements * self.flux_per_element()
    }

    pub fn num_scalar_dofs(&self) -> usize {
        self.num_elements * self.scalar_per_element()
    }

    pub fn num_free_trace(&self) -> usize {
        self.trace.num_free()
    }

    pub fn flux_range(&self, element: usize) -> std::ops::Range<usize> {
        let nf = self.flux_per_element();
        element * nf..(element + 1) * nf
    }

    pub fn scalar_range(&self, element: usize) -> std::ops::Range<usize> {
        let ns = self.scalar_per_element();
        element * ns..(element + 1) * ns
    }

    /// Value of a scalar field at reference point `xi` of an element.
    pub fn scalar_at(&self, coeffs: &[f64], element: usize, xi: Point) -> f64 {
        let c = &coeffs[self.scalar_range(element)];
        self.scalar_basis
            .values(xi)
            .iter()
            .zip(c)
            .map(|(v, c)| v * c)
            .sum()
    }

    pub fn flux_at(&self, coeffs: &[f64], element: usize, xi: Point) -> [f64; 2] {
        let c = &coeffs[self.flux_range(element)];
        let m = self.flux_basis.dim();
        let vals = self.flux_basis.values(xi);
        let mut out = [0.0; 2];
        for (i, v) in vals.iter().enumerate() {
            out[0] += v * c[i];
            out[1] += v * c[m + i];
        }
        out
    }

    /// Value of the full trace on a local side at arc parameter `t`, from
    /// free coefficients and values at the constrained nodes.
    pub fn trace_at(
        &self,
        mesh: &Mesh,
        free: &[f64],
        constrained: &[f64],
        element: usize,
        local_side: usize,
        t: f64,
    ) -> f64 {
        let face = mesh.element_faces(element)[local_side];
        let tf = face_parameter(mesh, element, local_side, t);
        self.trace_basis
            .values(tf)
            .iter()
            .zip(self.trace.face_nodes(face))
            .map(|(v, &node)| match self.trace.node_role(node) {
                NodeRole::Free(d) => v * free[d],
                NodeRole::Constrained(c) => v * constrained[c],
            })
            .sum()
    }
}

/// Nodal interpolant of boundary data: its value at every constrained
/// skeleton node, in constrained-dof order.
pub fn interpolate_boundary<G: Fn(Point) -> f64>(g: G, spaces: &SpaceSet) -> Vec<f64> {
    spaces.trace().constrained_node_coords().map(g).collect()
}
