//! Structured triangulations of the unit square.
//!
//! Every square cell of an `n x n` grid is split along its lower-left to
//! upper-right diagonal. Triangles are stored counterclockwise and local side
//! `s` joins local vertices `s` and `s + 1 (mod 3)`. Faces are identified by
//! their sorted vertex pair.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{EdgError, Result};

pub type Point = [f64; 2];

/// How each square cell is cut into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Cut from `(x, y)` to `(x + 1/n, y + 1/n)`.
    #[default]
    LowerLeftToUpperRight,
    /// Cut from `(x, y + 1/n)` to `(x + 1/n, y)`.
    UpperLeftToLowerRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceClass {
    Interior,
    Boundary,
}

/// One side of one element, seen from that element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local_side: usize,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Sorted vertex pair; `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// First adjacent element; the second one exists only for interior faces.
    pub sides: [Option<FaceSide>; 2],
    pub class: FaceClass,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.class == FaceClass::Boundary
    }

    pub fn adjacent(&self) -> impl Iterator<Item = FaceSide> + '_ {
        self.sides.iter().flatten().copied()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// Face index of each local side of each element.
    element_faces: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    n: usize,
    h: f64,
}

impl Mesh {
    /// Uniform triangulation of `[0,1]^2` with `n` cells per axis.
    pub fn build_structured(n: usize, diagonal: Diagonal) -> Result<Self> {
        if n == 0 {
            return Err(EdgError::InvalidArgument(
                "mesh needs at least one subdivision per axis".into(),
            ));
        }
        let stride = n + 1;
        let mut vertices = Vec::with_capacity(stride * stride);
        let mut boundary_vertex = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * stride + i;
                let v10 = v00 + 1;
                let v01 = v00 + stride;
                let v11 = v01 + 1;
                match diagonal {
                    Diagonal::LowerLeftToUpperRight => {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    }
                    Diagonal::UpperLeftToLowerRight => {
                        triangles.push([v00, v10, v01]);
                        triangles.push([v10, v11, v01]);
                    }
                }
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * n * n + 2 * n);
        let mut faces: Vec<Face> = Vec::with_capacity(3 * n * n + 2 * n);
        let mut element_faces = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for s in 0..3 {
                let (a, b) = (tri[s], tri[(s + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let side = FaceSide {
                    element: e,
                    local_side: s,
                };
                let f = *lookup.entry(key).or_insert_with(|| {
                    faces.push(Face {
                        vertices: [key.0, key.1],
                        sides: [None, None],
                        class: FaceClass::Boundary,
                    });
                    faces.len() - 1
                });
                let face = &mut faces[f];
                if face.sides[0].is_none() {
                    face.sides[0] = Some(side);
                } else {
                    face.sides[1] = Some(side);
                    face.class = FaceClass::Interior;
                }
                local[s] = f;
            }
            element_faces.push(local);
        }

        Ok(Self {
            vertices,
            triangles,
            faces,
            element_faces,
            boundary_vertex,
            n,
            h: std::f64::consts::SQRT_2 / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn element_faces(&self, element: usize) -> [usize; 3] {
        self.element_faces[element]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn element_vertices(&self, element: usize) -> [Point; 3] {
        let t = self.triangles[element];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Global vertex indices at the start and end of a local side, in
    /// counterclockwise order.
    pub fn side_vertices(&self, element: usize, local_side: usize) -> [usize; 2] {
        let t = self.triangles[element];
        [t[local_side], t[(local_side + 1) % 3]]
    }

    pub fn signed_area(&self, element: usize) -> f64 {
        let [a, b, c] = self.element_vertices(element);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn side_length(&self, element: usize, local_side: usize) -> f64 {
        let [a, b] = self.side_vertices(element, local_side);
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Unit normal pointing out of `element` across `local_side`.
    pub fn outward_normal(&self, element: usize, local_side: usize) -> Result<[f64; 2]> {
        if element >= self.num_elements() || local_side > 2 {
            return Err(EdgError::InvalidArgument(format!(
                "no side {local_side} on element {element}"
            )));
        }
        let [a, b] = self.side_vertices(element, local_side);
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = dx.hypot(dy);
        // counterclockwise ordering puts the interior on the left
        Ok([dy / len, -dx / len])
    }

    /// Plain-text dump: vertex count and coordinates, then triangle count and
    /// vertex triples.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        writeln!(out, "{}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
