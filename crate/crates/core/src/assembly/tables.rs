//! Basis values tabulated at reference quadrature points.

use crate::basis::{edge_quadrature, reference_side_point, triangle_quadrature, SpaceSet};
use crate::error::Result;
use crate::mesh::Point;

pub(crate) struct VolumePoint {
    pub xi: Point,
    pub weight: f64,
    pub scalar: Vec<f64>,
    pub scalar_grad: Vec<[f64; 2]>,
    pub flux: Vec<f64>,
    pub flux_grad: Vec<[f64; 2]>,
}

pub(crate) struct SidePoint {
    pub xi: Point,
    /// Weight on the unit interval; multiply by the side length.
    pub weight: f64,
    pub scalar: Vec<f64>,
    pub flux: Vec<f64>,
    /// Trace basis when the side runs along the face orientation.
    pub trace_fwd: Vec<f64>,
    /// Trace basis when the side runs against it.
    pub trace_rev: Vec<f64>,
}

pub(crate) struct ReferenceTables {
    pub volume: Vec<VolumePoint>,
    pub sides: [Vec<SidePoint>; 3],
}

impl ReferenceTables {
    pub fn new(spaces: &SpaceSet, triangle_exactness: usize, edge_exactness: usize) -> Result<Self> {
        let tri = triangle_quadrature(triangle_exactness)?;
        let edge = edge_quadrature(edge_exactness)?;
        let volume = tri
            .iter()
            .map(|(&xi, weight)| VolumePoint {
                xi,
                weight,
                scalar: spaces.scalar_basis().values(xi),
                scalar_grad: spaces.scalar_basis().gradients(xi),
                flux: spaces.flux_basis().values(xi),
                flux_grad: spaces.flux_basis().gradients(xi),
            })
            .collect();
        let side = |s: usize| -> Vec<SidePoint> {
            edge.iter()
                .map(|(&t, weight)| {
                    let xi = reference_side_point(s, t);
                    SidePoint {
                        xi,
                        weight,
                        scalar: spaces.scalar_basis().values(xi),
                        flux: spaces.flux_basis().values(xi),
                        trace_fwd: spaces.trace_basis().values(t),
                        trace_rev: spaces.trace_basis().values(1.0 - t),
                    }
                })
                .collect()
        };
        Ok(Self {
            volume,
            sides: [side(0), side(1), side(2)],
        })
    }
}
