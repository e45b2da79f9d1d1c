//! Nodal Lagrange bases on the reference triangle and the unit interval.

use nalgebra::DMatrix;

/// Dimension of `P_degree` on a triangle.
pub fn triangle_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Nodal basis of `P_degree` on the reference triangle with equispaced nodes.
///
/// Node ordering is row by row from the bottom edge: `(i/m, j/m)` for
/// `j = 0..=m`, `i = 0..=m-j`. The degree-0 basis has one node at the
/// barycenter.
#[derive(Debug, Clone)]
pub struct LagrangeTriangle {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// Column `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
}

impl LagrangeTriangle {
    pub fn new(degree: usize) -> Self {
        let nodes: Vec<[f64; 2]> = if degree == 0 {
            vec![[1.0 / 3.0, 1.0 / 3.0]]
        } else {
            let m = degree as f64;
            (0..=degree)
                .flat_map(|j| (0..=degree - j).map(move |i| [i as f64 / m, j as f64 / m]))
                .collect()
        };
        let exponents: Vec<(i32, i32)> = (0..=degree as i32)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let dim = nodes.len();
        let vander = DMatrix::from_fn(dim, dim, |r, c| {
            let (a, b) = exponents[c];
            nodes[r][0].powi(a) * nodes[r][1].powi(b)
        });
        let coeffs = vander
            .try_inverse()
            .expect("equispaced Lagrange nodes are unisolvent");
        Self {
            degree,
            nodes,
            exponents,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn values(&self, x: [f64; 2]) -> Vec<f64> {
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| x[0].powi(a) * x[1].powi(b))
            .collect();
        (0..self.dim())
            .map(|i| {
                self.coeffs
                    .column(i)
                    .iter()
                    .zip(&mono)
                    .map(|(c, m)| c * m)
                    .sum()
            })
            .collect()
    }

    /// Reference gradients `(d/dx, d/dy)` of every basis function.
    pub fn gradients(&self, x: [f64; 2]) -> Vec<[f64; 2]> {
        let dmono: Vec<[f64; 2]> = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 {
                    a as f64 * x[0].powi(a - 1) * x[1].powi(b)
                } else {
                    0.0
                };
                let dy = if b > 0 {
                    b as f64 * x[0].powi(a) * x[1].powi(b - 1)
                } else {
                    0.0
                };
                [dx, dy]
            })
            .collect();
        (0..self.dim())
            .map(|i| {
                let col = self.coeffs.column(i);
                let mut g = [0.0; 2];
                for (c, d) in col.iter().zip(&dmono) {
                    g[0] += c * d[0];
                    g[1] += c * d[1];
                }
                g
            })
            .collect()
    }
}

/// Nodal basis of `P_degree` on `[0, 1]`.
///
/// Slot order is: the node at 0, the node at 1, then the interior nodes
/// `i/m` in increasing order. This matches how skeleton nodes are attached to
/// a face (two vertices first, then face-interior nodes).
#[derive(Debug, Clone)]
pub struct LagrangeEdge {
    degree: usize,
    nodes: Vec<f64>,
}

impl LagrangeEdge {
    pub fn new(degree: usize) -> Self {
        let nodes = if degree == 0 {
            vec![0.5]
        } else {
            let m = degree as f64;
            let mut v = vec![0.0, 1.0];
            v.extend((1..degree).map(|i| i as f64 / m));
            v
        };
        Self { degree, nodes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &tj)| (t - tj) / (self.nodes[i] - tj))
                    .product()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_at_barycenter() {
        let b = LagrangeTriangle::new(1);
        for v in b.values([1.0 / 3.0, 1.0 / 3.0]) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nodal_property() {
        for degree in 0..=4 {
            let b = LagrangeTriangle::new(degree);
            assert_eq!(b.dim(), triangle_dim(degree));
            for (i, node) in b.nodes().iter().enumerate() {
                let vals = b.values(*node);
                for (j, v) in vals.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-12, "deg {degree} node {i} fn {j}");
                }
            }
        }
    }

    #[test]
    fn quadratic_vertex_indicator() {
        let b = LagrangeTriangle::new(2);
        let vals = b.values([1.0, 0.0]);
        let hot: Vec<usize> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| (**v - 1.0).abs() < 1e-13)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(hot.len(), 1);
        assert!(vals
            .iter()
            .enumerate()
            .all(|(i, v)| i == hot[0] || v.abs() < 1e-13));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = LagrangeTriangle::new(3);
        let x = [0.21, 0.37];
        let eps = 1e-6;
        let g = b.gradients(x);
        let px = b.values([x[0] + eps, x[1]]);
        let mx = b.values([x[0] - eps, x[1]]);
        let py = b.values([x[0], x[1] + eps]);
        let my = b.values([x[0], x[1] - eps]);
        for i in 0..b.dim() {
            assert!((g[i][0] - (px[i] - mx[i]) / (2.0 * eps)).abs() < 1e-7);
            assert!((g[i][1] - (py[i] - my[i]) / (2.0 * eps)).abs() < 1e-7);
        }
    }

    #[test]
    fn edge_basis_nodal_and_partition() {
        for degree in 0..=4 {
            let e = LagrangeEdge::new(degree);
            assert_eq!(e.dim(), degree + 1);
            for (i, &t) in e.nodes().iter().enumerate() {
                for (j, v) in e.values(t).iter().enumerate() {
                    assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
            let s: f64 = e.values(0.3141).iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
    }
}
