//! Gauss–Legendre rules on the unit interval and collapsed (Duffy) product
//! rules on the reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`.

use crate::error::{EdgError, Result};

/// Largest polynomial degree the rule constructors accept.
pub const MAX_EXACTNESS: usize = 60;

#[derive(Debug, Clone)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: usize,
}

impl<P> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(npts: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; npts];
    let mut weights = vec![0.0; npts];
    let nf = npts as f64;
    for i in 0..npts.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(npts, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(npts, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[npts - 1 - i] = x;
        weights[i] = w;
        weights[npts - 1 - i] = w;
    }
    if npts % 2 == 1 {
        nodes[npts / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(EdgError::UnsupportedDegree {
            requested: exactness,
            max: MAX_EXACTNESS,
        });
    }
    Ok(())
}

/// Rule on `[0, 1]` exact for polynomials of degree `exactness`.
pub fn edge_quadrature(exactness: usize) -> Result<QuadratureRule<f64>> {
    check_exactness(exactness)?;
    let npts = (exactness + 2) / 2;
    let (x, w) = gauss_legendre(npts.max(1));
    Ok(QuadratureRule {
        points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        exactness,
    })
}

/// Rule on the reference triangle exact for bivariate polynomials of total
/// degree `exactness`. Weights are positive and sum to 1/2.
pub fn triangle_quadrature(exactness: usize) -> Result<QuadratureRule<[f64; 2]>> {
    if exactness == 0 {
        return Err(EdgError::InvalidArgument(
            "triangle quadrature exactness must be at least 1".into(),
        ));
    }
    check_exactness(exactness)?;
    // x = a, y = (1 - a) b; the Jacobian (1 - a) raises the degree in `a` by one
    let npts = (exactness + 3) / 2;
    let (x, w) = gauss_legendre(npts);
    let unit: Vec<(f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(t, w)| (0.5 * (t + 1.0), 0.5 * w))
        .collect();
    let mut points = Vec::with_capacity(npts * npts);
    let mut weights = Vec::with_capacity(npts * npts);
    for &(a, wa) in &unit {
        for &(b, wb) in &unit {
            points.push([a, (1.0 - a) * b]);
            weights.push(wa * wb * (1.0 - a));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness,
    })
}
