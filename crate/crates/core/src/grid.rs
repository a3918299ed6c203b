//! Uniform trait mesh, lumped quadrature and the zero-flux Laplacian.
//!
//! The Laplacian is the lumped-mass P1 operator `L = -W^{-1} K`, where `K` is
//! the standard P1 stiffness matrix and `W` the diagonal of trapezoid
//! weights. Because `K` is symmetric with zero row sums, `L` annihilates
//! constants and `w^T L = 0`, so diffusion conserves the quadrature mass
//! exactly.

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

/// Uniform 1-D discretization of the trait interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitGrid {
    z_min: f64,
    z_max: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TraitGrid {
    pub fn uniform(z_min: f64, z_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("trait grid needs at least 3 nodes, got {n}")));
        }
        if !(z_max > z_min) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::Config(format!(
                "trait interval must satisfy z_min < z_max, got [{z_min}, {z_max}]"
            )));
        }
        let h = (z_max - z_min) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| z_min + i as f64 * h).collect();
        nodes[n - 1] = z_max;
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(Self {
            z_min,
            z_max,
            h,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples `g` at every node.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&z| g(z)).collect()
    }

    /// Trapezoid (lumped P1) quadrature of a node vector.
    ///
    /// Panics if `f` does not have one entry per node.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len(), "node vector length mismatch");
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Quadrature of the pointwise product `a * b`.
    pub fn integrate_product(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.len(), "node vector length mismatch");
        assert_eq!(b.len(), self.len(), "node vector length mismatch");
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }
}

/// Discrete Laplacian with zero-flux boundary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannLaplacian {
    op: Tridiagonal,
}

impl NeumannLaplacian {
    pub fn new(grid: &TraitGrid) -> Self {
        let n = grid.len();
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let mut lower = vec![inv_h2; n - 1];
        let diag = vec![-2.0 * inv_h2; n];
        let mut upper = vec![inv_h2; n - 1];
        // Half-cell weights at the ends double the one-sided coupling.
        upper[0] = 2.0 * inv_h2;
        lower[n - 2] = 2.0 * inv_h2;
        Self {
            op: Tridiagonal { lower, diag, upper },
        }
    }

    pub fn operator(&self) -> &Tridiagonal {
        &self.op
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        self.op.apply(f, out);
    }

    /// `I - c L`, the implicit diffusion matrix for `c = dt * alpha`.
    pub fn implicit_matrix(&self, c: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.op.lower.iter().map(|v| -c * v).collect(),
            diag: self.op.diag.iter().map(|d| 1.0 - c * d).collect(),
            upper: self.op.upper.iter().map(|v| -c * v).collect(),
        }
    }
}
