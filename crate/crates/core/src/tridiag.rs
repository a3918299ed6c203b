//! Tridiagonal storage and the Thomas algorithm.

/// A square tridiagonal matrix stored by diagonals.
///
/// `lower[i]` is entry `(i + 1, i)`, `upper[i]` is entry `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = self * x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        if n == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.upper[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1];
        }
        out[n - 1] = self.lower[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[j]
        } else {
            0.0
        }
    }

    /// `c * I - self`
    pub fn shifted_negation(&self, c: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|v| -v).collect(),
            diag: self.diag.iter().map(|d| c - d).collect(),
            upper: self.upper.iter().map(|v| -v).collect(),
        }
    }

    /// LU factors for repeated solves. Pivoting is not performed, so the
    /// matrix must be an M-matrix or diagonally dominant.
    pub fn factor(&self) -> Option<TridiagonalFactor> {
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n.saturating_sub(1)];
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i - 1] * upper_scaled[i - 1];
            }
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                upper_scaled[i] = self.upper[i] * inv_pivot[i];
            }
        }
        Some(TridiagonalFactor {
            lower: self.lower.clone(),
            inv_pivot,
            upper_scaled,
        })
    }
}

/// Precomputed Thomas sweep coefficients.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_scaled: Vec<f64>,
}

impl TridiagonalFactor {
    /// Solves in place: `rhs` holds the right-hand side on entry and the
    /// solution on exit.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_pivot.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }

    /// Smallest pivot magnitude; positive pivots certify an M-matrix solve.
    pub fn min_pivot(&self) -> f64 {
        self.inv_pivot
            .iter()
            .map(|p| 1.0 / p)
            .fold(f64::INFINITY, f64::min)
    }
}
