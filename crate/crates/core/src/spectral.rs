//! Principal eigenpair of `alpha L + diag(mu(sigma, .))` and the stationary
//! state it parametrizes.
//!
//! The operator is tridiagonal and similar to a symmetric matrix through the
//! quadrature weights (`W L` is symmetric). The top eigenvalue is bracketed by
//! Sturm-sequence bisection on the symmetrized matrix, then the eigenvector
//! is obtained by power iteration on `(theta I - A)^{-1}` with `theta` just
//! above it. That resolvent is the inverse of a nonsingular M-matrix, so the
//! iterates stay strictly positive.

use rayon::prelude::*;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::grid::TraitGrid;
use crate::tridiag::Tridiagonal;

pub const DEFAULT_TOL: f64 = 1e-10;
/// Iterations without halving the residual before a rounding-limited
/// residual is accepted.
const STALL_ITERATIONS: usize = 10;

pub const DEFAULT_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Principal eigenvalue in the convention `alpha L phi + mu phi = -lambda1 phi`.
    pub lambda1: f64,
    /// Positive eigenfunction with unit integral.
    pub phi: Vec<f64>,
    /// `max |A phi + lambda1 phi|`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    pub s_bar: f64,
    pub f_bar: Vec<f64>,
    /// Total mass `s_in - sigma`.
    pub theta: f64,
}

/// `alpha L + diag(mu(sigma, .))`.
pub fn operator(alpha: f64, sigma: f64, model: &Model) -> Result<Tridiagonal> {
    let mu = model.kinetics.eval(sigma, &model.grid)?;
    let lap = model.laplacian.operator();
    Ok(Tridiagonal {
        lower: lap.lower.iter().map(|v| alpha * v).collect(),
        diag: lap.diag.iter().zip(&mu).map(|(d, m)| alpha * d + m).collect(),
        upper: lap.upper.iter().map(|v| alpha * v).collect(),
    })
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` below `x`.
fn sturm_count(diag: &[f64], off_sq: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off_sq[i - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket `[lo, hi]` of the largest eigenvalue, tight to rounding level.
fn top_eigenvalue_bracket(a: &Tridiagonal) -> (f64, f64, f64) {
    let n = a.len();
    let off_sq: Vec<f64> = a.lower.iter().zip(&a.upper).map(|(l, u)| l * u).collect();
    let radius = |i: usize| {
        let left = if i > 0 { off_sq[i - 1].sqrt() } else { 0.0 };
        let right = if i + 1 < n { off_sq[i].sqrt() } else { 0.0 };
        left + right
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a.diag[i] - radius(i));
        hi = hi.max(a.diag[i] + radius(i));
    }
    let spread = (hi - lo).max(1.0);
    let mut left = lo;
    let mut right = hi;
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid <= left || mid >= right {
            break;
        }
        if sturm_count(&a.diag, &off_sq, mid) == n {
            right = mid;
        } else {
            left = mid;
        }
        if right - left <= 4.0 * f64::EPSILON * spread {
            break;
        }
    }
    (left, right, spread)
}

/// Weighted Rayleigh quotient `phi^T W A phi / phi^T W phi`.
fn rayleigh(grid: &TraitGrid, a: &Tridiagonal, phi: &[f64], work: &mut [f64]) -> f64 {
    a.apply(phi, work);
    grid.integrate_product(phi, work) / grid.integrate_product(phi, phi)
}

fn normalize_l1(grid: &TraitGrid, v: &mut [f64]) {
    let mass = grid.integrate(v);
    v.iter_mut().for_each(|x| *x /= mass);
}

pub fn principal_eigenpair(
    alpha: f64,
    sigma: f64,
    model: &Model,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!(
            "principal eigenpair needs alpha > 0, got {alpha}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("set-point must be positive, got {sigma}")));
    }
    let grid = &model.grid;
    let n = grid.len();
    let a = operator(alpha, sigma, model)?;
    let (_, top, spread) = top_eigenvalue_bracket(&a);
    let theta = top + 1e-9 * spread;
    let resolvent = a
        .shifted_negation(theta)
        .factor()
        .ok_or_else(|| Error::NoConvergence { iterations: 0, residual: f64::INFINITY })?;

    let norm_a = (0..n)
        .map(|i| a.diag[i].abs() + if i > 0 { a.lower[i - 1].abs() } else { 0.0 } + if i + 1 < n { a.upper[i].abs() } else { 0.0 })
        .fold(0.0, f64::max);

    let mut phi = vec![1.0; n];
    normalize_l1(grid, &mut phi);
    let mut work = vec![0.0; n];
    let mut estimate = rayleigh(grid, &a, &phi, &mut work);
    let mut residual = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut last_gain = 0;

    for it in 1..=max_iter {
        resolvent.solve_in_place(&mut phi);
        normalize_l1(grid, &mut phi);
        let next = rayleigh(grid, &a, &phi, &mut work);
        let delta = (next - estimate).abs();
        estimate = next;

        // work holds A phi from the Rayleigh quotient
        residual = work
            .iter()
            .zip(&phi)
            .map(|(ap, p)| (ap - estimate * p).abs())
            .fold(0.0, f64::max);
        let phi_max = phi.iter().copied().fold(0.0, f64::max);
        if residual < 0.5 * best_residual {
            best_residual = residual;
            last_gain = it;
        }
        // once rounding dominates the residual stops improving; accept it
        // if it is within a few ulps of the operator norm
        let floor = 16.0 * f64::EPSILON * norm_a * phi_max;
        let converged = delta < tol.max(16.0 * f64::EPSILON * norm_a) && residual <= tol;
        let stalled = it >= last_gain + STALL_ITERATIONS && residual <= floor;
        if it >= 2 && (converged || stalled) {
            if phi.iter().any(|&p| !(p > 0.0)) {
                return Err(Error::NoConvergence { iterations: it, residual });
            }
            return Ok(EigenPair {
                lambda1: -estimate,
                phi,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `(sigma, (s_in - sigma) phi)` with `phi` of unit integral.
pub fn stationary_state(pair: &EigenPair, sigma: f64, s_in: f64) -> Result<StationaryState> {
    if !(sigma < s_in) {
        return Err(Error::Config(format!(
            "set-point sigma = {sigma} must be below s_in = {s_in}"
        )));
    }
    let theta = s_in - sigma;
    Ok(StationaryState {
        s_bar: sigma,
        f_bar: pair.phi.iter().map(|p| theta * p).collect(),
        theta,
    })
}

/// `K[phi_{sigma, alpha}]` for each mutation rate, computed in parallel.
pub fn eigen_k_curve(
    alphas: &[f64],
    sigma: f64,
    model: &Model,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<(f64, f64)>> {
    let r = model
        .half_saturation()
        .ok_or_else(|| Error::Config("K needs a half-saturation profile".into()))?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let pair = principal_eigenpair(alpha, sigma, model, tol, max_iter)?;
            let k = crate::analysis::k_functional(&model.grid, r, &pair.phi)?;
            Ok((alpha, k))
        })
        .collect()
}
