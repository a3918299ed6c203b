//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use trait_chemostat::spectral::operator;
use trait_chemostat::{Kinetics, Model, SystemState, TraitGrid};

pub const S_IN: f64 = 35.0;

/// Monod kinetics with `bar_mu = 1` and `r(z) = z` on `[1, 3]`.
pub fn monod_model(n: usize) -> Model {
    let grid = TraitGrid::uniform(1.0, 3.0, n).unwrap();
    let kin = Kinetics::monod_profile(1.0, &grid, |z| z).unwrap();
    Model::new(grid, kin).unwrap()
}

/// `s0 = 5`, `f0 = 5` everywhere.
pub fn flat_start(model: &Model) -> SystemState {
    SystemState::new(&model.grid, 0.0, 5.0, vec![5.0; model.grid.len()])
}

pub struct DenseEigen {
    pub top: f64,
    /// Unit-integral eigenvector of the top eigenvalue.
    pub phi: Vec<f64>,
}

/// Top eigenpair of the mutation-selection operator by a full symmetric
/// eigendecomposition of `W^{1/2} A W^{-1/2}`.
pub fn dense_eigen(model: &Model, alpha: f64, sigma: f64) -> DenseEigen {
    let a = operator(alpha, sigma, model).unwrap();
    let w = model.grid.weights();
    let n = w.len();
    let sym = DMatrix::from_fn(n, n, |i, j| a.get(i, j) * w[i].sqrt() / w[j].sqrt());
    // average out the rounding asymmetry
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let (k, top) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut phi: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] / w[i].sqrt()).collect();
    let mass: f64 = phi.iter().zip(w).map(|(p, w)| p * w).sum();
    phi.iter_mut().for_each(|p| *p /= mass);
    DenseEigen { top, phi }
}

/// Classical RK4 on the mutation-free nodal system
/// `f_i' = (mu_i(s) - u) f_i`, `s' = -sum_i w_i mu_i(s) f_i + u (s_in - s)`
/// with Monod `mu_i = s / (z_i + s)`.
pub fn rk4_no_mutation(
    grid: &TraitGrid,
    s0: f64,
    f0: &[f64],
    u: f64,
    s_in: f64,
    dt: f64,
    horizon: f64,
) -> (f64, Vec<f64>) {
    let z = grid.nodes().to_vec();
    let w = grid.weights().to_vec();
    let n = z.len();
    let rhs = |y: &[f64], out: &mut [f64]| {
        let s = y[n];
        let mut uptake = 0.0;
        for i in 0..n {
            let mu = s / (z[i] + s);
            out[i] = (mu - u) * y[i];
            uptake += w[i] * mu * y[i];
        }
        out[n] = -uptake + u * (s_in - s);
    };
    let mut y: Vec<f64> = f0.iter().copied().chain([s0]).collect();
    let steps = (horizon / dt).round() as usize;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    let mut tmp = vec![0.0; n + 1];
    for _ in 0..steps {
        rhs(&y, &mut k1);
        for i in 0..=n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..=n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..=n {
            tmp[i] = y[i] + dt * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..=n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let s = y.pop().unwrap();
    (s, y)
}

/// L1 distance between two nodal functions under the trapezoid rule.
pub fn l1_gap(grid: &TraitGrid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    grid.integrate(&d)
}
