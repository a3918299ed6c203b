//! Growth functions `mu(s, z)` and the admissibility constants derived from them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TraitGrid;

/// Growth rate as a function of substrate and trait coordinate.
pub type GrowthFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Substrate points used for brute-force maximization over `[0, s_in]`.
const BOUND_SAMPLES: usize = 1001;

#[derive(Clone)]
pub enum Kinetics {
    /// `mu(s, z) = bar_mu * s / (r(z) + s)` with `r` sampled at the grid nodes.
    Monod { bar_mu: f64, r: Vec<f64> },
    /// Arbitrary kinetics evaluated pointwise; `mu(0, z)` is taken as zero.
    Tabulated(GrowthFn),
}

impl fmt::Debug for Kinetics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kinetics::Monod { bar_mu, r } => f
                .debug_struct("Monod")
                .field("bar_mu", bar_mu)
                .field("nodes", &r.len())
                .finish(),
            Kinetics::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

/// Supremum of the growth rate and the dilution bound built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticsBounds {
    pub upsilon: f64,
    pub u_bar: f64,
}

impl Kinetics {
    pub fn monod(bar_mu: f64, r: Vec<f64>) -> Result<Self> {
        if !(bar_mu > 0.0) || !bar_mu.is_finite() {
            return Err(Error::Config(format!("bar_mu must be positive, got {bar_mu}")));
        }
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!(
                "half-saturation must be positive, r[{i}] = {v}"
            )));
        }
        Ok(Kinetics::Monod { bar_mu, r })
    }

    /// Monod kinetics with `r` sampled from an analytic profile.
    pub fn monod_profile(bar_mu: f64, grid: &TraitGrid, r: impl Fn(f64) -> f64) -> Result<Self> {
        Self::monod(bar_mu, grid.sample(r))
    }

    pub fn tabulated(mu: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Kinetics::Tabulated(Arc::new(mu))
    }

    /// Half-saturation node values, when the kinetics has them.
    pub fn half_saturation(&self) -> Option<&[f64]> {
        match self {
            Kinetics::Monod { r, .. } => Some(r),
            Kinetics::Tabulated(_) => None,
        }
    }

    /// Monod slope bound `bar_mu / min r`, so that `mu(s, z) <= slope * s`.
    pub fn linear_bound(&self) -> Option<f64> {
        match self {
            Kinetics::Monod { bar_mu, r } => {
                Some(bar_mu / r.iter().copied().fold(f64::INFINITY, f64::min))
            }
            Kinetics::Tabulated(_) => None,
        }
    }

    pub fn check_grid(&self, grid: &TraitGrid) -> Result<()> {
        if let Kinetics::Monod { r, .. } = self {
            if r.len() != grid.len() {
                return Err(Error::Config(format!(
                    "r has {} values but the grid has {} nodes",
                    r.len(),
                    grid.len()
                )));
            }
        }
        Ok(())
    }

    /// Writes `mu(s, z_i)` for every node into `out`.
    pub fn eval_into(&self, s: f64, grid: &TraitGrid, out: &mut [f64]) -> Result<()> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeSubstrate(s));
        }
        assert_eq!(out.len(), grid.len(), "node vector length mismatch");
        if s == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        match self {
            Kinetics::Monod { bar_mu, r } => {
                for (o, ri) in out.iter_mut().zip(r) {
                    *o = bar_mu * s / (ri + s);
                }
            }
            Kinetics::Tabulated(mu) => {
                for (o, &z) in out.iter_mut().zip(grid.nodes()) {
                    *o = mu(s, z);
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64, grid: &TraitGrid) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        self.eval_into(s, grid, &mut out)?;
        Ok(out)
    }

    /// `upsilon = sup mu` over `[0, s_in] x grid` and `u_bar = max(upsilon, 4 upsilon s_in)`.
    pub fn bounds(&self, s_in: f64, grid: &TraitGrid) -> Result<KineticsBounds> {
        if !(s_in > 0.0) || !s_in.is_finite() {
            return Err(Error::Config(format!("s_in must be positive, got {s_in}")));
        }
        let upsilon = match self {
            Kinetics::Monod { bar_mu, r } => {
                let r_min = r.iter().copied().fold(f64::INFINITY, f64::min);
                bar_mu * s_in / (r_min + s_in)
            }
            Kinetics::Tabulated(_) => {
                let mut best = 0.0_f64;
                let mut buf = vec![0.0; grid.len()];
                for k in 0..BOUND_SAMPLES {
                    let s = s_in * k as f64 / (BOUND_SAMPLES - 1) as f64;
                    self.eval_into(s, grid, &mut buf)?;
                    best = buf.iter().copied().fold(best, f64::max);
                }
                best
            }
        };
        Ok(KineticsBounds {
            upsilon,
            u_bar: upsilon.max(4.0 * upsilon * s_in),
        })
    }
}
