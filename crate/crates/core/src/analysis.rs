//! Selection functional, target-set membership and reach-and-stay times.

use crate::dynamics::{Sample, Trajectory};
use crate::error::{Error, Result};
use crate::grid::TraitGrid;

/// Total biomass below which `K` is undefined.
pub const DEGENERATE_MASS: f64 = 1e-300;

/// Abundance-weighted mean half-saturation `∫ r f / ∫ f`.
pub fn k_functional(grid: &TraitGrid, r: &[f64], f: &[f64]) -> Result<f64> {
    let m = grid.integrate(f);
    if !(m > DEGENERATE_MASS) {
        return Err(Error::DegeneratePopulation(m));
    }
    Ok(grid.integrate_product(r, f) / m)
}

/// Target set `{ f : K[f] <= k0 }` over a half-saturation profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub k0: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl TargetSpec {
    /// Requires `min r < k0 < max r`; outside that band the problem is trivial
    /// or infeasible.
    pub fn new(k0: f64, r: &[f64]) -> Result<Self> {
        let r_min = r.iter().copied().fold(f64::INFINITY, f64::min);
        let r_max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(r_min < k0 && k0 < r_max) {
            return Err(Error::Config(format!(
                "threshold k0 = {k0} must lie strictly inside ({r_min}, {r_max})"
            )));
        }
        Ok(Self { k0, r_min, r_max })
    }

    pub fn contains(&self, k: f64) -> bool {
        k <= self.k0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryReport {
    /// Earliest sample time after which `K <= k0` holds up to the horizon.
    pub entry_time: Option<f64>,
    pub held_until_horizon: bool,
    /// First sample time with `K <= k0`, held or not.
    pub first_touch: Option<f64>,
    pub k_min: f64,
    /// Entry time with the final crossing located by linear interpolation
    /// of `K` between the last outside sample and the entry sample.
    pub crossing_time: Option<f64>,
}

/// Reach-and-stay time of a sample sequence. NaN values of `K` (washout)
/// count as outside the target.
pub fn entry_time_of(samples: &[Sample], k0: f64) -> EntryReport {
    let inside = |s: &Sample| s.k <= k0;
    let first_touch = samples.iter().find(|s| inside(s)).map(|s| s.t);
    let k_min = samples.iter().map(|s| s.k).fold(f64::INFINITY, f64::min);
    let entry = match samples.iter().rposition(|s| !inside(s)) {
        None if samples.is_empty() => None,
        None => Some(0),
        Some(last_out) if last_out + 1 < samples.len() => Some(last_out + 1),
        Some(_) => None,
    };
    let crossing_time = entry.map(|j| {
        if j == 0 {
            return samples[0].t;
        }
        let (a, b) = (&samples[j - 1], &samples[j]);
        if a.k.is_finite() && a.k != b.k {
            a.t + (b.t - a.t) * (a.k - k0) / (a.k - b.k)
        } else {
            b.t
        }
    });
    EntryReport {
        entry_time: entry.map(|j| samples[j].t),
        held_until_horizon: entry.is_some(),
        first_touch,
        k_min,
        crossing_time,
    }
}

pub fn entry_time(traj: &Trajectory, k0: f64) -> EntryReport {
    entry_time_of(&traj.samples, k0)
}

/// First sample time at which total biomass drops below `m_threshold`.
pub fn washout_check(traj: &Trajectory, m_threshold: f64) -> Option<f64> {
    traj.samples.iter().find(|s| s.m < m_threshold).map(|s| s.t)
}
