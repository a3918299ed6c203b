//! Parameter sweeps over control families for the earliest reach-and-stay time.

use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::{entry_time, washout_check};
use crate::controls::{AuxostatVariant, ControlLaw};
use crate::dynamics::{simulate, Model, SimConfig, SystemState, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Auxostat IV, swept over the set-point `sigma`.
    AuxostatIv,
    /// Constant dilution `u`.
    ConstantU,
}

/// Everything a sweep row shares.
#[derive(Debug, Clone)]
pub struct SweepBase {
    pub model: Arc<Model>,
    pub cfg: SimConfig,
    pub init: SystemState,
    pub u_max: f64,
    pub clamp: bool,
    pub washout_threshold: f64,
}

impl SweepBase {
    pub fn law(&self, family: Family, param: f64) -> ControlLaw {
        let law = match family {
            Family::AuxostatIv => ControlLaw::auxostat(AuxostatVariant::IV, param, self.u_max),
            Family::ConstantU => ControlLaw::constant(param, self.u_max),
        };
        law.with_clamp(self.clamp)
    }

    pub fn simulate(&self, family: Family, param: f64) -> Result<Trajectory> {
        simulate(&self.model, &self.cfg, &self.law(family, param), &self.init)
    }

    fn admits(&self, family: Family, param: f64) -> bool {
        match family {
            Family::AuxostatIv => param > 0.0 && param < self.cfg.s_in,
            Family::ConstantU => param >= 0.0 && param <= self.u_max,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub family: Family,
    pub values: Vec<f64>,
    pub base: SweepBase,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        if let Some(v) = self.values.iter().find(|&&v| !self.base.admits(self.family, v)) {
            return Err(Error::Config(format!("sweep value {v} is outside the admissible range")));
        }
        Ok(())
    }
}

/// `count` uniformly spaced points strictly inside `(min, max)`.
pub fn open_interval(min: f64, max: f64, count: usize) -> Vec<f64> {
    let step = (max - min) / (count + 1) as f64;
    (1..=count).map(|k| min + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub entry_time: Option<f64>,
    pub held: bool,
    pub washout_time: Option<f64>,
    /// Simulation failure message; such rows never hold.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub family: Family,
    pub rows: Vec<SweepRow>,
    /// `(param, entry_time)` minimizing the entry time over held rows.
    pub best: Option<(f64, f64)>,
}

fn run_row(spec: &SweepSpec, param: f64) -> SweepRow {
    match spec.base.simulate(spec.family, param) {
        Ok(traj) => {
            let report = entry_time(&traj, spec.base.cfg.k0);
            SweepRow {
                param,
                entry_time: report.entry_time,
                held: report.held_until_horizon,
                washout_time: washout_check(&traj, spec.base.washout_threshold),
                failure: None,
            }
        }
        Err(e) => SweepRow {
            param,
            entry_time: None,
            held: false,
            washout_time: None,
            failure: Some(e.to_string()),
        },
    }
}

/// Smallest entry time over held rows; ties go to the smaller parameter.
fn best_of(rows: &[SweepRow]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for row in rows.iter().filter(|r| r.held) {
        let t = row.entry_time.expect("held rows have an entry time");
        let better = match best {
            None => true,
            Some((p, bt)) => t < bt || (t == bt && row.param < p),
        };
        if better {
            best = Some((row.param, t));
        }
    }
    best
}

fn run_rows(spec: &SweepSpec, values: &[f64], workers: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(|&p| run_row(spec, p)).collect()))
}

/// One independent simulation per value on `workers` threads. Rows come back
/// in input order whatever the worker count.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    spec.base.cfg.validate()?;
    let rows = run_rows(spec, &spec.values, workers)?;
    Ok(SweepResult {
        family: spec.family,
        best: best_of(&rows),
        rows,
    })
}

/// Re-sweeps `count` points on `[p* - width, p* + width]` (clipped to the
/// admissible range) and merges them with the coarse rows.
///
/// Panics if `result` has no best value.
pub fn refine_best(
    result: &SweepResult,
    spec: &SweepSpec,
    width: f64,
    count: usize,
    workers: usize,
) -> Result<SweepResult> {
    let (center, _) = result.best.expect("refinement needs a best value");
    if width <= 0.0 || count == 0 {
        return Ok(result.clone());
    }
    let values: Vec<f64> = if count == 1 {
        vec![center]
    } else {
        (0..count)
            .map(|k| center - width + 2.0 * width * k as f64 / (count - 1) as f64)
            .collect()
    };
    let fresh: Vec<f64> = values
        .into_iter()
        .filter(|&v| spec.base.admits(spec.family, v))
        .filter(|v| !result.rows.iter().any(|r| r.param == *v))
        .collect();
    let mut rows = result.rows.clone();
    rows.extend(run_rows(spec, &fresh, workers)?);
    rows.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(SweepResult {
        family: spec.family,
        best: best_of(&rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TraitGrid;
    use crate::kinetics::Kinetics;

    fn base(n: usize, horizon: f64, alpha: f64) -> SweepBase {
        let grid = TraitGrid::uniform(1.0, 3.0, n).unwrap();
        let kin = Kinetics::monod_profile(1.0, &grid, |z| z).unwrap();
        let bounds = kin.bounds(35.0, &grid).unwrap();
        let model = Model::new(grid, kin).unwrap();
        let init = SystemState::new(&model.grid, 0.0, 5.0, vec![5.0; n]);
        SweepBase {
            model: Arc::new(model),
            cfg: SimConfig::new(alpha, 35.0, 0.01, horizon).without_snapshots(),
            init,
            u_max: bounds.u_bar,
            clamp: true,
            washout_threshold: 1e-6,
        }
    }

    #[test]
    fn open_interval_excludes_endpoints() {
        let v = open_interval(0.0, 8.0, 3);
        assert_eq!(v, vec![2.0, 4.0, 6.0]);
        assert_eq!(open_interval(0.0, 35.0, 340).len(), 340);
    }

    #[test]
    fn best_prefers_smaller_parameter_on_ties() {
        let row = |p: f64, t: Option<f64>| SweepRow {
            param: p,
            entry_time: t,
            held: t.is_some(),
            washout_time: None,
            failure: None,
        };
        let rows = vec![row(1.0, Some(5.0)), row(2.0, Some(4.0)), row(3.0, Some(4.0)), row(4.0, None)];
        assert_eq!(best_of(&rows), Some((2.0, 4.0)));
        assert_eq!(best_of(&rows[3..]), None);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let b = base(21, 1.0, 0.001);
        let bad = |values: Vec<f64>, family| SweepSpec { family, values, base: b.clone() };
        assert!(bad(vec![], Family::ConstantU).validate().is_err());
        assert!(bad(vec![0.2, 0.1], Family::ConstantU).validate().is_err());
        assert!(bad(vec![35.0], Family::AuxostatIv).validate().is_err());
        assert!(bad(vec![0.0], Family::AuxostatIv).validate().is_err());
        assert!(bad(vec![0.1, 0.2], Family::ConstantU).validate().is_ok());
    }

    #[test]
    fn single_value_sweep() {
        let spec = SweepSpec {
            family: Family::ConstantU,
            values: vec![0.4],
            base: base(51, 30.0, 0.001),
        };
        let res = run_sweep(&spec, 1).unwrap();
        assert_eq!(res.rows.len(), 1);
        let row = &res.rows[0];
        assert_eq!(res.best.is_some(), row.held);
        if let Some((p, t)) = res.best {
            assert_eq!(p, 0.4);
            assert_eq!(Some(t), row.entry_time);
        }
    }

    #[test]
    fn failures_are_rows_not_errors() {
        let mut b = base(21, 2.0, 0.0);
        b.cfg.dt = 0.5;
        b.cfg.horizon = 2.0;
        let spec = SweepSpec {
            family: Family::ConstantU,
            values: vec![0.1, 5.0],
            base: b,
        };
        let res = run_sweep(&spec, 2).unwrap();
        assert!(res.rows[0].failure.is_none());
        assert!(res.rows[1].failure.is_some());
        assert!(!res.rows[1].held);
    }

    #[test]
    fn refinement_keeps_coarse_best_and_zero_width_is_identity() {
        let spec = SweepSpec {
            family: Family::AuxostatIv,
            values: open_interval(0.0, 6.0, 5),
            base: base(41, 40.0, 0.001),
        };
        let coarse = run_sweep(&spec, 2).unwrap();
        let (_, t0) = coarse.best.unwrap();
        assert_eq!(refine_best(&coarse, &spec, 0.0, 21, 2).unwrap(), coarse);
        let fine = refine_best(&coarse, &spec, 0.5, 5, 2).unwrap();
        let (p1, t1) = fine.best.unwrap();
        assert!(t1 <= t0 + spec.base.cfg.dt);
        let (p0, _) = coarse.best.unwrap();
        assert!((p1 - p0).abs() <= 0.5 + 1e-12);
        assert!(fine.rows.windows(2).all(|w| w[0].param < w[1].param));
    }
}
