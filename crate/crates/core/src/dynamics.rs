//! Semi-implicit Euler time stepping of the coupled population/substrate system.
//!
//! One step from `(s, f)` with dilution `u`:
//!
//! ```text
//! g      = f + dt (mu(s, .) - u) f
//! f'     = (I - dt alpha L)^{-1} g
//! s'     = s + dt (-∫ mu(s, .) f + u (s_in - s))
//! ```
//!
//! With the lumped Laplacian `w^T L = 0`, so `M = s - s_in + m` obeys
//! `M' = (1 - dt u) M` exactly.

use crate::analysis;
use crate::controls::{ControlLaw, Controller};
use crate::error::{Error, Result};
use crate::grid::{NeumannLaplacian, TraitGrid};
use crate::kinetics::Kinetics;
use crate::tridiag::TridiagonalFactor;

/// Negative entries above `-NEGATIVE_DUST * max|f|` are rounding noise.
const NEGATIVE_DUST: f64 = 1e-12;

/// The immutable part of a simulation: mesh, diffusion operator, kinetics and
/// the half-saturation profile used by the selection functional.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: TraitGrid,
    pub laplacian: NeumannLaplacian,
    pub kinetics: Kinetics,
    profile: Option<Vec<f64>>,
}

impl Model {
    pub fn new(grid: TraitGrid, kinetics: Kinetics) -> Result<Self> {
        kinetics.check_grid(&grid)?;
        let profile = kinetics.half_saturation().map(<[f64]>::to_vec);
        Ok(Self {
            laplacian: NeumannLaplacian::new(&grid),
            grid,
            kinetics,
            profile,
        })
    }

    /// Overrides the profile used for `K[f]` (required for tabulated kinetics).
    pub fn with_profile(mut self, r: Vec<f64>) -> Result<Self> {
        if r.len() != self.grid.len() {
            return Err(Error::Config(format!(
                "profile has {} values, grid has {} nodes",
                r.len(),
                self.grid.len()
            )));
        }
        self.profile = Some(r);
        Ok(self)
    }

    pub fn half_saturation(&self) -> Option<&[f64]> {
        self.profile.as_deref()
    }

    /// `K[f]`, or NaN when it is undefined (no profile, or washed out).
    pub fn selection(&self, f: &[f64]) -> f64 {
        match &self.profile {
            Some(r) => analysis::k_functional(&self.grid, r, f).unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub s: f64,
    pub f: Vec<f64>,
    /// Cached `integrate(f)`.
    pub m: f64,
}

impl SystemState {
    pub fn new(grid: &TraitGrid, t: f64, s: f64, f: Vec<f64>) -> Self {
        let m = grid.integrate(&f);
        Self { t, s, f, m }
    }

    pub fn validate(&self, grid: &TraitGrid) -> Result<()> {
        if self.f.len() != grid.len() {
            return Err(Error::Config(format!(
                "initial density has {} values, expected {}",
                self.f.len(),
                grid.len()
            )));
        }
        if let Some(v) = self.f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("initial density must be finite and nonnegative, found {v}")));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(Error::Config(format!("initial substrate must be nonnegative, got {}", self.s)));
        }
        Ok(())
    }

    /// `M = s - s_in + m`.
    pub fn excess(&self, s_in: f64) -> f64 {
        self.s - s_in + self.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: f64,
    pub s_in: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Steps between density snapshots; `None` disables them.
    pub snapshot_every: Option<usize>,
    pub k0: f64,
}

impl SimConfig {
    /// Snapshots default to every tenth of the horizon, `k0` to 1.5.
    pub fn new(alpha: f64, s_in: f64, dt: f64, horizon: f64) -> Self {
        let steps = step_count(horizon, dt);
        Self {
            alpha,
            s_in,
            dt,
            horizon,
            snapshot_every: Some((steps / 10).max(1)),
            k0: 1.5,
        }
    }

    pub fn without_snapshots(mut self) -> Self {
        self.snapshot_every = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return bad(format!("horizon must be at least dt, got {}", self.horizon));
        }
        if !(self.s_in > 0.0) || !self.s_in.is_finite() {
            return bad(format!("s_in must be positive, got {}", self.s_in));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if self.snapshot_every == Some(0) {
            return bad("snapshot_every must be positive".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        step_count(self.horizon, self.dt)
    }
}

/// `ceil(horizon / dt)`, insensitive to rounding in the quotient.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let q = horizon / dt;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        q.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub m: f64,
    /// Dilution applied from this sample to the next.
    pub u: f64,
    /// `K[f]`; NaN when undefined.
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub clamp_count: usize,
    /// `max_n |M^n - M^0 prod_{k<n} (1 - dt u^k)|`.
    pub m_law_residual: f64,
    /// Per-node maximum of `f` over every step.
    pub node_peak: Vec<f64>,
    pub alpha: f64,
    pub initial: SystemState,
    pub last: SystemState,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least one sample")
    }
}

/// Reusable per-simulation workspace for [`Stepper::step`].
#[derive(Debug)]
pub struct Stepper<'a> {
    model: &'a Model,
    dt: f64,
    s_in: f64,
    diffusion: Option<TridiagonalFactor>,
    mu: Vec<f64>,
    next: Vec<f64>,
    steps_taken: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let diffusion = if cfg.alpha > 0.0 {
            let m = model.laplacian.implicit_matrix(cfg.dt * cfg.alpha);
            Some(m.factor().ok_or_else(|| Error::Config("implicit diffusion matrix is singular".into()))?)
        } else {
            None
        };
        let n = model.grid.len();
        Ok(Self {
            model,
            dt: cfg.dt,
            s_in: cfg.s_in,
            diffusion,
            mu: vec![0.0; n],
            next: vec![0.0; n],
            steps_taken: 0,
        })
    }

    /// Advances `state` by one step under dilution `u`.
    pub fn step(&mut self, state: &mut SystemState, u: f64) -> Result<()> {
        let step = self.steps_taken;
        let grid = &self.model.grid;
        let dt = self.dt;
        self.model.kinetics.eval_into(state.s, grid, &mut self.mu)?;
        let uptake = grid.integrate_product(&self.mu, &state.f);

        for ((g, f), mu) in self.next.iter_mut().zip(&state.f).zip(&self.mu) {
            *g = f + dt * (mu - u) * f;
        }
        if let Some(lu) = &self.diffusion {
            lu.solve_in_place(&mut self.next);
        }

        let mut min = f64::INFINITY;
        let mut max_abs = 0.0_f64;
        let mut finite = true;
        for v in &self.next {
            finite &= v.is_finite();
            min = min.min(*v);
            max_abs = max_abs.max(v.abs());
        }
        let s_next = state.s + dt * (-uptake + u * (self.s_in - state.s));
        if !finite || !s_next.is_finite() {
            return Err(Error::Blowup { step });
        }
        if min < 0.0 {
            if min < -NEGATIVE_DUST * max_abs {
                return Err(Error::Positivity { step, min });
            }
            for v in self.next.iter_mut().filter(|v| **v < 0.0) {
                *v = 0.0;
            }
        }

        std::mem::swap(&mut state.f, &mut self.next);
        state.s = s_next;
        state.m = grid.integrate(&state.f);
        state.t += dt;
        self.steps_taken += 1;
        Ok(())
    }
}

/// One step without a reusable workspace.
pub fn step(model: &Model, cfg: &SimConfig, state: &SystemState, u: f64) -> Result<SystemState> {
    if !(u >= 0.0) {
        return Err(Error::Config(format!("dilution rate must be nonnegative, got {u}")));
    }
    let mut next = state.clone();
    Stepper::new(model, cfg)?.step(&mut next, u)?;
    Ok(next)
}

pub fn simulate(model: &Model, cfg: &SimConfig, law: &ControlLaw, init: &SystemState) -> Result<Trajectory> {
    simulate_with(model, cfg, law, init, |_, _| {})
}

/// Runs the closed loop for `cfg.steps()` steps, calling `observe(state, u)`
/// on the initial state and after every step.
pub fn simulate_with(
    model: &Model,
    cfg: &SimConfig,
    law: &ControlLaw,
    init: &SystemState,
    mut observe: impl FnMut(&SystemState, f64),
) -> Result<Trajectory> {
    init.validate(&model.grid)?;
    law.validate(cfg.s_in)?;
    let mut stepper = Stepper::new(model, cfg)?;
    let mut controller = Controller::new(law);
    let steps = cfg.steps();
    let t0 = init.t;

    let mut state = init.clone();
    state.m = model.grid.integrate(&state.f);
    let excess0 = state.excess(cfg.s_in);
    let mut decay = 1.0;
    let mut residual = 0.0_f64;

    let mut node_peak = state.f.clone();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut u = controller
        .eval(state.t, &state, model, cfg.s_in)
        .map_err(|e| e.at(state.t))?;

    for n in 0..=steps {
        observe(&state, u);
        samples.push(Sample {
            t: state.t,
            s: state.s,
            m: state.m,
            u,
            k: model.selection(&state.f),
        });
        if let Some(every) = cfg.snapshot_every {
            if n % every == 0 || n == steps {
                snapshots.push(Snapshot {
                    t: state.t,
                    f: state.f.clone(),
                });
            }
        }
        if n == steps {
            break;
        }
        let t = state.t;
        stepper.step(&mut state, u).map_err(|e| e.at(t))?;
        // keep t on the lattice t0 + n dt
        state.t = t0 + (n + 1) as f64 * cfg.dt;
        for (p, v) in node_peak.iter_mut().zip(&state.f) {
            *p = p.max(*v);
        }
        decay *= 1.0 - cfg.dt * u;
        residual = residual.max((state.excess(cfg.s_in) - excess0 * decay).abs());
        u = controller
            .eval(state.t, &state, model, cfg.s_in)
            .map_err(|e| e.at(state.t))?;
    }

    Ok(Trajectory {
        samples,
        snapshots,
        clamp_count: controller.clamp_count(),
        m_law_residual: residual,
        node_peak,
        alpha: cfg.alpha,
        initial: init.clone(),
        last: state,
    })
}

/// Nodes whose density exceeded `threshold` at any step. Only meaningful
/// without mutation.
///
/// Panics when called on a trajectory with `alpha > 0`.
pub fn support_mask(traj: &Trajectory, threshold: f64) -> Vec<bool> {
    assert!(traj.alpha == 0.0, "support preservation only holds for alpha = 0");
    traj.node_peak.iter().map(|&v| v > threshold).collect()
}
