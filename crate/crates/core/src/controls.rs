//! Open-loop dilution schedules and auxostat feedback laws.

use crate::dynamics::{Model, SystemState};
use crate::error::{Error, Result};
use crate::kinetics::KineticsBounds;

/// Relative size of `s_in - s` below which variants I and III are singular.
const SINGULAR_GAP: f64 = 1e-9;

/// The four auxostat feedback laws.
///
/// | variant | numerator        | denominator  |
/// |---------|------------------|--------------|
/// | I       | `∫ mu(s, z) f`   | `s_in - s`   |
/// | II      | `∫ mu(s, z) f`   | `s_in - σ`   |
/// | III     | `∫ mu(σ, z) f`   | `s_in - s`   |
/// | IV      | `∫ mu(σ, z) f`   | `s_in - σ`   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxostatVariant {
    I,
    II,
    III,
    IV,
}

impl AuxostatVariant {
    fn uses_set_point_rate(self) -> bool {
        matches!(self, AuxostatVariant::III | AuxostatVariant::IV)
    }

    fn uses_state_denominator(self) -> bool {
        matches!(self, AuxostatVariant::I | AuxostatVariant::III)
    }
}

/// When a composite law hands over from its first to its second law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchRule {
    /// Fixed switching time.
    At(f64),
    /// First evaluation at which `s + m <= 2 s_in`.
    BoundedState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlKind {
    Constant(f64),
    /// Right-continuous schedule: `values[k]` applies on `[breakpoints[k-1], breakpoints[k])`.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Auxostat {
        variant: AuxostatVariant,
        sigma: f64,
    },
    Composite {
        switch: SwitchRule,
        before: Box<ControlKind>,
        after: Box<ControlKind>,
    },
}

/// A dilution-rate law together with its admissibility bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub kind: ControlKind,
    pub u_max: f64,
    pub clamp: bool,
}

impl ControlLaw {
    pub fn new(kind: ControlKind, u_max: f64) -> Self {
        Self {
            kind,
            u_max,
            clamp: true,
        }
    }

    pub fn constant(value: f64, u_max: f64) -> Self {
        Self::new(ControlKind::Constant(value), u_max)
    }

    pub fn auxostat(variant: AuxostatVariant, sigma: f64, u_max: f64) -> Self {
        Self::new(ControlKind::Auxostat { variant, sigma }, u_max)
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>, u_max: f64) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Config(format!(
                "piecewise control needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("breakpoints must be strictly increasing".into()));
        }
        Ok(Self::new(ControlKind::PiecewiseConstant { breakpoints, values }, u_max))
    }

    /// Constant `upsilon` until `s + m <= 2 s_in`, then auxostat IV at `sigma`,
    /// with `u_max = u_bar`.
    pub fn reachability(bounds: KineticsBounds, sigma: f64) -> Self {
        Self::new(
            ControlKind::Composite {
                switch: SwitchRule::BoundedState,
                before: Box::new(ControlKind::Constant(bounds.upsilon)),
                after: Box::new(ControlKind::Auxostat {
                    variant: AuxostatVariant::IV,
                    sigma,
                }),
            },
            bounds.u_bar,
        )
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    /// Checks set-points and scheduled values against `s_in` and `u_max`.
    pub fn validate(&self, s_in: f64) -> Result<()> {
        if !(self.u_max > 0.0) {
            return Err(Error::Config(format!("u_max must be positive, got {}", self.u_max)));
        }
        validate_kind(&self.kind, s_in, self.u_max, self.clamp)
    }

    /// Stateless evaluation; composite laws with [`SwitchRule::BoundedState`]
    /// test the condition on `state` alone.
    pub fn evaluate(&self, t: f64, state: &SystemState, model: &Model, s_in: f64) -> Result<f64> {
        Controller::new(self).eval(t, state, model, s_in)
    }
}

fn validate_kind(kind: &ControlKind, s_in: f64, u_max: f64, clamp: bool) -> Result<()> {
    let check_rate = |v: f64| {
        if !v.is_finite() || v < 0.0 || (clamp && v > u_max) {
            Err(Error::Config(format!("control value {v} outside [0, {u_max}]")))
        } else {
            Ok(())
        }
    };
    match kind {
        ControlKind::Constant(c) => check_rate(*c),
        ControlKind::PiecewiseConstant { values, .. } => values.iter().try_for_each(|v| check_rate(*v)),
        ControlKind::Auxostat { sigma, .. } => {
            if !(*sigma >= 0.0 && *sigma < s_in) {
                Err(Error::Config(format!("set-point sigma = {sigma} must lie in [0, s_in = {s_in})")))
            } else {
                Ok(())
            }
        }
        ControlKind::Composite { before, after, .. } => {
            validate_kind(before, s_in, u_max, clamp)?;
            validate_kind(after, s_in, u_max, clamp)
        }
    }
}

/// Per-trajectory evaluator: owns composite switch latches, the cached
/// set-point growth profile and the clamp counter.
#[derive(Debug)]
pub struct Controller<'a> {
    law: &'a ControlLaw,
    latches: Vec<bool>,
    set_point_mu: Option<(f64, Vec<f64>)>,
    scratch: Vec<f64>,
    clamp_count: usize,
}

impl<'a> Controller<'a> {
    pub fn new(law: &'a ControlLaw) -> Self {
        Self {
            law,
            latches: Vec::new(),
            set_point_mu: None,
            scratch: Vec::new(),
            clamp_count: 0,
        }
    }

    /// Number of evaluations whose raw value fell outside `[0, u_max]`.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    pub fn eval(&mut self, t: f64, state: &SystemState, model: &Model, s_in: f64) -> Result<f64> {
        let mut latch = 0;
        let law = self.law;
        let raw = self.raw(&law.kind, &mut latch, t, state, model, s_in)?;
        if law.clamp && (raw < 0.0 || raw > law.u_max) {
            self.clamp_count += 1;
            Ok(raw.clamp(0.0, law.u_max))
        } else {
            Ok(raw)
        }
    }

    fn raw(
        &mut self,
        kind: &ControlKind,
        latch: &mut usize,
        t: f64,
        state: &SystemState,
        model: &Model,
        s_in: f64,
    ) -> Result<f64> {
        match kind {
            ControlKind::Constant(c) => Ok(*c),
            ControlKind::PiecewiseConstant { breakpoints, values } => {
                let k = breakpoints.partition_point(|&b| b <= t);
                Ok(values[k])
            }
            ControlKind::Auxostat { variant, sigma } => {
                self.auxostat(*variant, *sigma, state, model, s_in)
            }
            ControlKind::Composite { switch, before, after } => {
                let id = *latch;
                *latch += 1;
                if self.latches.len() <= id {
                    self.latches.resize(id + 1, false);
                }
                if !self.latches[id] {
                    self.latches[id] = match switch {
                        SwitchRule::At(t0) => t >= *t0,
                        SwitchRule::BoundedState => state.s + state.m <= 2.0 * s_in,
                    };
                }
                if self.latches[id] {
                    self.raw(after, latch, t, state, model, s_in)
                } else {
                    self.raw(before, latch, t, state, model, s_in)
                }
            }
        }
    }

    fn auxostat(
        &mut self,
        variant: AuxostatVariant,
        sigma: f64,
        state: &SystemState,
        model: &Model,
        s_in: f64,
    ) -> Result<f64> {
        let denominator = if variant.uses_state_denominator() {
            let gap = s_in - state.s;
            if gap < SINGULAR_GAP * s_in {
                return Err(Error::SingularDenominator { gap });
            }
            gap
        } else {
            s_in - sigma
        };
        let uptake = if variant.uses_set_point_rate() {
            let cached = matches!(&self.set_point_mu, Some((s, _)) if *s == sigma);
            if !cached {
                self.set_point_mu = Some((sigma, model.kinetics.eval(sigma, &model.grid)?));
            }
            let (_, mu) = self.set_point_mu.as_ref().expect("cached above");
            model.grid.integrate_product(mu, &state.f)
        } else {
            self.scratch.resize(model.grid.len(), 0.0);
            model.kinetics.eval_into(state.s, &model.grid, &mut self.scratch)?;
            model.grid.integrate_product(&self.scratch, &state.f)
        };
        Ok(uptake / denominator)
    }
}
