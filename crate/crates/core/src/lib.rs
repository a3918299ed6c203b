//! Trait-structured chemostat: simulation, auxostat control, stationary
//! states and minimum-time target search.
//!
//! A population density `f(t, z)` over a trait interval competes for one
//! substrate `s(t)` under a dilution rate `u(t)`:
//!
//! ```text
//! ∂t f = (mu(s, z) - u) f + alpha ∂zz f,      zero flux at the trait bounds
//! s'   = -∫ mu(s, z) f dz + u (s_in - s)
//! ```
//!
//! The selection target is `K[f] = ∫ r f / ∫ f <= k0`, the abundance-weighted
//! mean half-saturation.

pub mod analysis;
pub mod controls;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod kinetics;
pub mod output;
pub mod search;
pub mod spectral;
pub mod tridiag;

pub use analysis::{entry_time, k_functional, washout_check, EntryReport, TargetSpec};
pub use controls::{AuxostatVariant, ControlKind, ControlLaw, Controller, SwitchRule};
pub use dynamics::{simulate, simulate_with, step, support_mask, Model, Sample, SimConfig, SystemState, Trajectory};
pub use error::{Error, Result};
pub use grid::{NeumannLaplacian, TraitGrid};
pub use kinetics::{Kinetics, KineticsBounds};
pub use search::{refine_best, run_sweep, Family, SweepBase, SweepResult, SweepRow, SweepSpec};
pub use spectral::{eigen_k_curve, principal_eigenpair, stationary_state, EigenPair, StationaryState};
