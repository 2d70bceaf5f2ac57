//! Rate-dependent bristle friction models in lumped and distributed form.
//!
//! The core model family treats friction as the force of a viscoelastic
//! bristle whose deflection `z` relaxes toward the friction characteristic.
//! The crate provides:
//!
//! - [`friction`]: the scalar friction-curve machinery (regularized absolute
//!   value and sign, Stribeck curve, effective stiffness/damping couples and
//!   their velocity derivatives) shared by every model.
//! - [`lumped`]: the scalar ODE model with LuGre and Dahl reference variants,
//!   adaptive integration, a variation-of-constants oracle, steady states,
//!   passivity/stability diagnostics and linearization.
//! - [`distributed`]: the transport-PDE variant on a unit contact domain, with
//!   semi-Lagrangian and upwind schemes, a method-of-characteristics oracle,
//!   stationary profiles, closed-form steady forces and the distributed
//!   passivity condition.
//! - [`systems`]: coupled mechanical plants (stick-slip rig, pre-sliding mass,
//!   velocity-driven hysteresis rig, diaphragm valve).
//! - [`calibration`]: a real-coded genetic algorithm for fitting friction
//!   parameters to displacement traces.
//! - [`checks`]: an executable condensed invariant suite used by the CLI.
//!
//! All quantities are SI throughout.

pub mod calibration;
pub mod checks;
pub mod distributed;
pub mod friction;
pub mod lumped;
pub mod ode;
pub mod presets;
pub mod quad;
pub mod signal;
pub mod systems;
pub mod trace;

pub use friction::{abs_eps, sgn_eps, FrictionParams, NonDifferentiable, ParamError};
pub use lumped::{IntegrationMethod, IntegratorConfig, ModelKind};
pub use signal::{InputSignal, Signal};
pub use trace::SimTrace;
