//! Lumped bristle friction model: ODE integration, the transition-matrix
//! (variation-of-constants) oracle, steady states, passivity and stability
//! diagnostics, and linearization. LuGre and Dahl reference variants share
//! the same interface.

use thiserror::Error;

use crate::friction::{abs_eps, sgn_eps, FrictionParams, NonDifferentiable, ParamError};
use crate::ode::{self, Emit, OdeError, OdeOptions};
use crate::quad::{adaptive_simpson, CumulativeIntegral, QuadError};
use crate::signal::Signal;
use crate::trace::{CsvRecord, SimTrace};

/// Which bristle model drives the state equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// First-order model with the damping-aware denominator `g = sigma1|v|_eps + mu`.
    Frbd,
    /// Classical reference: `zdot = v - sigma0 |v|_eps / mu_L(v) z` with the
    /// Stribeck curve (no viscous term) in the denominator and the viscous
    /// force `sigma2 v p` added to the output.
    LuGre,
    /// Constant-coefficient special case: requires `sigma1 = 0`, `mu_s = mu_d`.
    Dahl,
}

impl ModelKind {
    /// Checks the structural constraints a variant puts on the parameters.
    pub fn validate(&self, params: &FrictionParams) -> Result<(), ParamError> {
        if let ModelKind::Dahl = self {
            if params.sigma1 != 0.0 {
                return Err(ParamError {
                    name: "sigma1",
                    requirement: "0 for the Dahl variant",
                    value: params.sigma1,
                });
            }
            if params.mu_s != params.mu_d {
                return Err(ParamError {
                    name: "mu_s",
                    requirement: "equal to mu_d for the Dahl variant",
                    value: params.mu_s,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMethod {
    Rk4Fixed,
    Rk45Adaptive,
}

/// Integration setup shared by the lumped model and the coupled plants.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub method: IntegrationMethod,
    /// Fixed step (rk4) or initial step (rk45).
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    /// Output decimation: `None` records every accepted step.
    pub out_dt: Option<f64>,
    /// Optional hard cap on the adaptive step.
    pub h_max: Option<f64>,
}

impl IntegratorConfig {
    /// Default adaptive configuration (rtol 1e-8, atol 1e-10).
    pub fn rk45(t_end: f64) -> Self {
        Self {
            method: IntegrationMethod::Rk45Adaptive,
            dt: 1e-3,
            rtol: 1e-8,
            atol: 1e-10,
            t_end,
            out_dt: None,
            h_max: None,
        }
    }

    pub fn rk4(t_end: f64, dt: f64) -> Self {
        Self {
            method: IntegrationMethod::Rk4Fixed,
            dt,
            rtol: 1e-8,
            atol: 1e-10,
            t_end,
            out_dt: None,
            h_max: None,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |name: &'static str, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ParamError {
                    name,
                    requirement: "> 0",
                    value,
                })
            }
        };
        check("integrator.dt", self.dt, self.dt > 0.0)?;
        check("integrator.rtol", self.rtol, self.rtol > 0.0)?;
        check("integrator.atol", self.atol, self.atol > 0.0)?;
        check("integrator.t_end", self.t_end, self.t_end > 0.0)?;
        if let Some(o) = self.out_dt {
            check("integrator.out_dt", o, o > 0.0)?;
        }
        if let Some(h) = self.h_max {
            check("integrator.h_max", h, h > 0.0)?;
        }
        Ok(())
    }

    pub(crate) fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_init: self.dt,
            h_max: self.h_max.unwrap_or(f64::INFINITY),
            ..Default::default()
        }
    }
}

/// Simulation failure modes across the crate.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("input {name} leaves its admissible range [{lo}, {hi}] (attains {attained})")]
    InputOutOfRange {
        name: &'static str,
        lo: f64,
        hi: f64,
        attained: f64,
    },
}

/// One output record of a lumped simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedState {
    pub t: f64,
    pub v: f64,
    /// Bristle deflection, m.
    pub z: f64,
    pub zdot: f64,
    /// Virtual friction coefficient `sigma_bar0 z + sigma_bar2 v`.
    pub mu_b: f64,
    /// Output force `mu_b p`, N.
    pub f_b: f64,
    /// Storage `Sigma0/2 z^2` with `Sigma0 = sigma0 p`.
    pub w: f64,
    /// Passivity residual `F_b v - Wdot`; nonnegative along trajectories.
    pub residual: f64,
}

impl CsvRecord for LumpedState {
    const HEADER: &'static str = "t,v,z,zdot,mu_b,F_b,W,residual";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[
            self.t,
            self.v,
            self.z,
            self.zdot,
            self.mu_b,
            self.f_b,
            self.w,
            self.residual,
        ]);
    }
}

/// State equation right-hand side for each variant.
pub fn rhs(z: f64, v: f64, params: &FrictionParams, kind: ModelKind) -> f64 {
    let ve = abs_eps(v, params.eps);
    match kind {
        ModelKind::Frbd => {
            let g = params.g(v);
            -params.sigma0 * ve / g * z + params.mu(v) / g * v
        }
        ModelKind::LuGre => v - params.sigma0 * ve / params.mu_stribeck(v) * z,
        ModelKind::Dahl => v - params.sigma0 * ve / params.mu_d * z,
    }
}

/// Virtual friction coefficient of each variant.
pub fn mu_b(z: f64, v: f64, params: &FrictionParams, kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Frbd => {
            let sb = params.sigma_bars(v);
            sb.bar0 * z + sb.bar2 * v
        }
        ModelKind::LuGre => {
            params.sigma0 * z
                + params.sigma1 * rhs(z, v, params, ModelKind::LuGre)
                + params.sigma2 * v
        }
        ModelKind::Dahl => params.sigma0 * z,
    }
}

fn make_record(
    t: f64,
    v: f64,
    z: f64,
    p: f64,
    params: &FrictionParams,
    kind: ModelKind,
) -> LumpedState {
    let zdot = rhs(z, v, params, kind);
    let mu = mu_b(z, v, params, kind);
    let f_b = mu * p;
    let sigma_big = params.sigma0 * p;
    let w = 0.5 * sigma_big * z * z;
    let residual = match kind {
        ModelKind::Frbd => passivity_residual(z, v, params, p),
        _ => f_b * v - sigma_big * z * zdot,
    };
    LumpedState {
        t,
        v,
        z,
        zdot,
        mu_b: mu,
        f_b,
        w,
        residual,
    }
}

/// Runs the configured integrator on an N-dimensional system, reporting
/// accepted (and possibly decimated) states to `sink`.
pub(crate) fn drive<const N: usize, F, S>(
    f: F,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    mut sink: S,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    match cfg.method {
        IntegrationMethod::Rk45Adaptive => {
            let emit = match cfg.out_dt {
                Some(dt) => Emit::Grid { dt },
                None => Emit::EveryStep,
            };
            ode::rk45(f, 0.0, y0, cfg.t_end, &cfg.ode_options(), emit, sink)
        }
        IntegrationMethod::Rk4Fixed => {
            let mut next_out = 0.0;
            ode::rk4_fixed(f, 0.0, y0, cfg.t_end, cfg.dt, |t, y| {
                let due = match cfg.out_dt {
                    Some(_) => t + 1e-12 >= next_out || t >= cfg.t_end,
                    None => true,
                };
                if due {
                    if let Some(o) = cfg.out_dt {
                        while next_out <= t + 1e-12 {
                            next_out += o;
                        }
                    }
                    sink(t, y);
                }
            })
        }
    }
}

/// Integrates the bristle ODE under input `v(t)` and normal load `p`.
pub fn integrate<S: Signal>(
    z0: f64,
    v: &S,
    p: f64,
    cfg: &IntegratorConfig,
    params: &FrictionParams,
    kind: ModelKind,
) -> Result<SimTrace<LumpedState>, SimError> {
    cfg.validate()?;
    kind.validate(params)?;
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 1]| [rhs(y[0], v.eval(t), params, kind)];
    drive(f, [z0], cfg, |t, y| {
        trace
            .records
            .push(make_record(t, v.eval(t), y[0], p, params, kind));
    })?;
    Ok(trace)
}

/// Variation-of-constants evaluator for the FrBD state equation: the
/// decay exponent is accumulated once over `[0, t_max]`, then `eval(t, z0)`
/// computes the transition term and the input convolution by adaptive
/// quadrature. Serves as the integration oracle.
pub struct ClosedFormSolver<'a, S: Signal> {
    v: &'a S,
    params: FrictionParams,
    accum: CumulativeIntegral,
    t_max: f64,
    conv_tol: f64,
}

impl<'a, S: Signal> ClosedFormSolver<'a, S> {
    pub fn new(
        v: &'a S,
        params: &FrictionParams,
        t_max: f64,
        conv_tol: f64,
    ) -> Result<Self, QuadError> {
        let p = *params;
        let decay = move |s: f64| {
            let vv = v.eval(s);
            p.sigma0 * abs_eps(vv, p.eps) / p.g(vv)
        };
        let (accum, _) = CumulativeIntegral::build(decay, 0.0, t_max, 1e-9)?;
        Ok(Self {
            v,
            params: p,
            accum,
            t_max,
            conv_tol,
        })
    }

    fn decay_at(&self, s: f64) -> f64 {
        let vv = self.v.eval(s);
        self.params.sigma0 * abs_eps(vv, self.params.eps) / self.params.g(vv)
    }

    /// Accumulated decay exponent over `[0, s]`.
    fn exponent(&self, s: f64) -> f64 {
        self.accum.eval(|x| self.decay_at(x), s)
    }

    pub fn eval(&self, t: f64, z0: f64) -> Result<f64, QuadError> {
        assert!(
            t <= self.t_max + 1e-12,
            "closed-form solver built for [0, {}], asked for {}",
            self.t_max,
            t
        );
        if t <= 0.0 {
            return Ok(z0);
        }
        let a_t = self.exponent(t);
        let conv = adaptive_simpson(
            |s| {
                let vv = self.v.eval(s);
                let g = self.params.g(vv);
                (self.exponent(s) - a_t).exp() * self.params.mu(vv) / g * vv
            },
            0.0,
            t,
            self.conv_tol,
        )?;
        Ok((-a_t).exp() * z0 + conv)
    }
}

/// One-shot evaluation of the transition-matrix solution at time `t`.
pub fn closed_form_solution<S: Signal>(
    t: f64,
    z0: f64,
    v: &S,
    params: &FrictionParams,
    quad_tol: f64,
) -> Result<f64, QuadError> {
    ClosedFormSolver::new(v, params, t.max(0.0), quad_tol)?.eval(t.max(0.0), z0)
}

/// Stationary deflection and force under constant velocity and load:
/// `z* = sgn_eps(v) mu(v)/sigma0`, `F* = sgn_eps(v) mu(v) p`.
pub fn steady_state(v: f64, params: &FrictionParams, p: f64) -> (f64, f64) {
    let z_star = sgn_eps(v, params.eps) * params.mu(v) / params.sigma0;
    (z_star, params.friction_force_r(v, p))
}

/// Closed-form passivity residual `F_b v - Wdot`:
/// `Sigma0 sigma0 |v|_eps/g z^2 + p sigma1 mu/g v^2`, nonnegative by
/// construction (constant sigma0 hypothesis).
pub fn passivity_residual(z: f64, v: f64, params: &FrictionParams, p: f64) -> f64 {
    let g = params.g(v);
    let sigma_big = params.sigma0 * p;
    sigma_big * params.sigma0 * abs_eps(v, params.eps) / g * z * z
        + p * params.sigma1 * params.mu(v) / g * v * v
}

/// Deflection bound `mu_s/sigma0 + sigma2 v_max/sigma0` valid whenever the
/// input stays within `|v| <= v_max`.
pub fn mu_bar_max(params: &FrictionParams, v_max: f64) -> f64 {
    (params.mu_s + params.sigma2 * v_max.abs()) / params.sigma0
}

/// State-equation sensitivity to the deflection (exact at any point).
pub fn rhs_dz(v: f64, params: &FrictionParams) -> f64 {
    -params.sigma0 * abs_eps(v, params.eps) / params.g(v)
}

/// State-equation sensitivity to the velocity at `(z, v)`.
pub fn rhs_dv(z: f64, v: f64, params: &FrictionParams) -> Result<f64, NonDifferentiable> {
    if v == 0.0 && params.eps == 0.0 {
        return Err(NonDifferentiable);
    }
    let g = params.g(v);
    let mu = params.mu(v);
    let ve = abs_eps(v, params.eps);
    let dabs = sgn_eps(v, params.eps);
    let dg = params.dg_dv(v)?;
    let dmu = params.dmu_dv(v)?;
    Ok(mu / g * (1.0 - v * dg / g) + v * dmu / g - params.sigma0 * z / g * (dabs - ve * dg / g))
}

/// Output-map sensitivity to the velocity at `(z, v)`.
pub fn output_dv(z: f64, v: f64, params: &FrictionParams) -> Result<f64, NonDifferentiable> {
    let (db0, db2) = params.d_sigma_bars_dv(v)?;
    Ok(db0 * z + db2 * v + params.sigma_bars(v).bar2)
}

/// Linearized model around the stationary point of a constant input.
#[derive(Debug, Clone, Copy)]
pub struct Linearization {
    pub v_star: f64,
    pub z_star: f64,
    /// Pole of the scalar dynamics, 1/s (negative).
    pub a: f64,
    /// Input gain of the state equation.
    pub h1: f64,
    /// Input feedthrough of the output map.
    pub h2: f64,
    /// Output gain on the state.
    pub sigma_bar0: f64,
}

/// Linearizes the FrBD model at the stationary solution of `v_star`.
pub fn linearize(v_star: f64, params: &FrictionParams) -> Result<Linearization, NonDifferentiable> {
    let (z_star, _) = steady_state(v_star, params, 1.0);
    Ok(Linearization {
        v_star,
        z_star,
        a: rhs_dz(v_star, params),
        h1: rhs_dv(z_star, v_star, params)?,
        h2: output_dv(z_star, v_star, params)?,
        sigma_bar0: params.sigma_bars(v_star).bar0,
    })
}

/// Output record of the linearized simulation (perturbation quantities).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedState {
    pub t: f64,
    pub v: f64,
    pub z: f64,
    pub mu_b: f64,
    pub f_b: f64,
}

impl CsvRecord for LinearizedState {
    const HEADER: &'static str = "t,v,z,mu_b,F_b";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[self.t, self.v, self.z, self.mu_b, self.f_b]);
    }
}

/// Simulates the linearized dynamics `ztilde' = A ztilde + H1 vtilde(t)`
/// with output `mu_btilde = sigma_bar0 ztilde + H2 vtilde`.
pub fn simulate_linearized<S: Signal>(
    ztilde0: f64,
    vtilde: &S,
    v_star: f64,
    p: f64,
    cfg: &IntegratorConfig,
    params: &FrictionParams,
) -> Result<SimTrace<LinearizedState>, SimError> {
    cfg.validate()?;
    let lin = linearize(v_star, params).map_err(|_| ParamError {
        name: "v_star",
        requirement: "nonzero when eps = 0 (differentiability)",
        value: v_star,
    })?;
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 1]| [lin.a * y[0] + lin.h1 * vtilde.eval(t)];
    drive(f, [ztilde0], cfg, |t, y| {
        let vt = vtilde.eval(t);
        let mu = lin.sigma_bar0 * y[0] + lin.h2 * vt;
        trace.records.push(LinearizedState {
            t,
            v: vt,
            z: y[0],
            mu_b: mu,
            f_b: mu * p,
        });
    })?;
    Ok(trace)
}
