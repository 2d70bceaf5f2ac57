//! Distributed bristle friction on the rescaled contact domain `xi in [0, 1]`:
//! transport-PDE integration, a method-of-characteristics oracle, stationary
//! profiles, total-force output with closed forms for constant and exponential
//! pressure, and the distributed passivity condition.
//!
//! Spatial coefficient fields (`V`, `sigma0`, `sigma1`, `p`) live in
//! [`ContactGeometry`]; the friction curve `mu(v)` and the regularization come
//! from [`FrictionParams`] (whose own `sigma0`/`sigma1` are ignored here).

mod characteristics;
mod scheme;

pub use characteristics::{characteristics_solution, CharacteristicsSolver};
pub use scheme::{
    field_records, simulate_distributed, DistForceRecord, DistributedRun, FieldRecord,
    PdeStepper, SchemeKind,
};

use thiserror::Error;

use crate::friction::{abs_eps, sgn_eps, FrictionParams, NonDifferentiable, ParamError};
use crate::lumped::{output_dv, rhs_dv};
use crate::ode::OdeError;
use crate::quad::{adaptive_simpson, bracket_relax, brent, gauss5, phi1, QuadError};

/// Distributed-model failure modes.
#[derive(Debug, Clone, Error)]
pub enum DistError {
    #[error("{op} requires constant {what} over the contact")]
    NonConstantGeometry {
        op: &'static str,
        what: &'static str,
    },
    #[error("CFL violation: dt max(V)/dx = {ratio} > 1 for the upwind scheme")]
    CflViolation { ratio: f64 },
    #[error("non-finite field value at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    NonDifferentiable(#[from] NonDifferentiable),
}

/// A scalar coefficient profile over the unit contact coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// Linear ramp between the two endpoint values.
    Linear { at0: f64, at1: f64 },
    /// Uniform samples on [0, 1] (>= 2), linearly interpolated.
    Samples(Vec<f64>),
}

impl Profile {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { at0, at1 } => at0 + (at1 - at0) * xi,
            Profile::Samples(s) => {
                let m = s.len() - 1;
                let x = (xi.clamp(0.0, 1.0)) * m as f64;
                let i = (x.floor() as usize).min(m - 1);
                let u = x - i as f64;
                s[i] * (1.0 - u) + s[i + 1] * u
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(c) => Some(*c),
            _ => None,
        }
    }

    fn min_value(&self) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { at0, at1 } => at0.min(*at1),
            Profile::Samples(s) => s.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    fn max_value(&self) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { at0, at1 } => at0.max(*at1),
            Profile::Samples(s) => s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Contact-pressure shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureProfile {
    Constant { p0: f64 },
    /// `p0 exp(-a xi)`, strictly decreasing.
    Exponential { p0: f64, a: f64 },
    /// `p0 xi (1 - xi)`, vanishing at both edges.
    Parabolic { p0: f64 },
}

impl PressureProfile {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            PressureProfile::Constant { p0 } => *p0,
            PressureProfile::Exponential { p0, a } => p0 * (-a * xi).exp(),
            PressureProfile::Parabolic { p0 } => p0 * xi * (1.0 - xi),
        }
    }

    /// `int_0^1 p(xi) dxi`, analytic per shape. The normal load is
    /// `F_z = L * integral()`.
    pub fn integral(&self) -> f64 {
        match self {
            PressureProfile::Constant { p0 } => *p0,
            PressureProfile::Exponential { p0, a } => p0 * phi1(*a),
            PressureProfile::Parabolic { p0 } => p0 / 6.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let p0 = match self {
            PressureProfile::Constant { p0 }
            | PressureProfile::Exponential { p0, .. }
            | PressureProfile::Parabolic { p0 } => *p0,
        };
        if p0 <= 0.0 {
            return Err(ParamError {
                name: "geometry.p0",
                requirement: "> 0",
                value: p0,
            });
        }
        if let PressureProfile::Exponential { a, .. } = self {
            if *a <= 0.0 {
                return Err(ParamError {
                    name: "geometry.a",
                    requirement: "> 0",
                    value: *a,
                });
            }
        }
        Ok(())
    }
}

/// Contact region: length, transport velocity, pressure and the spatially
/// varying stiffness/damping profiles, plus the discretization grid.
#[derive(Debug, Clone)]
pub struct ContactGeometry {
    /// Physical contact length L, m.
    pub length: f64,
    /// Transport velocity V(xi) > 0, m/s (unit-domain convention).
    pub transport: Profile,
    pub pressure: PressureProfile,
    /// Normalized micro-stiffness sigma0(xi) > 0, 1/m.
    pub sigma0: Profile,
    /// Normalized micro-damping sigma1(xi) >= 0, s/m.
    pub sigma1: Profile,
    /// Number of grid cells N (N+1 nodes).
    pub n_cells: usize,
}

impl ContactGeometry {
    pub fn new(
        length: f64,
        transport: Profile,
        pressure: PressureProfile,
        sigma0: Profile,
        sigma1: Profile,
        n_cells: usize,
    ) -> Result<Self, ParamError> {
        if length <= 0.0 {
            return Err(ParamError {
                name: "geometry.l",
                requirement: "> 0",
                value: length,
            });
        }
        if transport.min_value() <= 0.0 {
            return Err(ParamError {
                name: "geometry.v",
                requirement: "> 0 everywhere",
                value: transport.min_value(),
            });
        }
        pressure.validate()?;
        if sigma0.min_value() <= 0.0 {
            return Err(ParamError {
                name: "geometry.sigma0",
                requirement: "> 0 everywhere",
                value: sigma0.min_value(),
            });
        }
        if sigma1.min_value() < 0.0 {
            return Err(ParamError {
                name: "geometry.sigma1",
                requirement: ">= 0 everywhere",
                value: sigma1.min_value(),
            });
        }
        if n_cells < 4 {
            return Err(ParamError {
                name: "geometry.n",
                requirement: ">= 4",
                value: n_cells as f64,
            });
        }
        Ok(Self {
            length,
            transport,
            pressure,
            sigma0,
            sigma1,
            n_cells,
        })
    }

    /// Constant-coefficient geometry (the common case).
    pub fn uniform(
        length: f64,
        v: f64,
        pressure: PressureProfile,
        sigma0: f64,
        sigma1: f64,
        n_cells: usize,
    ) -> Result<Self, ParamError> {
        Self::new(
            length,
            Profile::Constant(v),
            pressure,
            Profile::Constant(sigma0),
            Profile::Constant(sigma1),
            n_cells,
        )
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// True when transport and both sigma profiles are constants, which
    /// unlocks the closed-form paths.
    pub fn constant_coefficients(&self) -> bool {
        matches!(self.transport, Profile::Constant(_))
            && matches!(self.sigma0, Profile::Constant(_))
            && matches!(self.sigma1, Profile::Constant(_))
    }
}

/// Spatial sample of the deflection field at one instant. `z[0] = 0` at all
/// times (bristles enter the contact undeformed).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub t: f64,
    pub z: Vec<f64>,
}

impl Field {
    pub fn zeros(geo: &ContactGeometry) -> Self {
        Self {
            t: 0.0,
            z: vec![0.0; geo.n_nodes()],
        }
    }

    /// Discrete spatial L2 norm (trapezoid weights).
    pub fn l2_norm(&self, dx: f64) -> f64 {
        let n = self.z.len() - 1;
        let mut acc = 0.5 * (self.z[0] * self.z[0] + self.z[n] * self.z[n]);
        for zi in &self.z[1..n] {
            acc += zi * zi;
        }
        (acc * dx).sqrt()
    }
}

/// `g(v, xi) = sigma1(xi) |v|_eps + mu(v)` with the local damping value.
pub(crate) fn g_local(params: &FrictionParams, sigma1_xi: f64, v: f64) -> f64 {
    sigma1_xi * abs_eps(v, params.eps) + params.mu(v)
}

/// Local effective coefficients `(bar0, bar2)` at a node.
pub(crate) fn bars_local(
    params: &FrictionParams,
    sigma0_xi: f64,
    sigma1_xi: f64,
    v: f64,
) -> (f64, f64) {
    let g = g_local(params, sigma1_xi, v);
    (
        sigma0_xi * (1.0 - sigma1_xi * abs_eps(v, params.eps) / g),
        sigma1_xi * params.mu(v) / g,
    )
}

/// Travel-time coordinate `varpi(xi) = int_0^xi 1/V`; strictly increasing,
/// `varpi(0) = 0`.
pub fn varpi(xi: f64, geo: &ContactGeometry) -> f64 {
    match &geo.transport {
        Profile::Constant(v) => xi / v,
        prof => adaptive_simpson(|x| 1.0 / prof.eval(x), 0.0, xi, 1e-13)
            .expect("transport velocity is validated positive"),
    }
}

/// Inverse of [`varpi`] by monotone root finding (1e-12 accuracy).
pub fn varpi_inv(w: f64, geo: &ContactGeometry) -> f64 {
    match &geo.transport {
        Profile::Constant(v) => (w * v).clamp(0.0, 1.0),
        _ => {
            if w <= 0.0 {
                return 0.0;
            }
            let total = varpi(1.0, geo);
            if w >= total {
                return 1.0;
            }
            brent(|xi| varpi(xi, geo) - w, 0.0, 1.0, 1e-13)
                .expect("varpi is continuous and increasing")
        }
    }
}

/// Cached strictly-increasing map between `xi` and the travel time `w`,
/// cheap in both directions. Exact for constant transport.
#[derive(Debug, Clone)]
pub struct TransportMap {
    kind: MapKind,
}

#[derive(Debug, Clone)]
enum MapKind {
    Constant(f64),
    Table {
        /// w at the fine nodes i/m, i = 0..=m.
        w: Vec<f64>,
        transport: Profile,
    },
}

const MAP_CELLS: usize = 4096;

impl TransportMap {
    pub fn new(geo: &ContactGeometry) -> Self {
        match &geo.transport {
            Profile::Constant(v) => Self {
                kind: MapKind::Constant(*v),
            },
            prof => {
                let m = MAP_CELLS;
                let mut w = Vec::with_capacity(m + 1);
                w.push(0.0);
                let mut acc = 0.0;
                for i in 0..m {
                    let a = i as f64 / m as f64;
                    let b = (i + 1) as f64 / m as f64;
                    acc += gauss5(|x| 1.0 / prof.eval(x), a, b);
                    w.push(acc);
                }
                Self {
                    kind: MapKind::Table {
                        w,
                        transport: prof.clone(),
                    },
                }
            }
        }
    }

    pub fn total(&self) -> f64 {
        match &self.kind {
            MapKind::Constant(v) => 1.0 / v,
            MapKind::Table { w, .. } => *w.last().unwrap(),
        }
    }

    pub fn w_of_xi(&self, xi: f64) -> f64 {
        match &self.kind {
            MapKind::Constant(v) => xi / v,
            MapKind::Table { w, transport } => {
                let x = xi.clamp(0.0, 1.0) * MAP_CELLS as f64;
                let i = (x.floor() as usize).min(MAP_CELLS - 1);
                let a = i as f64 / MAP_CELLS as f64;
                w[i] + gauss5(|s| 1.0 / transport.eval(s), a, xi)
            }
        }
    }

    pub fn xi_of_w(&self, want: f64) -> f64 {
        match &self.kind {
            MapKind::Constant(v) => (want * v).clamp(0.0, 1.0),
            MapKind::Table { w, transport } => {
                if want <= 0.0 {
                    return 0.0;
                }
                if want >= *w.last().unwrap() {
                    return 1.0;
                }
                let i = w.partition_point(|&wi| wi < want) - 1;
                // Newton from the cell midpoint: w'(xi) = 1/V(xi) > 0
                let a = i as f64 / MAP_CELLS as f64;
                let b = (i + 1) as f64 / MAP_CELLS as f64;
                let mut xi = 0.5 * (a + b);
                for _ in 0..8 {
                    let err = self.w_of_xi(xi) - want;
                    xi = (xi - err * transport.eval(xi)).clamp(a, b);
                }
                xi
            }
        }
    }
}

/// Stationary field under constant input `v`. Constant coefficients take the
/// closed form `z(xi) = sgn_eps(v) mu/sigma0 [1 - exp(-sigma0 |v|_eps xi /(V g))]`;
/// otherwise the stationary transport ODE is marched in `xi` with z(0) = 0.
pub fn stationary_profile(v: f64, geo: &ContactGeometry, params: &FrictionParams) -> Field {
    let n = geo.n_nodes();
    let mut z = vec![0.0; n];
    if geo.constant_coefficients() {
        let s0 = geo.sigma0.as_constant().unwrap();
        let s1 = geo.sigma1.as_constant().unwrap();
        let big_v = geo.transport.as_constant().unwrap();
        let g = g_local(params, s1, v);
        let amp = sgn_eps(v, params.eps) * params.mu(v) / s0;
        let rate = s0 * abs_eps(v, params.eps) / (big_v * g);
        for (i, zi) in z.iter_mut().enumerate() {
            let xi = i as f64 / (n - 1) as f64;
            *zi = amp * -f64::exp_m1(-rate * xi);
        }
    } else {
        // V(xi) z' = -sigma0(xi)|v|_eps/g z + mu/g v, marched by RK4 with
        // sub-steps per cell
        let slope = |xi: f64, zv: f64| {
            let s0 = geo.sigma0.eval(xi);
            let s1 = geo.sigma1.eval(xi);
            let g = g_local(params, s1, v);
            (-s0 * abs_eps(v, params.eps) / g * zv + params.mu(v) / g * v) / geo.transport.eval(xi)
        };
        let sub = 8;
        let h = geo.dx() / sub as f64;
        let mut zi = 0.0;
        for i in 1..n {
            let x0 = geo.node(i - 1);
            for s in 0..sub {
                let x = x0 + s as f64 * h;
                let k1 = slope(x, zi);
                let k2 = slope(x + 0.5 * h, zi + 0.5 * h * k1);
                let k3 = slope(x + 0.5 * h, zi + 0.5 * h * k2);
                let k4 = slope(x + h, zi + h * k3);
                zi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            z[i] = zi;
        }
    }
    Field { t: 0.0, z }
}

/// Total bristle force `F_b = int_0^1 L mu_b(xi) p(xi) dxi` by composite
/// trapezoid over the field grid, with `mu_b = bar0(xi) z + bar2(xi) v`.
pub fn total_force(field: &Field, v: f64, geo: &ContactGeometry, params: &FrictionParams) -> f64 {
    let n = field.z.len();
    let dx = 1.0 / (n - 1) as f64;
    let mut acc = 0.0;
    for (i, &zi) in field.z.iter().enumerate() {
        let xi = i as f64 * dx;
        let (bar0, bar2) = bars_local(params, geo.sigma0.eval(xi), geo.sigma1.eval(xi), v);
        let f = geo.length * (bar0 * zi + bar2 * v) * geo.pressure.eval(xi);
        let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += wgt * f;
    }
    acc * dx
}

fn require_constant(geo: &ContactGeometry, op: &'static str) -> Result<(f64, f64, f64), DistError> {
    let big_v = geo
        .transport
        .as_constant()
        .ok_or(DistError::NonConstantGeometry {
            op,
            what: "transport velocity",
        })?;
    let s0 = geo
        .sigma0
        .as_constant()
        .ok_or(DistError::NonConstantGeometry { op, what: "sigma0" })?;
    let s1 = geo
        .sigma1
        .as_constant()
        .ok_or(DistError::NonConstantGeometry { op, what: "sigma1" })?;
    Ok((big_v, s0, s1))
}

/// Closed-form steady force for constant pressure (and constant V, sigma0,
/// sigma1): `L p0 [bar0 sgn_eps(v) mu/sigma0 (x - 1 + e^-x)/x + bar2 v]`
/// with `x = sigma0 |v|_eps / (V g)`. A series kicks in for small `x`.
pub fn steady_force_constant(
    v: f64,
    geo: &ContactGeometry,
    params: &FrictionParams,
) -> Result<f64, DistError> {
    let (big_v, s0, s1) = require_constant(geo, "steady_force_constant")?;
    let p0 = match geo.pressure {
        PressureProfile::Constant { p0 } => p0,
        _ => {
            return Err(DistError::NonConstantGeometry {
                op: "steady_force_constant",
                what: "pressure",
            })
        }
    };
    let g = g_local(params, s1, v);
    let (bar0, bar2) = bars_local(params, s0, s1, v);
    let x = s0 * abs_eps(v, params.eps) / (big_v * g);
    let zbar = sgn_eps(v, params.eps) * params.mu(v) / s0;
    Ok(geo.length * p0 * (bar0 * zbar * bracket_relax(x) + bar2 * v))
}

/// Closed-form steady force for the exponential pressure `p0 exp(-a xi)`:
/// `L p0 [bar0 sgn_eps(v) mu/sigma0 (phi1(a) - phi1(a + x)) + bar2 v phi1(a)]`
/// with `phi1(y) = (1 - e^-y)/y`; reduces to the constant-pressure form as
/// `a -> 0`.
pub fn steady_force_exponential(
    v: f64,
    geo: &ContactGeometry,
    params: &FrictionParams,
) -> Result<f64, DistError> {
    let (big_v, s0, s1) = require_constant(geo, "steady_force_exponential")?;
    let (p0, a) = match geo.pressure {
        PressureProfile::Exponential { p0, a } => (p0, a),
        _ => {
            return Err(DistError::NonConstantGeometry {
                op: "steady_force_exponential",
                what: "pressure (exponential required)",
            })
        }
    };
    let g = g_local(params, s1, v);
    let (bar0, bar2) = bars_local(params, s0, s1, v);
    let x = s0 * abs_eps(v, params.eps) / (big_v * g);
    let zbar = sgn_eps(v, params.eps) * params.mu(v) / s0;
    Ok(geo.length * p0 * (bar0 * zbar * (phi1(a) - phi1(a + x)) + bar2 * v * phi1(a)))
}

/// Outcome of the distributed passivity condition `d(Sigma0 V)/dxi <= 0`
/// (equivalent to `dSigma0/dxi <= -(Sigma0/V) dV/dxi`), checked nodewise by
/// finite differences of `Sigma0(xi) V(xi)` with `Sigma0 = sigma0 p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PassivityVerdict {
    Holds,
    HoldsStrictly,
    Fails { worst_xi: f64, margin: f64 },
}

fn sigma_v_derivative(geo: &ContactGeometry) -> Vec<f64> {
    let n = geo.n_nodes();
    let dx = geo.dx();
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let xi = geo.node(i);
            geo.sigma0.eval(xi) * geo.pressure.eval(xi) * geo.transport.eval(xi)
        })
        .collect();
    (0..n)
        .map(|i| {
            if i == 0 {
                (w[1] - w[0]) / dx
            } else if i == n - 1 {
                (w[n - 1] - w[n - 2]) / dx
            } else {
                (w[i + 1] - w[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

pub fn passivity_condition(geo: &ContactGeometry) -> PassivityVerdict {
    let deriv = sigma_v_derivative(geo);
    let scale = (0..geo.n_nodes())
        .map(|i| {
            let xi = geo.node(i);
            (geo.sigma0.eval(xi) * geo.pressure.eval(xi) * geo.transport.eval(xi)).abs()
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let (mut worst, mut worst_xi) = (f64::NEG_INFINITY, 0.0);
    for (i, &d) in deriv.iter().enumerate() {
        if d > worst {
            worst = d;
            worst_xi = geo.node(i);
        }
    }
    if worst > tol {
        PassivityVerdict::Fails {
            worst_xi,
            margin: worst,
        }
    } else if worst < -tol {
        PassivityVerdict::HoldsStrictly
    } else {
        PassivityVerdict::Holds
    }
}

/// Storage `W = L/2 int Sigma0 z^2` and the passivity residual
/// `F_b v - Wdot`, evaluated from the PDE right-hand side with the transport
/// term integrated by parts (boundary term at xi = 1 plus the
/// `-(1/2) d(Sigma0 V)/dxi` weight). All residual terms are nonnegative
/// whenever the passivity condition holds.
pub fn storage_and_residual(
    field: &Field,
    v: f64,
    geo: &ContactGeometry,
    params: &FrictionParams,
) -> (f64, f64) {
    let n = field.z.len();
    let dx = 1.0 / (n - 1) as f64;
    let deriv = sigma_v_derivative(geo);
    let ve = abs_eps(v, params.eps);
    let mut w_acc = 0.0;
    let mut res_acc = 0.0;
    for (i, &zi) in field.z.iter().enumerate() {
        let xi = i as f64 * dx;
        let s0 = geo.sigma0.eval(xi);
        let s1 = geo.sigma1.eval(xi);
        let p = geo.pressure.eval(xi);
        let sigma_big = s0 * p;
        let g = g_local(params, s1, v);
        let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        w_acc += wgt * sigma_big * zi * zi;
        let decay_term = sigma_big * s0 * ve / g * zi * zi;
        let damping_term = p * s1 * params.mu(v) / g * v * v;
        let transport_weight = -0.5 * deriv[i] * zi * zi;
        res_acc += wgt * (decay_term + damping_term + transport_weight);
    }
    let w = 0.5 * geo.length * w_acc * dx;
    let zl = field.z[n - 1];
    let boundary = 0.5
        * geo.length
        * geo.sigma0.eval(1.0)
        * geo.pressure.eval(1.0)
        * geo.transport.eval(1.0)
        * zl
        * zl;
    let residual = geo.length * res_acc * dx + boundary;
    (w, residual)
}

/// Spatial coefficient fields of the linearized transport PDE around the
/// stationary profile of `v_star`.
#[derive(Debug, Clone)]
pub struct DistributedLinearization {
    pub v_star: f64,
    pub z_star: Field,
    /// Nodal decay rate `sigma0(xi) |v*|_eps / g(v*, xi)`, 1/s.
    pub decay: Vec<f64>,
    /// Nodal input gain of the state equation.
    pub h1: Vec<f64>,
    /// Nodal input feedthrough of the output map.
    pub h2: Vec<f64>,
    /// Nodal output gain `bar0(v*, xi)`.
    pub sigma_bar0: Vec<f64>,
}

/// Linearizes the distributed model at `v_star` (frozen coefficients).
pub fn linearize_distributed(
    v_star: f64,
    geo: &ContactGeometry,
    params: &FrictionParams,
) -> Result<DistributedLinearization, NonDifferentiable> {
    if v_star == 0.0 && params.eps == 0.0 {
        return Err(NonDifferentiable);
    }
    let z_star = stationary_profile(v_star, geo, params);
    let n = geo.n_nodes();
    let mut decay = Vec::with_capacity(n);
    let mut h1 = Vec::with_capacity(n);
    let mut h2 = Vec::with_capacity(n);
    let mut bar0 = Vec::with_capacity(n);
    for i in 0..n {
        let xi = geo.node(i);
        // the scalar formulas apply nodewise with the local sigma values
        let local = FrictionParams {
            sigma0: geo.sigma0.eval(xi),
            sigma1: geo.sigma1.eval(xi),
            ..*params
        };
        decay.push(local.sigma0 * abs_eps(v_star, local.eps) / local.g(v_star));
        h1.push(rhs_dv(z_star.z[i], v_star, &local)?);
        h2.push(output_dv(z_star.z[i], v_star, &local)?);
        bar0.push(local.sigma_bars(v_star).bar0);
    }
    Ok(DistributedLinearization {
        v_star,
        z_star,
        decay,
        h1,
        h2,
        sigma_bar0: bar0,
    })
}

/// Linearized total force `F_btilde = int L (bar0 ztilde + H2 vtilde) p dxi`.
pub fn linearized_force(
    field: &Field,
    vtilde: f64,
    lin: &DistributedLinearization,
    geo: &ContactGeometry,
) -> f64 {
    let n = field.z.len();
    let dx = 1.0 / (n - 1) as f64;
    let mut acc = 0.0;
    for (i, &zi) in field.z.iter().enumerate() {
        let xi = i as f64 * dx;
        let f = geo.length * (lin.sigma_bar0[i] * zi + lin.h2[i] * vtilde) * geo.pressure.eval(xi);
        let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += wgt * f;
    }
    acc * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    fn tire_geometry(pressure: PressureProfile) -> ContactGeometry {
        ContactGeometry::uniform(0.1, 10.0, pressure, 252.0, 0.0, 400).unwrap()
    }

    #[test]
    fn varpi_examples() {
        let geo = tire_geometry(PressureProfile::Constant { p0: 1.0 });
        assert_eq!(varpi(0.0, &geo), 0.0);
        assert_relative_eq!(varpi(0.7, &geo), 0.07, max_relative = 1e-14);

        let ramp = ContactGeometry::new(
            0.1,
            Profile::Linear { at0: 1.0, at1: 2.0 },
            PressureProfile::Constant { p0: 1.0 },
            Profile::Constant(252.0),
            Profile::Constant(0.0),
            100,
        )
        .unwrap();
        assert_relative_eq!(varpi(1.0, &ramp), 2.0f64.ln(), epsilon = 1e-10);
        // inverse round-trip
        for &w in &[0.0, 0.1, 0.3, 0.6] {
            let xi = varpi_inv(w, &ramp);
            assert!((varpi(xi, &ramp) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn transport_map_matches_direct_evaluation() {
        let ramp = ContactGeometry::new(
            0.1,
            Profile::Linear { at0: 0.5, at1: 3.0 },
            PressureProfile::Constant { p0: 1.0 },
            Profile::Constant(252.0),
            Profile::Constant(0.0),
            64,
        )
        .unwrap();
        let map = TransportMap::new(&ramp);
        for &xi in &[0.0, 0.2, 0.55, 0.99, 1.0] {
            assert_relative_eq!(map.w_of_xi(xi), varpi(xi, &ramp), epsilon = 1e-11);
            assert!((map.xi_of_w(map.w_of_xi(xi)) - xi).abs() < 1e-11);
        }
    }

    #[test]
    fn stationary_profile_closed_form() {
        let geo = tire_geometry(PressureProfile::Constant { p0: 1.0 });
        let p = presets::rolling_contact();
        let field = stationary_profile(2.0, &geo, &p);
        assert_eq!(field.z[0], 0.0);
        // direct evaluation of the closed form at xi = 1
        let g = p.mu(2.0);
        let rate = 252.0 * 2.0 / (10.0 * g);
        let expect = p.mu(2.0) / 252.0 * (1.0 - (-rate).exp());
        assert_relative_eq!(field.z[400], expect, epsilon = 1e-12);
        // exponent extrapolated away: the lumped steady state
        let z_inf = p.mu(2.0) / 252.0;
        assert!(field.z[400] <= z_inf + 1e-15);
    }

    #[test]
    fn stationary_profile_general_march_matches_closed_form() {
        // a "general" geometry whose profiles happen to be constant must
        // reproduce the closed form
        let geo = ContactGeometry::new(
            0.1,
            Profile::Samples(vec![10.0; 9]),
            PressureProfile::Constant { p0: 1.0 },
            Profile::Constant(252.0),
            Profile::Constant(0.0),
            200,
        )
        .unwrap();
        let reference = tire_geometry(PressureProfile::Constant { p0: 1.0 });
        let p = presets::rolling_contact();
        let marched = stationary_profile(1.5, &geo, &p);
        let closed = stationary_profile(1.5, &reference, &p);
        for i in 0..=200 {
            assert!((marched.z[i] - closed.z[2 * i]).abs() < 1e-10);
        }
    }

    #[test]
    fn total_force_with_zero_state_is_feedthrough() {
        let p = presets::servo();
        let geo = ContactGeometry::uniform(
            0.1,
            5.0,
            PressureProfile::Constant { p0: 100.0 },
            1e4,
            64.5,
            100,
        )
        .unwrap();
        let field = Field::zeros(&geo);
        let v = 0.3;
        let (_, bar2) = bars_local(&p, 1e4, 64.5, v);
        let expect = 0.1 * 100.0 * bar2 * v;
        assert_relative_eq!(total_force(&field, v, &geo, &p), expect, max_relative = 1e-12);
        assert_eq!(total_force(&field, 0.0, &geo, &p), 0.0);
    }

    #[test]
    fn steady_force_zero_velocity_vanishes() {
        let p = presets::rolling_contact();
        let geo = tire_geometry(PressureProfile::Constant { p0: 1e3 });
        assert_eq!(steady_force_constant(0.0, &geo, &p).unwrap(), 0.0);
        let geo_e = tire_geometry(PressureProfile::Exponential { p0: 1e3, a: 0.1 });
        assert_eq!(steady_force_exponential(0.0, &geo_e, &p).unwrap(), 0.0);
    }

    #[test]
    fn exponential_pressure_tends_to_constant_as_a_vanishes() {
        let p = presets::rolling_contact();
        let geo_c = tire_geometry(PressureProfile::Constant { p0: 1e3 });
        for &v in &[0.05, 0.6, 3.0, -2.0] {
            let fc = steady_force_constant(v, &geo_c, &p).unwrap();
            let geo_e = tire_geometry(PressureProfile::Exponential { p0: 1e3, a: 1e-9 });
            let fe = steady_force_exponential(v, &geo_e, &p).unwrap();
            assert_relative_eq!(fc, fe, max_relative = 1e-7);
        }
    }

    #[test]
    fn steady_force_saturates_to_friction_curve() {
        // sigma1 = 0: as x -> inf, F -> L p0 sgn(v) mu(v)
        let p = presets::rolling_contact();
        let geo = ContactGeometry::uniform(
            0.1,
            1e-3,
            PressureProfile::Constant { p0: 1e3 },
            252.0,
            0.0,
            50,
        )
        .unwrap();
        let v = 2.0;
        let f = steady_force_constant(v, &geo, &p).unwrap();
        let limit = 0.1 * 1e3 * p.mu(v);
        assert_relative_eq!(f, limit, max_relative = 1e-3);
    }

    #[test]
    fn steady_force_closed_forms_match_quadrature() {
        let p = presets::rolling_contact();
        for &v in &[0.02, 0.4, 2.0, -1.2] {
            let geo = tire_geometry(PressureProfile::Constant { p0: 1e3 });
            let profile = stationary_profile(v, &geo, &p);
            let quad = total_force(&profile, v, &geo, &p);
            let closed = steady_force_constant(v, &geo, &p).unwrap();
            assert_relative_eq!(closed, quad, max_relative = 1e-3);

            let geo_e = tire_geometry(PressureProfile::Exponential { p0: 1e3, a: 0.1 });
            let profile_e = stationary_profile(v, &geo_e, &p);
            let quad_e = total_force(&profile_e, v, &geo_e, &p);
            let closed_e = steady_force_exponential(v, &geo_e, &p).unwrap();
            assert_relative_eq!(closed_e, quad_e, max_relative = 1e-3);
        }
    }

    #[test]
    fn passivity_condition_verdicts() {
        let constant = tire_geometry(PressureProfile::Constant { p0: 1e3 });
        assert_eq!(passivity_condition(&constant), PassivityVerdict::Holds);

        let exponential = tire_geometry(PressureProfile::Exponential { p0: 1e3, a: 0.1 });
        assert_eq!(
            passivity_condition(&exponential),
            PassivityVerdict::HoldsStrictly
        );

        let parabolic = tire_geometry(PressureProfile::Parabolic { p0: 1e3 });
        match passivity_condition(&parabolic) {
            PassivityVerdict::Fails { worst_xi, margin } => {
                assert!(worst_xi < 0.25, "violation should sit near xi = 0");
                assert!(margin > 0.0);
            }
            other => panic!("expected failure for parabolic pressure, got {other:?}"),
        }
    }

    #[test]
    fn residual_structure() {
        let p = presets::servo();
        let geo = ContactGeometry::uniform(
            0.1,
            5.0,
            PressureProfile::Constant { p0: 100.0 },
            1e4,
            64.5,
            100,
        )
        .unwrap();
        // z = 0: storage zero, residual is the damping feedthrough (>= 0)
        let zero = Field::zeros(&geo);
        let (w, r) = storage_and_residual(&zero, 1.0, &geo, &p);
        assert_eq!(w, 0.0);
        assert!(r > 0.0);
        // v = 0 with eps = 0: only transport/boundary terms remain, >= 0
        let mut field = Field::zeros(&geo);
        for (i, z) in field.z.iter_mut().enumerate() {
            *z = 1e-4 * (i as f64 / 100.0).sin();
        }
        let (_, r0) = storage_and_residual(&field, 0.0, &geo, &p);
        assert!(r0 >= 0.0);

        // random fields stay nonnegative under both admissible pressures
        let mut state = 0xc0ffee123u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let geo_e = ContactGeometry::uniform(
            0.1,
            5.0,
            PressureProfile::Exponential { p0: 100.0, a: 0.7 },
            1e4,
            64.5,
            100,
        )
        .unwrap();
        for _ in 0..1000 {
            let mut f = Field::zeros(&geo);
            f.z[0] = 0.0;
            for z in f.z.iter_mut().skip(1) {
                *z = 4e-4 * (next() - 0.5);
            }
            let v = 6.0 * (next() - 0.5);
            let (_, r1) = storage_and_residual(&f, v, &geo, &p);
            let (_, r2) = storage_and_residual(&f, v, &geo_e, &p);
            assert!(r1 >= -1e-10, "constant-pressure residual {r1}");
            assert!(r2 >= -1e-10, "exponential-pressure residual {r2}");
        }
    }

    #[test]
    fn linearization_gain_shape() {
        // sigma1 = 0, constant mu: H1 is proportional to (mu - sigma0 z*)/g,
        // strictly positive inside the contact since z* < mu/sigma0
        let p = FrictionParams::new(0.4, 0.4, 1.0, 2.0, 0.0, 0.0, 252.0, 0.0).unwrap();
        let geo = ContactGeometry::uniform(
            0.1,
            10.0,
            PressureProfile::Constant { p0: 1e3 },
            252.0,
            0.0,
            100,
        )
        .unwrap();
        let lin = linearize_distributed(2.0, &geo, &p).unwrap();
        let g = p.mu(2.0);
        for i in 0..=100 {
            let expect = (p.mu(2.0) - 252.0 * lin.z_star.z[i]) / g;
            assert_relative_eq!(lin.h1[i], expect, max_relative = 1e-10);
            if i > 0 {
                assert!(lin.h1[i] > 0.0);
                assert!(lin.h1[i] < lin.h1[i - 1]);
            }
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(ContactGeometry::uniform(
            0.1,
            0.0,
            PressureProfile::Constant { p0: 1.0 },
            252.0,
            0.0,
            100
        )
        .is_err());
        assert!(ContactGeometry::uniform(
            0.1,
            1.0,
            PressureProfile::Constant { p0: -1.0 },
            252.0,
            0.0,
            100
        )
        .is_err());
        assert!(ContactGeometry::uniform(
            0.1,
            1.0,
            PressureProfile::Exponential { p0: 1.0, a: 0.0 },
            252.0,
            0.0,
            100
        )
        .is_err());
    }
}
