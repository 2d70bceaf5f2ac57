//! Method-of-characteristics evaluation of the transport PDE: the
//! quadrature-based oracle the marching schemes are checked against.
//!
//! In travel-time coordinates `eta = varpi(xi)` the solution is
//!
//! ```text
//! z(xi, t) = int_{max(varpi(xi)-t, 0)}^{varpi(xi)} Phi(varpi(xi), eta, t)
//!              mu(v(tau)) / g(v(tau), xi(eta)) v(tau) d eta
//!          + Phi(varpi(xi), max(varpi(xi)-t, 0), t) z0(xi(lower limit))
//! ```
//!
//! with `tau = eta - varpi(xi) + t` and the decay kernel
//! `Phi(eta, etat, t) = exp(-int_etat^eta sigma0 |v|_eps / g d eta')`.

use crate::friction::{abs_eps, FrictionParams};
use crate::quad::{adaptive_simpson, CumulativeIntegral, QuadError};
use crate::signal::Signal;

use super::{g_local, ContactGeometry, TransportMap};

/// Reusable evaluator: builds the transport map once per geometry.
pub struct CharacteristicsSolver<'a> {
    geo: &'a ContactGeometry,
    params: FrictionParams,
    map: TransportMap,
    /// Absolute tolerance of the outer convolution quadrature.
    pub conv_tol: f64,
    /// Absolute tolerance of the decay-exponent accumulation.
    pub exp_tol: f64,
}

impl<'a> CharacteristicsSolver<'a> {
    pub fn new(geo: &'a ContactGeometry, params: &FrictionParams, conv_tol: f64) -> Self {
        Self {
            geo,
            params: *params,
            map: TransportMap::new(geo),
            conv_tol,
            exp_tol: 1e-10,
        }
    }

    /// Evaluates the solution at `(xi, t)` for initial profile `z0` and
    /// input `v`.
    pub fn eval<S: Signal, Z: Fn(f64) -> f64>(
        &self,
        xi: f64,
        t: f64,
        z0: &Z,
        v: &S,
    ) -> Result<f64, QuadError> {
        let w_xi = self.map.w_of_xi(xi);
        let lo = (w_xi - t).max(0.0);
        let params = self.params;
        let mut rho = |eta: f64| {
            let tau = eta - w_xi + t;
            let x = self.map.xi_of_w(eta);
            let vv = v.eval(tau);
            self.geo.sigma0.eval(x) * abs_eps(vv, params.eps) / g_local(&params, self.geo.sigma1.eval(x), vv)
        };
        if w_xi - lo <= 0.0 {
            // empty integration range: pure initial condition
            return Ok(z0(self.map.xi_of_w(lo)));
        }
        let (accum, _) = CumulativeIntegral::build(&mut rho, lo, w_xi, self.exp_tol)?;
        let a_tot = accum.total();
        let conv = adaptive_simpson(
            |eta| {
                let tau = eta - w_xi + t;
                let x = self.map.xi_of_w(eta);
                let vv = v.eval(tau);
                let g = g_local(&params, self.geo.sigma1.eval(x), vv);
                (accum.eval(&mut rho, eta) - a_tot).exp() * params.mu(vv) / g * vv
            },
            lo,
            w_xi,
            self.conv_tol,
        )?;
        let ic = (-a_tot).exp() * z0(self.map.xi_of_w(lo));
        Ok(conv + ic)
    }
}

/// One-shot evaluation (builds the transport map internally).
pub fn characteristics_solution<S: Signal, Z: Fn(f64) -> f64>(
    xi: f64,
    t: f64,
    z0: &Z,
    v: &S,
    geo: &ContactGeometry,
    params: &FrictionParams,
    quad_tol: f64,
) -> Result<f64, QuadError> {
    CharacteristicsSolver::new(geo, params, quad_tol).eval(xi, t, z0, v)
}
