//! Scalar friction-curve machinery shared by all model variants.
//!
//! Everything here is a pure function of the parameters and the relative
//! velocity, so the whole module is safe to call concurrently.

use thiserror::Error;

/// Parameter validation failure, naming the offending field.
#[derive(Debug, Clone, Error)]
#[error("{name} must be {requirement}, got {value}")]
pub struct ParamError {
    pub name: &'static str,
    pub requirement: &'static str,
    pub value: f64,
}

/// Raised by derivative evaluations at points where the curve has a kink
/// (v = 0 with eps = 0) or a genuine singularity (Stribeck exponent < 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("derivative is undefined at this point (v = 0 with eps = 0, or Stribeck exponent < 1)")]
pub struct NonDifferentiable;

/// Regularized absolute value, `|v|_eps = sqrt(v^2 + eps)`.
///
/// Reduces to `|v|` for `eps = 0`; strictly positive and smooth for `eps > 0`.
#[inline]
pub fn abs_eps(v: f64, eps: f64) -> f64 {
    debug_assert!(eps >= 0.0);
    if eps == 0.0 {
        v.abs()
    } else {
        (v * v + eps).sqrt()
    }
}

/// Regularized sign, `v / |v|_eps`, with the symmetric convention
/// `sgn_eps(0) = 0` when `eps = 0`. Bounded by 1 in magnitude.
#[inline]
pub fn sgn_eps(v: f64, eps: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    v / abs_eps(v, eps)
}

/// Stribeck friction curve with viscous contribution, plus the normalized
/// bristle stiffness/damping couple and the regularization parameter.
///
/// The friction coefficient is
/// `mu(v) = mu_d + (mu_s - mu_d) exp(-(|v|/v_s)^delta) + sigma2 |v|`,
/// which is even in `v`, bounded below by `mu_d`, and equals `mu_s` at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    /// Dynamic (Coulomb) friction coefficient, dimensionless, > 0.
    pub mu_d: f64,
    /// Static friction coefficient, dimensionless, >= mu_d.
    pub mu_s: f64,
    /// Stribeck velocity, m/s, >= 0 (0 selects the limit convention).
    pub v_s: f64,
    /// Stribeck exponent, dimensionless, >= 0.
    pub delta: f64,
    /// Viscous coefficient, s/m, >= 0; enters as `sigma2 |v|`.
    pub sigma2: f64,
    /// Regularization of the absolute value, m^2/s^2, >= 0.
    pub eps: f64,
    /// Normalized micro-stiffness, 1/m, > 0.
    pub sigma0: f64,
    /// Normalized micro-damping, s/m, >= 0.
    pub sigma1: f64,
}

/// Effective output coefficients of the bristle model at a given velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBars {
    /// `sigma0 (1 - sigma1 |v|_eps / g(v))`, in (0, sigma0].
    pub bar0: f64,
    /// `sigma1 mu(v) / g(v)`, in [0, sigma1].
    pub bar2: f64,
}

impl FrictionParams {
    /// Validates the parameter invariants and returns the record.
    pub fn new(
        mu_d: f64,
        mu_s: f64,
        v_s: f64,
        delta: f64,
        sigma2: f64,
        eps: f64,
        sigma0: f64,
        sigma1: f64,
    ) -> Result<Self, ParamError> {
        let check = |name: &'static str, requirement: &'static str, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError {
                    name,
                    requirement,
                    value,
                })
            }
        };
        check("mu_d", "> 0", mu_d, mu_d > 0.0)?;
        check("mu_s", ">= mu_d", mu_s, mu_s >= mu_d)?;
        check("v_s", ">= 0", v_s, v_s >= 0.0)?;
        check("delta", ">= 0", delta, delta >= 0.0)?;
        check("sigma2", ">= 0", sigma2, sigma2 >= 0.0)?;
        check("eps", ">= 0", eps, eps >= 0.0)?;
        check("sigma0", "> 0", sigma0, sigma0 > 0.0)?;
        check("sigma1", ">= 0", sigma1, sigma1 >= 0.0)?;
        Ok(Self {
            mu_d,
            mu_s,
            v_s,
            delta,
            sigma2,
            eps,
            sigma0,
            sigma1,
        })
    }

    /// Stribeck part of the friction coefficient (no viscous term).
    ///
    /// This is the curve the LuGre reference model uses as `g_L(v)`.
    /// `v_s = 0` uses the limit convention: the exponential factor is 1 at
    /// v = 0 and 0 elsewhere.
    pub fn mu_stribeck(&self, v: f64) -> f64 {
        let spread = self.mu_s - self.mu_d;
        if spread == 0.0 {
            return self.mu_d;
        }
        let stribeck = if self.v_s == 0.0 {
            if v == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-(v.abs() / self.v_s).powf(self.delta)).exp()
        };
        self.mu_d + spread * stribeck
    }

    /// Friction coefficient `mu(v)`, even in v, >= mu_d, equal to mu_s at 0.
    pub fn mu(&self, v: f64) -> f64 {
        self.mu_stribeck(v) + self.sigma2 * v.abs()
    }

    /// Analytic derivative of [`Self::mu`]; odd in v.
    ///
    /// At v = 0 the odd-symmetric value 0 is returned for delta >= 1 (and for
    /// v_s = 0, where the limit convention makes the Stribeck slope vanish).
    /// For delta < 1 the Stribeck slope is singular at the origin and the
    /// point is flagged instead.
    pub fn dmu_dv(&self, v: f64) -> Result<f64, NonDifferentiable> {
        let spread = self.mu_s - self.mu_d;
        if v == 0.0 {
            if self.delta < 1.0 && spread != 0.0 && self.v_s > 0.0 {
                return Err(NonDifferentiable);
            }
            return Ok(0.0);
        }
        let viscous = self.sigma2 * v.signum();
        if spread == 0.0 || self.v_s == 0.0 {
            return Ok(viscous);
        }
        let r = v.abs() / self.v_s;
        let stribeck =
            -spread * (self.delta / self.v_s) * r.powf(self.delta - 1.0) * (-r.powf(self.delta)).exp();
        Ok(stribeck * v.signum() + viscous)
    }

    /// `g(v) = sigma1 |v|_eps + mu(v)`; satisfies `g >= mu >= mu_d > 0`.
    pub fn g(&self, v: f64) -> f64 {
        self.sigma1 * abs_eps(v, self.eps) + self.mu(v)
    }

    /// Analytic derivative of [`Self::g`].
    pub fn dg_dv(&self, v: f64) -> Result<f64, NonDifferentiable> {
        if v == 0.0 && self.eps == 0.0 && self.sigma1 != 0.0 {
            return Err(NonDifferentiable);
        }
        Ok(self.sigma1 * sgn_eps(v, self.eps) + self.dmu_dv(v)?)
    }

    /// Effective output coefficients per the restated virtual friction
    /// coefficient: `mu_b = bar0 z + bar2 v`.
    pub fn sigma_bars(&self, v: f64) -> SigmaBars {
        let g = self.g(v);
        SigmaBars {
            bar0: self.sigma0 * (1.0 - self.sigma1 * abs_eps(v, self.eps) / g),
            bar2: self.sigma1 * self.mu(v) / g,
        }
    }

    /// Analytic velocity derivatives of the effective coefficients
    /// (constant sigma0, sigma1). Returns `(d bar0/dv, d bar2/dv)`.
    pub fn d_sigma_bars_dv(&self, v: f64) -> Result<(f64, f64), NonDifferentiable> {
        if v == 0.0 && self.eps == 0.0 {
            return Err(NonDifferentiable);
        }
        let g = self.g(v);
        let mu = self.mu(v);
        let ve = abs_eps(v, self.eps);
        let dabs = sgn_eps(v, self.eps);
        let dmu = self.dmu_dv(v)?;
        let dg = self.sigma1 * dabs + dmu;
        let dbar0 = -(self.sigma0 * self.sigma1 / g) * (dabs - ve * dg / g);
        let dbar2 = (self.sigma1 / (g * g)) * (g * dmu - mu * dg);
        Ok((dbar0, dbar2))
    }

    /// Friction characteristic `F_r(v_s) = sgn_eps(v_s) mu(v_s) p`; odd in
    /// v_s and bounded by `mu(v_s) p` in magnitude.
    pub fn friction_force_r(&self, v_s: f64, p: f64) -> f64 {
        sgn_eps(v_s, self.eps) * self.mu(v_s) * p
    }
}
