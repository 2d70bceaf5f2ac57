//! Explicit Runge-Kutta integration: embedded Dormand-Prince 5(4) with
//! step-size control, and a fixed-step classical RK4 for deterministic
//! regression baselines.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (stiffness or unattainable tolerance)")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state detected at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {max} exhausted at t = {t}")]
    MaxSteps { t: f64, max: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; adapted immediately.
    pub h_init: f64,
    /// Hard cap on the step size.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

/// Where the integrator reports accepted states.
#[derive(Debug, Clone, Copy)]
pub enum Emit {
    /// Report every accepted step.
    EveryStep,
    /// Report on the grid `t0 + k dt` (steps are clamped to land exactly on
    /// grid points); the final time is always reported.
    Grid { dt: f64 },
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4). Calls `sink(t, y)` at `t0` and at every
/// reported point per `emit`; returns the final state.
pub fn rk45<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    emit: Emit,
    mut sink: S,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let mut t = t0;
    let mut y = y0;
    sink(t, &y);
    if t_end <= t0 {
        return Ok(y);
    }
    let span = t_end - t0;
    let mut h = opts.h_init.min(opts.h_max).min(span);
    let mut next_grid = match emit {
        Emit::EveryStep => f64::INFINITY,
        Emit::Grid { dt } => t0 + dt,
    };
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::MaxSteps {
                t,
                max: opts.max_steps,
            });
        }
        let target = t_end.min(next_grid);
        if h > target - t {
            h = target - t;
        }
        if h < 1e-14 * (t.abs().max(1.0)) {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    for n in 0..N {
                        ys[n] += h * a * kj[n];
                    }
                }
            }
            k[stage + 1] = f(t + C[stage] * h, &ys);
        }
        // 5th-order solution is the last stage evaluation point (FSAL)
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for n in 0..N {
                    y5[n] += h * a * kj[n];
                }
            }
        }
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            let b = B4[j];
            if b != 0.0 {
                for n in 0..N {
                    y4[n] += h * b * kj[n];
                }
            }
        }
        let mut err_norm = 0.0f64;
        let mut finite = true;
        for n in 0..N {
            let sc = opts.atol + opts.rtol * y[n].abs().max(y5[n].abs());
            let e = (y5[n] - y4[n]) / sc;
            err_norm += e * e;
            finite &= y5[n].is_finite();
        }
        err_norm = (err_norm / N as f64).sqrt();
        if !finite || !err_norm.is_finite() {
            // refuse the step and shrink hard; a persistent NaN source
            // ends in step-size underflow with a diagnostic
            if !y.iter().all(|v| v.is_finite()) {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.1;
            continue;
        }
        if err_norm <= 1.0 {
            t += h;
            y = y5;
            k1 = k[6];
            match emit {
                Emit::EveryStep => sink(t, &y),
                Emit::Grid { dt } => {
                    if t >= next_grid - 1e-9 * dt || t >= t_end {
                        sink(t, &y);
                        while next_grid <= t + 1e-9 * dt {
                            next_grid += dt;
                        }
                    }
                }
            }
        }
        let scale = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * scale).min(opts.h_max);
    }
    Ok(y)
}

/// Fixed-step classical RK4 with `n` uniform steps; `sink` is called at
/// every step (including `t0`).
pub fn rk4_fixed<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    dt: f64,
    mut sink: S,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let mut y = y0;
    sink(t0, &y);
    if t_end <= t0 {
        return Ok(y);
    }
    let n = ((t_end - t0) / dt).ceil().max(1.0) as usize;
    let h = (t_end - t0) / n as f64;
    let mut t = t0;
    for i in 0..n {
        let k1 = f(t, &y);
        let mut y2 = y;
        for j in 0..N {
            y2[j] += 0.5 * h * k1[j];
        }
        let k2 = f(t + 0.5 * h, &y2);
        let mut y3 = y;
        for j in 0..N {
            y3[j] += 0.5 * h * k2[j];
        }
        let k3 = f(t + 0.5 * h, &y3);
        let mut y4 = y;
        for j in 0..N {
            y4[j] += h * k3[j];
        }
        let k4 = f(t + h, &y4);
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        t = t0 + (i + 1) as f64 * h;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(OdeError::NonFinite { t });
        }
        sink(t, &y);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_analytic() {
        let opts = OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let yf = rk45(
            |_, y: &[f64; 1]| [-2.0 * y[0]],
            0.0,
            [1.0],
            3.0,
            &opts,
            Emit::EveryStep,
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(yf[0], (-6.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let opts = OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            ..Default::default()
        };
        let yf = rk45(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            20.0 * std::f64::consts::PI,
            &opts,
            Emit::EveryStep,
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(yf[0], 1.0, epsilon = 1e-7);
        assert!(yf[1].abs() < 1e-7);
    }

    #[test]
    fn grid_emission_lands_on_grid() {
        let mut times = Vec::new();
        rk45(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            1.0,
            &OdeOptions::default(),
            Emit::Grid { dt: 0.25 },
            |t, _| times.push(t),
        )
        .unwrap();
        assert_eq!(times.len(), 5);
        for (i, t) in times.iter().enumerate() {
            assert_relative_eq!(*t, 0.25 * i as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn nan_rhs_is_reported() {
        let r = rk45(
            |t, _: &[f64; 1]| [if t > 0.5 { f64::NAN } else { 1.0 }],
            0.0,
            [0.0],
            1.0,
            &OdeOptions::default(),
            Emit::EveryStep,
            |_, _| {},
        );
        assert!(matches!(
            r,
            Err(OdeError::StepSizeUnderflow { .. }) | Err(OdeError::NonFinite { .. })
        ));
    }

    #[test]
    fn rk4_fixed_order() {
        // global error should shrink ~16x per halving
        let run = |n: usize| {
            let dt = 2.0 / n as f64;
            let yf = rk4_fixed(|t, y: &[f64; 1]| [y[0] * t.cos()], 0.0, [1.0], 2.0, dt, |_, _| {})
                .unwrap();
            (yf[0] - (2.0f64.sin()).exp()).abs()
        };
        let e1 = run(50);
        let e2 = run(100);
        assert!(e1 / e2 > 12.0, "observed ratio {}", e1 / e2);
    }
}
