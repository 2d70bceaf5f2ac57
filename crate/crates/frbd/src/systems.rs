//! Coupled mechanical plants driven by a pluggable friction model: the
//! mass-spring stick-slip rig, the force-driven pre-sliding mass, the
//! prescribed-velocity frictional-lag rig, and the diaphragm valve.
//!
//! In every plant the friction relative velocity is the body velocity
//! `xdot` (substrate at rest), and the state vector is advanced
//! monolithically by the shared integrator (no operator splitting).

use crate::friction::{FrictionParams, ParamError};
use crate::lumped::{self, drive, IntegratorConfig, ModelKind, SimError};
use crate::signal::{InputSignal, Signal};
use crate::trace::{CsvRecord, SimTrace};

/// Mass on a spring whose free end is dragged at `v_ref`.
#[derive(Debug, Clone, Copy)]
pub struct MassSpringParams {
    pub m: f64,
    pub k: f64,
    /// Drive velocity of the free spring end, m/s.
    pub v_ref: f64,
    /// Normal load on the friction contact, N.
    pub p: f64,
}

impl MassSpringParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v, ok) in [
            ("plant.m", self.m, self.m > 0.0),
            ("plant.k", self.k, self.k > 0.0),
            ("load.p", self.p, self.p > 0.0),
        ] {
            if !ok {
                return Err(ParamError {
                    name,
                    requirement: "> 0",
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Diaphragm-valve stem plus I/P converter.
#[derive(Debug, Clone, Copy)]
pub struct ValveParams {
    pub m: f64,
    /// Diaphragm cross-sectional area, m^2.
    pub s_a: f64,
    pub k: f64,
    /// Spring preload, N.
    pub f0: f64,
    /// Pressure gain, Pa per % of OP.
    pub k_p: f64,
    pub p_min: f64,
    /// I/P converter time constant, s.
    pub tau: f64,
    /// Normal load on the friction contact, N.
    pub p: f64,
}

impl ValveParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v, ok) in [
            ("valve.m", self.m, self.m > 0.0),
            ("valve.s_a", self.s_a, self.s_a > 0.0),
            ("valve.k", self.k, self.k > 0.0),
            ("valve.k_p", self.k_p, self.k_p > 0.0),
            ("valve.p_min", self.p_min, self.p_min >= 0.0),
            ("valve.tau", self.tau, self.tau > 0.0),
            ("load.p", self.p, self.p > 0.0),
        ] {
            if !ok {
                return Err(ParamError {
                    name,
                    requirement: "within its admissible range",
                    value: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickSlipRecord {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub y: f64,
    pub v: f64,
    pub z: f64,
    pub f_b: f64,
    /// Accumulated drive work `∫ k(y-x) v_ref dt`, integrated as a state.
    pub w_drive: f64,
    /// Accumulated friction work `∫ F_b xdot dt`, integrated as a state.
    pub w_fric: f64,
}

impl CsvRecord for StickSlipRecord {
    const HEADER: &'static str = "t,x,xdot,y,v,z,F_b";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[self.t, self.x, self.xdot, self.y, self.v, self.z, self.f_b]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreslidingRecord {
    pub t: f64,
    pub f_ext: f64,
    pub x: f64,
    pub z: f64,
    pub mu_b: f64,
}

impl CsvRecord for PreslidingRecord {
    const HEADER: &'static str = "t,F_ext,x,z,mu_b";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[self.t, self.f_ext, self.x, self.z, self.mu_b]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionLagRecord {
    pub t: f64,
    pub v: f64,
    pub mu_b: f64,
}

impl CsvRecord for FrictionLagRecord {
    const HEADER: &'static str = "t,v,mu_b";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[self.t, self.v, self.mu_b]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValveRecord {
    pub t: f64,
    pub op: f64,
    /// Chamber pressure, Pa.
    pub p_chamber: f64,
    pub x: f64,
    pub xdot: f64,
    pub z: f64,
    pub f_b: f64,
}

impl CsvRecord for ValveRecord {
    const HEADER: &'static str = "t,OP,P,x,xdot,z,F_b";
    fn fields(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[
            self.t,
            self.op,
            self.p_chamber,
            self.x,
            self.xdot,
            self.z,
            self.f_b,
        ]);
    }
}

fn friction_force(z: f64, v: f64, p: f64, params: &FrictionParams, kind: ModelKind) -> f64 {
    lumped::mu_b(z, v, params, kind) * p
}

/// Mass-spring rig: `m xddot = k (y - x) - F_b`, `ydot = v_ref`.
///
/// State: (x, xdot, y, z) plus the drive/friction work integrals for the
/// energy audit.
pub fn simulate_stickslip(
    ms: &MassSpringParams,
    params: &FrictionParams,
    kind: ModelKind,
    cfg: &IntegratorConfig,
) -> Result<SimTrace<StickSlipRecord>, SimError> {
    let v_ref = ms.v_ref;
    simulate_stickslip_driven(ms, &move |_t: f64| v_ref, params, kind, cfg)
}

/// Mass-spring rig with a time-varying drive velocity `ydot = v_ref(t)`
/// (used by the calibration plant; `ms.v_ref` is ignored).
pub fn simulate_stickslip_driven<S: Signal>(
    ms: &MassSpringParams,
    v_ref: &S,
    params: &FrictionParams,
    kind: ModelKind,
    cfg: &IntegratorConfig,
) -> Result<SimTrace<StickSlipRecord>, SimError> {
    ms.validate()?;
    cfg.validate()?;
    kind.validate(params)?;
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 6]| {
        let [x, xdot, ypos, z, _, _] = *y;
        let spring = ms.k * (ypos - x);
        let f_b = friction_force(z, xdot, ms.p, params, kind);
        let vr = v_ref.eval(t);
        [
            xdot,
            (spring - f_b) / ms.m,
            vr,
            lumped::rhs(z, xdot, params, kind),
            spring * vr,
            f_b * xdot,
        ]
    };
    drive(f, [0.0; 6], cfg, |t, y| {
        let f_b = friction_force(y[3], y[1], ms.p, params, kind);
        trace.records.push(StickSlipRecord {
            t,
            x: y[0],
            xdot: y[1],
            y: y[2],
            v: y[1],
            z: y[3],
            f_b,
            w_drive: y[4],
            w_fric: y[5],
        });
    })?;
    Ok(trace)
}

/// Force-driven mass: `m xddot = F_ext(t) - F_b`, starting at rest.
pub fn simulate_presliding<S: Signal>(
    force: &S,
    m: f64,
    p: f64,
    params: &FrictionParams,
    kind: ModelKind,
    cfg: &IntegratorConfig,
) -> Result<SimTrace<PreslidingRecord>, SimError> {
    cfg.validate()?;
    kind.validate(params)?;
    if m <= 0.0 {
        return Err(ParamError {
            name: "plant.m",
            requirement: "> 0",
            value: m,
        }
        .into());
    }
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 3]| {
        let [_, xdot, z] = *y;
        let f_b = friction_force(z, xdot, p, params, kind);
        [xdot, (force.eval(t) - f_b) / m, lumped::rhs(z, xdot, params, kind)]
    };
    drive(f, [0.0; 3], cfg, |t, y| {
        trace.records.push(PreslidingRecord {
            t,
            f_ext: force.eval(t),
            x: y[0],
            z: y[2],
            mu_b: lumped::mu_b(y[2], y[1], params, kind),
        });
    })?;
    Ok(trace)
}

/// Prescribed-velocity rig: only the bristle state evolves; the output is
/// the normalized force `mu_b` against the imposed `v(t)`.
pub fn simulate_friction_lag<S: Signal>(
    v_input: &S,
    params: &FrictionParams,
    kind: ModelKind,
    cfg: &IntegratorConfig,
) -> Result<SimTrace<FrictionLagRecord>, SimError> {
    cfg.validate()?;
    kind.validate(params)?;
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 1]| [lumped::rhs(y[0], v_input.eval(t), params, kind)];
    let z0 = lumped::steady_state(v_input.eval(0.0), params, 1.0).0;
    drive(f, [z0], cfg, |t, y| {
        let v = v_input.eval(t);
        trace.records.push(FrictionLagRecord {
            t,
            v,
            mu_b: lumped::mu_b(y[0], v, params, kind),
        });
    })?;
    Ok(trace)
}

/// Diaphragm valve: `m xddot = S_a P - k x - F_b - F0`,
/// `Pdot = (K_P OP(t) + P_min - P) / tau`, starting from x = 0, P = P_min.
///
/// `op` must stay within [0, 100] over the horizon; the exact per-variant
/// signal range is checked up front.
pub fn simulate_valve(
    op: &InputSignal,
    vp: &ValveParams,
    params: &FrictionParams,
    kind: ModelKind,
    cfg: &IntegratorConfig,
) -> Result<SimTrace<ValveRecord>, SimError> {
    vp.validate()?;
    cfg.validate()?;
    kind.validate(params)?;
    op.validate()?;
    let (lo, hi) = op.range(cfg.t_end);
    if lo < -1e-12 || hi > 100.0 + 1e-9 {
        return Err(SimError::InputOutOfRange {
            name: "OP",
            lo: 0.0,
            hi: 100.0,
            attained: if lo < 0.0 { lo } else { hi },
        });
    }
    let mut trace = SimTrace::new();
    let f = |t: f64, y: &[f64; 4]| {
        let [x, xdot, pr, z] = *y;
        let f_b = friction_force(z, xdot, vp.p, params, kind);
        [
            xdot,
            (vp.s_a * pr - vp.k * x - f_b - vp.f0) / vp.m,
            (vp.k_p * op.eval(t) + vp.p_min - pr) / vp.tau,
            lumped::rhs(z, xdot, params, kind),
        ]
    };
    drive(f, [0.0, 0.0, vp.p_min, 0.0], cfg, |t, y| {
        trace.records.push(ValveRecord {
            t,
            op: op.eval(t),
            p_chamber: y[2],
            x: y[0],
            xdot: y[1],
            z: y[3],
            f_b: friction_force(y[3], y[1], vp.p, params, kind),
        });
    })?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn rig_at_rest_stays_at_rest() {
        let ms = MassSpringParams {
            m: 1.0,
            k: 2.0,
            v_ref: 0.0,
            p: 1.0,
        };
        let cfg = IntegratorConfig::rk45(1.0);
        let tr = simulate_stickslip(&ms, &presets::servo(), ModelKind::Frbd, &cfg).unwrap();
        for r in &tr.records {
            assert_eq!(r.x, 0.0);
            assert_eq!(r.z, 0.0);
        }
    }

    #[test]
    fn presliding_zero_force_no_motion() {
        let cfg = IntegratorConfig::rk45(0.5);
        let tr = simulate_presliding(
            &|_t: f64| 0.0,
            1.0,
            1.0,
            &presets::servo(),
            ModelKind::Frbd,
            &cfg,
        )
        .unwrap();
        for r in &tr.records {
            assert_eq!(r.x, 0.0);
        }
    }

    #[test]
    fn friction_lag_constant_velocity_settles_to_curve() {
        let p = presets::servo();
        let cfg = IntegratorConfig::rk45(0.5);
        let tr =
            simulate_friction_lag(&|_t: f64| 0.05, &p, ModelKind::Frbd, &cfg).unwrap();
        let last = tr.records.last().unwrap();
        let expect = p.mu(0.05);
        assert!(
            (last.mu_b - expect).abs() < 1e-8,
            "mu_b settled to {} vs mu(v) = {}",
            last.mu_b,
            expect
        );
    }

    #[test]
    fn valve_rejects_out_of_range_op() {
        let vp = presets::diaphragm_valve(false);
        let p = presets::valve_friction();
        let cfg = IntegratorConfig::rk45(1.0);
        let op = InputSignal::Constant(120.0);
        assert!(matches!(
            simulate_valve(&op, &vp, &p, ModelKind::Frbd, &cfg),
            Err(SimError::InputOutOfRange { .. })
        ));
    }

    #[test]
    fn valve_pressure_tracks_first_order_fixed_point() {
        let vp = presets::diaphragm_valve(false);
        let p = presets::valve_friction();
        let cfg = IntegratorConfig {
            out_dt: Some(0.05),
            ..IntegratorConfig::rk45(30.0)
        };
        let op = InputSignal::Constant(40.0);
        let tr = simulate_valve(&op, &vp, &p, ModelKind::Frbd, &cfg).unwrap();
        let target = vp.k_p * 40.0 + vp.p_min;
        let last = tr.records.last().unwrap();
        assert!(
            (last.p_chamber - target).abs() < 1e-6,
            "P = {}, fixed point = {}",
            last.p_chamber,
            target
        );
    }

    #[test]
    fn pressure_subsystem_superposition() {
        // the I/P converter is affine; with P_min = 0 and P(0) = 0 the OP
        // response superposes to integrator tolerance
        let mut vp = presets::diaphragm_valve(false);
        vp.p_min = 0.0;
        let run = |op: InputSignal| {
            let p = presets::valve_friction();
            let cfg = IntegratorConfig {
                rtol: 1e-10,
                atol: 1e-8,
                out_dt: Some(0.1),
                ..IntegratorConfig::rk45(5.0)
            };
            // pressure state is independent of the mechanics; read it directly
            simulate_valve(&op, &vp, &p, ModelKind::Frbd, &cfg)
                .unwrap()
                .records
                .iter()
                .map(|r| r.p_chamber)
                .collect::<Vec<_>>()
        };
        let p1 = run(InputSignal::Constant(20.0));
        let p2 = run(InputSignal::Sinusoid {
            amplitude: 10.0,
            freq_hz: 0.5,
            phase: 0.0,
            offset: 30.0,
        });
        let p12 = run(InputSignal::Sinusoid {
            amplitude: 10.0,
            freq_hz: 0.5,
            phase: 0.0,
            offset: 50.0,
        });
        for i in 0..p1.len() {
            let scale = p12[i].abs().max(1.0);
            assert!(
                (p1[i] + p2[i] - p12[i]).abs() < 1e-6 * scale,
                "superposition violated at index {i}"
            );
        }
    }
}
