//! Benchmark parameter sets used by the demo experiments, the check suite
//! and the tests.

use crate::friction::FrictionParams;
use crate::systems::{MassSpringParams, ValveParams};

/// Stiff servo-scale contact: high micro-stiffness, pronounced Stribeck dip
/// at centimetre-per-second speeds. Drives the pre-sliding, frictional-lag
/// and stick-slip experiments.
pub fn servo() -> FrictionParams {
    FrictionParams::new(1.0, 1.5, 0.01, 2.0, 0.04, 0.0, 1e4, 64.5).expect("valid preset")
}

/// Soft rolling-contact parameters (no micro-damping) for the distributed
/// steady-state slip sweeps.
pub fn rolling_contact() -> FrictionParams {
    FrictionParams::new(0.2, 0.6, 10.0, 2.0, 0.0018, 0.0, 252.0, 0.0).expect("valid preset")
}

/// Load-scaled friction parameters of the diaphragm-valve bench (the normal
/// load is absorbed into the coefficients; use p = 1 N).
pub fn valve_friction() -> FrictionParams {
    FrictionParams::new(39.73, 59.86, 6.42e-3, 2.0, 2.97e3, 0.0, 6.82e7, 701.97)
        .expect("valid preset")
}

/// Diaphragm-valve plant constants; `slow_converter` selects the slower I/P
/// time constant used with ramp inputs (0.933 s) instead of 0.425 s.
pub fn diaphragm_valve(slow_converter: bool) -> ValveParams {
    ValveParams {
        m: 1.6,
        s_a: 445e-4,
        k: 203_495.8,
        f0: 2578.3,
        k_p: 1666.49,
        p_min: 41_276.40,
        tau: if slow_converter { 0.933 } else { 0.425 },
        p: 1.0,
    }
}

/// Unit mass on a 2 N/m spring dragged at 0.1 m/s: the stick-slip rig.
pub fn stick_slip_rig() -> MassSpringParams {
    MassSpringParams {
        m: 1.0,
        k: 2.0,
        v_ref: 0.1,
        p: 1.0,
    }
}
