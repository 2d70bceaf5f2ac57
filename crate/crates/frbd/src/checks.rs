//! Condensed executable invariant suite behind the CLI `check` experiment.
//! Each check is a scaled-down version of a property the test suite covers
//! exhaustively; here they run in a couple of seconds and print a verdict
//! table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributed::{
    characteristics_solution, passivity_condition, simulate_distributed, stationary_profile,
    steady_force_constant, steady_force_exponential, total_force, ContactGeometry, Field,
    PassivityVerdict, PressureProfile, SchemeKind,
};
use crate::friction::{abs_eps, FrictionParams};
use crate::lumped::{
    integrate, mu_bar_max, ClosedFormSolver, IntegratorConfig, ModelKind,
};
use crate::presets;
use crate::quad::trapezoid;
use crate::signal::{Signal, SumOfSines};

pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Runs every check; deterministic for a fixed seed.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    vec![
        coefficient_identities(seed),
        derivative_consistency(seed),
        lumped_stability_and_passivity(seed),
        lumped_oracle_agreement(seed),
        model_reduction(seed),
        steady_force_consistency(),
        distributed_passivity_verdicts(),
        distributed_cumulative_passivity(seed),
        pde_oracle_agreement(seed),
    ]
}

fn coefficient_identities(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let p = FrictionParams::new(
            rng.random_range(0.1..2.0),
            rng.random_range(2.0..3.0),
            rng.random_range(1e-3..1.0),
            2.0,
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..0.1),
            rng.random_range(10.0..1e4),
            rng.random_range(0.0..100.0),
        )
        .unwrap();
        let v = rng.random_range(-5.0..5.0);
        let g = p.g(v);
        let sb = p.sigma_bars(v);
        let unity = (p.sigma1 * abs_eps(v, p.eps) / g + p.mu(v) / g - 1.0).abs();
        let id0 = (sb.bar0 / p.sigma0 - p.mu(v) / g).abs();
        let id2 = (sb.bar2 - p.sigma1 * p.mu(v) / g).abs() / (1.0 + sb.bar2.abs());
        worst = worst.max(unity).max(id0).max(id2);
    }
    CheckReport::new(
        "sigma-bar algebraic identities (1e-14)",
        worst < 1e-14,
        format!("worst deviation {worst:.3e}"),
    )
}

fn derivative_consistency(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let p = FrictionParams::new(
            1.0,
            rng.random_range(1.0..2.0),
            rng.random_range(5e-3..0.5),
            2.0,
            rng.random_range(0.0..0.5),
            rng.random_range(0.0..0.05),
            rng.random_range(10.0..1e4),
            rng.random_range(0.0..100.0),
        )
        .unwrap();
        let v: f64 = rng.random_range(-3.0..3.0);
        if v.abs() < 0.05 && p.eps < 1e-3 {
            continue;
        }
        n += 1;
        let h = 1e-7 * v.abs().max(1.0);
        let (db0, db2) = p.d_sigma_bars_dv(v).unwrap();
        let fd0 = (p.sigma_bars(v + h).bar0 - p.sigma_bars(v - h).bar0) / (2.0 * h);
        let fd2 = (p.sigma_bars(v + h).bar2 - p.sigma_bars(v - h).bar2) / (2.0 * h);
        worst = worst.max((db0 - fd0).abs() / fd0.abs().max(1e-2));
        worst = worst.max((db2 - fd2).abs() / fd2.abs().max(1e-2));
        let dmu = p.dmu_dv(v).unwrap();
        let fd_mu = (p.mu(v + h) - p.mu(v - h)) / (2.0 * h);
        worst = worst.max((dmu - fd_mu).abs() / fd_mu.abs().max(1e-2));
    }
    CheckReport::new(
        "analytic derivatives vs central differences (1e-6)",
        worst < 1e-6,
        format!("worst relative gap {worst:.3e}"),
    )
}

fn lumped_stability_and_passivity(seed: u64) -> CheckReport {
    let p = presets::servo();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let v_max = 2.0;
    let bound = mu_bar_max(&p, v_max);
    let mut worst_overshoot = f64::NEG_INFINITY;
    let mut worst_pointwise = f64::INFINITY;
    let mut worst_cumulative = f64::INFINITY;
    for _ in 0..200 {
        let v = SumOfSines::random(&mut rng, 3, (-1.0, 1.0), 1.0, (0.2, 2.0));
        let z0 = rng.random_range(-bound..bound);
        let cfg = IntegratorConfig {
            atol: 1e-12,
            h_max: Some(0.01),
            ..IntegratorConfig::rk45(2.0)
        };
        let tr = integrate(z0, &v, 1.0, &cfg, &p, ModelKind::Frbd).unwrap();
        let (ts, fv): (Vec<f64>, Vec<f64>) =
            tr.records.iter().map(|r| (r.t, r.f_b * r.v)).unzip();
        let supply = trapezoid(&ts, &fv);
        let dw = tr.records.last().unwrap().w - tr.records[0].w;
        worst_cumulative = worst_cumulative.min(supply - dw);
        for r in &tr.records {
            worst_overshoot = worst_overshoot.max(r.z.abs() - bound);
            worst_pointwise = worst_pointwise.min(r.residual);
        }
    }
    let pass = worst_overshoot < 1e-9 && worst_pointwise >= -1e-12 && worst_cumulative >= -1e-9;
    CheckReport::new(
        "lumped stability bound and passivity (200 runs)",
        pass,
        format!(
            "overshoot {worst_overshoot:.2e}, min residual {worst_pointwise:.2e}, min cumulative {worst_cumulative:.2e}"
        ),
    )
}

fn lumped_oracle_agreement(seed: u64) -> CheckReport {
    let p = presets::servo();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let v = SumOfSines::random(&mut rng, 3, (0.5, 1.0), 0.4, (0.2, 1.5));
        let z0 = rng.random_range(-1e-4..1e-4);
        let cfg = IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-13,
            out_dt: Some(0.25),
            ..IntegratorConfig::rk45(5.0)
        };
        let tr = integrate(z0, &v, 1.0, &cfg, &p, ModelKind::Frbd).unwrap();
        let solver = ClosedFormSolver::new(&v, &p, 5.0, 1e-12).unwrap();
        for r in &tr.records {
            worst = worst.max((r.z - solver.eval(r.t, z0).unwrap()).abs());
        }
    }
    CheckReport::new(
        "lumped integration vs variation-of-constants (1e-8)",
        worst < 1e-8,
        format!("sup-norm gap {worst:.3e}"),
    )
}

fn model_reduction(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut p = presets::servo();
        p.sigma1 = 0.0;
        p.sigma2 = 0.0;
        let v = SumOfSines::random(&mut rng, 2, (-0.5, 0.5), 0.8, (0.3, 2.0));
        let cfg = IntegratorConfig {
            out_dt: Some(0.05),
            ..IntegratorConfig::rk45(1.0)
        };
        let a = integrate(0.0, &v, 1.0, &cfg, &p, ModelKind::Frbd).unwrap();
        let b = integrate(0.0, &v, 1.0, &cfg, &p, ModelKind::LuGre).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            worst = worst.max((ra.z - rb.z).abs());
        }
        let mut dahl = p;
        dahl.mu_s = dahl.mu_d;
        let c = integrate(0.0, &v, 1.0, &cfg, &dahl, ModelKind::Frbd).unwrap();
        let d = integrate(0.0, &v, 1.0, &cfg, &dahl, ModelKind::Dahl).unwrap();
        for (rc, rd) in c.records.iter().zip(&d.records) {
            worst = worst.max((rc.z - rd.z).abs());
        }
    }
    CheckReport::new(
        "model-reduction identities FrBD/LuGre/Dahl (1e-10)",
        worst < 1e-10,
        format!("sup-norm gap {worst:.3e}"),
    )
}

fn steady_force_consistency() -> CheckReport {
    let p = presets::rolling_contact();
    let mut worst = 0.0f64;
    for &v in &[0.02, 0.2, 1.0, 4.0, -2.0] {
        let geo = ContactGeometry::uniform(
            0.1,
            100.0,
            PressureProfile::Constant { p0: 1e3 },
            252.0,
            0.0,
            400,
        )
        .unwrap();
        let profile = stationary_profile(v, &geo, &p);
        let quad = total_force(&profile, v, &geo, &p);
        let closed = steady_force_constant(v, &geo, &p).unwrap();
        if quad.abs() > 0.0 {
            worst = worst.max((closed - quad).abs() / quad.abs());
        }
        let geo_e = ContactGeometry::uniform(
            0.1,
            100.0,
            PressureProfile::Exponential { p0: 1e3, a: 0.1 },
            252.0,
            0.0,
            400,
        )
        .unwrap();
        let profile_e = stationary_profile(v, &geo_e, &p);
        let quad_e = total_force(&profile_e, v, &geo_e, &p);
        let closed_e = steady_force_exponential(v, &geo_e, &p).unwrap();
        if quad_e.abs() > 0.0 {
            worst = worst.max((closed_e - quad_e).abs() / quad_e.abs());
        }
    }
    CheckReport::new(
        "steady-force closed forms vs quadrature (0.1%)",
        worst < 1e-3,
        format!("worst relative gap {worst:.3e}"),
    )
}

fn distributed_passivity_verdicts() -> CheckReport {
    let geo = |pr| ContactGeometry::uniform(0.1, 10.0, pr, 252.0, 0.0, 200).unwrap();
    let c = passivity_condition(&geo(PressureProfile::Constant { p0: 1e3 }));
    let e = passivity_condition(&geo(PressureProfile::Exponential { p0: 1e3, a: 0.1 }));
    let f = passivity_condition(&geo(PressureProfile::Parabolic { p0: 1e3 }));
    let pass = c == PassivityVerdict::Holds
        && e == PassivityVerdict::HoldsStrictly
        && matches!(f, PassivityVerdict::Fails { .. });
    CheckReport::new(
        "distributed passivity condition verdicts",
        pass,
        format!("constant: {c:?}, exponential: {e:?}, parabolic: {f:?}"),
    )
}

fn distributed_cumulative_passivity(seed: u64) -> CheckReport {
    let params = FrictionParams::new(0.3, 0.6, 1.0, 2.0, 0.01, 0.0, 5.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    let mut worst = f64::INFINITY;
    for trial in 0..20 {
        let pressure = if trial % 2 == 0 {
            PressureProfile::Constant { p0: 1e3 }
        } else {
            PressureProfile::Exponential { p0: 1e3, a: 0.5 }
        };
        let geo = ContactGeometry::uniform(0.1, 1.0, pressure, 5.0, 0.5, 100).unwrap();
        let v = SumOfSines::random(&mut rng, 2, (-0.8, 0.8), 0.8, (0.3, 1.5));
        let mut ic = Field::zeros(&geo);
        for (i, z) in ic.z.iter_mut().enumerate().skip(1) {
            let xi = i as f64 / 100.0;
            *z = rng.random_range(-0.05..0.05) * xi.sin();
        }
        let run =
            simulate_distributed(&ic, &v, 2.0, &geo, &params, SchemeKind::SemiLagrangian, None)
                .unwrap();
        let (ts, fv): (Vec<f64>, Vec<f64>) =
            run.trace.records.iter().map(|r| (r.t, r.f_b * r.v)).unzip();
        let supply = trapezoid(&ts, &fv);
        let dw = run.trace.records.last().unwrap().w - run.trace.records[0].w;
        worst = worst.min(supply - dw);
    }
    CheckReport::new(
        "distributed cumulative passivity (20 runs, -1e-8)",
        worst >= -1e-8,
        format!("min cumulative margin {worst:.3e}"),
    )
}

fn pde_oracle_agreement(seed: u64) -> CheckReport {
    let params = FrictionParams::new(0.3, 0.6, 1.0, 2.0, 0.01, 0.0, 5.0, 0.5).unwrap();
    let geo = ContactGeometry::uniform(
        0.1,
        1.0,
        PressureProfile::Constant { p0: 1e3 },
        5.0,
        0.5,
        200,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let v = SumOfSines::random(&mut rng, 2, (0.6, 1.0), 0.4, (0.3, 0.8));
        let ic = Field::zeros(&geo);
        let t_end = 1.5;
        let run = simulate_distributed(
            &ic,
            &v,
            t_end,
            &geo,
            &params,
            SchemeKind::SemiLagrangian,
            Some(0.8 * geo.dx()),
        )
        .unwrap();
        for i in (0..=200).step_by(20) {
            let xi = i as f64 / 200.0;
            let oracle =
                characteristics_solution(xi, t_end, &|_xi| 0.0, &v, &geo, &params, 1e-10)
                    .unwrap();
            worst = worst.max((run.field.z[i] - oracle).abs());
        }
    }
    CheckReport::new(
        "semi-Lagrangian vs characteristics oracle (1e-4)",
        worst < 1e-4,
        format!("sup-norm gap {worst:.3e}"),
    )
}
