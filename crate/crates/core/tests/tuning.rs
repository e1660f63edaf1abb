use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3};

use synthrot_core::analysis::{
    optimize_modulation, ModulationBounds, ModulationObjective, ModulationPoint, NelderMeadOptions, TuningMode,
    TuningResult,
};
use synthrot_core::constants::{hz_to_rad, rad_to_hz};
use synthrot_core::squid::SquidArrayParams;
use synthrot_core::{CircuitParams, Error};

const PUBLISHED: ModulationPoint = ModulationPoint {
    delta_phase: 0.38,
    omega_mod: 2.0 * std::f64::consts::PI * 90e6,
    omega_d: 2.0 * std::f64::consts::PI * 6.63e9,
};

fn squid_mode() -> TuningMode {
    TuningMode::Squid {
        array: SquidArrayParams::matched_baseline(1e-9, 1, FRAC_PI_3, 0.38).unwrap(),
    }
}

fn circuit() -> CircuitParams {
    CircuitParams::new(1e-9, 1e-12, 50.0, 0.0, PUBLISHED.omega_mod).unwrap()
}

fn squid_bounds() -> ModulationBounds {
    ModulationBounds {
        delta_phase: (0.2, 0.45),
        omega_mod: (hz_to_rad(60e6), hz_to_rad(130e6)),
        omega_d: (hz_to_rad(6.4e9), hz_to_rad(6.9e9)),
    }
}

fn options(max_evals: usize, steps: Vec<f64>) -> NelderMeadOptions {
    NelderMeadOptions {
        max_evals,
        x_tol: 1e-3,
        f_tol: 1e-6,
        initial_step: steps,
        jitter: 0.0,
        seed: 7,
    }
}

fn squid_steps() -> Vec<f64> {
    vec![0.04, hz_to_rad(5e6), hz_to_rad(30e6)]
}

fn tune_squid(max_evals: usize) -> TuningResult {
    optimize_modulation(
        &circuit(),
        &squid_mode(),
        &ModulationObjective::default(),
        PUBLISHED,
        &squid_bounds(),
        &options(max_evals, squid_steps()),
    )
    .unwrap()
}

#[test]
fn squid_tuning_improves_within_bounds() {
    let r = tune_squid(80);
    println!(
        "delta {:.4}, Omega {:.2} MHz, omega_d {:.4} GHz, score {:.3e} -> {:.3e}, {} evals",
        r.point.delta_phase,
        rad_to_hz(r.point.omega_mod) / 1e6,
        rad_to_hz(r.point.omega_d) / 1e9,
        r.initial_score,
        r.score,
        r.evals
    );
    assert!(r.score <= r.initial_score);
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    let b = squid_bounds();
    assert!((b.delta_phase.0..=b.delta_phase.1).contains(&r.point.delta_phase));
    assert!((b.omega_mod.0..=b.omega_mod.1).contains(&r.point.omega_mod));
    assert!((b.omega_d.0..=b.omega_d.1).contains(&r.point.omega_d));
}

// Deeper modulation keeps lowering the leakage term, so the search walks
// along a valley towards larger Φ_Δ and Ω and lower ω_d.
#[test]
#[ignore = "the published point is not a stationary point of the tuning objective"]
fn squid_tuning_converges_to_published_point() {
    let r = tune_squid(80);
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    assert!(rel(r.point.omega_mod, PUBLISHED.omega_mod) < 0.15, "{:?}", r.point);
    assert!(rel(r.point.omega_d, PUBLISHED.omega_d) < 0.005, "{:?}", r.point);
    assert!(rel(r.point.delta_phase, PUBLISHED.delta_phase) < 0.20, "{:?}", r.point);
}

#[test]
fn tuning_is_deterministic_and_honours_budget() {
    let a = tune_squid(8);
    let b = tune_squid(8);
    assert_eq!(a, b);
    assert!(a.budget_exhausted);
    assert!(a.evals >= 8);
}

#[test]
fn ideal_tuning_stays_at_matched_point() {
    let p = CircuitParams::matched(1e-9, 1e-12, 50.0, FRAC_1_SQRT_2).unwrap();
    let start = ModulationPoint {
        delta_phase: 0.0,
        omega_mod: p.omega_mod,
        omega_d: p.omega0(),
    };
    let bounds = ModulationBounds {
        delta_phase: (0.0, 0.0),
        omega_mod: (0.7 * p.omega_mod, 1.3 * p.omega_mod),
        omega_d: (p.omega0() - p.kappa(), p.omega0() + p.kappa()),
    };
    let r = optimize_modulation(
        &p,
        &TuningMode::Ideal { epsilon: p.epsilon },
        &ModulationObjective::default(),
        start,
        &bounds,
        &options(40, vec![0.05 * p.omega_mod, 0.05 * p.kappa()]),
    )
    .unwrap();
    println!(
        "Omega {:.3} MHz (matched {:.3}), omega_d {:.5} GHz (centre {:.5}), score {:.3e} -> {:.3e}",
        rad_to_hz(r.point.omega_mod) / 1e6,
        rad_to_hz(p.omega_mod) / 1e6,
        rad_to_hz(r.point.omega_d) / 1e9,
        rad_to_hz(p.omega0()) / 1e9,
        r.initial_score,
        r.score
    );
    assert!(r.score <= r.initial_score);
    // One initial simplex step in each coordinate.
    assert!((r.point.omega_mod / p.omega_mod - 1.0).abs() <= 0.05);
    assert!((r.point.omega_d - p.omega0()).abs() <= 0.05 * p.kappa());
}

#[test]
fn bounds_inside_the_pole_guard_are_rejected() {
    let mut b = squid_bounds();
    b.delta_phase = (0.2, 1.2);
    let err = optimize_modulation(
        &circuit(),
        &squid_mode(),
        &ModulationObjective::default(),
        PUBLISHED,
        &b,
        &options(4, squid_steps()),
    )
    .unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { .. }));
}
