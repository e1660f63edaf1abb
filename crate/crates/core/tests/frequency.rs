use proptest::prelude::*;
use synthrot_core::analysis::fwhm;
use synthrot_core::constants::{hz_to_rad, rad_to_hz};
use synthrot_core::freq::{
    cyclic_error, exact_scattering, frequency_grid, reciprocity_error, sweep, three_port_reduction,
};
use synthrot_core::io_model::{circulator_bandwidths, circulator_io_scattering};
use synthrot_core::linalg::max_abs_diff;
use synthrot_core::CircuitParams;

fn small() -> CircuitParams {
    CircuitParams::matched(0.5e-9, 2e-12, 50.0, 1.0).unwrap()
}

fn io_transmission_width(p: &CircuitParams) -> f64 {
    let f0 = rad_to_hz(p.omega0());
    let grid = frequency_grid(f0 - 1e9, f0 + 1e9, 4001).unwrap();
    let y: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let s = circulator_io_scattering(p.kappa(), hz_to_rad(f) - p.omega0(), p.omega_crit()).unwrap();
            s[(1, 0)].norm_sqr()
        })
        .collect();
    fwhm(&grid, &y).unwrap()
}

#[test]
fn io_sweep_width_is_241_mhz() {
    let w = io_transmission_width(&small());
    assert!((w - 241e6).abs() < 3e6, "{w}");
    let (_, full) = circulator_bandwidths(small().kappa()).unwrap();
    assert!((w / rad_to_hz(full) - 1.0).abs() < 1e-3);
}

#[test]
fn exact_width_is_close_to_io_width() {
    let p = small();
    let f0 = rad_to_hz(p.omega0());
    let pts = sweep(f0 - 1e9, f0 + 1e9, 4001, &p).unwrap();
    let x: Vec<f64> = pts.iter().map(|s| s.freq_hz).collect();
    let y: Vec<f64> = pts.iter().map(|s| s.result.as_ref().unwrap().power(2, 1)).collect();
    let exact = fwhm(&x, &y).unwrap();
    let io = io_transmission_width(&p);
    assert!((exact / io - 1.0).abs() < 0.15, "exact {exact}, io {io}");
}

#[test]
fn io_and_exact_agree_near_resonance() {
    // The IO model is the narrow-band limit of the exact network; port
    // reference phases differ, so compare powers.
    let p = small();
    for x in [-0.3, 0.0, 0.3] {
        let w = p.omega0() + x * p.kappa();
        let exact = exact_scattering(w, &p).unwrap();
        let io = circulator_io_scattering(p.kappa(), w - p.omega0(), p.omega_crit()).unwrap();
        for i in 0..4 {
            let err = exact.power(i + 1, 1) - io[(i, 0)].norm_sqr();
            assert!(err.abs() < 0.02, "|S{}1|^2 at {x}: {err}", i + 1);
        }
    }
}

#[test]
fn three_port_routes_cyclically_at_match() {
    let p = small();
    let s = three_port_reduction(&exact_scattering(p.omega0(), &p).unwrap()).unwrap();
    assert_eq!(s.dim(), 3);
    for j in 1..=3 {
        assert!(s.power(j % 3 + 1, j) > 0.97);
    }
    assert!(s.unitarity_error() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_scattering_properties(
        l in 0.3e-9..3e-9f64,
        c in 0.3e-12..3e-12f64,
        eps in 0.05..1.0f64,
        rel_omega in 0.0..3.0f64,
        x in -2.0..2.0f64,
    ) {
        let base = CircuitParams::matched(l, c, 50.0, eps).unwrap();
        let p = base.with_omega_mod(rel_omega * base.omega_crit());
        let w = p.omega0() * (1.0 + 0.1 * x);
        let s = exact_scattering(w, &p).unwrap();
        prop_assert!(s.unitarity_error() < 1e-9);
        prop_assert!(cyclic_error(&s.s) < 1e-9);
        let still = exact_scattering(w, &p.with_omega_mod(0.0)).unwrap();
        prop_assert!(reciprocity_error(&still.s) < 1e-9);
    }

    #[test]
    fn rotation_is_invisible_without_coupling(
        omega_mod in 0.0..1e9f64,
        x in 0.5..1.5f64,
    ) {
        let p = CircuitParams::new(1e-9, 1e-12, 50.0, 0.0, 0.0).unwrap();
        let w = p.omega0() * x;
        let a = exact_scattering(w, &p).unwrap();
        let b = exact_scattering(w, &p.with_omega_mod(omega_mod)).unwrap();
        prop_assert!(max_abs_diff(&a.s, &b.s) < 1e-12);
    }
}
