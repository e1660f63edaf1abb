use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthrot_core::freq::exact_scattering;
use synthrot_core::squid::ideal_ring;
use synthrot_core::time_domain::{
    assemble_ode, energy_balance, integrate, steady_state_demod, DriveSpec, StepControl, TimeSeries,
};
use synthrot_core::CircuitParams;

fn design() -> CircuitParams {
    CircuitParams::matched(1e-9, 1e-12, 50.0, FRAC_1_SQRT_2).unwrap()
}

fn run(p: &CircuitParams, port: usize, omega_d: f64, duration: f64, steps: usize) -> TimeSeries {
    let ring = ideal_ring(p.l, p.epsilon, p.omega_mod).unwrap();
    let ode = assemble_ode(p, ring, vec![DriveSpec::new(port, 1.0, omega_d).unwrap()]).unwrap();
    integrate(&ode, StepControl::new(duration).with_steps_per_period(steps)).unwrap()
}

fn amplitudes(s: &TimeSeries, omega_d: f64) -> [Complex64; 4] {
    steady_state_demod(s, omega_d, 50e-9).unwrap()
}

#[test]
fn matches_exact_scattering_at_random_in_band_frequencies() {
    let p = design();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let w = p.omega0() + rng.gen_range(-0.6..0.6) * p.kappa();
        let a = amplitudes(&run(&p, 1, w, 120e-9, 80), w);
        let s = exact_scattering(w, &p).unwrap();
        for (k, got) in a.iter().enumerate() {
            let expect = s.get(k + 1, 1);
            assert!((got - expect).norm() < 0.01 * s.get(2, 1).norm(), "port {} at {w}: {got} vs {expect}", k + 1);
        }
    }
}

#[test]
fn driving_another_port_permutes_the_response() {
    let p = design();
    let w = p.omega0() + 0.2 * p.kappa();
    let base = amplitudes(&run(&p, 1, w, 120e-9, 80), w);
    let scale = base.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for shift in 1..4 {
        let a = amplitudes(&run(&p, 1 + shift, w, 120e-9, 80), w);
        for k in 0..4 {
            let dev = (a[(k + shift) % 4] - base[k]).norm() / scale;
            assert!(dev < 1e-6, "drive port {}: deviation {dev}", 1 + shift);
        }
    }
}

#[test]
fn halving_the_step_barely_moves_the_output() {
    let p = design();
    let w = p.omega0();
    let coarse = amplitudes(&run(&p, 1, w, 120e-9, 80), w)[1];
    let fine = amplitudes(&run(&p, 1, w, 120e-9, 160), w)[1];
    assert!((coarse - fine).norm() / fine.norm() < 1e-3);
}

#[test]
fn most_output_reaches_port_2_after_a_few_ns() {
    let p = design();
    let s = run(&p, 1, 2.0 * std::f64::consts::PI * 6.66e9, 20e-9, 80);
    let tail = s.tail(10e-9).unwrap();
    let energy: Vec<f64> = tail.i_out.iter().map(|i| i.iter().map(|x| x * x).sum()).collect();
    let total: f64 = energy.iter().sum();
    assert!(energy[1] / total > 0.9, "{energy:?}");
}

#[test]
fn output_never_exceeds_input_plus_pump() {
    // Without modulation the network is passive.
    let p = CircuitParams::new(1e-9, 1e-12, 50.0, 0.0, 0.0).unwrap();
    let ring = ideal_ring(p.l, 0.0, 1.0).unwrap();
    let ode = assemble_ode(&p, ring, vec![DriveSpec::new(3, 0.7, p.omega0() * 1.01).unwrap()]).unwrap();
    let s = integrate(&ode, StepControl::new(20e-9).with_states()).unwrap();
    for end in [1e-9, 5e-9, 20e-9] {
        let e = energy_balance(&ode, &s, 0.0, end).unwrap();
        assert!(e.emitted <= e.incident * (1.0 + 1e-6), "{e:?}");
    }
}

#[test]
fn zero_input_gives_zero_output() {
    let p = design();
    let ring = ideal_ring(p.l, p.epsilon, p.omega_mod).unwrap();
    let ode = assemble_ode(&p, ring, vec![DriveSpec::new(1, 0.0, p.omega0()).unwrap()]).unwrap();
    let s = integrate(&ode, StepControl::new(5e-9)).unwrap();
    assert!(s.i_out.iter().flatten().chain(s.v_out.iter().flatten()).all(|&x| x == 0.0));
}

#[test]
fn runs_are_reproducible() {
    let p = design();
    let a = run(&p, 2, p.omega0(), 10e-9, 50);
    let b = run(&p, 2, p.omega0(), 10e-9, 50);
    assert_eq!(a, b);
}
