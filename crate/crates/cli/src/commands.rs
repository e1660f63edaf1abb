//! The four subcommands.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use synthrot_core::analysis::{
    optimize_modulation, power_spectrum, sideband_table, tuning_ring, ModulationBounds, ModulationObjective,
    ModulationPoint, NelderMeadOptions, SidebandTable, TuningMode, Window,
};
use synthrot_core::constants::{hz_to_rad, rad_to_hz};
use synthrot_core::freq::{exact_scattering, frequency_grid, gyrator_approx, gyrator_scattering, power_db};
use synthrot_core::io_model::{circulator_bandwidths, circulator_io_scattering, rotation_angle};
use synthrot_core::linalg::{unitarity_error, CMatrix};
use synthrot_core::squid::{kerr_constant, saturation_photons, tunability_bound};
use synthrot_core::time_domain::{assemble_ode, integrate, steady_state_demod, StepControl};
use synthrot_core::verify::{run_verify, VerifyOptions, VerifyReport};
use synthrot_core::CircuitParams;

use crate::config::{omega_mod_hz, Format, Mode, RunConfig, WindowKind};
use crate::output::{ensure_dir, write_json, write_touchstone, Table};
use crate::CliError;

/// Rows whose `S^H S` deviates from identity by more than this are flagged.
pub const UNITARITY_FLAG_TOL: f64 = 1e-9;
/// Rows whose solve condition number exceeds this are flagged.
pub const CONDITION_FLAG: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub f0_hz: f64,
    pub kappa_hz: f64,
    pub omega_crit_hz: f64,
    pub omega_mod_hz: f64,
    pub fwhm_odd_formula: &'static str,
    pub fwhm_full_formula: &'static str,
    pub fwhm_odd_hz: Option<f64>,
    pub fwhm_full_hz: Option<f64>,
    pub gyration_resistance_ohm: Option<f64>,
    pub rotation_angle_rad: Option<f64>,
    pub kerr_hz: Option<f64>,
    pub saturation_photons: Option<f64>,
    pub tunability_bound: Option<f64>,
    pub squid_zero_bias_inductance_h: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn run_design(cfg: &RunConfig) -> Result<DesignReport, CliError> {
    let p = cfg.circuit_params()?;
    let mut warnings = Vec::new();
    let kappa = p.kappa();
    let widths = if kappa > 0.0 {
        Some(circulator_bandwidths(kappa)?)
    } else {
        // In SQUID mode the arms carry the modulation, so epsilon = 0 is normal.
        if cfg.mode == Mode::Ideal {
            warnings.push("no circulation: epsilon = 0 gives kappa = 0".to_string());
        }
        None
    };
    let squid = cfg.squid_params()?;
    let (kerr_hz, photons) = match &cfg.kerr {
        Some(k) => {
            let w0 = k.f0_hz.map(hz_to_rad).unwrap_or_else(|| p.omega0());
            let kerr = kerr_constant(w0, k.i_s_a, k.l_a_h)?;
            let photons = match widths {
                Some((_, full)) => Some(saturation_photons(rad_to_hz(full), kerr)?),
                None => None,
            };
            (Some(rad_to_hz(kerr)), photons)
        }
        None => (None, None),
    };
    let tunability = match squid.as_ref().and_then(|s| s.eta) {
        Some(eta) => Some(tunability_bound(eta)?),
        None => None,
    };
    if let Some(t) = tunability {
        if p.epsilon > t {
            warnings.push(format!("epsilon {} exceeds the tunability bound {t:.4}", p.epsilon));
        }
    }
    Ok(DesignReport {
        f0_hz: rad_to_hz(p.omega0()),
        kappa_hz: rad_to_hz(kappa),
        omega_crit_hz: rad_to_hz(p.omega_crit()),
        omega_mod_hz: omega_mod_hz(&p),
        fwhm_odd_formula: "sqrt(2) * kappa",
        fwhm_full_formula: "sqrt(2 * (sqrt(3) - 1)) * kappa",
        fwhm_odd_hz: widths.map(|w| rad_to_hz(w.0)),
        fwhm_full_hz: widths.map(|w| rad_to_hz(w.1)),
        gyration_resistance_ohm: Some(gyrator_approx(&p).gyration_resistance).filter(|r| r.is_finite()),
        rotation_angle_rad: if kappa > 0.0 { Some(rotation_angle(p.omega_mod, kappa)?) } else { None },
        kerr_hz,
        saturation_photons: photons,
        tunability_bound: tunability,
        squid_zero_bias_inductance_h: squid.map(|s| s.zero_bias_inductance()),
        warnings,
    })
}

const TIERS: [&str; 3] = ["io", "exact", "gyrator"];

fn tier_matrix(tier: usize, w: f64, p: &CircuitParams) -> synthrot_core::Result<(CMatrix, f64)> {
    match tier {
        0 => Ok((circulator_io_scattering(p.kappa(), w - p.omega0(), p.omega_mod)?, 1.0)),
        1 => exact_scattering(w, p).map(|s| (s.s, s.condition)),
        _ => gyrator_scattering(w, p).map(|s| (s.s, s.condition)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub unitarity_flags: usize,
    pub solver_flags: usize,
}

pub fn sweep_header() -> Vec<String> {
    let mut h = vec!["freq_hz".to_string()];
    for tier in TIERS {
        for i in 1..=4 {
            for j in 1..=4 {
                for part in ["re", "im", "db"] {
                    h.push(format!("{tier}_S{i}{j}_{part}"));
                }
            }
        }
    }
    h.push("unitarity_flag".into());
    h.push("solver_flag".into());
    h
}

pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepSummary, CliError> {
    let p = cfg.circuit_params()?;
    let s = cfg.sweep()?;
    let grid = frequency_grid(s.f_lo_hz, s.f_hi_hz, s.n_points)?;
    let rows: Vec<(f64, Vec<Option<CMatrix>>, bool, bool)> = grid
        .par_iter()
        .map(|&f| {
            let w = hz_to_rad(f);
            let mut unitary_flag = false;
            let mut solver_flag = false;
            let tiers = (0..TIERS.len())
                .map(|t| match tier_matrix(t, w, &p) {
                    Ok((m, cond)) => {
                        unitary_flag |= unitarity_error(&m) > UNITARITY_FLAG_TOL;
                        solver_flag |= cond > CONDITION_FLAG;
                        Some(m)
                    }
                    Err(_) => {
                        solver_flag = true;
                        None
                    }
                })
                .collect();
            (f, tiers, unitary_flag, solver_flag)
        })
        .collect();

    ensure_dir(out)?;
    if cfg.wants(Format::Csv) {
        let mut t = Table::create(out.join("sweep.csv"), &sweep_header())?;
        for (f, tiers, uf, sf) in &rows {
            let mut v = vec![*f];
            for m in tiers {
                for i in 0..4 {
                    for j in 0..4 {
                        let z = m.as_ref().map(|m| m[(i, j)]).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                        v.extend([z.re, z.im, if z.is_nan() { f64::NAN } else { power_db(z.norm_sqr()) }]);
                    }
                }
            }
            v.push(*uf as u8 as f64);
            v.push(*sf as u8 as f64);
            t.row(&v)?;
        }
        t.finish()?;
    }
    if cfg.wants(Format::Touchstone) {
        let exact: Vec<(f64, CMatrix)> = rows.iter().filter_map(|(f, t, _, _)| t[1].clone().map(|m| (*f, m))).collect();
        write_touchstone(&out.join("sweep.s4p"), p.r, &exact)?;
    }
    Ok(SweepSummary {
        points: rows.len(),
        unitarity_flags: rows.iter().filter(|r| r.2).count(),
        solver_flags: rows.iter().filter(|r| r.3).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortAmplitude {
    pub port: usize,
    pub re: f64,
    pub im: f64,
    pub power: f64,
    /// Relative to the strongest port.
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningReport {
    pub seed: u64,
    pub delta_phase: f64,
    pub omega_mod_hz: f64,
    pub freq_hz: f64,
    pub initial_score: f64,
    pub score: f64,
    pub evals: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub freq_hz: f64,
    pub omega_mod_hz: f64,
    pub samples: usize,
    pub amplitudes: Vec<PortAmplitude>,
    pub sidebands: Option<SidebandTable>,
    pub tuning: Option<TuningReport>,
}

fn tune(cfg: &RunConfig, p: &CircuitParams, mode: &TuningMode, start: ModulationPoint, seed: u64) -> Result<TuningReport, CliError> {
    let t = cfg.tune.as_ref().expect("checked by caller");
    let sim = cfg.sim()?;
    let objective = ModulationObjective {
        w_unwanted: t.w_unwanted.unwrap_or(1.0),
        w_sidebands: t.w_sidebands.unwrap_or(1.0),
        n_max: sim.n_max.unwrap_or(5),
        duration: sim.duration_s,
        discard: sim.discard(),
        steps_per_period: sim.steps(),
    };
    let bounds = ModulationBounds {
        delta_phase: (t.delta_phase_bounds[0], t.delta_phase_bounds[1]),
        omega_mod: (hz_to_rad(t.omega_mod_bounds_hz[0]), hz_to_rad(t.omega_mod_bounds_hz[1])),
        omega_d: (hz_to_rad(t.freq_bounds_hz[0]), hz_to_rad(t.freq_bounds_hz[1])),
    };
    let steps = match mode {
        TuningMode::Squid { .. } => vec![0.04, 0.05 * start.omega_mod, 0.005 * start.omega_d],
        TuningMode::Ideal { .. } => vec![0.05 * start.omega_mod, 0.005 * start.omega_d],
    };
    let opts = NelderMeadOptions {
        max_evals: t.max_evals,
        x_tol: 1e-3,
        f_tol: 1e-6,
        initial_step: steps,
        jitter: 0.1,
        seed,
    };
    let r = optimize_modulation(p, mode, &objective, start, &bounds, &opts)?;
    Ok(TuningReport {
        seed,
        delta_phase: r.point.delta_phase,
        omega_mod_hz: rad_to_hz(r.point.omega_mod),
        freq_hz: rad_to_hz(r.point.omega_d),
        initial_score: r.initial_score,
        score: r.score,
        evals: r.evals,
        converged: r.converged,
        budget_exhausted: r.budget_exhausted,
    })
}

pub fn run_simulate(cfg: &RunConfig, out: &Path, seed: u64) -> Result<SimulateSummary, CliError> {
    let p = cfg.circuit_params()?;
    let sim = cfg.sim()?;
    let mut drive = cfg.drive_spec()?;
    let squid = cfg.squid_params()?;
    let mode = match (cfg.mode, squid) {
        (Mode::Squid, Some(array)) => TuningMode::Squid { array },
        _ => TuningMode::Ideal { epsilon: p.epsilon },
    };
    let mut point = ModulationPoint {
        delta_phase: cfg.squid.as_ref().map(|s| s.delta_phase).unwrap_or(0.0),
        omega_mod: p.omega_mod,
        omega_d: drive.omega_d,
    };
    let tuning = match &cfg.tune {
        Some(_) => {
            let r = tune(cfg, &p, &mode, point, seed)?;
            point = ModulationPoint {
                delta_phase: r.delta_phase,
                omega_mod: hz_to_rad(r.omega_mod_hz),
                omega_d: hz_to_rad(r.freq_hz),
            };
            drive.omega_d = point.omega_d;
            Some(r)
        }
        None => None,
    };
    let ring = tuning_ring(&p, &mode, &point)?;
    let ode = assemble_ode(&p, ring, vec![drive])?;
    let series = integrate(&ode, StepControl::new(sim.duration_s).with_steps_per_period(sim.steps()))?;
    let tail = series.tail(sim.discard())?;
    let span = tail.end_time() - tail.t0;
    let amps = steady_state_demod(&tail, drive.omega_d, span)?;
    let strongest = amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let amplitudes: Vec<PortAmplitude> = amps
        .iter()
        .enumerate()
        .map(|(k, a)| PortAmplitude {
            port: k + 1,
            re: a.re,
            im: a.im,
            power: a.norm_sqr(),
            db: if strongest > 0.0 { power_db(a.norm_sqr() / strongest) } else { 0.0 },
        })
        .collect();

    let window = match sim.window.unwrap_or(WindowKind::Hann) {
        WindowKind::Hann => Window::Hann,
        WindowKind::Rect => Window::Rect,
    };
    let required = if point.omega_mod > 0.0 { rad_to_hz(point.omega_mod) / 8.0 } else { f64::INFINITY };
    let spectrum = power_spectrum(&tail, window, required)?;
    let sidebands = if point.omega_mod > 0.0 {
        Some(sideband_table(&spectrum, drive.omega_d, point.omega_mod, sim.n_max.unwrap_or(5))?)
    } else {
        None
    };

    ensure_dir(out)?;
    if cfg.wants(Format::Csv) {
        let mut header = vec!["t_s".to_string()];
        header.extend((1..=4).map(|k| format!("v_in_{k}")));
        header.extend((1..=4).map(|k| format!("i_out_{k}")));
        let mut t = Table::create(out.join("waveform.csv"), &header)?;
        for i in 0..series.len() {
            let mut row = vec![series.time(i)];
            row.extend((0..4).map(|k| series.v_in[k][i]));
            row.extend((0..4).map(|k| series.i_out[k][i]));
            t.row(&row)?;
        }
        t.finish()?;
        let mut header = vec!["freq_hz".to_string()];
        header.extend((1..=4).map(|k| format!("port{k}_db")));
        let mut t = Table::create(out.join("spectrum.csv"), &header)?;
        for (i, f) in spectrum.freq_hz.iter().enumerate() {
            let mut row = vec![*f];
            row.extend((0..4).map(|k| spectrum.db[k][i]));
            t.row(&row)?;
        }
        t.finish()?;
    }
    let summary = SimulateSummary {
        freq_hz: rad_to_hz(drive.omega_d),
        omega_mod_hz: rad_to_hz(point.omega_mod),
        samples: series.len(),
        amplitudes,
        sidebands,
        tuning,
    };
    if cfg.wants(Format::Json) {
        write_json(&out.join("amplitudes.json"), &summary.amplitudes)?;
        if let Some(s) = &summary.sidebands {
            write_json(&out.join("sidebands.json"), s)?;
        }
        if let Some(t) = &summary.tuning {
            write_json(&out.join("tuning.json"), t)?;
        }
    }
    Ok(summary)
}

pub fn run_verify_cmd(kappa_scale: f64, out: Option<&Path>) -> Result<VerifyReport, CliError> {
    let report = run_verify(&VerifyOptions { kappa_scale });
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("verify.json"), &report)?;
    }
    Ok(report)
}
