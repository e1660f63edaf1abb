//! Spectra, sideband levels, resonance widths and modulation tuning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use num_complex::Complex64;

use crate::constants::{rad_to_hz, TWO_PI};
use crate::network::CircuitParams;
use crate::squid::{ideal_ring, squid_ring, ModulatedRing, SquidArrayParams};
use crate::time_domain::{assemble_ode, integrate, steady_state_demod, DriveSpec, StepControl, TimeSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rect,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            // Periodic Hann, so an integer number of cycles leaks into two bins only.
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (TWO_PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// One-sided windowed periodogram of the four output currents.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq_hz: Vec<f64>,
    /// Power per bin, A². Summed over bins this equals the mean square of
    /// the windowed signal.
    pub power: [Vec<f64>; 4],
    /// `power` in dB relative to the largest bin over all ports.
    pub db: [Vec<f64>; 4],
    pub resolution_hz: f64,
    pub window: Window,
}

impl Spectrum {
    pub fn nyquist_hz(&self) -> f64 {
        *self.freq_hz.last().unwrap_or(&0.0)
    }
}

fn periodogram(x: &[f64], window: Window) -> Vec<f64> {
    let n = x.len();
    let w = window.weights(n);
    let mut buf: Vec<Complex64> = x.iter().zip(&w).map(|(a, b)| Complex64::new(a * b, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (n as f64 * n as f64);
    (0..=n / 2)
        .map(|k| {
            let p = buf[k].norm_sqr() * norm;
            let mirrored = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            if mirrored {
                2.0 * p
            } else {
                p
            }
        })
        .collect()
}

/// Power spectrum of `I_out` for every port. The segment must resolve at
/// least `max_resolution_hz`.
pub fn power_spectrum(series: &TimeSeries, window: Window, max_resolution_hz: f64) -> Result<Spectrum> {
    spectrum_of(&series.i_out, series.dt, window, max_resolution_hz)
}

pub fn spectrum_of(signals: &[Vec<f64>; 4], dt: f64, window: Window, max_resolution_hz: f64) -> Result<Spectrum> {
    let n = signals[0].len();
    if n < 2 || signals.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("series", "need four equal-length signals of at least two samples"));
    }
    let resolution_hz = 1.0 / (n as f64 * dt);
    if resolution_hz > max_resolution_hz {
        return Err(Error::InsufficientResolution {
            resolution_hz,
            required_hz: max_resolution_hz,
        });
    }
    let power: [Vec<f64>; 4] = std::array::from_fn(|k| periodogram(&signals[k], window));
    let peak = power.iter().flatten().copied().fold(0.0, f64::max);
    let db = std::array::from_fn(|k| {
        power[k]
            .iter()
            .map(|&p| if peak > 0.0 { 10.0 * (p.max(peak * 1e-40) / peak).log10() } else { -400.0 })
            .collect()
    });
    Ok(Spectrum {
        freq_hz: (0..=n / 2).map(|k| k as f64 * resolution_hz).collect(),
        power,
        db,
        resolution_hz,
        window,
    })
}

/// Level and position of the strongest bin within `tol_hz` of `f_hz`, refined
/// by a parabola through the neighbouring dB values.
fn local_peak(spec: &Spectrum, port: usize, f_hz: f64, tol_hz: f64) -> Result<(f64, f64)> {
    if f_hz - tol_hz < 0.0 || f_hz + tol_hz > spec.nyquist_hz() {
        return Err(Error::Coverage {
            freq_hz: f_hz,
            nyquist_hz: spec.nyquist_hz(),
        });
    }
    let res = spec.resolution_hz;
    let lo = ((f_hz - tol_hz) / res).ceil() as usize;
    let hi = (((f_hz + tol_hz) / res).floor() as usize).min(spec.freq_hz.len() - 1);
    let p = &spec.power[port];
    let nearest = (f_hz / res).round() as usize;
    let (lo, hi) = if lo > hi { (nearest, nearest) } else { (lo, hi) };
    let k = (lo..=hi).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    let db = |i: usize| 10.0 * p[i].max(f64::MIN_POSITIVE).log10();
    if k == 0 || k + 1 >= p.len() {
        return Ok((db(k), spec.freq_hz[k]));
    }
    let (a, b, c) = (db(k - 1), db(k), db(k + 1));
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return Ok((b, spec.freq_hz[k]));
    }
    let off = 0.5 * (a - c) / denom;
    Ok((b - 0.25 * (a - c) * off, spec.freq_hz[k] + off * res))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandEntry {
    /// Line index 1..=4.
    pub port: usize,
    /// Offset `n` in units of the modulation frequency.
    pub harmonic: i32,
    pub freq_hz: f64,
    pub level_dbc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SidebandTable {
    pub entries: Vec<SidebandEntry>,
    /// Carrier level of each port, dB relative to the port-2 carrier.
    pub carriers_dbc: [f64; 4],
}

impl SidebandTable {
    pub fn level(&self, port: usize, harmonic: i32) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.port == port && e.harmonic == harmonic)
            .map(|e| e.level_dbc)
    }

    /// Strongest sideband on `port`.
    pub fn strongest(&self, port: usize) -> Option<SidebandEntry> {
        self.entries
            .iter()
            .filter(|e| e.port == port)
            .copied()
            .max_by(|a, b| a.level_dbc.total_cmp(&b.level_dbc))
    }

    /// Sum of the linear sideband powers on `port`, relative to the port-2 carrier.
    pub fn total_power(&self, port: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.port == port)
            .map(|e| 10f64.powf(e.level_dbc / 10.0))
            .sum()
    }
}

/// Sideband levels at `ω_d + nΩ`, `0 < |n| <= n_max`, in dB relative to the
/// port-2 carrier. Each level is the local maximum within `Ω/10`.
pub fn sideband_table(spec: &Spectrum, omega_d: f64, omega_mod: f64, n_max: u32) -> Result<SidebandTable> {
    if !(omega_mod > 0.0 && omega_d > 0.0) {
        return Err(Error::invalid("omega", "drive and modulation frequencies must be positive"));
    }
    let fd = rad_to_hz(omega_d);
    let fm = rad_to_hz(omega_mod);
    let tol = fm / 10.0;
    let (reference, _) = local_peak(spec, 1, fd, tol)?;
    let mut carriers_dbc = [0.0; 4];
    for (port, slot) in carriers_dbc.iter_mut().enumerate() {
        *slot = local_peak(spec, port, fd, tol)?.0 - reference;
    }
    let n_max = n_max as i32;
    let mut entries = Vec::new();
    for port in 0..4 {
        for n in (-n_max..=n_max).filter(|&n| n != 0) {
            let f = fd + n as f64 * fm;
            let (level, _) = local_peak(spec, port, f, tol)?;
            entries.push(SidebandEntry {
                port: port + 1,
                harmonic: n,
                freq_hz: f,
                level_dbc: level - reference,
            });
        }
    }
    Ok(SidebandTable { entries, carriers_dbc })
}

/// Full width at half maximum of a single-peaked sampled curve, with the
/// crossings located by linear interpolation.
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid("sweep", "need matching grids of at least three points"));
    }
    let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let half = 0.5 * y[k];
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=k).rev().find(|&i| y[i - 1] < half).map(|i| cross(i - 1, i));
    let right = (k..y.len() - 1).find(|&i| y[i + 1] < half).map(|i| cross(i, i + 1));
    match (left, right) {
        (None, _) => Err(Error::NoCrossing { side: "lower" }),
        (_, None) => Err(Error::NoCrossing { side: "upper" }),
        (Some(l), Some(r)) => Ok(r - l),
    }
}

/// FWHM of a function peaked at `peak`, with both half-maximum crossings
/// found by bisection to relative tolerance `rel_tol` of the width.
pub fn fwhm_bisect<F: Fn(f64) -> f64>(f: F, lo: f64, peak: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let half = 0.5 * f(peak);
    if f(lo) >= half {
        return Err(Error::NoCrossing { side: "lower" });
    }
    if f(hi) >= half {
        return Err(Error::NoCrossing { side: "upper" });
    }
    let tol = rel_tol * (hi - lo);
    let bisect = |mut below: f64, mut above: f64| {
        while (above - below).abs() > tol {
            let mid = 0.5 * (below + above);
            if f(mid) < half {
                below = mid;
            } else {
                above = mid;
            }
        }
        0.5 * (below + above)
    };
    Ok(bisect(hi, peak) - bisect(lo, peak))
}

/// Box constraints for the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[i], self.hi[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex spans less than this in every scaled coordinate.
    pub x_tol: f64,
    /// Stop when the spread of simplex values drops below this.
    pub f_tol: f64,
    /// Initial simplex offsets per coordinate.
    pub initial_step: Vec<f64>,
    /// Relative random perturbation of the initial offsets.
    pub jitter: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub evals: usize,
    pub converged: bool,
    /// Set when the evaluation budget ran out before convergence.
    pub budget_exhausted: bool,
    /// Best value after each evaluation.
    pub history: Vec<f64>,
}

/// Bounded Nelder-Mead. Objective failures count as `+inf`. Vertices of the
/// initial simplex and of a shrink step are evaluated in parallel; results are
/// reduced in vertex order, so runs are reproducible.
pub fn nelder_mead<F>(f: F, x0: &[f64], bounds: &Bounds, opts: &NelderMeadOptions) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = x0.len();
    if n == 0 || bounds.lo.len() != n || bounds.hi.len() != n || opts.initial_step.len() != n {
        return Err(Error::invalid("optimizer", "dimension mismatch between start, bounds and steps"));
    }
    if bounds.lo.iter().zip(&bounds.hi).any(|(l, h)| !(l <= h)) {
        return Err(Error::invalid("bounds", "lower bound above upper bound"));
    }
    if x0.iter().enumerate().any(|(i, v)| *v < bounds.lo[i] || *v > bounds.hi[i]) {
        return Err(Error::invalid("start", "initial point outside the bounds"));
    }
    let eval = |x: &[f64]| f(x).ok().filter(|v| !v.is_nan()).unwrap_or(f64::INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale: Vec<f64> = opts.initial_step.iter().map(|s| s.abs().max(f64::MIN_POSITIVE)).collect();
    let mut history = Vec::with_capacity(opts.max_evals);
    let mut best = f64::INFINITY;
    let mut evals = 0;
    let mut initial_value = f64::NAN;
    let mut converged = false;
    let mut simplex: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut centre = x0.to_vec();
    let mut restart_value = f64::INFINITY;

    // A simplex pressed against a bound can collapse before reaching the
    // optimum, so a converged run is restarted around its best vertex until a
    // restart no longer improves.
    'restarts: while evals < opts.max_evals {
        simplex.clear();
        simplex.push(centre.clone());
        for i in 0..n {
            let mut v = centre.clone();
            let j = 1.0 + opts.jitter * rng.gen_range(-1.0..1.0);
            v[i] += opts.initial_step[i] * j;
            if v[i] > bounds.hi[i] {
                v[i] = centre[i] - opts.initial_step[i] * j;
            }
            bounds.clamp(&mut v);
            simplex.push(v);
        }
        values = simplex.par_iter().map(|v| eval(v)).collect();
        if initial_value.is_nan() {
            initial_value = values[0];
        }
        for v in &values {
            evals += 1;
            best = best.min(*v);
            history.push(best);
        }
        converged = false;

        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread_f = values[n] - values[0];
            let spread_x = (0..n)
                .map(|i| simplex.iter().map(|v| ((v[i] - simplex[0][i]) / scale[i]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread_f.abs() <= opts.f_tol && spread_x <= opts.x_tol {
                converged = true;
                if restart_value - values[0] <= opts.f_tol {
                    break 'restarts;
                }
                restart_value = values[0];
                centre = simplex[0].clone();
                continue 'restarts;
            }

            let centroid: Vec<f64> =
                (0..n).map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
            let towards = |coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + coef * (simplex[n][i] - centroid[i])).collect();
                bounds.clamp(&mut p);
                p
            };
            let mut record = |v: f64, evals: &mut usize, history: &mut Vec<f64>| {
                *evals += 1;
                best = best.min(v);
                history.push(best);
            };

            let xr = towards(-1.0);
            let fr = eval(&xr);
            record(fr, &mut evals, &mut history);
            if fr < values[0] {
                let xe = towards(-2.0);
                let fe = eval(&xe);
                record(fe, &mut evals, &mut history);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            let xc = towards(if fr < values[n] { -0.5 } else { 0.5 });
            let fc = eval(&xc);
            record(fc, &mut evals, &mut history);
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            // Shrink towards the best vertex.
            let x_best = simplex[0].clone();
            let shrunk: Vec<Vec<f64>> = simplex[1..]
                .iter()
                .map(|v| {
                    let mut p: Vec<f64> = v.iter().zip(&x_best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    bounds.clamp(&mut p);
                    p
                })
                .collect();
            let fs: Vec<f64> = shrunk.par_iter().map(|v| eval(v)).collect();
            for (i, (p, v)) in shrunk.into_iter().zip(fs).enumerate() {
                simplex[i + 1] = p;
                values[i + 1] = v;
                record(v, &mut evals, &mut history);
            }
        }
        break;
    }

    let k = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Ok(OptimizeResult {
        x: simplex[k].clone(),
        value: values[k],
        initial_value,
        evals,
        converged,
        budget_exhausted: !converged,
        history,
    })
}

/// How the bridge arms are modulated while tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningMode {
    /// Ideal reluctance modulation with fixed depth; tunes `(Ω, ω_d)`.
    Ideal { epsilon: f64 },
    /// SQUID arms with fixed junctions and static bias; tunes `(Φ_Δ, Ω, ω_d)`.
    Squid { array: SquidArrayParams },
}

/// A candidate operating point. `delta_phase` is `Φ_Δ / 2φ₀` and is ignored
/// in ideal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationPoint {
    pub delta_phase: f64,
    pub omega_mod: f64,
    pub omega_d: f64,
}

/// Weights and run settings of the tuning objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationObjective {
    /// Weight of the power leaving ports 1, 3, 4, relative to port 2.
    pub w_unwanted: f64,
    /// Weight of the total port-2 sideband power, relative to its carrier.
    pub w_sidebands: f64,
    /// Sidebands considered, `|n| <= n_max`.
    pub n_max: u32,
    pub duration: f64,
    pub discard: f64,
    pub steps_per_period: usize,
}

impl Default for ModulationObjective {
    fn default() -> Self {
        Self {
            w_unwanted: 1.0,
            w_sidebands: 1.0,
            n_max: 5,
            duration: 150e-9,
            discard: 50e-9,
            steps_per_period: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationScore {
    pub unwanted: f64,
    pub sidebands: f64,
    pub total: f64,
}

/// Builds the modulated ring for a tuning point.
pub fn tuning_ring(circuit: &CircuitParams, mode: &TuningMode, point: &ModulationPoint) -> Result<ModulatedRing> {
    match mode {
        TuningMode::Ideal { epsilon } => ideal_ring(circuit.l, *epsilon, point.omega_mod),
        TuningMode::Squid { array } => {
            let mut a = *array;
            a.phi_delta = crate::squid::flux_from_phase(point.delta_phase);
            squid_ring(circuit.l, &a, point.omega_mod)
        }
    }
}

/// Runs one transient with a unit drive on port 1 and scores it.
pub fn evaluate_modulation(
    circuit: &CircuitParams,
    mode: &TuningMode,
    point: &ModulationPoint,
    objective: &ModulationObjective,
) -> Result<ModulationScore> {
    let ring = tuning_ring(circuit, mode, point)?;
    let ode = assemble_ode(circuit, ring, vec![DriveSpec::new(1, 1.0, point.omega_d)?])?;
    let series = integrate(&ode, StepControl::new(objective.duration).with_steps_per_period(objective.steps_per_period))?;
    let tail = series.tail(objective.discard)?;
    let window = tail.end_time() - tail.t0;
    let amps = steady_state_demod(&tail, point.omega_d, window)?;
    let carrier = amps[1].norm_sqr();
    let unwanted = (amps[0].norm_sqr() + amps[2].norm_sqr() + amps[3].norm_sqr()) / carrier;
    let spec = power_spectrum(&tail, Window::Hann, rad_to_hz(point.omega_mod) / 8.0)?;
    let sidebands = sideband_table(&spec, point.omega_d, point.omega_mod, objective.n_max)?.total_power(2);
    Ok(ModulationScore {
        unwanted,
        sidebands,
        total: objective.w_unwanted * unwanted + objective.w_sidebands * sidebands,
    })
}

/// Bounds on `(Φ_Δ/2φ₀, Ω, ω_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationBounds {
    pub delta_phase: (f64, f64),
    pub omega_mod: (f64, f64),
    pub omega_d: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub point: ModulationPoint,
    pub score: f64,
    pub initial_score: f64,
    pub evals: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
    pub history: Vec<f64>,
}

/// Derivative-free tuning of the modulation point. In ideal mode only
/// `(Ω, ω_d)` are varied.
pub fn optimize_modulation(
    circuit: &CircuitParams,
    mode: &TuningMode,
    objective: &ModulationObjective,
    start: ModulationPoint,
    bounds: &ModulationBounds,
    opts: &NelderMeadOptions,
) -> Result<TuningResult> {
    let squid = matches!(mode, TuningMode::Squid { .. });
    if let TuningMode::Squid { array } = mode {
        // Both bias extremes must clear the pole guard.
        let sigma = crate::squid::phase_from_flux(array.phi_sigma);
        let worst = crate::squid::FluxSchedule {
            kind: crate::squid::ScheduleKind::Cosine,
            omega_mod: 1.0,
            phi_sigma: array.phi_sigma,
            phi_delta: crate::squid::flux_from_phase(bounds.delta_phase.1.abs().max(bounds.delta_phase.0.abs())),
        };
        let cos_value = worst.min_cos();
        if cos_value < crate::squid::POLE_GUARD {
            return Err(Error::invalid(
                "bounds.delta_phase",
                format!("bias {sigma:.3} with the largest modulation reaches |cos| = {cos_value:.3}, inside the pole guard"),
            ));
        }
    }
    let to_point = |x: &[f64]| {
        if squid {
            ModulationPoint {
                delta_phase: x[0],
                omega_mod: x[1],
                omega_d: x[2],
            }
        } else {
            ModulationPoint {
                delta_phase: start.delta_phase,
                omega_mod: x[0],
                omega_d: x[1],
            }
        }
    };
    let (x0, b) = if squid {
        (
            vec![start.delta_phase, start.omega_mod, start.omega_d],
            Bounds {
                lo: vec![bounds.delta_phase.0, bounds.omega_mod.0, bounds.omega_d.0],
                hi: vec![bounds.delta_phase.1, bounds.omega_mod.1, bounds.omega_d.1],
            },
        )
    } else {
        (
            vec![start.omega_mod, start.omega_d],
            Bounds {
                lo: vec![bounds.omega_mod.0, bounds.omega_d.0],
                hi: vec![bounds.omega_mod.1, bounds.omega_d.1],
            },
        )
    };
    let r = nelder_mead(
        |x| evaluate_modulation(circuit, mode, &to_point(x), objective).map(|s| s.total),
        &x0,
        &b,
        opts,
    )?;
    Ok(TuningResult {
        point: to_point(&r.x),
        score: r.value,
        initial_score: r.initial_value,
        evals: r.evals,
        converged: r.converged,
        budget_exhausted: r.budget_exhausted,
        history: r.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone_series(dt: f64, n: usize, tones: &[(f64, f64)]) -> [Vec<f64>; 4] {
        let sig: Vec<f64> = (0..n)
            .map(|i| {
                let t = dt * i as f64;
                tones.iter().map(|(a, f)| a * (TWO_PI * f * t).cos()).sum()
            })
            .collect();
        std::array::from_fn(|k| if k == 1 { sig.clone() } else { vec![0.0; n] })
    }

    #[test]
    fn single_tone_spectrum() {
        let dt = 1e-11;
        let n = 4000;
        // 2 GHz sits exactly on bin 80.
        let sig = tone_series(dt, n, &[(1.0, 2e9)]);
        let s = spectrum_of(&sig, dt, Window::Hann, 1e8).unwrap();
        let k = (2e9 / s.resolution_hz).round() as usize;
        assert!(s.db[1][k].abs() < 1e-12);
        for (i, v) in s.db[1].iter().enumerate() {
            if i.abs_diff(k) > 1 {
                assert!(*v < -80.0, "bin {i} at {v} dB");
            }
        }
        let r = spectrum_of(&sig, dt, Window::Rect, 1e8).unwrap();
        assert!(r.db[1].iter().enumerate().all(|(i, v)| i == k || *v < -80.0));
        assert!(matches!(
            spectrum_of(&sig, dt, Window::Hann, 1e6),
            Err(Error::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn parseval_and_scale_invariance() {
        let dt = 1e-11;
        let n = 3001;
        let sig = tone_series(dt, n, &[(1.0, 1.234e9), (0.3, 3.1e9), (0.01, 7.7e8)]);
        for window in [Window::Hann, Window::Rect] {
            let s = spectrum_of(&sig, dt, window, 1e9).unwrap();
            let w = window.weights(n);
            let direct: f64 = sig[1].iter().zip(&w).map(|(x, w)| (x * w).powi(2)).sum::<f64>() / n as f64;
            let total: f64 = s.power[1].iter().sum();
            assert!(((total - direct) / direct).abs() < 1e-9);
            let scaled: [Vec<f64>; 4] = std::array::from_fn(|k| sig[k].iter().map(|x| 10.0 * x).collect());
            let s10 = spectrum_of(&scaled, dt, window, 1e9).unwrap();
            for (a, b) in s.db[1].iter().zip(&s10.db[1]).filter(|(a, _)| **a > -120.0) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn injected_sideband_is_measured() {
        let dt = 1e-11;
        let n = 40_000;
        let (fd, fm) = (6.63e9, 90e6);
        let a = 10f64.powf(-30.0 / 20.0);
        // Offsets that fall between bins exercise the peak interpolation.
        let sig = tone_series(dt, n, &[(1.0, fd + 1.1e6), (a, fd + 2.0 * fm + 1.1e6)]);
        let s = spectrum_of(&sig, dt, Window::Hann, fm / 8.0).unwrap();
        let table = sideband_table(&s, TWO_PI * (fd + 1.1e6), TWO_PI * fm, 3).unwrap();
        let lvl = table.level(2, 2).unwrap();
        assert!((lvl + 30.0).abs() < 0.5, "{lvl}");
        assert!(table.level(2, 1).unwrap() < -60.0);
        assert!(table.carriers_dbc[1].abs() < 1e-12);
        assert!(matches!(
            sideband_table(&s, TWO_PI * 49.9e9, TWO_PI * fm, 3),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn lorentzian_width() {
        let w = 0.37;
        let f = |x: f64| 1.0 / (1.0 + (2.0 * (x - 0.1) / w).powi(2));
        let x: Vec<f64> = (0..4001).map(|i| -2.0 + i as f64 * 1e-3).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        assert!((fwhm(&x, &y).unwrap() - w).abs() < 1e-6);
        assert!((fwhm_bisect(f, -2.0, 0.1, 2.0, 1e-9).unwrap() - w).abs() < 1e-8);
        let flat = vec![1.0; 10];
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(fwhm(&xs, &flat), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn nelder_mead_finds_bounded_minimum() {
        let opts = NelderMeadOptions {
            max_evals: 400,
            x_tol: 1e-6,
            f_tol: 1e-12,
            initial_step: vec![0.5, 0.5],
            jitter: 0.1,
            seed: 3,
        };
        let rosen = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let b = Bounds {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
        };
        let r = nelder_mead(rosen, &[-1.2, 1.0], &b, &opts).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        // A minimum outside the box ends on the boundary.
        let shifted = |x: &[f64]| Ok((x[0] - 5.0).powi(2) + x[1] * x[1]);
        let r = nelder_mead(shifted, &[0.0, 0.5], &b, &opts).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-6, "{r:?}");
        // Same seed, same path.
        let again = nelder_mead(shifted, &[0.0, 0.5], &b, &opts).unwrap();
        assert_eq!(r, again);
        let short = NelderMeadOptions { max_evals: 5, ..opts };
        assert!(nelder_mead(rosen, &[-1.2, 1.0], &b, &short).unwrap().budget_exhausted);
    }
}
