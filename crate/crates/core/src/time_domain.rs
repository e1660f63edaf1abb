//! Transient simulation of the terminated network.
//!
//! State is `[φ_q, φ_p, v_q, v_p, φ_1, φ_2, φ_3, φ_4]`. With `I = M(t) φ`,
//! the capacitors give `c v̇ = -(Mφ)` on the resonator ports and the matched
//! lines give `φ̇_k = 2 V_in,k - r (Mφ)_k`. The scattered wave is
//! `V_out,k = φ̇_k - V_in,k`.

use num_complex::Complex64;

use crate::constants::TWO_PI;
use crate::network::{line, ArmSchedule, BridgeRing, CircuitParams, P, Q};
use crate::{Error, Result};

/// Default integration steps per drive period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 80;
/// Fewest recorded samples per drive period.
pub const MIN_SAMPLES_PER_PERIOD: usize = 40;
/// Default start of the steady-state window, s.
pub const DEFAULT_DISCARD: f64 = 50e-9;
/// Growth factor of the scaled state norm that counts as instability.
pub const INSTABILITY_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimState {
    pub phi_q: f64,
    pub phi_p: f64,
    pub v_q: f64,
    pub v_p: f64,
    pub phi_lines: [f64; 4],
}

impl SimState {
    pub fn to_array(&self) -> [f64; 8] {
        let [a, b, c, d] = self.phi_lines;
        [self.phi_q, self.phi_p, self.v_q, self.v_p, a, b, c, d]
    }

    pub fn from_array(x: [f64; 8]) -> Self {
        Self {
            phi_q: x[0],
            phi_p: x[1],
            v_q: x[2],
            v_p: x[3],
            phi_lines: [x[4], x[5], x[6], x[7]],
        }
    }

    /// Branch fluxes in the six-port basis.
    pub fn fluxes(&self) -> [f64; 6] {
        let [a, b, c, d] = self.phi_lines;
        [self.phi_q, self.phi_p, a, b, c, d]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Continuous-wave voltage drive `A cos(ω_d t)` on one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// Line index, 1..=4.
    pub port: usize,
    /// Incident-wave amplitude, V.
    pub amplitude: f64,
    /// Drive angular frequency, rad/s.
    pub omega_d: f64,
    /// Switch-on time, s.
    pub turn_on: f64,
    /// Raised-cosine ramp duration after switch-on, s. `None` is a sudden start.
    pub ramp: Option<f64>,
}

impl DriveSpec {
    pub fn new(port: usize, amplitude: f64, omega_d: f64) -> Result<Self> {
        let d = Self {
            port,
            amplitude,
            omega_d,
            turn_on: 0.0,
            ramp: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_ramp(mut self, ramp: f64) -> Result<Self> {
        self.ramp = Some(ramp);
        self.validate()?;
        Ok(self)
    }

    pub fn with_turn_on(mut self, turn_on: f64) -> Result<Self> {
        self.turn_on = turn_on;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.port) {
            return Err(Error::invalid("drive.port", format!("must be 1..=4, got {}", self.port)));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("drive.amplitude", "must be finite"));
        }
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(Error::invalid("drive.omega_d", format!("must be positive, got {}", self.omega_d)));
        }
        if !(self.turn_on.is_finite() && self.turn_on >= 0.0) {
            return Err(Error::invalid("drive.turn_on", "must be non-negative"));
        }
        if let Some(r) = self.ramp {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("drive.ramp", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn voltage(&self, t: f64) -> f64 {
        if t < self.turn_on {
            return 0.0;
        }
        let env = match self.ramp {
            Some(r) if t < self.turn_on + r => 0.5 * (1.0 - (std::f64::consts::PI * (t - self.turn_on) / r).cos()),
            _ => 1.0,
        };
        self.amplitude * env * (self.omega_d * t).cos()
    }
}

/// Network, terminations and drives, ready to integrate.
#[derive(Debug, Clone)]
pub struct Ode<S> {
    pub c: f64,
    pub r: f64,
    pub ring: BridgeRing<S>,
    pub drives: Vec<DriveSpec>,
}

/// Derivative plus the incident waves it was evaluated with.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub deriv: [f64; 8],
    pub v_in: [f64; 4],
}

pub fn assemble_ode<S: ArmSchedule>(params: &CircuitParams, ring: BridgeRing<S>, drives: Vec<DriveSpec>) -> Result<Ode<S>> {
    for d in &drives {
        d.validate()?;
    }
    Ok(Ode {
        c: params.c,
        r: params.r,
        ring,
        drives,
    })
}

impl<S: ArmSchedule> Ode<S> {
    pub fn incident(&self, t: f64) -> [f64; 4] {
        let mut v = [0.0; 4];
        for d in &self.drives {
            v[d.port - 1] += d.voltage(t);
        }
        v
    }

    pub fn evaluate(&self, t: f64, x: &[f64; 8]) -> Result<Evaluation> {
        let m = self.ring.reluctance(t)?;
        let phi = [x[0], x[1], x[4], x[5], x[6], x[7]];
        let i = m.apply(&phi);
        let v_in = self.incident(t);
        let mut d = [0.0; 8];
        d[0] = x[2];
        d[1] = x[3];
        d[2] = -i[Q] / self.c;
        d[3] = -i[P] / self.c;
        for k in 0..4 {
            d[4 + k] = 2.0 * v_in[k] - self.r * i[line(k + 1)];
        }
        Ok(Evaluation { deriv: d, v_in })
    }

    pub fn derivative(&self, t: f64, state: &SimState) -> Result<SimState> {
        Ok(SimState::from_array(self.evaluate(t, &state.to_array())?.deriv))
    }

    /// `½ φᵀ M φ + ½ c (v_q² + v_p²)`.
    pub fn stored_energy(&self, t: f64, state: &SimState) -> Result<f64> {
        let m = self.ring.reluctance(t)?;
        let phi = state.fluxes();
        let i = m.apply(&phi);
        let inductive: f64 = phi.iter().zip(&i).map(|(a, b)| a * b).sum();
        Ok(0.5 * inductive + 0.5 * self.c * (state.v_q * state.v_q + state.v_p * state.v_p))
    }

    /// Power delivered by the modulation, `½ φᵀ Ṁ φ`.
    pub fn pump_power(&self, t: f64, state: &SimState, dt: f64) -> Result<f64> {
        let hi = self.ring.reluctance(t + dt)?;
        let lo = self.ring.reluctance(t - dt)?;
        let phi = state.fluxes();
        let a = hi.apply(&phi);
        let b = lo.apply(&phi);
        let quad: f64 = (0..6).map(|k| phi[k] * (a[k] - b[k])).sum();
        Ok(0.25 * quad / dt)
    }

    /// Fastest drive frequency, used to size the step.
    pub fn reference_omega(&self) -> Option<f64> {
        self.drives.iter().map(|d| d.omega_d).reduce(f64::max)
    }
}

/// Step and recording settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub steps_per_period: usize,
    pub duration: f64,
    /// Keep every n-th step.
    pub record_every: usize,
    pub record_states: bool,
}

impl StepControl {
    pub fn new(duration: f64) -> Self {
        Self {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            duration,
            record_every: 1,
            record_states: false,
        }
    }

    pub fn with_steps_per_period(mut self, n: usize) -> Self {
        self.steps_per_period = n;
        self
    }

    pub fn with_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }
}

/// Uniformly sampled port waves.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub t0: f64,
    pub v_in: [Vec<f64>; 4],
    pub v_out: [Vec<f64>; 4],
    pub i_out: [Vec<f64>; 4],
    pub states: Option<Vec<SimState>>,
    /// Largest drive amplitude, V.
    pub drive_amplitude: f64,
    pub r: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.v_out[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Index range covering `[start, end]`.
    pub fn window(&self, start: f64, end: f64) -> Result<std::ops::Range<usize>> {
        let out = || Error::WindowOutOfRange {
            start,
            end,
            series_start: self.t0,
            series_end: self.end_time(),
        };
        let slack = 1e-9 * self.dt;
        if self.is_empty() || !(start <= end) || start < self.t0 - slack || end > self.end_time() + slack {
            return Err(out());
        }
        let i0 = ((start - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let i1 = (((end - self.t0) / self.dt + 1e-9).floor() as usize).min(self.len() - 1);
        if i1 < i0 {
            return Err(out());
        }
        Ok(i0..i1 + 1)
    }

    /// Copy of the samples in `[start, end]`.
    pub fn slice(&self, start: f64, end: f64) -> Result<TimeSeries> {
        let r = self.window(start, end)?;
        let cut = |v: &[Vec<f64>; 4]| -> [Vec<f64>; 4] { std::array::from_fn(|k| v[k][r.clone()].to_vec()) };
        Ok(TimeSeries {
            dt: self.dt,
            t0: self.time(r.start),
            v_in: cut(&self.v_in),
            v_out: cut(&self.v_out),
            i_out: cut(&self.i_out),
            states: self.states.as_ref().map(|s| s[r.clone()].to_vec()),
            drive_amplitude: self.drive_amplitude,
            r: self.r,
        })
    }

    /// Samples from `start` to the end of the series.
    pub fn tail(&self, start: f64) -> Result<TimeSeries> {
        self.slice(start, self.end_time())
    }
}

fn scaled_norm(x: &[f64; 8], omega: f64) -> f64 {
    x.iter()
        .enumerate()
        .map(|(k, v)| if k == 2 || k == 3 { v * v } else { (v * omega).powi(2) })
        .sum::<f64>()
        .sqrt()
}

/// Fixed-step RK4 from the zero state.
pub fn integrate<S: ArmSchedule>(ode: &Ode<S>, control: StepControl) -> Result<TimeSeries> {
    integrate_from(ode, control, SimState::default())
}

pub fn integrate_from<S: ArmSchedule>(ode: &Ode<S>, control: StepControl, initial: SimState) -> Result<TimeSeries> {
    if control.steps_per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::invalid(
            "steps_per_period",
            format!("need at least {MIN_SAMPLES_PER_PERIOD}, got {}", control.steps_per_period),
        ));
    }
    if control.record_every == 0 || control.steps_per_period / control.record_every < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::invalid(
            "record_every",
            format!("recording must keep at least {MIN_SAMPLES_PER_PERIOD} samples per period"),
        ));
    }
    if !(control.duration.is_finite() && control.duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    let omega = ode
        .reference_omega()
        .ok_or_else(|| Error::invalid("drives", "at least one drive is needed to set the time step"))?;
    // Shrink the step so the run ends exactly on a recorded sample.
    let h_max = TWO_PI / (omega * control.steps_per_period as f64);
    let every = control.record_every;
    let steps = ((control.duration / (h_max * every as f64)).ceil() as usize).max(1) * every;
    let h = control.duration / steps as f64;
    let n_rec = steps / control.record_every + 1;

    let drive_amplitude = ode.drives.iter().map(|d| d.amplitude.abs()).fold(0.0, f64::max);
    let mut series = TimeSeries {
        dt: h * control.record_every as f64,
        t0: 0.0,
        v_in: std::array::from_fn(|_| Vec::with_capacity(n_rec)),
        v_out: std::array::from_fn(|_| Vec::with_capacity(n_rec)),
        i_out: std::array::from_fn(|_| Vec::with_capacity(n_rec)),
        states: control.record_states.then(|| Vec::with_capacity(n_rec)),
        drive_amplitude,
        r: ode.r,
    };

    let mut x = initial.to_array();
    let base = scaled_norm(&x, omega).max(drive_amplitude);
    let add = |x: &[f64; 8], h: f64, k: &[f64; 8]| -> [f64; 8] { std::array::from_fn(|i| x[i] + h * k[i]) };
    for step in 0..=steps {
        let t = step as f64 * h;
        let e1 = ode.evaluate(t, &x)?;
        if step % control.record_every == 0 {
            for k in 0..4 {
                let v_out = e1.deriv[4 + k] - e1.v_in[k];
                series.v_in[k].push(e1.v_in[k]);
                series.v_out[k].push(v_out);
                series.i_out[k].push(-v_out / ode.r);
            }
            if let Some(s) = series.states.as_mut() {
                s.push(SimState::from_array(x));
            }
        }
        if step == steps {
            break;
        }
        let k1 = e1.deriv;
        let k2 = ode.evaluate(t + h / 2.0, &add(&x, h / 2.0, &k1))?.deriv;
        let k3 = ode.evaluate(t + h / 2.0, &add(&x, h / 2.0, &k2))?.deriv;
        let k4 = ode.evaluate(t + h, &add(&x, h, &k3))?.deriv;
        for i in 0..8 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = scaled_norm(&x, omega);
        if !norm.is_finite() || (base > 0.0 && norm > INSTABILITY_GROWTH * base) {
            return Err(Error::Instability { t: t + h, norm });
        }
    }
    Ok(series)
}

/// Complex amplitude of each `V_out,k` at `omega_d`, fitted by least squares
/// over the last `window` seconds and divided by the drive amplitude.
pub fn steady_state_demod(series: &TimeSeries, omega_d: f64, window: f64) -> Result<[Complex64; 4]> {
    let periods = window * omega_d / TWO_PI;
    if !(periods >= 20.0 - 1e-9) {
        return Err(Error::invalid(
            "window",
            format!("must cover at least 20 drive periods, got {periods:.2}"),
        ));
    }
    let end = series.end_time();
    let range = series.window(end - window, end)?;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let (a, b) = fit_cos_sin(series, &series.v_out[k], range.clone(), omega_d)?;
        // a cos + b sin = Re((a - jb) e^{jωt})
        let amp = Complex64::new(a, -b);
        *slot = if series.drive_amplitude > 0.0 {
            amp / series.drive_amplitude
        } else {
            amp
        };
    }
    Ok(out)
}

fn fit_cos_sin(series: &TimeSeries, y: &[f64], range: std::ops::Range<usize>, omega: f64) -> Result<(f64, f64)> {
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in range {
        let (s, c) = (omega * series.time(i)).sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += y[i] * c;
        ys += y[i] * s;
    }
    let det = cc * ss - cs * cs;
    if det.abs() <= 1e-12 * cc * ss {
        return Err(Error::Singular {
            context: "sinusoid fit",
            condition: f64::INFINITY,
        });
    }
    Ok(((yc * ss - ys * cs) / det, (ys * cc - yc * cs) / det))
}

/// Energy bookkeeping over a recorded window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// Change of stored energy, J.
    pub stored_change: f64,
    /// `∫ Σ (V_in² - V_out²)/r dt`, J.
    pub port_work: f64,
    /// `∫ ½ φᵀ Ṁ φ dt`, J.
    pub pump_work: f64,
    /// `∫ Σ V_in²/r dt`, J.
    pub incident: f64,
    /// `∫ Σ V_out²/r dt`, J.
    pub emitted: f64,
}

impl EnergyBalance {
    /// `|ΔE - W_ports - W_pump|`, relative to the incident energy.
    pub fn relative_error(&self) -> f64 {
        (self.stored_change - self.port_work - self.pump_work).abs() / self.incident.max(f64::MIN_POSITIVE)
    }
}

/// Integrates the power flows over `[start, end]` with the trapezoid rule.
/// Needs a series recorded with states.
pub fn energy_balance<S: ArmSchedule>(ode: &Ode<S>, series: &TimeSeries, start: f64, end: f64) -> Result<EnergyBalance> {
    let states = series
        .states
        .as_ref()
        .ok_or_else(|| Error::invalid("series", "energy balance needs recorded states"))?;
    let range = series.window(start, end)?;
    let (i0, i1) = (range.start, range.end - 1);
    let fd = series.dt * 1e-3;
    let mut port = Vec::with_capacity(range.len());
    let mut pump = Vec::with_capacity(range.len());
    let mut inc = Vec::with_capacity(range.len());
    let mut emit = Vec::with_capacity(range.len());
    for i in range.clone() {
        let (mut pi, mut po) = (0.0, 0.0);
        for k in 0..4 {
            pi += series.v_in[k][i].powi(2) / ode.r;
            po += series.v_out[k][i].powi(2) / ode.r;
        }
        inc.push(pi);
        emit.push(po);
        port.push(pi - po);
        pump.push(ode.pump_power(series.time(i), &states[i], fd)?);
    }
    let trap = |v: &[f64]| -> f64 {
        if v.len() < 2 {
            return 0.0;
        }
        series.dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
    };
    Ok(EnergyBalance {
        stored_change: ode.stored_energy(series.time(i1), &states[i1])? - ode.stored_energy(series.time(i0), &states[i0])?,
        port_work: trap(&port),
        pump_work: trap(&pump),
        incident: trap(&inc),
        emitted: trap(&emit),
    })
}
