//! dc SQUID and SQUID-array physics, and the arm schedules that drive the
//! bridge ring.
//!
//! Fluxes are in webers. [`flux_from_phase`] converts the dimensionless
//! bias `Φ / 2φ₀` commonly used to quote operating points.

use std::f64::consts::FRAC_PI_2;

use crate::constants::PHI0_REDUCED;
use crate::network::{ArmSchedule, BridgeArms, BridgeRing};
use crate::{Error, Result};

/// Smallest `|cos(Φ/2φ₀)|` a schedule may reach.
pub const POLE_GUARD: f64 = 0.05;

/// `Φ = 2φ₀ x`.
pub fn flux_from_phase(x: f64) -> f64 {
    2.0 * PHI0_REDUCED * x
}

/// `x = Φ / 2φ₀`.
pub fn phase_from_flux(phi: f64) -> f64 {
    phi / (2.0 * PHI0_REDUCED)
}

/// Junction critical current that gives a zero-bias SQUID inductance `l0`.
pub fn critical_current_for_inductance(l0: f64) -> f64 {
    PHI0_REDUCED / (2.0 * l0)
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// `I_s = 2 I₀ |cos(Φ/2φ₀)|`.
pub fn squid_critical_current(i0: f64, phi: f64) -> Result<f64> {
    positive("i0", i0)?;
    Ok(2.0 * i0 * phase_from_flux(phi).cos().abs())
}

/// `l_s = φ₀ / I_s(Φ)`, refusing biases inside the pole guard.
pub fn squid_inductance(i0: f64, phi: f64) -> Result<f64> {
    squid_inductance_guarded(i0, phi, POLE_GUARD)
}

pub fn squid_inductance_guarded(i0: f64, phi: f64, guard: f64) -> Result<f64> {
    positive("i0", i0)?;
    let cos_value = phase_from_flux(phi).cos().abs();
    if cos_value < guard {
        return Err(Error::UnphysicalBias { cos_value, guard });
    }
    Ok(PHI0_REDUCED / (2.0 * i0 * cos_value))
}

/// Current-dependent SQUID inductance to third order in the current:
/// `L = l_s (1 + (I/I_s)² / 6)`.
pub fn nonlinear_inductance(l_s: f64, i_s: f64, i: f64) -> Result<f64> {
    positive("l_s", l_s)?;
    positive("i_s", i_s)?;
    if i.abs() >= i_s {
        return Err(Error::Saturation {
            current: i,
            critical: i_s,
        });
    }
    let x = i / i_s;
    Ok(l_s * (1.0 + x * x / 6.0))
}

/// Kerr constant `K = -ħω₀² / (I_s² l_a)`, rad/s.
pub fn kerr_constant(omega0: f64, i_s: f64, l_a: f64) -> Result<f64> {
    positive("omega0", omega0)?;
    positive("i_s", i_s)?;
    positive("l_a", l_a)?;
    Ok(-crate::constants::HBAR * omega0 * omega0 / (i_s * i_s * l_a))
}

/// Number of stored photons whose Kerr shift equals the given bandwidth.
pub fn saturation_photons(bandwidth_hz: f64, kerr: f64) -> Result<f64> {
    if kerr == 0.0 || !kerr.is_finite() {
        return Err(Error::invalid("kerr", "must be finite and non-zero"));
    }
    if !(bandwidth_hz.is_finite() && bandwidth_hz >= 0.0) {
        return Err(Error::invalid("bandwidth_hz", format!("must be non-negative, got {bandwidth_hz}")));
    }
    Ok(crate::constants::TWO_PI * bandwidth_hz / kerr.abs())
}

/// Largest modulation depth reachable with inductance ratio `η = l_max / l_min`.
pub fn tunability_bound(eta: f64) -> Result<f64> {
    if !(eta.is_finite() && eta >= 1.0) {
        return Err(Error::invalid("eta", format!("must be >= 1, got {eta}")));
    }
    let e2 = eta * eta;
    Ok((e2 - 1.0) / (e2 + 1.0))
}

/// Junction and array parameters shared by every arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidArrayParams {
    /// Junction critical current, A.
    pub i0: f64,
    /// SQUIDs in series per arm.
    pub n: u32,
    /// Static bias flux, Wb.
    pub phi_sigma: f64,
    /// Modulation flux amplitude, Wb.
    pub phi_delta: f64,
    /// `l_max / l_min` reachable by flux tuning, if known.
    pub eta: Option<f64>,
    /// Geometric loop inductance, H. Informational only.
    pub l_g: Option<f64>,
}

impl SquidArrayParams {
    pub fn new(i0: f64, n: u32, phi_sigma: f64, phi_delta: f64) -> Result<Self> {
        positive("i0", i0)?;
        if n == 0 {
            return Err(Error::invalid("n", "array needs at least one SQUID"));
        }
        if !(phi_sigma.is_finite() && phi_delta.is_finite()) {
            return Err(Error::invalid("phi", "bias fluxes must be finite"));
        }
        Ok(Self {
            i0,
            n,
            phi_sigma,
            phi_delta,
            eta: None,
            l_g: None,
        })
    }

    /// Builds parameters from the zero-bias inductance `φ₀/2I₀` and biases
    /// given as `Φ/2φ₀`.
    pub fn from_phases(zero_bias_inductance: f64, n: u32, sigma_phase: f64, delta_phase: f64) -> Result<Self> {
        positive("zero_bias_inductance", zero_bias_inductance)?;
        Self::new(
            critical_current_for_inductance(zero_bias_inductance),
            n,
            flux_from_phase(sigma_phase),
            flux_from_phase(delta_phase),
        )
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 1.0) {
            return Err(Error::invalid("eta", format!("must be >= 1, got {eta}")));
        }
        self.eta = Some(eta);
        Ok(self)
    }

    pub fn with_loop_inductance(mut self, l_g: f64) -> Result<Self> {
        positive("l_g", l_g)?;
        self.l_g = Some(l_g);
        Ok(self)
    }

    /// The printed baseline prescription: zero-bias inductance `2l` and a
    /// static bias of `Φ_Σ / 2φ₀ = π/3`. Note that this gives
    /// `l_s(Φ_Σ) = 4l`, not `l`.
    pub fn baseline_prescription(l: f64, delta_phase: f64) -> Result<Self> {
        Self::from_phases(2.0 * l, 1, std::f64::consts::FRAC_PI_3, delta_phase)
    }

    /// Zero-bias inductance chosen so that an unmodulated arm at `Φ_Σ` has
    /// inductance exactly `l`.
    pub fn matched_baseline(l: f64, n: u32, sigma_phase: f64, delta_phase: f64) -> Result<Self> {
        positive("l", l)?;
        let cos_value = sigma_phase.cos().abs();
        if cos_value < POLE_GUARD {
            return Err(Error::UnphysicalBias {
                cos_value,
                guard: POLE_GUARD,
            });
        }
        Self::from_phases(l * cos_value / n as f64, n, sigma_phase, delta_phase)
    }

    /// `φ₀ / 2I₀`, the inductance of one unbiased SQUID.
    pub fn zero_bias_inductance(&self) -> f64 {
        PHI0_REDUCED / (2.0 * self.i0)
    }

    /// Linear inductance of one arm (the whole array) at flux `phi`.
    pub fn arm_inductance(&self, phi: f64) -> Result<f64> {
        Ok(self.n as f64 * squid_inductance(self.i0, phi)?)
    }
}

/// Nonlinear array inductance `l_a (1 + (I/I_a)² / 6N²)` with
/// `I_a = I_s / N` and `l_a = φ₀ / I_a`.
pub fn array_inductance(params: &SquidArrayParams, phi: f64, i: f64) -> Result<f64> {
    let i_s = squid_critical_current(params.i0, phi)?;
    let cos_value = phase_from_flux(phi).cos().abs();
    if cos_value < POLE_GUARD {
        return Err(Error::UnphysicalBias {
            cos_value,
            guard: POLE_GUARD,
        });
    }
    if i.abs() >= i_s {
        return Err(Error::Saturation {
            current: i,
            critical: i_s,
        });
    }
    let n = params.n as f64;
    let i_a = i_s / n;
    let l_a = PHI0_REDUCED / i_a;
    let x = i / i_a;
    Ok(l_a * (1.0 + x * x / (6.0 * n * n)))
}

/// Shape of the modulation seen by one bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Cosine,
    Sine,
    NegCosine,
}

impl ScheduleKind {
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            ScheduleKind::Cosine => theta.cos(),
            ScheduleKind::Sine => theta.sin(),
            ScheduleKind::NegCosine => -theta.cos(),
        }
    }
}

/// Modulation shape of bridges B1..B4.
pub const BRIDGE_KINDS: [ScheduleKind; 4] = [
    ScheduleKind::Cosine,
    ScheduleKind::Sine,
    ScheduleKind::Sine,
    ScheduleKind::NegCosine,
];

/// Arm reluctances `(1 ± ε s(Ωt)) / l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealArmSchedule {
    pub l: f64,
    pub epsilon: f64,
    pub omega_mod: f64,
    pub kind: ScheduleKind,
}

pub fn ideal_arm_schedule(l: f64, epsilon: f64, omega_mod: f64, kind: ScheduleKind) -> Result<IdealArmSchedule> {
    positive("l", l)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    if !omega_mod.is_finite() {
        return Err(Error::invalid("omega_mod", "must be finite"));
    }
    Ok(IdealArmSchedule {
        l,
        epsilon,
        omega_mod,
        kind,
    })
}

impl ArmSchedule for IdealArmSchedule {
    fn arms(&self, t: f64) -> BridgeArms {
        BridgeArms {
            y_mean: 1.0 / self.l,
            y_delta: self.epsilon * self.kind.eval(self.omega_mod * t) / self.l,
        }
    }
}

/// Flux through the two arms of a bridge: `Φ_Σ ± Φ_Δ s(Ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSchedule {
    pub kind: ScheduleKind,
    pub omega_mod: f64,
    pub phi_sigma: f64,
    pub phi_delta: f64,
}

impl FluxSchedule {
    pub fn from_params(params: &SquidArrayParams, kind: ScheduleKind, omega_mod: f64) -> Self {
        Self {
            kind,
            omega_mod,
            phi_sigma: params.phi_sigma,
            phi_delta: params.phi_delta,
        }
    }

    /// `(Φ₊, Φ₋)` at time `t`.
    pub fn arm_fluxes(&self, t: f64) -> (f64, f64) {
        let d = self.phi_delta * self.kind.eval(self.omega_mod * t);
        (self.phi_sigma + d, self.phi_sigma - d)
    }

    /// Smallest `|cos(Φ/2φ₀)|` reached by either arm over a full period.
    pub fn min_cos(&self) -> f64 {
        let lo = phase_from_flux(self.phi_sigma - self.phi_delta.abs());
        let hi = phase_from_flux(self.phi_sigma + self.phi_delta.abs());
        // |cos| vanishes at π/2 + kπ; otherwise it is monotone between poles
        // and the minimum sits at an endpoint.
        let k = ((lo - FRAC_PI_2) / std::f64::consts::PI).ceil();
        if FRAC_PI_2 + k * std::f64::consts::PI <= hi {
            return 0.0;
        }
        lo.cos().abs().min(hi.cos().abs())
    }
}

/// Arm reluctances `1 / (N l_s(Φ±(t)))` of one SQUID bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidArmSchedule {
    i0: f64,
    n: u32,
    flux: FluxSchedule,
}

pub fn squid_arm_schedule(params: &SquidArrayParams, schedule: FluxSchedule) -> Result<SquidArmSchedule> {
    squid_arm_schedule_guarded(params, schedule, POLE_GUARD)
}

pub fn squid_arm_schedule_guarded(
    params: &SquidArrayParams,
    schedule: FluxSchedule,
    guard: f64,
) -> Result<SquidArmSchedule> {
    positive("i0", params.i0)?;
    let cos_value = schedule.min_cos();
    if cos_value < guard {
        return Err(Error::UnphysicalBias { cos_value, guard });
    }
    Ok(SquidArmSchedule {
        i0: params.i0,
        n: params.n,
        flux: schedule,
    })
}

impl SquidArmSchedule {
    pub fn flux(&self) -> &FluxSchedule {
        &self.flux
    }

    fn reluctance(&self, phi: f64) -> f64 {
        2.0 * self.i0 * phase_from_flux(phi).cos().abs() / (self.n as f64 * PHI0_REDUCED)
    }
}

impl ArmSchedule for SquidArmSchedule {
    fn arms(&self, t: f64) -> BridgeArms {
        let (plus, minus) = self.flux.arm_fluxes(t);
        let (yp, ym) = (self.reluctance(plus), self.reluctance(minus));
        BridgeArms {
            y_mean: 0.5 * (yp + ym),
            y_delta: 0.5 * (yp - ym),
        }
    }
}

/// Either kind of arm modulation, so rings of both kinds share one type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    Ideal(IdealArmSchedule),
    Squid(SquidArmSchedule),
}

impl ArmSchedule for Modulation {
    fn arms(&self, t: f64) -> BridgeArms {
        match self {
            Modulation::Ideal(s) => s.arms(t),
            Modulation::Squid(s) => s.arms(t),
        }
    }
}

pub type ModulatedRing = BridgeRing<Modulation>;

/// Ring with ideal reluctance modulation of depth `epsilon` at `omega_mod`.
pub fn ideal_ring(l: f64, epsilon: f64, omega_mod: f64) -> Result<ModulatedRing> {
    let mut bridges = [Modulation::Ideal(ideal_arm_schedule(l, epsilon, omega_mod, ScheduleKind::Cosine)?); 4];
    for (b, kind) in bridges.iter_mut().zip(BRIDGE_KINDS) {
        *b = Modulation::Ideal(ideal_arm_schedule(l, epsilon, omega_mod, kind)?);
    }
    Ok(BridgeRing::new(l, bridges))
}

/// Ring of SQUID bridges. The closing inductance `l` is the circuit value.
pub fn squid_ring(l: f64, params: &SquidArrayParams, omega_mod: f64) -> Result<ModulatedRing> {
    positive("l", l)?;
    let mk = |kind| squid_arm_schedule(params, FluxSchedule::from_params(params, kind, omega_mod)).map(Modulation::Squid);
    Ok(BridgeRing::new(
        l,
        [mk(BRIDGE_KINDS[0])?, mk(BRIDGE_KINDS[1])?, mk(BRIDGE_KINDS[2])?, mk(BRIDGE_KINDS[3])?],
    ))
}
