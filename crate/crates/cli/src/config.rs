//! Run configuration: a single JSON document, validated before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synthrot_core::constants::{hz_to_rad, rad_to_hz};
use synthrot_core::squid::SquidArrayParams;
use synthrot_core::time_domain::{DriveSpec, DEFAULT_DISCARD, DEFAULT_STEPS_PER_PERIOD, MIN_SAMPLES_PER_PERIOD};
use synthrot_core::CircuitParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Squid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub l_h: f64,
    pub c_f: f64,
    pub r_ohm: f64,
    pub epsilon: f64,
    /// Defaults to the matched rate `ε²/16cr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_mod_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquidConfig {
    /// Zero-bias inductance of one SQUID, `φ₀/2I₀`. Exclusive with `critical_current_a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_bias_inductance_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_current_a: Option<f64>,
    pub n: u32,
    /// `Φ_Σ / 2φ₀`.
    pub sigma_phase: f64,
    /// `Φ_Δ / 2φ₀`.
    pub delta_phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_inductance_h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrConfig {
    /// Junction critical current of the array, A.
    pub i_s_a: f64,
    /// Array inductance, H.
    pub l_a_h: f64,
    /// Defaults to the circuit centre frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub port: usize,
    pub amplitude_v: f64,
    /// Defaults to the circuit centre frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_on_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discard_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowKind>,
    /// Largest sideband order reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub max_evals: usize,
    pub delta_phase_bounds: [f64; 2],
    pub omega_mod_bounds_hz: [f64; 2],
    pub freq_bounds_hz: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_unwanted: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_sidebands: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Touchstone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub circuit: CircuitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squid: Option<SquidConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kerr: Option<KerrConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(field, format!("must be non-negative, got {v}")))
    }
}

fn interval(field: &str, b: [f64; 2]) -> Result<(), CliError> {
    if b.iter().all(|v| v.is_finite()) && b[0] <= b[1] {
        Ok(())
    } else {
        Err(bad(field, format!("must be an ordered pair, got {b:?}")))
    }
}

fn required<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| bad(field, "section is required for this command"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(&path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.circuit;
        positive("circuit.l_h", c.l_h)?;
        positive("circuit.c_f", c.c_f)?;
        positive("circuit.r_ohm", c.r_ohm)?;
        if !(c.epsilon.is_finite() && (0.0..=1.0).contains(&c.epsilon)) {
            return Err(bad("circuit.epsilon", format!("must lie in [0, 1], got {}", c.epsilon)));
        }
        if let Some(w) = c.omega_mod_hz {
            non_negative("circuit.omega_mod_hz", w)?;
        }
        if let Some(s) = &self.squid {
            match (s.zero_bias_inductance_h, s.critical_current_a) {
                (Some(l), None) => positive("squid.zero_bias_inductance_h", l)?,
                (None, Some(i)) => positive("squid.critical_current_a", i)?,
                _ => {
                    return Err(bad(
                        "squid",
                        "give exactly one of zero_bias_inductance_h and critical_current_a",
                    ))
                }
            }
            if s.n == 0 {
                return Err(bad("squid.n", "must be at least 1"));
            }
            if let Some(e) = s.eta {
                positive("squid.eta", e)?;
            }
            if let Some(l) = s.loop_inductance_h {
                positive("squid.loop_inductance_h", l)?;
            }
        }
        if self.mode == Mode::Squid {
            required(&self.squid, "squid")?;
        }
        if let Some(k) = &self.kerr {
            positive("kerr.i_s_a", k.i_s_a)?;
            positive("kerr.l_a_h", k.l_a_h)?;
            if let Some(f) = k.f0_hz {
                positive("kerr.f0_hz", f)?;
            }
        }
        if let Some(d) = &self.drive {
            if !(1..=4).contains(&d.port) {
                return Err(bad("drive.port", format!("must be 1..=4, got {}", d.port)));
            }
            non_negative("drive.amplitude_v", d.amplitude_v)?;
            if let Some(f) = d.freq_hz {
                positive("drive.freq_hz", f)?;
            }
            if let Some(t) = d.turn_on_s {
                non_negative("drive.turn_on_s", t)?;
            }
            if let Some(r) = d.ramp_s {
                positive("drive.ramp_s", r)?;
            }
        }
        if let Some(s) = &self.sim {
            positive("sim.duration_s", s.duration_s)?;
            if let Some(n) = s.steps_per_period {
                if n < MIN_SAMPLES_PER_PERIOD {
                    return Err(bad(
                        "sim.steps_per_period",
                        format!("must be at least {MIN_SAMPLES_PER_PERIOD}, got {n}"),
                    ));
                }
            }
            if let Some(d) = s.discard_s {
                non_negative("sim.discard_s", d)?;
                if d >= s.duration_s {
                    return Err(bad("sim.discard_s", "must be shorter than sim.duration_s"));
                }
            }
            if s.n_max == Some(0) {
                return Err(bad("sim.n_max", "must be at least 1"));
            }
        }
        if let Some(s) = &self.sweep {
            positive("sweep.f_lo_hz", s.f_lo_hz)?;
            positive("sweep.f_hi_hz", s.f_hi_hz)?;
            if s.f_hi_hz < s.f_lo_hz {
                return Err(bad("sweep.f_hi_hz", "must not be below sweep.f_lo_hz"));
            }
            if s.n_points == 0 {
                return Err(bad("sweep.n_points", "must be at least 1"));
            }
        }
        if let Some(t) = &self.tune {
            if t.max_evals == 0 {
                return Err(bad("tune.max_evals", "must be at least 1"));
            }
            interval("tune.delta_phase_bounds", t.delta_phase_bounds)?;
            interval("tune.omega_mod_bounds_hz", t.omega_mod_bounds_hz)?;
            interval("tune.freq_bounds_hz", t.freq_bounds_hz)?;
            positive("tune.omega_mod_bounds_hz[0]", t.omega_mod_bounds_hz[0])?;
            positive("tune.freq_bounds_hz[0]", t.freq_bounds_hz[0])?;
            for (name, w) in [("tune.w_unwanted", t.w_unwanted), ("tune.w_sidebands", t.w_sidebands)] {
                if let Some(w) = w {
                    non_negative(name, w)?;
                }
            }
        }
        if let Some(o) = &self.output {
            if o.directory.as_os_str().is_empty() {
                return Err(bad("output.directory", "must not be empty"));
            }
        }
        Ok(())
    }

    pub fn circuit_params(&self) -> Result<CircuitParams, CliError> {
        let c = &self.circuit;
        let p = CircuitParams::matched(c.l_h, c.c_f, c.r_ohm, c.epsilon).map_err(|e| bad("circuit", e))?;
        Ok(match c.omega_mod_hz {
            Some(f) => p.with_omega_mod(hz_to_rad(f)),
            None => p,
        })
    }

    pub fn squid_params(&self) -> Result<Option<SquidArrayParams>, CliError> {
        let Some(s) = &self.squid else { return Ok(None) };
        let base = match (s.zero_bias_inductance_h, s.critical_current_a) {
            (Some(l), _) => SquidArrayParams::from_phases(l, s.n, s.sigma_phase, s.delta_phase),
            (None, Some(i)) => SquidArrayParams::new(
                i,
                s.n,
                synthrot_core::squid::flux_from_phase(s.sigma_phase),
                synthrot_core::squid::flux_from_phase(s.delta_phase),
            ),
            (None, None) => unreachable!("validated"),
        };
        let mut p = base.map_err(|e| bad("squid", e))?;
        if let Some(e) = s.eta {
            p = p.with_eta(e).map_err(|e| bad("squid.eta", e))?;
        }
        if let Some(l) = s.loop_inductance_h {
            p = p.with_loop_inductance(l).map_err(|e| bad("squid.loop_inductance_h", e))?;
        }
        Ok(Some(p))
    }

    pub fn drive_spec(&self) -> Result<DriveSpec, CliError> {
        let d = required(&self.drive, "drive")?;
        let p = self.circuit_params()?;
        let w = d.freq_hz.map(hz_to_rad).unwrap_or_else(|| p.omega0());
        let mut spec = DriveSpec::new(d.port, d.amplitude_v, w).map_err(|e| bad("drive", e))?;
        if let Some(t) = d.turn_on_s {
            spec = spec.with_turn_on(t).map_err(|e| bad("drive.turn_on_s", e))?;
        }
        if let Some(r) = d.ramp_s {
            spec = spec.with_ramp(r).map_err(|e| bad("drive.ramp_s", e))?;
        }
        Ok(spec)
    }

    pub fn sim(&self) -> Result<&SimConfig, CliError> {
        required(&self.sim, "sim")
    }

    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        required(&self.sweep, "sweep")
    }

    pub fn formats(&self) -> Vec<Format> {
        self.output
            .as_ref()
            .and_then(|o| o.formats.clone())
            .unwrap_or_else(|| vec![Format::Csv, Format::Json])
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats().contains(&f)
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        self.steps_per_period.unwrap_or(DEFAULT_STEPS_PER_PERIOD)
    }

    pub fn discard(&self) -> f64 {
        self.discard_s.unwrap_or(DEFAULT_DISCARD.min(0.5 * self.duration_s))
    }
}

/// Modulation frequency in Hz, for reports.
pub fn omega_mod_hz(p: &CircuitParams) -> f64 {
    rad_to_hz(p.omega_mod)
}
