//! Physical constants (CODATA 2018 exact values where defined).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced flux quantum ħ/2e, Wb.
pub const PHI0_REDUCED: f64 = HBAR / (2.0 * ELEMENTARY_CHARGE);

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TWO_PI
}
