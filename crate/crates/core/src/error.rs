use thiserror::Error;

use crate::network::Basis;

/// Errors produced by the circulator models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis mismatch: expected {expected:?}, got {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("bridge {bridge} has degenerate arm reluctances (mean {y_mean:e} 1/H, half-difference {y_delta:e} 1/H) at t = {t:e} s")]
    DegenerateInductance {
        bridge: usize,
        t: f64,
        y_mean: f64,
        y_delta: f64,
    },

    #[error("flux bias too close to the SQUID inductance pole: |cos(phi/2phi0)| = {cos_value:.4} is below the guard {guard}")]
    UnphysicalBias { cos_value: f64, guard: f64 },

    #[error("current {current:e} A saturates the junction (critical current {critical:e} A)")]
    Saturation { current: f64, critical: f64 },

    #[error("{context}: matrix is singular or ill-conditioned (condition number {condition:e})")]
    Singular { context: &'static str, condition: f64 },

    #[error("integration became unstable at t = {t:e} s (scaled state norm {norm:e})")]
    Instability { t: f64, norm: f64 },

    #[error("window [{start:e}, {end:e}] s is not inside the recorded series [{series_start:e}, {series_end:e}] s")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        series_start: f64,
        series_end: f64,
    },

    #[error("segment gives {resolution_hz:e} Hz resolution, coarser than the required {required_hz:e} Hz")]
    InsufficientResolution { resolution_hz: f64, required_hz: f64 },

    #[error("spectrum grid [0, {nyquist_hz:e}] Hz does not cover {freq_hz:e} Hz")]
    Coverage { freq_hz: f64, nyquist_hz: f64 },

    #[error("no half-maximum crossing found on the {side} side of the peak")]
    NoCrossing { side: &'static str },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::BasisMismatch { .. }
                | Error::UnphysicalBias { .. }
                | Error::WindowOutOfRange { .. }
                | Error::InsufficientResolution { .. }
                | Error::Coverage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
