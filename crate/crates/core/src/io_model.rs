//! Input-output (state-space) models of the resonator modes and ports.
//!
//! A model is `ẋ = A x + B u`, `y = C x + D u` on complex envelopes. Lossless
//! models additionally satisfy `B = -C†D`, `A = -jQ - ½C†C` with `D` unitary
//! and `Q` Hermitian.

use num_complex::Complex64;

use crate::freq::sectors_to_ports;
use crate::linalg::{cayley, identity, inverse_checked, max_abs_diff, re, unitarity_error, CMatrix, J};
use crate::network::CircuitParams;
use crate::{Error, Result};

/// Tolerance of the structural lossless checks, relative to the matrix scale.
pub const LOSSLESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct IoModel {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
    /// Hermitian generator of the internal dynamics, present for lossless models.
    pub q: Option<CMatrix>,
}

fn scale(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0)
}

impl IoModel {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self> {
        let (n, m) = (a.nrows(), d.nrows());
        let shapes_ok = a.is_square()
            && d.is_square()
            && b.shape() == (n, m)
            && c.shape() == (m, n);
        if !shapes_ok {
            return Err(Error::invalid(
                "io model",
                format!(
                    "inconsistent shapes A {:?}, B {:?}, C {:?}, D {:?}",
                    a.shape(),
                    b.shape(),
                    c.shape(),
                    d.shape()
                ),
            ));
        }
        Ok(Self { a, b, c, d, q: None })
    }

    /// Builds a lossless model and checks its structural identities.
    pub fn lossless(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix, q: CMatrix) -> Result<Self> {
        let mut model = Self::new(a, b, c, d)?;
        if q.shape() != model.a.shape() {
            return Err(Error::invalid("q", "must have the shape of A"));
        }
        model.q = Some(q);
        let err = model.lossless_error().unwrap_or(f64::INFINITY);
        if err > LOSSLESS_TOL {
            return Err(Error::invalid("io model", format!("lossless identities violated by {err:e}")));
        }
        Ok(model)
    }

    /// Largest relative violation of the lossless identities, if `Q` is known.
    pub fn lossless_error(&self) -> Option<f64> {
        let q = self.q.as_ref()?;
        let b_err = max_abs_diff(&self.b, &(-(self.c.adjoint() * &self.d))) / scale(&self.b);
        let a_expect = -(q * J) - self.c.adjoint() * &self.c * re(0.5);
        let a_err = max_abs_diff(&self.a, &a_expect) / scale(&self.a);
        let q_err = max_abs_diff(q, &q.adjoint()) / scale(q);
        let d_err = unitarity_error(&self.d);
        Some(b_err.max(a_err).max(q_err).max(d_err))
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn ports(&self) -> usize {
        self.d.nrows()
    }

    /// Shifts the reference frequency by `delta`: `A → A - jΔ`, `Q → Q + Δ`.
    pub fn with_detuning(&self, delta: f64) -> Self {
        let n = self.states();
        let shift = identity(n) * re(delta);
        Self {
            a: &self.a - &shift * J,
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            q: self.q.as_ref().map(|q| q + shift),
        }
    }
}

/// Center frequency, decay rate and matched rotation rate, all rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRates {
    pub omega0: f64,
    pub kappa: f64,
    pub omega_crit: f64,
}

pub fn design_rates(l: f64, c: f64, r: f64, epsilon: f64) -> Result<DesignRates> {
    let p = CircuitParams::new(l, c, r, epsilon, 0.0)?;
    Ok(DesignRates {
        omega0: p.omega0(),
        kappa: p.kappa(),
        omega_crit: p.omega_crit(),
    })
}

/// Relation between port voltages and IO envelopes at drive `ω_d = ω₀ + Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeScaling {
    /// Drive detuning `Δ`, rad/s.
    pub delta: f64,
    /// `ω₀ sqrt(cr)`, converting envelopes to volts.
    pub normalization: f64,
}

impl EnvelopeScaling {
    pub fn new(params: &CircuitParams, omega_d: f64) -> Self {
        let w0 = params.omega0();
        Self {
            delta: omega_d - w0,
            normalization: w0 * (params.c * params.r).sqrt(),
        }
    }

    pub fn drive_frequency(&self, omega0: f64) -> f64 {
        omega0 + self.delta
    }

    pub fn to_volts(&self, v: Complex64) -> Complex64 {
        v * self.normalization
    }

    pub fn to_envelope(&self, volts: Complex64) -> Complex64 {
        volts / self.normalization
    }
}

fn positive_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("kappa", format!("must be positive, got {kappa}")))
    }
}

/// Odd-sector model plus the fixed even-sector map.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingIo {
    pub odd: IoModel,
    pub even: CMatrix,
}

pub fn swap2() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

/// Rotating-frame model of the odd sector, states `[φ₊, φ₋]`, ports
/// `[left-odd, right-odd]`.
pub fn build_rotating_io(kappa: f64, delta: f64, omega_mod: f64) -> Result<RotatingIo> {
    positive_kappa(kappa)?;
    let s = re((kappa / 2.0).sqrt());
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[
            -(J * (delta - omega_mod) + kappa / 2.0),
            re(0.0),
            re(0.0),
            -(J * (delta + omega_mod) + kappa / 2.0),
        ],
    );
    let b = CMatrix::from_row_slice(2, 2, &[J * s, -s, J * s, s]);
    let c = CMatrix::from_row_slice(2, 2, &[-J * s, -J * s, -s, s]);
    let d = -identity(2);
    let q = CMatrix::from_row_slice(2, 2, &[re(delta - omega_mod), re(0.0), re(0.0), re(delta + omega_mod)]);
    Ok(RotatingIo {
        odd: IoModel::lossless(a, b, c, d, q)?,
        even: swap2(),
    })
}

/// Prompt scattering of the bare junction: a source driving three matched
/// loads in parallel.
pub fn junction_scattering() -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| re(if i == j { -0.5 } else { 0.5 }))
}

/// Lab-frame model with constant matrices and explicit mode mixing at `Ω`.
/// States `[a_x, a_y]`, ports 1..4.
pub fn build_lab_io(kappa: f64, omega_mod: f64) -> Result<IoModel> {
    positive_kappa(kappa)?;
    let s = (kappa / 2.0).sqrt();
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[re(-kappa / 2.0), re(-omega_mod), re(omega_mod), re(-kappa / 2.0)],
    );
    let b = CMatrix::from_row_slice(2, 4, &[s, 0.0, -s, 0.0, 0.0, s, 0.0, -s].map(re));
    let c = b.transpose();
    let q = CMatrix::from_row_slice(2, 2, &[re(0.0), -J * omega_mod, J * omega_mod, re(0.0)]);
    IoModel::lossless(a, b, c, junction_scattering(), q)
}

/// Frame with the rotating port coupling, evaluated at time `t`.
/// States `[a_q, a_p]`, ports 1..4.
pub fn build_fullport_rotating_io(kappa: f64, omega_mod: f64, t: f64) -> Result<IoModel> {
    positive_kappa(kappa)?;
    let s = (kappa / 2.0).sqrt();
    let (sn, cs) = (omega_mod * t).sin_cos();
    let a = identity(2) * re(-kappa / 2.0);
    let b = CMatrix::from_row_slice(
        2,
        4,
        &[cs, sn, -cs, -sn, -sn, cs, sn, -cs].map(|x| re(s * x)),
    );
    let c = CMatrix::from_row_slice(
        4,
        2,
        &[cs, -sn, sn, cs, -cs, sn, -sn, -cs].map(|x| re(s * x)),
    );
    IoModel::lossless(a, b, c, junction_scattering(), CMatrix::zeros(2, 2))
}

/// `[a_q, a_p] = R(Ωt) [a_x, a_y]`.
pub fn lab_to_rotating(t: f64, omega_mod: f64, lab: [Complex64; 2]) -> [Complex64; 2] {
    let (sn, cs) = (omega_mod * t).sin_cos();
    [lab[0] * cs + lab[1] * sn, -lab[0] * sn + lab[1] * cs]
}

/// Steady-state response `D - C A⁻¹ B` to constant input envelopes.
pub fn io_steady_scattering(model: &IoModel) -> Result<CMatrix> {
    let (inv, _) = inverse_checked(&model.a, "IO dynamics matrix A")?;
    Ok(&model.d - &model.c * inv * &model.b)
}

/// Steady-state scattering from the admittance-like form of a lossless model.
#[derive(Debug, Clone, PartialEq)]
pub struct QFormScattering {
    pub s: CMatrix,
    /// `Y = 2j (C Q⁻¹ C†)⁻¹`; absent when the fallback was used.
    pub y_io: Option<CMatrix>,
    /// Set when `Q` or `C Q⁻¹ C†` was singular and `D - C A⁻¹ B` was used instead.
    pub used_fallback: bool,
}

/// `S = -(1 + Y)⁻¹ (1 - Y) D` with `Y = 2j (C Q⁻¹ C†)⁻¹`. This is the Cayley
/// form of `D - C A⁻¹ B` for a lossless model.
pub fn io_scattering_via_q(model: &IoModel) -> Result<QFormScattering> {
    let q = model
        .q
        .as_ref()
        .ok_or_else(|| Error::invalid("q", "the admittance form needs a lossless model"))?;
    let admittance = inverse_checked(q, "Q")
        .and_then(|(q_inv, _)| inverse_checked(&(&model.c * q_inv * model.c.adjoint()), "C Q^-1 C^H"))
        .map(|(x_inv, _)| x_inv * (J * 2.0));
    match admittance {
        Ok(y) => {
            let (cay, _) = cayley(&y, "1 + Y_io")?;
            Ok(QFormScattering {
                s: -(cay * &model.d),
                y_io: Some(y),
                used_fallback: false,
            })
        }
        Err(Error::Singular { .. }) => Ok(QFormScattering {
            s: io_steady_scattering(model)?,
            y_io: None,
            used_fallback: true,
        }),
        Err(e) => Err(e),
    }
}

/// Four-port steady-state scattering of the rotating IO model.
pub fn circulator_io_scattering(kappa: f64, delta: f64, omega_mod: f64) -> Result<CMatrix> {
    let model = build_rotating_io(kappa, delta, omega_mod)?;
    let odd = io_steady_scattering(&model.odd)?;
    Ok(sectors_to_ports(&model.even, &odd))
}

/// FWHM of `|S21|²` for the odd sector and for the full circulator, rad/s.
pub fn circulator_bandwidths(kappa: f64) -> Result<(f64, f64)> {
    positive_kappa(kappa)?;
    let odd = std::f64::consts::SQRT_2 * kappa;
    let full = (2.0 * (3f64.sqrt() - 1.0)).sqrt() * kappa;
    Ok((odd, full))
}

/// Polarization angle of the steady resonator response, `atan(2Ω/κ)`.
pub fn rotation_angle(omega_mod: f64, kappa: f64) -> Result<f64> {
    positive_kappa(kappa)?;
    Ok((2.0 * omega_mod / kappa).atan())
}

/// Sampled trajectory of an IO model.
#[derive(Debug, Clone, PartialEq)]
pub struct IoTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub outputs: Vec<Vec<Complex64>>,
}

fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn axpy(x: &[Complex64], h: f64, k: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// Integrates a possibly time-dependent model with fixed-step RK4.
pub fn integrate_io<M, U>(
    model_at: M,
    input: U,
    x0: Vec<Complex64>,
    t_end: f64,
    steps: usize,
) -> Result<IoTrajectory>
where
    M: Fn(f64) -> Result<IoModel>,
    U: Fn(f64) -> Vec<Complex64>,
{
    if steps == 0 || !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("steps", "need positive step count and duration"));
    }
    let h = t_end / steps as f64;
    let deriv = |t: f64, x: &[Complex64]| -> Result<Vec<Complex64>> {
        let m = model_at(t)?;
        let u = input(t);
        let ax = mat_vec(&m.a, x);
        let bu = mat_vec(&m.b, &u);
        Ok(ax.iter().zip(&bu).map(|(a, b)| a + b).collect())
    };
    let output = |t: f64, x: &[Complex64]| -> Result<Vec<Complex64>> {
        let m = model_at(t)?;
        let cx = mat_vec(&m.c, x);
        let du = mat_vec(&m.d, &input(t));
        Ok(cx.iter().zip(&du).map(|(a, b)| a + b).collect())
    };
    let mut traj = IoTrajectory {
        t: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
    };
    let mut x = x0;
    for i in 0..=steps {
        let t = i as f64 * h;
        traj.outputs.push(output(t, &x)?);
        traj.t.push(t);
        traj.states.push(x.clone());
        if i == steps {
            break;
        }
        let k1 = deriv(t, &x)?;
        let k2 = deriv(t + h / 2.0, &axpy(&x, h / 2.0, &k1))?;
        let k3 = deriv(t + h / 2.0, &axpy(&x, h / 2.0, &k2))?;
        let k4 = deriv(t + h, &axpy(&x, h, &k3))?;
        x = x
            .iter()
            .enumerate()
            .map(|(j, v)| v + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0))
            .collect();
    }
    Ok(traj)
}
