//! Exact lumped-element scattering of the modulated network.
//!
//! In the rotating circular basis the modulated network is time independent,
//! so the exact response at one drive frequency reduces to two small linear
//! solves: the even lines see a fixed inductive admittance and the odd lines
//! see the resonator modes `φ±`, which are eliminated by a Schur complement.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{block_diag, cayley, inverse_checked, re, unitarity_error, CMatrix, J};
use crate::network::{even_odd_matrix, CircuitParams};
use crate::{Error, Result};

/// Port set a scattering matrix refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringBasis {
    /// Lines 1..4.
    Ports,
    /// `[left, right]` even or odd two-port.
    Sector,
    /// Ports 1..3 after port 4 has been terminated.
    ThreePort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub s: CMatrix,
    /// Angular frequency, rad/s.
    pub omega: f64,
    pub basis: ScatteringBasis,
    /// Worst condition number met while solving.
    pub condition: f64,
}

impl ScatteringMatrix {
    /// `S_ij` with 1-based port indices.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.s[(i - 1, j - 1)]
    }

    /// `|S_ij|²` with 1-based port indices.
    pub fn power(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).norm_sqr()
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.s)
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

/// The odd-sector network in basis `[φ₊, φ₋, left-odd, right-odd]`, 1/H,
/// with the resonator capacitance folded into the mode rows.
pub fn odd_sector_matrix(omega: f64, params: &CircuitParams) -> CMatrix {
    let CircuitParams {
        l, c, epsilon, omega_mod, ..
    } = *params;
    let e = re(epsilon);
    let z = Complex64::new(0.0, 0.0);
    let plus = 2.0 - l * c * (omega - omega_mod).powi(2);
    let minus = 2.0 - l * c * (omega + omega_mod).powi(2);
    let rows = [
        [re(plus), z, e, J * e],
        [z, re(minus), e, -J * e],
        [e, e, re(4.0), z],
        [-J * e, J * e, z, re(4.0)],
    ];
    CMatrix::from_fn(4, 4, |i, k| rows[i][k] / l)
}

/// `S = (1 + rY)⁻¹ (1 - rY)`.
pub fn admittance_to_scattering(y: &CMatrix, r: f64) -> Result<ScatteringMatrix> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    let (s, condition) = cayley(&(y * re(r)), "port admittance (1 + rY)")?;
    Ok(ScatteringMatrix {
        s,
        omega: f64::NAN,
        basis: ScatteringBasis::Sector,
        condition,
    })
}

/// Even-sector admittance `(2/jωl) [[1, -1], [-1, 1]]`.
pub fn even_admittance(omega: f64, l: f64) -> CMatrix {
    let g = re(2.0) / (J * omega * l);
    CMatrix::from_row_slice(2, 2, &[g, -g, -g, g])
}

/// Odd-sector admittance after eliminating the resonator modes.
pub fn odd_admittance(omega: f64, params: &CircuitParams) -> Result<(CMatrix, f64)> {
    let k = odd_sector_matrix(omega, params);
    let kpp = k.view((2, 2), (2, 2)).into_owned();
    if params.epsilon == 0.0 {
        return Ok((kpp / (J * omega), 1.0));
    }
    let kmm = k.view((0, 0), (2, 2)).into_owned();
    let kpm = k.view((2, 0), (2, 2)).into_owned();
    let kmp = k.view((0, 2), (2, 2)).into_owned();
    let (inv, condition) = inverse_checked(&kmm, "resonator block")?;
    Ok(((kpp - kpm * inv * kmp) / (J * omega), condition))
}

/// Maps even and odd two-port scattering back to lines 1..4.
pub fn sectors_to_ports(even: &CMatrix, odd: &CMatrix) -> CMatrix {
    let t = even_odd_matrix();
    let t = CMatrix::from_fn(4, 4, |i, j| re(t[(i, j)]));
    t.transpose() * block_diag(even, odd) * t
}

fn validate_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("omega", format!("must be positive, got {omega}")))
    }
}

/// Exact four-port scattering at drive angular frequency `omega`.
pub fn exact_scattering(omega: f64, params: &CircuitParams) -> Result<ScatteringMatrix> {
    validate_omega(omega)?;
    let se = admittance_to_scattering(&even_admittance(omega, params.l), params.r)?;
    let (yo, c_modes) = odd_admittance(omega, params)?;
    let so = admittance_to_scattering(&yo, params.r)?;
    Ok(ScatteringMatrix {
        s: sectors_to_ports(&se.s, &so.s),
        omega,
        basis: ScatteringBasis::Ports,
        condition: se.condition.max(so.condition).max(c_modes),
    })
}

/// First-order odd-sector admittance at `ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct GyratorApprox {
    /// `G [[0, 1], [-1, 0]]` with `G = 1/R_g`, S.
    pub admittance: CMatrix,
    /// `R_g = ε² / 16cΩ`, Ω; infinite when `Ω = 0`.
    pub gyration_resistance: f64,
}

pub fn gyrator_approx(params: &CircuitParams) -> GyratorApprox {
    let g = 16.0 * params.c * params.omega_mod / (params.epsilon * params.epsilon);
    let g = if g.is_finite() { g } else { 0.0 };
    let gyration_resistance = if g == 0.0 { f64::INFINITY } else { 1.0 / g };
    GyratorApprox {
        admittance: CMatrix::from_row_slice(2, 2, &[re(0.0), re(g), re(-g), re(0.0)]),
        gyration_resistance,
    }
}

/// Four-port scattering with the odd sector replaced by the ideal gyrator.
pub fn gyrator_scattering(omega: f64, params: &CircuitParams) -> Result<ScatteringMatrix> {
    validate_omega(omega)?;
    let se = admittance_to_scattering(&even_admittance(omega, params.l), params.r)?;
    let so = admittance_to_scattering(&gyrator_approx(params).admittance, params.r)?;
    Ok(ScatteringMatrix {
        s: sectors_to_ports(&se.s, &so.s),
        omega,
        basis: ScatteringBasis::Ports,
        condition: se.condition.max(so.condition),
    })
}

/// One swept frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub freq_hz: f64,
    pub result: Result<ScatteringMatrix>,
}

/// Uniform grid of `n` points over `[f_lo, f_hi]` Hz. A single point sits at `f_lo`.
pub fn frequency_grid(f_lo: f64, f_hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n_points", "need at least one point"));
    }
    if !(f_lo.is_finite() && f_hi.is_finite() && f_lo > 0.0 && f_hi >= f_lo) {
        return Err(Error::invalid("frequency range", format!("need 0 < f_lo <= f_hi, got [{f_lo}, {f_hi}]")));
    }
    if n == 1 {
        return Ok(vec![f_lo]);
    }
    let step = (f_hi - f_lo) / (n - 1) as f64;
    Ok((0..n).map(|i| f_lo + step * i as f64).collect())
}

/// Evaluates `model` on a uniform grid. Points are independent and computed in
/// parallel; output order follows the grid. Per-point failures are kept.
pub fn sweep_with<F>(f_lo: f64, f_hi: f64, n: usize, model: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> Result<ScatteringMatrix> + Sync,
{
    let grid = frequency_grid(f_lo, f_hi, n)?;
    Ok(grid
        .into_par_iter()
        .map(|freq_hz| SweepPoint {
            freq_hz,
            result: model(crate::constants::hz_to_rad(freq_hz)),
        })
        .collect())
}

pub fn sweep(f_lo: f64, f_hi: f64, n: usize, params: &CircuitParams) -> Result<Vec<SweepPoint>> {
    sweep_with(f_lo, f_hi, n, |w| exact_scattering(w, params))
}

/// Three-port obtained by terminating port 4 in a load with reflection
/// coefficient `gamma`: `S' = S_aa + S_a4 Γ (1 - Γ S_44)⁻¹ S_4a`.
pub fn terminate_port4(s4: &ScatteringMatrix, gamma: Complex64) -> Result<ScatteringMatrix> {
    if s4.dim() != 4 {
        return Err(Error::invalid("s4", format!("need a 4x4 matrix, got {}x{}", s4.dim(), s4.dim())));
    }
    let s = &s4.s;
    let denom = Complex64::new(1.0, 0.0) - gamma * s[(3, 3)];
    if denom.norm() < 1e-12 {
        return Err(Error::Singular {
            context: "port 4 termination",
            condition: f64::INFINITY,
        });
    }
    let out = CMatrix::from_fn(3, 3, |i, j| s[(i, j)] + s[(i, 3)] * gamma * s[(3, j)] / denom);
    Ok(ScatteringMatrix {
        s: out,
        omega: s4.omega,
        basis: ScatteringBasis::ThreePort,
        condition: s4.condition.max(1.0 / denom.norm()),
    })
}

/// Three-port circulator: port 4 terminated in a short.
pub fn three_port_reduction(s4: &ScatteringMatrix) -> Result<ScatteringMatrix> {
    terminate_port4(s4, Complex64::new(-1.0, 0.0))
}

/// Largest `|S_ij - S_ji|`.
pub fn reciprocity_error(s: &CMatrix) -> f64 {
    crate::linalg::max_abs_diff(s, &s.transpose())
}

/// Largest deviation from `S_{i+1,j+1} = S_{i,j}` (indices mod n).
pub fn cyclic_error(s: &CMatrix) -> f64 {
    let n = s.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((s[((i + 1) % n, (j + 1) % n)] - s[(i, j)]).norm());
        }
    }
    worst
}

/// Power in dB, floored at -400 dB.
pub fn power_db(p: f64) -> f64 {
    10.0 * p.max(1e-40).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use crate::linalg::{identity, max_abs_diff};

    fn fig6a() -> CircuitParams {
        CircuitParams::matched(0.5e-9, 2e-12, 50.0, 1.0).unwrap()
    }

    fn fig6c() -> CircuitParams {
        CircuitParams::matched(1e-9, 1e-12, 50.0, std::f64::consts::FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn odd_sector_entries() {
        let p = fig6a();
        for w in [5e10, 3.87e10, 4e10] {
            let m = odd_sector_matrix(w, &p);
            let expect = (2.0 - p.l * p.c * (w - p.omega_mod).powi(2)) / p.l;
            assert!((m[(0, 0)] - re(expect)).norm() < 1e-6);
            assert!((m[(1, 2)] - re(p.epsilon / p.l)).norm() < 1e-6);
            assert!((m[(3, 1)] - J * p.epsilon / p.l).norm() < 1e-6);
        }
        // At ω = sqrt(2/lc) + Ω the bare φ₊ entry vanishes.
        let w = (2.0 / (p.l * p.c)).sqrt() + p.omega_mod;
        assert!(odd_sector_matrix(w, &p)[(0, 0)].norm() * p.l < 1e-12);
        let still = p.with_omega_mod(0.0);
        let m = odd_sector_matrix(4e10, &still);
        assert_eq!(m[(0, 0)], m[(1, 1)]);
        let flat = CircuitParams::new(1e-9, 1e-12, 50.0, 0.0, 1e9).unwrap();
        let m = odd_sector_matrix(4e10, &flat);
        assert!(m.view((0, 2), (2, 2)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn admittance_examples() {
        let r = 50.0;
        let s = admittance_to_scattering(&CMatrix::zeros(2, 2), r).unwrap();
        assert!(max_abs_diff(&s.s, &identity(2)) < 1e-15);
        let s = admittance_to_scattering(&(identity(3) / re(r)), r).unwrap();
        assert!(s.s.iter().all(|z| z.norm() < 1e-15));
        let g = 1.0 / r;
        let y = CMatrix::from_row_slice(2, 2, &[re(0.0), re(g), re(-g), re(0.0)]);
        let s = admittance_to_scattering(&y, r).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[re(0.0), re(-1.0), re(1.0), re(0.0)]);
        assert!(max_abs_diff(&s.s, &expect) < 1e-15);
        // rY = -1 cannot be inverted.
        let err = admittance_to_scattering(&(identity(2) * re(-1.0 / r)), r).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn matched_point_routes_power() {
        let p = fig6a();
        let s = exact_scattering(p.omega0(), &p).unwrap();
        assert!((s.power(2, 1) - 0.995).abs() < 0.002);
        assert!((s.power(1, 1) - 0.002).abs() < 0.001);
        assert!((s.power(3, 1) - 0.002).abs() < 0.001);
        assert!(s.power(4, 1) < 0.0005);
        assert!(s.unitarity_error() < 1e-9);
        assert!(cyclic_error(&s.s) < 1e-9);
    }

    #[test]
    fn unmodulated_resonator_ignores_rotation_rate() {
        let a = CircuitParams::new(1e-9, 1e-12, 50.0, 0.0, TWO_PI * 50e6).unwrap();
        let b = a.with_omega_mod(TWO_PI * 300e6);
        for w in [3e10, 4.1e10] {
            let sa = exact_scattering(w, &a).unwrap();
            let sb = exact_scattering(w, &b).unwrap();
            assert!(max_abs_diff(&sa.s, &sb.s) < 1e-12);
        }
    }

    #[test]
    fn second_design_peak() {
        let p = fig6c();
        let pts = sweep(6.4e9, 6.9e9, 2001, &p).unwrap();
        let best = pts
            .iter()
            .map(|pt| pt.result.as_ref().unwrap())
            .max_by(|a, b| a.power(2, 1).total_cmp(&b.power(2, 1)))
            .unwrap();
        assert!((best.power(2, 1) - 0.978).abs() < 0.005);
        assert!((best.power(1, 1) - 0.010).abs() < 0.003);
    }

    #[test]
    fn response_is_asymmetric_off_resonance() {
        let p = fig6c();
        let up = exact_scattering(p.omega0() + TWO_PI * 300e6, &p).unwrap().power(2, 1);
        let down = exact_scattering(p.omega0() - TWO_PI * 300e6, &p).unwrap().power(2, 1);
        assert!((up - down).abs() > 0.01, "up {up} down {down}");
    }

    #[test]
    fn single_point_sweep_matches_direct_call() {
        let p = fig6a();
        let f = 6.1e9;
        let pts = sweep(f, f, 1, &p).unwrap();
        assert_eq!(pts.len(), 1);
        let direct = exact_scattering(TWO_PI * f, &p).unwrap();
        assert_eq!(pts[0].result.as_ref().unwrap().s, direct.s);
        assert!(sweep(1e9, 2e9, 0, &p).is_err());
    }

    #[test]
    fn gyrator_examples() {
        let p = CircuitParams::new(0.5e-9, 2e-12, 50.0, 1.0, TWO_PI * 99e6).unwrap();
        let g = gyrator_approx(&p);
        assert!((g.gyration_resistance - 50.0).abs() < 0.5);
        let m = fig6a();
        assert!((gyrator_approx(&m).gyration_resistance - m.r).abs() < 1e-12);
        let half = p.with_omega_mod(p.omega_mod / 2.0);
        assert!((gyrator_approx(&half).gyration_resistance / g.gyration_resistance - 2.0).abs() < 1e-12);
        assert!(gyrator_approx(&p.with_omega_mod(0.0)).gyration_resistance.is_infinite());
    }

    #[test]
    fn three_port_examples() {
        let one = re(1.0);
        let z = re(0.0);
        let circ = CMatrix::from_row_slice(
            4,
            4,
            &[z, z, z, one, one, z, z, z, z, one, z, z, z, z, one, z],
        );
        let s4 = ScatteringMatrix {
            s: circ,
            omega: 1.0,
            basis: ScatteringBasis::Ports,
            condition: 1.0,
        };
        let s3 = three_port_reduction(&s4).unwrap();
        for (i, j) in [(2, 1), (3, 2), (1, 3)] {
            assert!((s3.get(i, j).norm() - 1.0).abs() < 1e-15);
        }
        for (i, j) in [(1, 1), (2, 2), (3, 3), (1, 2), (2, 3), (3, 1)] {
            assert!(s3.get(i, j).norm() < 1e-15);
        }
        let id = ScatteringMatrix {
            s: identity(4),
            omega: 1.0,
            basis: ScatteringBasis::Ports,
            condition: 1.0,
        };
        assert!(max_abs_diff(&three_port_reduction(&id).unwrap().s, &identity(3)) < 1e-15);

        let p = fig6c();
        let s3 = three_port_reduction(&exact_scattering(p.omega0(), &p).unwrap()).unwrap();
        assert!(s3.power(2, 1) >= 0.97);
        assert!(s3.unitarity_error() < 1e-9);
    }
}
