//! Circuit parameters, inductance bridges, the six-port reluctance matrix and
//! the basis changes that decouple it.
//!
//! Every six-component quantity uses the basis order `[q, p, 1, 2, 3, 4]`:
//! the two resonator ports first, then the four transmission-line ports.
//!
//! The ring of four bridges is not reconstructed node by node. Instead each
//! bridge contributes a stamp (its two-port reluctance placed between one
//! resonator port and one pair of opposite lines) and the ring closes with a
//! fixed rank-one term `(1/l) v vᵀ`, `v = (1, -1, 1, -1)`, on the line block.
//! For balanced mean reluctances `1/l` this reproduces the published
//! constitutive matrix exactly; it is a reconstruction of the wiring, not a
//! derived netlist.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix4, Matrix6};
use num_complex::Complex64;

use crate::linalg::{CMatrix, J};
use crate::{Error, Result};

/// Index of the `q` resonator port.
pub const Q: usize = 0;
/// Index of the `p` resonator port.
pub const P: usize = 1;

/// Index of transmission-line port `k` (1-based, `1..=4`) in the six-port basis.
#[inline]
pub const fn line(k: usize) -> usize {
    k + 1
}

/// Lumped-element design of the circulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Bridge inductance `l`, H.
    pub l: f64,
    /// Resonator capacitance `c`, F.
    pub c: f64,
    /// Port characteristic impedance `r`, Ω.
    pub r: f64,
    /// Modulation depth `ε`, in `[0, 1]`.
    pub epsilon: f64,
    /// Modulation angular frequency `Ω`, rad/s.
    pub omega_mod: f64,
}

impl CircuitParams {
    pub fn new(l: f64, c: f64, r: f64, epsilon: f64, omega_mod: f64) -> Result<Self> {
        for (name, v) in [("l", l), ("c", c), ("r", r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
        }
        if !(omega_mod.is_finite() && omega_mod >= 0.0) {
            return Err(Error::invalid(
                "omega_mod",
                format!("must be non-negative and finite, got {omega_mod}"),
            ));
        }
        Ok(Self {
            l,
            c,
            r,
            epsilon,
            omega_mod,
        })
    }

    /// Parameters with the modulation rate set to the matched value `Ω₀`.
    pub fn matched(l: f64, c: f64, r: f64, epsilon: f64) -> Result<Self> {
        let p = Self::new(l, c, r, epsilon, 0.0)?;
        Ok(p.with_omega_mod(p.omega_crit()))
    }

    pub fn with_omega_mod(mut self, omega_mod: f64) -> Self {
        self.omega_mod = omega_mod;
        self
    }

    /// Resonant center frequency `ω₀ = sqrt((4 - ε²) / 2lc)`, rad/s.
    pub fn omega0(&self) -> f64 {
        ((4.0 - self.epsilon * self.epsilon) / (2.0 * self.l * self.c)).sqrt()
    }

    /// Resonator energy decay rate `κ = ε² / 8cr`, rad/s.
    pub fn kappa(&self) -> f64 {
        self.epsilon * self.epsilon / (8.0 * self.c * self.r)
    }

    /// Matched rotation rate `Ω₀ = ε² / 16cr = κ/2`, rad/s.
    pub fn omega_crit(&self) -> f64 {
        self.epsilon * self.epsilon / (16.0 * self.c * self.r)
    }
}

/// Arm reluctances of one bridge, as mean and half-difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeArms {
    /// `ȳ = (y₊ + y₋) / 2`, 1/H.
    pub y_mean: f64,
    /// `δ = (y₊ - y₋) / 2`, 1/H.
    pub y_delta: f64,
}

impl BridgeArms {
    pub fn new(y_mean: f64, y_delta: f64) -> Result<Self> {
        let arms = Self { y_mean, y_delta };
        if !arms.is_valid() {
            return Err(Error::invalid(
                "arms",
                format!("need y_mean > 0 and |y_delta| <= y_mean, got ({y_mean:e}, {y_delta:e})"),
            ));
        }
        Ok(arms)
    }

    /// Builds the arms from the two arm reluctances `y₊`, `y₋`.
    pub fn from_pair(y_plus: f64, y_minus: f64) -> Result<Self> {
        Self::new(0.5 * (y_plus + y_minus), 0.5 * (y_plus - y_minus))
    }

    /// Both arm reluctances are non-negative and the mean is positive.
    /// Equality `|δ| = ȳ` is allowed: it is the `ε = 1` endpoint where one
    /// arm momentarily has infinite inductance.
    pub fn is_valid(&self) -> bool {
        self.y_mean.is_finite()
            && self.y_delta.is_finite()
            && self.y_mean > 0.0
            && self.y_delta.abs() <= self.y_mean * (1.0 + 1e-12)
    }

    pub fn y_plus(&self) -> f64 {
        self.y_mean + self.y_delta
    }

    pub fn y_minus(&self) -> f64 {
        self.y_mean - self.y_delta
    }
}

/// Two-port reluctance of a single bridge: `[[ȳ, δ], [δ, ȳ]]`.
pub fn bridge_two_port_reluctance(arms: BridgeArms) -> [[f64; 2]; 2] {
    [[arms.y_mean, arms.y_delta], [arms.y_delta, arms.y_mean]]
}

/// Time-dependent arm reluctances of one bridge.
pub trait ArmSchedule {
    fn arms(&self, t: f64) -> BridgeArms;
}

impl<F: Fn(f64) -> BridgeArms> ArmSchedule for F {
    fn arms(&self, t: f64) -> BridgeArms {
        self(t)
    }
}

/// Resonator port and line pair each bridge connects, in the order
/// B1 (1,3 → q), B2 (2,4 → q), B3 (1,3 → p), B4 (2,4 → p).
const BRIDGE_WIRING: [(usize, usize, usize); 4] = [
    (Q, line(1), line(3)),
    (Q, line(2), line(4)),
    (P, line(1), line(3)),
    (P, line(2), line(4)),
];

/// Real symmetric 6×6 inverse-inductance matrix in basis `[q, p, 1, 2, 3, 4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluctanceMatrix(pub Matrix6<f64>);

impl ReluctanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    /// Currents `I = M φ` for the branch fluxes `φ`.
    pub fn apply(&self, phi: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..6).map(|j| self.0[(i, j)] * phi[j]).sum();
        }
        out
    }

    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).amax()
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix::from_fn(6, 6, |i, j| Complex64::new(self.0[(i, j)], 0.0))
    }
}

/// Four bridges arranged in a ring, with the closing inductance `l`.
#[derive(Debug, Clone)]
pub struct BridgeRing<S> {
    pub l: f64,
    pub bridges: [S; 4],
}

impl<S: ArmSchedule> BridgeRing<S> {
    pub fn new(l: f64, bridges: [S; 4]) -> Self {
        Self { l, bridges }
    }

    pub fn reluctance(&self, t: f64) -> Result<ReluctanceMatrix> {
        assemble_reluctance(t, self)
    }
}

/// Assembles `M(t) = Σ_k stamp(B_k) + (1/l) v vᵀ`.
pub fn assemble_reluctance<S: ArmSchedule>(t: f64, ring: &BridgeRing<S>) -> Result<ReluctanceMatrix> {
    let mut m = Matrix6::<f64>::zeros();
    for (k, (schedule, &(mode, a, b))) in ring.bridges.iter().zip(BRIDGE_WIRING.iter()).enumerate() {
        let arms = schedule.arms(t);
        if !arms.is_valid() {
            return Err(Error::DegenerateInductance {
                bridge: k + 1,
                t,
                y_mean: arms.y_mean,
                y_delta: arms.y_delta,
            });
        }
        let (y, d) = (arms.y_mean, arms.y_delta);
        m[(mode, mode)] += y;
        m[(a, a)] += y;
        m[(b, b)] += y;
        m[(a, b)] -= y;
        m[(b, a)] -= y;
        m[(mode, a)] += d;
        m[(a, mode)] += d;
        m[(mode, b)] -= d;
        m[(b, mode)] -= d;
    }
    let v = [1.0, -1.0, 1.0, -1.0];
    let inv_l = 1.0 / ring.l;
    for i in 0..4 {
        for j in 0..4 {
            m[(line(i + 1), line(j + 1))] += inv_l * v[i] * v[j];
        }
    }
    Ok(ReluctanceMatrix(m))
}

/// Coordinate system a [`PortVector`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Lines `[1, 2, 3, 4]`.
    Ports1234,
    /// `[left-even, right-even, left-odd, right-odd]`.
    EvenOdd,
    /// Resonator ports `[q, p]`.
    Qp,
    /// Rotating circular resonator variables `[+, -]`.
    CircularRotating,
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::Ports1234 | Basis::EvenOdd => 4,
            Basis::Qp | Basis::CircularRotating => 2,
        }
    }
}

/// Complex branch fluxes or currents tagged with their basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PortVector {
    basis: Basis,
    values: Vec<Complex64>,
}

impl PortVector {
    pub fn new(basis: Basis, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(Error::invalid(
                "values",
                format!("{basis:?} vectors have {} components, got {}", basis.dim(), values.len()),
            ));
        }
        Ok(Self { basis, values })
    }

    pub fn from_real(basis: Basis, values: &[f64]) -> Result<Self> {
        Self::new(basis, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn expect(&self, basis: Basis) -> Result<()> {
        if self.basis != basis {
            return Err(Error::BasisMismatch {
                expected: basis,
                found: self.basis,
            });
        }
        Ok(())
    }
}

/// Orthogonal (and symmetric, hence self-inverse) map from lines `1..4` to
/// the left-right/even-odd basis.
pub fn even_odd_matrix() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 1.0, //
        1.0, 0.0, -1.0, 0.0, //
        0.0, 1.0, 0.0, -1.0,
    ) * FRAC_1_SQRT_2
}

fn apply_real4(m: &Matrix4<f64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..4)
        .map(|i| (0..4).map(|j| v[j] * m[(i, j)]).sum())
        .collect()
}

pub fn even_odd_transform(v: &PortVector) -> Result<PortVector> {
    v.expect(Basis::Ports1234)?;
    PortVector::new(Basis::EvenOdd, apply_real4(&even_odd_matrix(), &v.values))
}

pub fn even_odd_inverse(v: &PortVector) -> Result<PortVector> {
    v.expect(Basis::EvenOdd)?;
    PortVector::new(Basis::Ports1234, apply_real4(&even_odd_matrix(), &v.values))
}

/// Unitary 2×2 map `[φ_q, φ_p] → [φ₊, φ₋]` at time `t`.
pub fn circular_matrix(t: f64, omega_mod: f64) -> [[Complex64; 2]; 2] {
    let e = Complex64::from_polar(FRAC_1_SQRT_2, omega_mod * t);
    let ec = e.conj();
    [[e, -J * e], [ec, J * ec]]
}

pub fn rotating_circular_transform(t: f64, omega_mod: f64, v: &PortVector) -> Result<PortVector> {
    v.expect(Basis::Qp)?;
    let u = circular_matrix(t, omega_mod);
    let x = &v.values;
    PortVector::new(
        Basis::CircularRotating,
        vec![u[0][0] * x[0] + u[0][1] * x[1], u[1][0] * x[0] + u[1][1] * x[1]],
    )
}

pub fn rotating_circular_inverse(t: f64, omega_mod: f64, v: &PortVector) -> Result<PortVector> {
    v.expect(Basis::CircularRotating)?;
    let u = circular_matrix(t, omega_mod);
    let x = &v.values;
    // u is unitary, so its inverse is the adjoint.
    PortVector::new(
        Basis::Qp,
        vec![
            u[0][0].conj() * x[0] + u[1][0].conj() * x[1],
            u[0][1].conj() * x[0] + u[1][1].conj() * x[1],
        ],
    )
}

/// Full 6×6 change of basis `[q, p, 1, 2, 3, 4] → [+, -, le, re, lo, ro]`.
pub fn decoupling_transform(t: f64, omega_mod: f64) -> CMatrix {
    let mut u = CMatrix::zeros(6, 6);
    let circ = circular_matrix(t, omega_mod);
    for i in 0..2 {
        for j in 0..2 {
            u[(i, j)] = circ[i][j];
        }
    }
    let eo = even_odd_matrix();
    for i in 0..4 {
        for j in 0..4 {
            u[(2 + i, 2 + j)] = Complex64::new(eo[(i, j)], 0.0);
        }
    }
    u
}

/// `U M Uᴴ` in basis `[+, -, le, re, lo, ro]`. For ideal modulation the even
/// lines decouple and the result is time independent.
pub fn decoupled_reluctance(m: &ReluctanceMatrix, t: f64, omega_mod: f64) -> CMatrix {
    let u = decoupling_transform(t, omega_mod);
    &u * m.to_complex() * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;

    fn ideal_ring(l: f64, eps: f64, omega: f64) -> BridgeRing<Box<dyn Fn(f64) -> BridgeArms>> {
        let s: [fn(f64) -> f64; 4] = [f64::cos, f64::sin, f64::sin, |x| -x.cos()];
        let bridges = s.map(|f| -> Box<dyn Fn(f64) -> BridgeArms> {
            Box::new(move |t| BridgeArms {
                y_mean: 1.0 / l,
                y_delta: eps * f(omega * t) / l,
            })
        });
        BridgeRing::new(l, bridges)
    }

    /// The published constitutive matrix, typed in directly.
    fn published(l: f64, eps: f64, theta: f64) -> Matrix6<f64> {
        let (c, s) = (eps * theta.cos(), eps * theta.sin());
        Matrix6::from_row_slice(&[
            2.0, 0.0, c, s, -c, -s, //
            0.0, 2.0, s, -c, -s, c, //
            c, s, 3.0, -1.0, -1.0, -1.0, //
            s, -c, -1.0, 3.0, -1.0, -1.0, //
            -c, -s, -1.0, -1.0, 3.0, -1.0, //
            -s, c, -1.0, -1.0, -1.0, 3.0,
        ]) / l
    }

    #[test]
    fn bridge_reluctance_examples() {
        let l = 2e-9;
        let d = 0.3;
        let m = bridge_two_port_reluctance(BridgeArms::new(1.0 / l, d / l).unwrap());
        assert_eq!(m, [[1.0 / l, d / l], [d / l, 1.0 / l]]);
        assert_eq!(
            bridge_two_port_reluctance(BridgeArms::new(1.0, 0.0).unwrap()),
            [[1.0, 0.0], [0.0, 1.0]]
        );
        let arms = BridgeArms::from_pair(2.0, 1.0).unwrap();
        assert_eq!(bridge_two_port_reluctance(arms), [[1.5, 0.5], [0.5, 1.5]]);
    }

    #[test]
    fn invalid_arms_rejected() {
        assert!(BridgeArms::new(0.0, 0.0).is_err());
        assert!(BridgeArms::new(1.0, 1.5).is_err());
        assert!(BridgeArms::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn ideal_ring_at_zero_phase_matches_published_row() {
        let l = 1e-9;
        let m = ideal_ring(l, 1.0, 1e9).reluctance(0.0).unwrap();
        let expect = [2.0, 0.0, 1.0, 0.0, -1.0, 0.0];
        for (j, e) in expect.iter().enumerate() {
            assert!((m.get(Q, j) * l - e).abs() < 1e-14);
        }
    }

    #[test]
    fn unmodulated_ring_is_block_diagonal() {
        let l = 1e-9;
        let m = ideal_ring(l, 0.0, 1e9).reluctance(3e-10).unwrap();
        for mode in [Q, P] {
            for k in 1..=4 {
                assert_eq!(m.get(mode, line(k)), 0.0);
            }
        }
        for i in 1..=4 {
            for j in 1..=4 {
                let expect = if i == j { 3.0 } else { -1.0 };
                assert!((m.get(line(i), line(j)) * l - expect).abs() < 1e-12);
            }
        }
        assert_eq!(m.get(Q, P), 0.0);
    }

    #[test]
    fn ring_matches_published_matrix_at_quarter_turn() {
        let (l, omega) = (1e-9, 2.0 * std::f64::consts::PI * 1e8);
        let eps = FRAC_1_SQRT_2;
        let t = std::f64::consts::FRAC_PI_4 / omega;
        let m = ideal_ring(l, eps, omega).reluctance(t).unwrap();
        let err = (m.0 - published(l, eps, omega * t)).amax();
        assert!(err < 1e-12 / l, "max error {err}");
    }

    #[test]
    fn degenerate_schedule_is_rejected() {
        let bad = |_t: f64| BridgeArms {
            y_mean: -1.0,
            y_delta: 0.0,
        };
        let ring = BridgeRing::new(1e-9, [bad; 4]);
        assert!(matches!(
            ring.reluctance(0.0),
            Err(Error::DegenerateInductance { bridge: 1, .. })
        ));
    }

    #[test]
    fn even_odd_examples() {
        let v = PortVector::from_real(Basis::Ports1234, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = even_odd_transform(&v).unwrap();
        let expect = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        for (z, e) in out.values().iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let sym = PortVector::from_real(Basis::Ports1234, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        let out = even_odd_transform(&sym).unwrap();
        let expect = [std::f64::consts::SQRT_2, 0.0, 0.0, 0.0];
        for (z, e) in out.values().iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        assert!(matches!(
            even_odd_transform(&out),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn circular_examples() {
        let v = PortVector::from_real(Basis::Qp, &[1.0, 0.0]).unwrap();
        let out = rotating_circular_transform(0.0, 1e9, &v).unwrap();
        for z in out.values() {
            assert!((z - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        let zero = PortVector::from_real(Basis::Qp, &[0.0, 0.0]).unwrap();
        let out = rotating_circular_transform(1.234e-9, 5e8, &zero).unwrap();
        assert!(out.values().iter().all(|z| z.norm() == 0.0));
        assert!(rotating_circular_transform(0.0, 1.0, &out).is_err());
    }

    #[test]
    fn ring_is_symmetric_for_unequal_arms() {
        let arms = [0.7e9, 1.1e9, 0.9e9, 1.3e9];
        let bridges = arms.map(|y| move |t: f64| BridgeArms {
            y_mean: y,
            y_delta: 0.4 * y * (3e8 * t).sin(),
        });
        let ring = BridgeRing::new(1e-9, bridges);
        for i in 0..10 {
            assert!(ring.reluctance(i as f64 * 1e-9).unwrap().asymmetry() == 0.0);
        }
    }

    proptest! {
        #[test]
        fn ring_reproduces_published_matrix(
            theta in 0.0..(2.0 * std::f64::consts::PI),
            eps in 0.0..=1.0f64,
            omega in 1e6..1e10f64,
            l in 1e-10..1e-8f64,
        ) {
            let t = theta / omega;
            let m = ideal_ring(l, eps, omega).reluctance(t).unwrap();
            let err = (m.0 - published(l, eps, omega * t)).amax();
            prop_assert!(err < 1e-12 / l);
        }

        #[test]
        fn decoupled_basis_separates_even_and_odd(
            theta in 0.0..(2.0 * std::f64::consts::PI),
            eps in 0.0..=1.0f64,
        ) {
            let (l, omega) = (1e-9, 1e9);
            let t = theta / omega;
            let m = ideal_ring(l, eps, omega).reluctance(t).unwrap();
            let got = decoupled_reluctance(&m, t, omega);
            let j = J;
            let e = Complex64::new(eps, 0.0);
            let z = Complex64::new(0.0, 0.0);
            let r = |x: f64| Complex64::new(x, 0.0);
            // Even block (2/l)[[1,-1],[-1,1]] and the odd resonator block.
            let rows = [
                [r(2.0), z, z, z, e, j * e],
                [z, r(2.0), z, z, e, -j * e],
                [z, z, r(2.0), r(-2.0), z, z],
                [z, z, r(-2.0), r(2.0), z, z],
                [e, e, z, z, r(4.0), z],
                [-j * e, j * e, z, z, z, r(4.0)],
            ];
            let expect = CMatrix::from_fn(6, 6, |i, k| rows[i][k] / l);
            prop_assert!(max_abs_diff(&got, &expect) < 1e-12 / l);
        }

        #[test]
        fn transforms_preserve_norm_and_invert(
            a in prop::array::uniform4(-10.0..10.0f64),
            b in prop::array::uniform4(-10.0..10.0f64),
            t in 0.0..1e-6f64,
        ) {
            let vals: Vec<Complex64> = a.iter().zip(b).map(|(&x, y)| Complex64::new(x, y)).collect();
            let v = PortVector::new(Basis::Ports1234, vals.clone()).unwrap();
            let eo = even_odd_transform(&v).unwrap();
            prop_assert!((eo.norm() - v.norm()).abs() < 1e-12 * (1.0 + v.norm()));
            let back = even_odd_inverse(&eo).unwrap();
            for (x, y) in back.values().iter().zip(&vals) {
                prop_assert!((x - y).norm() < 1e-12 * (1.0 + v.norm()));
            }

            let qp = PortVector::new(Basis::Qp, vals[..2].to_vec()).unwrap();
            let rot = rotating_circular_transform(t, 6e8, &qp).unwrap();
            prop_assert!((rot.norm() - qp.norm()).abs() < 1e-12 * (1.0 + qp.norm()));
            let back = rotating_circular_inverse(t, 6e8, &rot).unwrap();
            for (x, y) in back.values().iter().zip(&vals[..2]) {
                prop_assert!((x - y).norm() < 1e-12 * (1.0 + qp.norm()));
            }
        }
    }
}
