//! Dense state-vector engine.
//!
//! A [`StateVector`] over `n` qubits stores `2^n` complex amplitudes. Basis
//! index bits are read left to right: qubit 0 is the most significant bit, so
//! the ket `|100⟩` is index 4 and particle order matches the order in which
//! kets are written.
//!
//! Everything here is a pure function of its inputs. Measurement takes the
//! random stream explicitly and returns the collapsed state alongside the
//! outcome; unmeasured qubits stay in the same global vector.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::{bell_state, ghz_state, BellLabel, GhzLabel};
use crate::error::StateError;
use crate::rng::StreamRng;

/// Tolerance for exact-algebra checks.
pub const AMP_TOL: f64 = 1e-9;
/// Largest register the engine will build.
pub const MAX_QUBITS: usize = 8;
/// Probabilities at or below this are treated as exact zeros.
pub const PROB_EPS: f64 = 1e-12;

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state for a string of `0`/`1` characters.
    pub fn basis(bits: &str) -> Result<Self, StateError> {
        if bits.is_empty() {
            return Err(StateError::EmptyBits);
        }
        let mut index = 0usize;
        for ch in bits.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                other => return Err(StateError::InvalidBit(other)),
            }
        }
        let n = bits.len();
        if n > MAX_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Self { num_qubits: n, amps })
    }

    /// Builds a state from raw amplitudes; the vector must be normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(StateError::BadLength { got: len });
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(StateError::TooManyQubits(num_qubits));
        }
        let s = Self { num_qubits, amps };
        let n2 = s.norm_sqr();
        if !n2.is_finite() || (n2 - 1.0).abs() > AMP_TOL {
            return Err(StateError::NotNormalized(n2));
        }
        Ok(s)
    }

    /// Like [`from_amplitudes`](Self::from_amplitudes) for real coefficients.
    pub fn from_real(amps: &[f64]) -> Result<Self, StateError> {
        Self::from_amplitudes(amps.iter().map(|&x| c(x)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::SizeMismatch(self.num_qubits, other.num_qubits));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, factor: Complex64) -> StateVector {
        StateVector {
            num_qubits: self.num_qubits,
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Kronecker product with `self`'s qubits first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, StateError> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(StateError::TooManyQubits(n));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    /// Appends a fresh `|0⟩` qubit at the end of the register.
    pub fn with_ancilla(&self) -> Result<StateVector, StateError> {
        self.tensor(&StateVector::basis("0")?)
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.num_qubits {
            return Err(StateError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), StateError> {
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(StateError::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    fn bit_mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    pub fn apply_single(&self, op: SingleQubitOp, q: usize) -> Result<StateVector, StateError> {
        self.apply_matrix(&op.matrix(), q)
    }

    /// Applies an arbitrary 2x2 matrix to qubit `q`.
    pub fn apply_matrix(&self, m: &Matrix2, q: usize) -> Result<StateVector, StateError> {
        self.check_qubit(q)?;
        let mask = self.bit_mask(q);
        let mut out = self.amps.clone();
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | mask];
            out[i] = m[0][0] * a0 + m[0][1] * a1;
            out[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        })
    }

    /// Applies a 4x4 matrix to the ordered pair `(q1, q2)`; `q1` is the high
    /// bit of the matrix index.
    pub fn apply_two(&self, m: &Matrix4, q1: usize, q2: usize) -> Result<StateVector, StateError> {
        self.check_qubits(&[q1, q2])?;
        let m1 = self.bit_mask(q1);
        let m2 = self.bit_mask(q2);
        let mut out = self.amps.clone();
        for i in 0..self.amps.len() {
            if i & (m1 | m2) != 0 {
                continue;
            }
            let idx = [i, i | m2, i | m1, i | m1 | m2];
            let v = idx.map(|j| self.amps[j]);
            for (row, &j) in idx.iter().enumerate() {
                out[j] = (0..4).map(|col| m[row][col] * v[col]).sum();
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        })
    }

    /// Splits basis index `i` into (subsystem index over `qubits`, rest index).
    fn split_index(&self, i: usize, qubits: &[usize]) -> (usize, usize) {
        let mut sub = 0;
        for &q in qubits {
            sub = (sub << 1) | usize::from(i & self.bit_mask(q) != 0);
        }
        let mut rest = 0;
        for q in 0..self.num_qubits {
            if !qubits.contains(&q) {
                rest = (rest << 1) | usize::from(i & self.bit_mask(q) != 0);
            }
        }
        (sub, rest)
    }

    /// Overlap of the measured subsystem with `v`, as a vector over the
    /// remaining qubits.
    fn project(&self, v: &[Complex64], qubits: &[usize]) -> Vec<Complex64> {
        let mut rest_amps = vec![ZERO; 1 << (self.num_qubits - qubits.len())];
        for (i, a) in self.amps.iter().enumerate() {
            let (sub, rest) = self.split_index(i, qubits);
            rest_amps[rest] += v[sub].conj() * a;
        }
        rest_amps
    }

    fn validate_measurement(&self, basis: MeasBasis, qubits: &[usize]) -> Result<(), StateError> {
        if qubits.len() != basis.arity() {
            return Err(StateError::ArityMismatch {
                expected: basis.arity(),
                got: qubits.len(),
            });
        }
        self.check_qubits(qubits)
    }

    /// Exact Born-rule distribution of measuring `qubits` in `basis`.
    pub fn born_distribution(
        &self,
        basis: MeasBasis,
        qubits: &[usize],
    ) -> Result<BTreeMap<Outcome, f64>, StateError> {
        self.validate_measurement(basis, qubits)?;
        Ok(basis
            .vectors()
            .into_iter()
            .map(|(outcome, v)| {
                let p = self.project(&v, qubits).iter().map(|a| a.norm_sqr()).sum();
                (outcome, p)
            })
            .collect())
    }

    /// Samples one outcome and returns it with the renormalized post-measurement
    /// state. Consumes exactly one uniform draw from `rng`.
    pub fn measure(
        &self,
        basis: MeasBasis,
        qubits: &[usize],
        rng: &mut StreamRng,
    ) -> Result<(Outcome, StateVector), StateError> {
        let dist = self.born_distribution(basis, qubits)?;
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut chosen = None;
        // walk in basis order so the draw-to-outcome map is stable
        for (outcome, _) in basis.vectors() {
            let p = dist[&outcome];
            if p <= PROB_EPS {
                continue;
            }
            acc += p;
            chosen = Some(outcome);
            if u < acc {
                break;
            }
        }
        let outcome = chosen.ok_or(StateError::NotNormalized(0.0))?;
        let (_, post) = self.collapse_onto(basis, qubits, outcome)?;
        Ok((outcome, post.ok_or(StateError::NotNormalized(0.0))?))
    }

    /// Projects onto a specific outcome. Returns its probability and, when
    /// that probability is nonzero, the renormalized post-measurement state.
    pub fn collapse_onto(
        &self,
        basis: MeasBasis,
        qubits: &[usize],
        outcome: Outcome,
    ) -> Result<(f64, Option<StateVector>), StateError> {
        self.validate_measurement(basis, qubits)?;
        let Some((_, v)) = basis.vectors().into_iter().find(|(o, _)| *o == outcome) else {
            return Ok((0.0, None));
        };
        let rest = self.project(&v, qubits);
        let p: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
        if p <= PROB_EPS {
            return Ok((p, None));
        }
        let scale = 1.0 / p.sqrt();
        let mut amps = vec![ZERO; self.amps.len()];
        for (i, a) in amps.iter_mut().enumerate() {
            let (sub, r) = self.split_index(i, qubits);
            *a = v[sub] * rest[r] * scale;
        }
        Ok((
            p,
            Some(StateVector {
                num_qubits: self.num_qubits,
                amps,
            }),
        ))
    }

    /// Exact joint distribution of a sequence of measurements on disjoint
    /// qubit sets, in the given order. Only outcome tuples with probability
    /// above `PROB_EPS` are returned.
    pub fn joint_distribution(
        &self,
        steps: &[(MeasBasis, &[usize])],
    ) -> Result<Vec<(Vec<Outcome>, f64)>, StateError> {
        let mut out = Vec::new();
        self.joint_rec(steps, 1.0, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    fn joint_rec(
        &self,
        steps: &[(MeasBasis, &[usize])],
        weight: f64,
        prefix: &mut Vec<Outcome>,
        out: &mut Vec<(Vec<Outcome>, f64)>,
    ) -> Result<(), StateError> {
        let Some(((basis, qubits), tail)) = steps.split_first() else {
            out.push((prefix.clone(), weight));
            return Ok(());
        };
        for (outcome, _) in basis.vectors() {
            let (p, post) = self.collapse_onto(*basis, qubits, outcome)?;
            if let Some(post) = post {
                prefix.push(outcome);
                post.joint_rec(tail, weight * p, prefix, out)?;
                prefix.pop();
            }
        }
        Ok(())
    }

    /// True iff some unit-modulus `c` gives `‖self − c·other‖ ≤ tol`.
    pub fn equal_up_to_global_phase(&self, other: &StateVector, tol: f64) -> bool {
        let Ok(overlap) = other.inner(self) else {
            return false;
        };
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        let dist: f64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - phase * b).norm_sqr())
            .sum();
        dist.sqrt() <= tol
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < AMP_TOL {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(
                f,
                "({:.4}{:+.4}i)|{:0width$b}⟩",
                a.re,
                a.im,
                i,
                width = self.num_qubits
            )?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// The four single-particle operations used for encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingleQubitOp {
    /// `|0⟩⟨0| + |1⟩⟨1|`
    I,
    /// `|0⟩⟨1| + |1⟩⟨0|`
    SX,
    /// `|0⟩⟨1| − |1⟩⟨0|`
    ISY,
    /// `|0⟩⟨0| − |1⟩⟨1|`
    SZ,
}

impl SingleQubitOp {
    pub const ALL: [SingleQubitOp; 4] = [Self::I, Self::SX, Self::ISY, Self::SZ];

    pub fn matrix(self) -> Matrix2 {
        match self {
            Self::I => [[ONE, ZERO], [ZERO, ONE]],
            Self::SX => [[ZERO, ONE], [ONE, ZERO]],
            Self::ISY => [[ZERO, ONE], [-ONE, ZERO]],
            Self::SZ => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::SX => "σx",
            Self::ISY => "iσy",
            Self::SZ => "σz",
        }
    }
}

pub fn hadamard() -> Matrix2 {
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    [[h, h], [h, -h]]
}

/// A unitary whose first column is `(a, b)`: maps `|0⟩` to `a|0⟩ + b|1⟩`.
pub fn preparation_unitary(a: Complex64, b: Complex64) -> Matrix2 {
    [[a, -b.conj()], [b, a.conj()]]
}

pub fn matmul2(x: &Matrix2, y: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..2).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    out
}

pub fn adjoint2(m: &Matrix2) -> Matrix2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

/// Largest entrywise deviation of `M†M` from the identity.
pub fn unitarity_defect4(m: &Matrix4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let v: Complex64 = (0..4).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Label of a measurement outcome: a bit for Z, a sign for X, or a basis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Bit(u8),
    Sign(Sign),
    Bell(BellLabel),
    Ghz(GhzLabel),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Bit(b) => write!(f, "{b}"),
            Outcome::Sign(s) => write!(f, "{s}"),
            Outcome::Bell(l) => write!(f, "{l}"),
            Outcome::Ghz(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    Z,
    X,
    Bell,
    Ghz,
}

impl MeasBasis {
    pub fn arity(self) -> usize {
        match self {
            MeasBasis::Z | MeasBasis::X => 1,
            MeasBasis::Bell => 2,
            MeasBasis::Ghz => 3,
        }
    }

    /// Orthonormal basis vectors over the measured subsystem, with labels.
    pub fn vectors(self) -> Vec<(Outcome, Vec<Complex64>)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            MeasBasis::Z => vec![
                (Outcome::Bit(0), vec![ONE, ZERO]),
                (Outcome::Bit(1), vec![ZERO, ONE]),
            ],
            MeasBasis::X => vec![
                (Outcome::Sign(Sign::Plus), vec![c(h), c(h)]),
                (Outcome::Sign(Sign::Minus), vec![c(h), c(-h)]),
            ],
            MeasBasis::Bell => BellLabel::ALL
                .iter()
                .map(|&l| (Outcome::Bell(l), bell_state(l).amps))
                .collect(),
            MeasBasis::Ghz => GhzLabel::ALL
                .iter()
                .map(|&l| (Outcome::Ghz(l), ghz_state(l).amps))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::GhzLabel;
    use proptest::prelude::*;

    fn plus() -> StateVector {
        StateVector::basis("0")
            .unwrap()
            .apply_matrix(&hadamard(), 0)
            .unwrap()
    }

    fn psi0_pair() -> StateVector {
        let g = ghz_state(GhzLabel::new(0).unwrap());
        g.tensor(&g).unwrap()
    }

    #[test]
    fn basis_states_index_convention() {
        assert_eq!(StateVector::basis("000").unwrap().amp(0), ONE);
        assert_eq!(StateVector::basis("1").unwrap().amp(1), ONE);
        let s = StateVector::basis("10").unwrap();
        assert_eq!(s.amp(2), ONE);
        assert_eq!(s.norm_sqr(), 1.0);
        assert_eq!(StateVector::basis(""), Err(StateError::EmptyBits));
        assert_eq!(StateVector::basis("012"), Err(StateError::InvalidBit('2')));
    }

    #[test]
    fn tensor_orders_left_operand_first() {
        let s = StateVector::basis("0")
            .unwrap()
            .tensor(&StateVector::basis("1").unwrap())
            .unwrap();
        assert_eq!(s, StateVector::basis("01").unwrap());
    }

    #[test]
    fn tensor_of_two_ghz_states() {
        let s = psi0_pair();
        assert_eq!(s.num_qubits(), 6);
        for (i, a) in s.amplitudes().iter().enumerate() {
            let expected = if [0b000000, 0b000111, 0b111000, 0b111111].contains(&i) {
                0.5
            } else {
                0.0
            };
            assert!((a - c(expected)).norm() < 1e-12, "index {i:06b}");
        }
    }

    #[test]
    fn single_qubit_ops_on_zero() {
        let zero = StateVector::basis("0").unwrap();
        let one = StateVector::basis("1").unwrap();
        assert_eq!(zero.apply_single(SingleQubitOp::SX, 0).unwrap(), one);
        assert_eq!(
            zero.apply_single(SingleQubitOp::ISY, 0).unwrap(),
            one.scaled(-ONE)
        );
        assert!(matches!(
            zero.apply_single(SingleQubitOp::SZ, 1),
            Err(StateError::QubitOutOfRange { qubit: 1, num_qubits: 1 })
        ));
    }

    #[test]
    fn double_sigma_z_fixes_psi0_exactly() {
        let g = ghz_state(GhzLabel::new(0).unwrap());
        let out = g
            .apply_single(SingleQubitOp::SZ, 0)
            .unwrap()
            .apply_single(SingleQubitOp::SZ, 1)
            .unwrap();
        for (a, b) in out.amplitudes().iter().zip(g.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn op_matrices_unitary_and_identities() {
        for op in SingleQubitOp::ALL {
            let m = op.matrix();
            let prod = matmul2(&adjoint2(&m), &m);
            assert!((prod[0][0] - ONE).norm() < 1e-12 && (prod[1][1] - ONE).norm() < 1e-12);
            assert!(prod[0][1].norm() < 1e-12 && prod[1][0].norm() < 1e-12);
            assert!(m.iter().flatten().all(|x| x.im == 0.0));
        }
        let isy = SingleQubitOp::ISY.matrix();
        let sq = matmul2(&isy, &isy);
        assert_eq!(sq, [[-ONE, ZERO], [ZERO, -ONE]]);
        // σx σz = −iσy
        let xz = matmul2(&SingleQubitOp::SX.matrix(), &SingleQubitOp::SZ.matrix());
        for i in 0..2 {
            for j in 0..2 {
                assert!((xz[i][j] + isy[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn born_z_on_plus() {
        let d = plus().born_distribution(MeasBasis::Z, &[0]).unwrap();
        assert!((d[&Outcome::Bit(0)] - 0.5).abs() < 1e-12);
        assert!((d[&Outcome::Bit(1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn born_ghz_eigenstate() {
        let l = GhzLabel::new(3).unwrap();
        let d = ghz_state(l)
            .born_distribution(MeasBasis::Ghz, &[0, 1, 2])
            .unwrap();
        assert!((d[&Outcome::Ghz(l)] - 1.0).abs() < 1e-12);
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_bell_on_psi0_pair_is_uniform_over_eight() {
        // qubits: A1 B1 C1 A2 B2 C2
        let joint = psi0_pair()
            .joint_distribution(&[
                (MeasBasis::Bell, &[0, 3]),
                (MeasBasis::Bell, &[1, 4]),
                (MeasBasis::Bell, &[2, 5]),
            ])
            .unwrap();
        assert_eq!(joint.len(), 8);
        for (_, p) in joint {
            assert!((p - 0.125).abs() < 1e-9);
        }
    }

    #[test]
    fn collapse_onto_matches_born_rule() {
        let s = psi0_pair().apply_matrix(&hadamard(), 2).unwrap();
        let d = s.born_distribution(MeasBasis::Bell, &[2, 5]).unwrap();
        for (o, p) in d {
            let (q, post) = s.collapse_onto(MeasBasis::Bell, &[2, 5], o).unwrap();
            assert!((p - q).abs() < 1e-12);
            assert_eq!(post.is_some(), p > PROB_EPS);
        }
    }

    #[test]
    fn arity_and_duplicate_errors() {
        let g = psi0_pair();
        assert_eq!(
            g.born_distribution(MeasBasis::Bell, &[0]).unwrap_err(),
            StateError::ArityMismatch { expected: 2, got: 1 }
        );
        assert_eq!(
            g.born_distribution(MeasBasis::Bell, &[1, 1]).unwrap_err(),
            StateError::DuplicateQubit(1)
        );
    }

    #[test]
    fn measure_eigenstates() {
        let mut rng = StreamRng::new(3, 0);
        let one = StateVector::basis("1").unwrap();
        for _ in 0..20 {
            let (o, post) = one.measure(MeasBasis::Z, &[0], &mut rng).unwrap();
            assert_eq!(o, Outcome::Bit(1));
            assert_eq!(post, one);
        }
        let l = GhzLabel::new(5).unwrap();
        let (o, post) = ghz_state(l)
            .measure(MeasBasis::Ghz, &[0, 1, 2], &mut rng)
            .unwrap();
        assert_eq!(o, Outcome::Ghz(l));
        assert!(post.equal_up_to_global_phase(&ghz_state(l), 1e-12));
    }

    #[test]
    fn repeated_measurement_is_stable() {
        let mut rng = StreamRng::new(9, 0);
        let s = psi0_pair();
        for _ in 0..50 {
            let (o1, post) = s.measure(MeasBasis::Bell, &[1, 4], &mut rng).unwrap();
            let d = post.born_distribution(MeasBasis::Bell, &[1, 4]).unwrap();
            assert!((d[&o1] - 1.0).abs() < 1e-9);
            let (o2, _) = post.measure(MeasBasis::Bell, &[1, 4], &mut rng).unwrap();
            assert_eq!(o1, o2);
        }
    }

    #[test]
    fn sampled_frequencies_match_born_rule() {
        let s = psi0_pair()
            .apply_single(SingleQubitOp::SX, 2)
            .unwrap()
            .apply_matrix(&hadamard(), 4)
            .unwrap();
        let exact = s.born_distribution(MeasBasis::Bell, &[0, 4]).unwrap();
        let trials = 100_000u64;
        let mut counts: BTreeMap<Outcome, u64> = BTreeMap::new();
        for t in 0..trials {
            let mut rng = StreamRng::new(2024, t);
            let (o, _) = s.measure(MeasBasis::Bell, &[0, 4], &mut rng).unwrap();
            *counts.entry(o).or_default() += 1;
        }
        for (o, p) in exact {
            let f = *counts.get(&o).unwrap_or(&0) as f64 / trials as f64;
            assert!((f - p).abs() < 0.01, "{o}: {f} vs {p}");
        }
    }

    #[test]
    fn global_phase_equality() {
        let p2 = ghz_state(GhzLabel::new(2).unwrap());
        let p3 = ghz_state(GhzLabel::new(3).unwrap());
        assert!(p2.equal_up_to_global_phase(&p2.scaled(-ONE), 1e-9));
        assert!(p2.equal_up_to_global_phase(&p2.scaled(Complex64::new(0.0, 1.0)), 1e-9));
        assert!(!p2.equal_up_to_global_phase(&p3, 1e-9));
    }

    #[test]
    fn bell_and_ghz_bases_resolve_identity() {
        for basis in [MeasBasis::Z, MeasBasis::X, MeasBasis::Bell, MeasBasis::Ghz] {
            let vs = basis.vectors();
            let d = 1 << basis.arity();
            assert_eq!(vs.len(), d);
            for i in 0..d {
                for j in 0..d {
                    let sum: Complex64 = vs.iter().map(|(_, v)| v[i] * v[j].conj()).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((sum - c(target)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn two_qubit_gate_matches_kronecker() {
        // σx ⊗ σz as a 4x4 matrix must agree with two single-qubit applications
        let x = SingleQubitOp::SX.matrix();
        let z = SingleQubitOp::SZ.matrix();
        let mut m = [[ZERO; 4]; 4];
        for r in 0..4 {
            for col in 0..4 {
                m[r][col] = x[r >> 1][col >> 1] * z[r & 1][col & 1];
            }
        }
        let s = psi0_pair().apply_matrix(&hadamard(), 3).unwrap();
        let a = s.apply_two(&m, 4, 1).unwrap();
        let b = s
            .apply_single(SingleQubitOp::SX, 4)
            .unwrap()
            .apply_single(SingleQubitOp::SZ, 1)
            .unwrap();
        assert!(a.equal_up_to_global_phase(&b, 1e-12));
        assert!((a.inner(&b).unwrap() - ONE).norm() < 1e-12);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
            "nonzero",
            |v| {
                let amps: Vec<Complex64> = v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect();
                let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                (norm > 1e-3)
                    .then(|| StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn ops_preserve_norm(s in arb_state(4), q in 0usize..4, k in 0usize..4) {
            let out = s.apply_single(SingleQubitOp::ALL[k], q).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn distributions_sum_to_one(s in arb_state(4), a in 0usize..4, b in 0usize..4, c3 in 0usize..4) {
            prop_assume!(a != b && b != c3 && a != c3);
            for (basis, qs) in [
                (MeasBasis::Z, vec![a]),
                (MeasBasis::X, vec![b]),
                (MeasBasis::Bell, vec![a, b]),
                (MeasBasis::Ghz, vec![a, b, c3]),
            ] {
                let d = s.born_distribution(basis, &qs).unwrap();
                prop_assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(d.values().all(|&p| p >= 0.0));
            }
        }

        #[test]
        fn measurement_is_seed_deterministic(s in arb_state(3), seed in any::<u64>()) {
            let mut r1 = StreamRng::new(seed, 5);
            let mut r2 = StreamRng::new(seed, 5);
            let (o1, p1) = s.measure(MeasBasis::Ghz, &[2, 0, 1], &mut r1).unwrap();
            let (o2, p2) = s.measure(MeasBasis::Ghz, &[2, 0, 1], &mut r2).unwrap();
            prop_assert_eq!(o1, o2);
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn tensor_is_normalized(a in arb_state(2), b in arb_state(3)) {
            prop_assert!((a.tensor(&b).unwrap().norm_sqr() - 1.0).abs() < 1e-9);
        }
    }
}
