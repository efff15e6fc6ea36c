use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{QuantumError, EQ_TOL, MAX_QUBITS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Measurement basis. Outcome 0 is `|0>` in Z and `|+i>` in Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasBasis {
    Z,
    Y,
}

impl MeasBasis {
    pub fn other(self) -> Self {
        match self {
            MeasBasis::Z => MeasBasis::Y,
            MeasBasis::Y => MeasBasis::Z,
        }
    }
}

/// One of the four single-qubit preparation states used by balanced-uniform sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateLabel {
    /// `|0>`
    Z0,
    /// `|1>`
    Z1,
    /// `|+i> = (|0> + i|1>)/sqrt(2)`
    Yplus,
    /// `|-i> = (|0> - i|1>)/sqrt(2)`
    Yminus,
}

/// Order in which `R_X(pi/2)` walks the labels.
const ROTATION_CYCLE: [StateLabel; 4] = [
    StateLabel::Z0,
    StateLabel::Yminus,
    StateLabel::Z1,
    StateLabel::Yplus,
];

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::Z0,
        StateLabel::Z1,
        StateLabel::Yplus,
        StateLabel::Yminus,
    ];

    pub fn basis(self) -> MeasBasis {
        match self {
            StateLabel::Z0 | StateLabel::Z1 => MeasBasis::Z,
            StateLabel::Yplus | StateLabel::Yminus => MeasBasis::Y,
        }
    }

    /// Outcome obtained with certainty when measuring in [`Self::basis`].
    pub fn outcome(self) -> u8 {
        match self {
            StateLabel::Z0 | StateLabel::Yplus => 0,
            StateLabel::Z1 | StateLabel::Yminus => 1,
        }
    }

    pub fn from_measurement(basis: MeasBasis, outcome: u8) -> Self {
        match (basis, outcome) {
            (MeasBasis::Z, 0) => StateLabel::Z0,
            (MeasBasis::Z, _) => StateLabel::Z1,
            (MeasBasis::Y, 0) => StateLabel::Yplus,
            (MeasBasis::Y, _) => StateLabel::Yminus,
        }
    }

    /// Advance `steps` quarter turns of `R_X(pi/2)` (up to global phase).
    pub fn rotated(self, steps: u8) -> Self {
        let pos = ROTATION_CYCLE.iter().position(|&l| l == self).unwrap();
        ROTATION_CYCLE[(pos + steps as usize) % 4]
    }

    pub fn index(self) -> usize {
        match self {
            StateLabel::Z0 => 0,
            StateLabel::Z1 => 1,
            StateLabel::Yplus => 2,
            StateLabel::Yminus => 3,
        }
    }

    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            StateLabel::Z0 => [ONE, ZERO],
            StateLabel::Z1 => [ZERO, ONE],
            StateLabel::Yplus => [h, h * I],
            StateLabel::Yminus => [h, -h * I],
        }
    }

    pub fn state(self) -> QuantumState {
        QuantumState {
            num_qubits: 1,
            amplitudes: self.amplitudes().to_vec(),
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StateLabel::Z0 => "|0>",
            StateLabel::Z1 => "|1>",
            StateLabel::Yplus => "|+i>",
            StateLabel::Yminus => "|-i>",
        };
        f.write_str(s)
    }
}

/// Rotate a label by `theta`, which must be 0, pi/2, pi or 3pi/2.
pub fn label_rotate(label: StateLabel, theta: f64) -> Result<StateLabel, QuantumError> {
    Ok(label.rotated(quarter_turns(theta)?))
}

/// Number of quarter turns in `theta`, rejecting anything off the pi/2 grid.
pub(crate) fn quarter_turns(theta: f64) -> Result<u8, QuantumError> {
    if !theta.is_finite() || !(-EQ_TOL..2.0 * PI - EQ_TOL).contains(&theta) {
        return Err(QuantumError::NotQuarterTurn(theta));
    }
    let steps = (theta / FRAC_PI_2).round();
    if (steps * FRAC_PI_2 - theta).abs() > EQ_TOL {
        return Err(QuantumError::NotQuarterTurn(theta));
    }
    Ok(steps as u8)
}

/// Dense pure state of up to [`MAX_QUBITS`] qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, QuantumError> {
        if num_qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(num_qubits));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QuantumError::BadDimension(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(num_qubits));
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > EQ_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64, QuantumError> {
        if self.num_qubits != other.num_qubits {
            return Err(QuantumError::DimensionMismatch(
                self.num_qubits,
                other.num_qubits,
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// True when the two states differ at most by a global phase.
    pub fn equals_up_to_phase(&self, other: &QuantumState) -> bool {
        self.inner(other)
            .map(|o| (o.norm() - 1.0).abs() < EQ_TOL)
            .unwrap_or(false)
    }

    /// `self ⊗ other`; `self` supplies the leading qubits.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState, QuantumError> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n));
        }
        let mut amplitudes = Vec::with_capacity(1 << n);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(QuantumState {
            num_qubits: n,
            amplitudes,
        })
    }

    fn mask(&self, qubit: usize) -> Result<usize, QuantumError> {
        if qubit >= self.num_qubits {
            return Err(QuantumError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    /// Apply a 2x2 unitary `[[u00, u01], [u10, u11]]` to one qubit.
    pub fn apply_single(
        &mut self,
        qubit: usize,
        u: [[Complex64; 2]; 2],
    ) -> Result<(), QuantumError> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
            self.amplitudes[j] = u[1][0] * a0 + u[1][1] * a1;
        }
        Ok(())
    }

    /// `R_X(theta) = cos(theta/2) I - i sin(theta/2) X`.
    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<(), QuantumError> {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(theta / 2.0).sin());
        self.apply_single(qubit, [[c, s], [s, c]])
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<(), QuantumError> {
        self.apply_single(qubit, [[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<(), QuantumError> {
        let (ma, mb) = (self.mask(a)?, self.mask(b)?);
        if a == b {
            return Ok(());
        }
        for i in 0..self.amplitudes.len() {
            // visit each (10, 01) pair once from the side with a set
            if i & ma != 0 && i & mb == 0 {
                let j = (i & !ma) | mb;
                self.amplitudes.swap(i, j);
            }
        }
        Ok(())
    }

    /// Born-rule probability of `outcome` when measuring `qubit` in `basis`.
    pub fn probability(
        &self,
        qubit: usize,
        basis: MeasBasis,
        outcome: u8,
    ) -> Result<f64, QuantumError> {
        let mask = self.mask(qubit)?;
        let mut p = 0.0;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
            p += match basis {
                MeasBasis::Z if outcome == 0 => a0.norm_sqr(),
                MeasBasis::Z => a1.norm_sqr(),
                MeasBasis::Y => projection_coeff(a0, a1, outcome).norm_sqr(),
            };
        }
        Ok(p)
    }

    /// Projective measurement of one qubit; collapses `self` to the post-measurement state.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<u8, QuantumError> {
        let p0 = self.probability(qubit, basis, 0)?;
        let outcome = if rng.gen::<f64>() < p0 { 0 } else { 1 };
        let p = if outcome == 0 { p0 } else { 1.0 - p0 };
        self.collapse(qubit, basis, outcome, p);
        Ok(outcome)
    }

    fn collapse(&mut self, qubit: usize, basis: MeasBasis, outcome: u8, p: f64) {
        let mask = 1 << (self.num_qubits - 1 - qubit);
        let scale = 1.0 / p.max(f64::MIN_POSITIVE).sqrt();
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            let (n0, n1) = match basis {
                MeasBasis::Z if outcome == 0 => (a0, ZERO),
                MeasBasis::Z => (ZERO, a1),
                MeasBasis::Y => {
                    let eig = StateLabel::from_measurement(MeasBasis::Y, outcome).amplitudes();
                    let c = projection_coeff(a0, a1, outcome);
                    (c * eig[0], c * eig[1])
                }
            };
            self.amplitudes[i] = n0 * scale;
            self.amplitudes[j] = n1 * scale;
        }
    }
}

/// `<e|a>` where `e` is the Y eigenstate for `outcome` and `a = (a0, a1)`.
fn projection_coeff(a0: Complex64, a1: Complex64, outcome: u8) -> Complex64 {
    let e = StateLabel::from_measurement(MeasBasis::Y, outcome).amplitudes();
    e[0].conj() * a0 + e[1].conj() * a1
}
