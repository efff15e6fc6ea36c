use rand::Rng;

use super::{MeasBasis, QuantumError, QuantumState, StateLabel, EQ_TOL};

/// Exchange the contents of two disjoint qubit registers inside one joint state.
///
/// `src[i]` is swapped with `dst[i]` for every `i`.
pub fn swap_transfer(
    state: &mut QuantumState,
    src: &[usize],
    dst: &[usize],
) -> Result<(), QuantumError> {
    if src.len() != dst.len() {
        return Err(QuantumError::LengthMismatch(src.len(), dst.len()));
    }
    if let Some(&q) = src.iter().find(|q| dst.contains(q)) {
        return Err(QuantumError::OverlappingRegisters(q));
    }
    for (&a, &b) in src.iter().zip(dst) {
        state.apply_swap(a, b)?;
    }
    Ok(())
}

/// A register of unentangled qubits, stored one factor per qubit.
///
/// Every commitment-phase register is a product state, so keeping factors
/// separate lets sequences far longer than [`super::MAX_QUBITS`] be simulated
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductRegister {
    qubits: Vec<QuantumState>,
}

impl ProductRegister {
    pub fn from_labels(labels: &[StateLabel]) -> Self {
        Self {
            qubits: labels.iter().map(|l| l.state()).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_labels(&vec![StateLabel::Z0; len])
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn qubit(&self, i: usize) -> &QuantumState {
        &self.qubits[i]
    }

    fn check(&self, i: usize) -> Result<(), QuantumError> {
        if i >= self.qubits.len() {
            return Err(QuantumError::QubitOutOfRange {
                index: i,
                num_qubits: self.qubits.len(),
            });
        }
        Ok(())
    }

    pub fn apply_rx(&mut self, i: usize, theta: f64) -> Result<(), QuantumError> {
        self.check(i)?;
        self.qubits[i].apply_rx(0, theta)
    }

    pub fn apply_rx_all(&mut self, theta: f64) {
        for q in &mut self.qubits {
            q.apply_rx(0, theta).expect("single-qubit factor");
        }
    }

    /// SWAP gate between two positions of the register.
    pub fn swap(&mut self, a: usize, b: usize) -> Result<(), QuantumError> {
        self.check(a)?;
        self.check(b)?;
        self.qubits.swap(a, b);
        Ok(())
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<u8, QuantumError> {
        self.check(i)?;
        self.qubits[i].measure(0, basis, rng)
    }

    /// Move every qubit into a fresh register by a SWAP against a `|0>` ancilla.
    ///
    /// Afterwards `self` holds only `|0>` qubits.
    pub fn transfer_out(&mut self) -> Result<ProductRegister, QuantumError> {
        let mut moved = Vec::with_capacity(self.qubits.len());
        for q in &mut self.qubits {
            let mut joint = q.tensor(&QuantumState::zero(1)?)?;
            swap_transfer(&mut joint, &[0], &[1])?;
            let (src, dst) = split_pair(&joint)?;
            *q = src;
            moved.push(dst);
        }
        Ok(ProductRegister { qubits: moved })
    }
}

/// Split a separable two-qubit state into its factors.
fn split_pair(joint: &QuantumState) -> Result<(QuantumState, QuantumState), QuantumError> {
    let a = joint.amplitudes();
    // pick the dominant row to read the second factor from
    let row = if a[0].norm_sqr() + a[1].norm_sqr() >= a[2].norm_sqr() + a[3].norm_sqr() {
        0
    } else {
        2
    };
    let rn = (a[row].norm_sqr() + a[row + 1].norm_sqr()).sqrt();
    let second = vec![a[row] / rn, a[row + 1] / rn];
    let col = if second[0].norm_sqr() >= second[1].norm_sqr() { 0 } else { 1 };
    let first = vec![a[col] / second[col], a[2 + col] / second[col]];
    let first = QuantumState::from_amplitudes(first)?;
    let second = QuantumState::from_amplitudes(second)?;
    let rebuilt = first.tensor(&second)?;
    if !rebuilt.equals_up_to_phase(joint) {
        return Err(QuantumError::Entangled);
    }
    debug_assert!((rebuilt.norm_sqr() - 1.0).abs() < EQ_TOL);
    Ok((first, second))
}
