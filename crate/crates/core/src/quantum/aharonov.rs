use num_complex::Complex64;

use super::QuantumState;

/// Qubits in the binary encoding of the three-qutrit Aharonov state.
pub const AHARONOV_QUBITS: usize = 6;

/// Two-bit encoding of a trit: 0 -> 00, 1 -> 01, 2 -> 10.
pub fn encode_trit(trit: u8) -> usize {
    debug_assert!(trit < 3);
    trit as usize
}

/// Inverse of [`encode_trit`]; `11` is not a trit.
pub fn decode_trit(hi: u8, lo: u8) -> Option<u8> {
    match (hi, lo) {
        (0, 0) => Some(0),
        (0, 1) => Some(1),
        (1, 0) => Some(2),
        _ => None,
    }
}

/// `|A> = (|012> + |120> + |201> - |021> - |102> - |210>)/sqrt(6)`,
/// with miner 1 on qubits 0-1, miner 2 on 2-3 and miner 3 on 4-5.
pub fn prepare_aharonov() -> QuantumState {
    let amp = 1.0 / 6f64.sqrt();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << AHARONOV_QUBITS];
    let terms: [([u8; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([2, 1, 0], -1.0),
    ];
    for ([a, b, c], sign) in terms {
        let index = (encode_trit(a) << 4) | (encode_trit(b) << 2) | encode_trit(c);
        amplitudes[index] = Complex64::new(sign * amp, 0.0);
    }
    QuantumState::from_amplitudes(amplitudes).expect("Aharonov state is normalized")
}
