mod support;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qvote_core::quantum::*;
use qvote_core::rng::seeded;
use support::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `I x .. x P x .. x I` with `p` acting on `qubit`, qubit 0 leftmost.
fn embed(p: &DMatrix<Complex64>, qubit: usize, n: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    (0..n).fold(DMatrix::identity(1, 1), |acc, q| {
        acc.kronecker(if q == qubit { p } else { &id })
    })
}

fn depolarize_oracle(rho: &DMatrix<Complex64>, qubit: usize, n: usize, p: f64) -> DMatrix<Complex64> {
    let x = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    let mut out = rho * c(1.0 - p, 0.0);
    for pauli in [x, y, z] {
        let k = embed(&pauli, qubit, n);
        out += &k * rho * &k * c(p / 3.0, 0.0);
    }
    out
}

fn random_state(n: usize, seed: u64) -> QuantumState {
    use rand::Rng;
    let mut rng = seeded(seed);
    let amps: Vec<Complex64> = (0..1 << n).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    QuantumState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

#[test]
fn born_rule_frequencies() {
    // cos^2(pi/8) on qubit 1 of a two-qubit state
    let mut base = QuantumState::zero(2).unwrap();
    base.apply_rx(1, std::f64::consts::FRAC_PI_4).unwrap();
    let p1 = base.probability(1, MeasBasis::Z, 1).unwrap();
    assert!((p1 - (std::f64::consts::PI / 8.0).sin().powi(2)).abs() < 1e-12);
    let mut rng = seeded(1);
    let ones = (0..10_000)
        .filter(|_| base.clone().measure(1, MeasBasis::Z, &mut rng).unwrap() == 1)
        .count();
    assert!(within_3sigma(ones as f64 / 1e4, p1, 10_000));
}

#[test]
fn aharonov_outcomes_are_uniform_permutations() {
    let perms: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let state = prepare_aharonov();
    let mut rng = seeded(7);
    let mut counts = [0usize; 6];
    for _ in 0..60_000 {
        let mut s = state.clone();
        let bits: Vec<u8> = (0..AHARONOV_QUBITS).map(|q| s.measure(q, MeasBasis::Z, &mut rng).unwrap()).collect();
        let trits: Vec<u8> = bits.chunks(2).map(|b| decode_trit(b[0], b[1]).unwrap()).collect();
        let idx = perms.iter().position(|p| p[..] == trits[..]).expect("outcome is a permutation");
        counts[idx] += 1;
    }
    let stat = chi_square_gof(&counts, &[1.0 / 6.0; 6]);
    assert!(stat < chi_square_quantile(5, 0.999), "{stat}");
}

#[test]
fn depolarize_matches_pauli_sum() {
    let n = 3;
    let rho = DensityMatrix::from_pure(&random_state(n, 3));
    for q in 0..n {
        for p in [0.0, 0.05, 0.3, 0.75, 1.0] {
            let lib = rho.depolarize(q, p).unwrap();
            let oracle = depolarize_oracle(rho.entries(), q, n, p);
            assert!((lib.entries() - oracle).norm() < 1e-12, "q={q} p={p}");
        }
    }
}

#[test]
fn mixed_state_fidelity_with_aharonov() {
    let a = DensityMatrix::from_pure(&prepare_aharonov());
    let mixed = DensityMatrix::maximally_mixed(6).unwrap();
    let f = DensityMatrix::fidelity(&mixed, &a).unwrap();
    assert!((f - 1.0 / 64.0).abs() < 1e-12);
    assert!((DensityMatrix::uhlmann(&mixed, &a) - 1.0 / 64.0).abs() < 1e-8);
}

#[test]
fn fidelity_routes_agree() {
    let a = DensityMatrix::from_pure(&prepare_aharonov());
    let mut rho = a.clone();
    for q in 0..6 {
        rho = rho.depolarize(q, 0.1).unwrap();
    }
    let fast = DensityMatrix::fidelity(&rho, &a).unwrap();
    let general = DensityMatrix::uhlmann(&rho, &a);
    assert!((fast - general).abs() < 1e-8, "{fast} vs {general}");
    let sigma = DensityMatrix::from_pure(&random_state(6, 9)).depolarize(2, 0.4).unwrap();
    let ab = DensityMatrix::fidelity(&rho, &sigma).unwrap();
    let ba = DensityMatrix::fidelity(&sigma, &rho).unwrap();
    assert!((ab - ba).abs() < 1e-8);
}

proptest! {
    #[test]
    fn rotations_and_swaps_preserve_norm(seed in any::<u64>(), theta in -7.0f64..7.0, q in 0usize..4, r in 0usize..4) {
        let mut s = random_state(4, seed);
        s.apply_rx(q, theta).unwrap();
        s.apply_swap(q, r).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarized_states_stay_valid(seed in any::<u64>(), p in 0.0f64..=1.0, q in 0usize..3) {
        let rho = DensityMatrix::from_pure(&random_state(3, seed)).depolarize(q, p).unwrap();
        prop_assert!(rho.validate().is_ok());
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
    }

    #[test]
    fn label_rotation_tracks_statevector(steps in 0u8..8) {
        for label in StateLabel::ALL {
            let theta = steps as f64 * std::f64::consts::FRAC_PI_2;
            let mut s = label.state();
            s.apply_rx(0, theta).unwrap();
            let expected = label_rotate(label, theta.rem_euclid(std::f64::consts::TAU)).unwrap();
            prop_assert!(s.equals_up_to_phase(&expected.state()));
        }
    }
}
