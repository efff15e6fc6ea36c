mod support;

use qvote_core::qba::*;
use qvote_core::rng::{seeded, trial_rng};
use rand::Rng;
use support::*;

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

fn binom_pmf(n: usize, k: usize, p: f64) -> f64 {
    choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// A complicit first receiver offers every index where it holds the leader's bit.
/// There are Binomial(T, 1/3) of them and each is valid with probability 1/2.
fn forged_convince_rate(t: usize, lambda: f64) -> f64 {
    (1..=t)
        .map(|j| {
            let need = (lambda * j as f64 - 1e-12).ceil() as usize;
            let pass: f64 = (need..=j).map(|v| binom_pmf(j, v, 0.5)).sum();
            binom_pmf(t, j, 1.0 / 3.0) * pass
        })
        .sum()
}

#[test]
fn leader_attack_matches_closed_form() {
    let copies: Vec<usize> = (1..=50).collect();
    let rows = estimate_success(&copies, 0.9, AdversaryModel::Leader, 500, CopySource::Ideal, &mut seeded(2)).unwrap();
    for row in &rows {
        let expected = 1.0 - (5.0f64 / 6.0).powi(row.copies as i32);
        let k = (row.p_successful * row.trials as f64).round() as usize;
        assert!(binomial_3sigma(k, row.trials, expected), "T={}: {} vs {expected}", row.copies, row.p_successful);
        assert_eq!(row.p_detectable, 1.0);
    }
}

#[test]
fn leader_attack_at_thirty_copies() {
    let rows = estimate_success(&[30], 0.9, AdversaryModel::Leader, 10_000, CopySource::Ideal, &mut seeded(2)).unwrap();
    let expected = 1.0 - (5.0f64 / 6.0).powi(30);
    assert!((expected - 0.9958).abs() < 1e-4);
    assert!(within_3sigma(rows[0].p_successful, expected, 10_000));
}

#[test]
fn forged_convince_matches_oracle() {
    let mut rng = seeded(3);
    for t in [1, 3, 6, 12] {
        let trials = 20_000;
        let fooled = (0..trials)
            .filter(|_| {
                let batch = sample_copies(t, &mut rng, CopySource::Ideal);
                let x = rng.gen_range(0..=1);
                let out = run_broadcast_with(x, &batch, Complicit::Receiver1, ReceiverForgery::OwnTrits, 0.9).unwrap();
                !out.honest_agreement()
            })
            .count();
        let expected = forged_convince_rate(t, 0.9);
        assert!(within_3sigma(fooled as f64 / trials as f64, expected, trials), "T={t}");
    }
    assert!(forged_convince_rate(30, 0.9) < 0.01);
}

#[test]
fn statevector_and_ideal_copies_agree() {
    let perm_index = |t: [u8; 3]| (t[0] * 2 + u8::from(t[1] > t[2])) as usize;
    let mut table = vec![vec![0usize; 6]; 2];
    for (row, source) in [CopySource::Ideal, CopySource::Statevector].into_iter().enumerate() {
        for t in sample_copies(10_000, &mut seeded(4 + row as u64), source).trits {
            table[row][perm_index(t)] += 1;
        }
    }
    let (stat, df) = chi_square_homogeneity(&table);
    assert_eq!(df, 5);
    assert!(stat < chi_square_quantile(5, 0.999), "{stat}");
}

#[test]
fn no_successful_round_splits_honest_receivers() {
    let models = [AdversaryModel::Gamma(0), AdversaryModel::Leader, AdversaryModel::Receiver];
    let forgeries = [ReceiverForgery::Invalid, ReceiverForgery::OwnTrits];
    let mut violations = 0;
    for i in 0..100_000u32 {
        let mut rng = trial_rng(5, 0, i);
        let model = models[i as usize % 3];
        let t = rng.gen_range(0..=40);
        let leader = rng.gen_range(0..3);
        let complicit = model.resolve(leader, &mut rng);
        let batch = sample_copies(t, &mut rng, CopySource::Ideal);
        let forgery = forgeries[(i as usize / 3) % 2];
        let out = run_broadcast_with(rng.gen_range(0..=1), &batch, complicit, forgery, 0.9).unwrap();
        if forgery == ReceiverForgery::Invalid {
            assert!(out.honest_agreement() || out.kind == BroadcastKind::Detectable);
        }
        if !out.is_safe() {
            violations += 1;
        }
        if complicit == Complicit::Leader && out.kind == BroadcastKind::Successful {
            assert_eq!(out.receivers[0].final_bit, out.receivers[1].final_bit);
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn honest_curve_is_flat_at_one() {
    let rows = estimate_success(&[0, 1, 10], 0.9, AdversaryModel::Honest, 200, CopySource::Ideal, &mut seeded(6)).unwrap();
    assert!(rows.iter().all(|r| r.p_successful == 1.0 && r.p_detectable == 1.0));
}

#[test]
fn curves_rise_with_copies() {
    let copies: Vec<usize> = (1..=40).step_by(3).collect();
    for gamma in [0, 1] {
        let rows = estimate_success(&copies, 0.9, AdversaryModel::Gamma(gamma), 2000, CopySource::Ideal, &mut seeded(7)).unwrap();
        for w in rows.windows(2) {
            let band = 3.0 * (w[0].stderr_successful.powi(2) + w[1].stderr_successful.powi(2)).sqrt();
            assert!(w[1].p_successful + band.max(1e-3) >= w[0].p_successful, "gamma={gamma} T={}", w[1].copies);
            let band = 3.0 * (w[0].stderr_detectable.powi(2) + w[1].stderr_detectable.powi(2)).sqrt();
            assert!(w[1].p_detectable + band.max(1e-3) >= w[0].p_detectable);
        }
        let last = rows.last().unwrap();
        assert!(last.p_successful >= 0.99 && last.p_detectable >= 0.99);
    }
}

#[test]
fn stricter_threshold_never_helps() {
    let copies = [2, 5, 10, 20];
    let loose = estimate_success(&copies, 0.9, AdversaryModel::Gamma(0), 4000, CopySource::Ideal, &mut seeded(8)).unwrap();
    let strict = estimate_success(&copies, 1.0, AdversaryModel::Gamma(0), 4000, CopySource::Ideal, &mut seeded(8)).unwrap();
    for (l, s) in loose.iter().zip(&strict) {
        assert!(s.p_successful <= l.p_successful + 3.0 * l.stderr_successful.max(s.stderr_successful) + 1e-9);
    }
}

#[test]
fn curves_are_reproducible() {
    let a = estimate_success(&[5, 10], 0.9, AdversaryModel::Gamma(0), 300, CopySource::Statevector, &mut seeded(9)).unwrap();
    let b = estimate_success(&[5, 10], 0.9, AdversaryModel::Gamma(0), 300, CopySource::Statevector, &mut seeded(9)).unwrap();
    assert_eq!(a, b);
}
