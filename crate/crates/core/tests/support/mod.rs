//! Independent oracles and statistics shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use qvote_core::quantum::{MeasBasis, StateLabel};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

/// Born-rule probability of `outcome` for `label` rotated by `steps` quarter turns of R_X.
pub fn likelihood(label: StateLabel, steps: u8, basis: MeasBasis, outcome: u8) -> f64 {
    let mut s = label.state();
    s.apply_rx(0, steps as f64 * FRAC_PI_2).unwrap();
    s.probability(0, basis, outcome).unwrap()
}

/// Rotations with nonzero likelihood for a record read in received order.
pub fn plausible_rotations(
    assumed: &[StateLabel],
    bases: &[MeasBasis],
    outcomes: &[u8],
) -> Vec<u8> {
    (0..4u8)
        .filter(|&c| {
            assumed
                .iter()
                .zip(bases)
                .zip(outcomes)
                .all(|((&l, &b), &o)| likelihood(l, c, b, o) > 1e-12)
        })
        .collect()
}

/// Labels as they sit after the pair swaps in `cs` (received order).
pub fn permuted(labels: &[StateLabel], cs_mask: usize) -> Vec<StateLabel> {
    let mut out = labels.to_vec();
    for p in 0..labels.len() / 2 {
        if (cs_mask >> p) & 1 == 1 {
            out.swap(2 * p, 2 * p + 1);
        }
    }
    out
}

pub fn cs_mask(cs: &[u8]) -> usize {
    cs.iter().enumerate().map(|(p, &b)| (b as usize) << p).sum()
}

/// Every distinct ordering of a balanced label multiset of length `n`.
pub fn arrangements(n: usize) -> Vec<Vec<StateLabel>> {
    fn rec(counts: &mut [usize; 4], cur: &mut Vec<StateLabel>, out: &mut Vec<Vec<StateLabel>>, n: usize) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for (i, l) in StateLabel::ALL.iter().enumerate() {
            if counts[i] > 0 {
                counts[i] -= 1;
                cur.push(*l);
                rec(counts, cur, out, n);
                cur.pop();
                counts[i] += 1;
            }
        }
    }
    let mut out = vec![];
    rec(&mut [n / 4; 4], &mut vec![], &mut out, n);
    out
}

fn bases_from(mask: usize, n: usize) -> Vec<MeasBasis> {
    (0..n)
        .map(|i| if (mask >> i) & 1 == 1 { MeasBasis::Y } else { MeasBasis::Z })
        .collect()
}

/// Enumerate every (bases, outcomes) record for a received state with its probability.
fn for_each_record(
    received: &[StateLabel],
    steps: u8,
    mut f: impl FnMut(&[MeasBasis], &[u8], f64),
) {
    let n = received.len();
    for bmask in 0..1usize << n {
        let bases = bases_from(bmask, n);
        for omask in 0..1usize << n {
            let outcomes: Vec<u8> = (0..n).map(|i| ((omask >> i) & 1) as u8).collect();
            let mut p = 0.5f64.powi(n as i32);
            for i in 0..n {
                p *= likelihood(received[i], steps, bases[i], outcomes[i]);
            }
            if p > 0.0 {
                f(&bases, &outcomes, p);
            }
        }
    }
}

/// Exact probability that an honest opening decodes to the committed value.
pub fn honest_success_exact(n: usize) -> f64 {
    let arr = arrangements(n);
    let mut total = 0.0;
    for labels in &arr {
        for value in 0..4u8 {
            // the opening undoes the swaps, so read in original order
            for_each_record(labels, value, |bases, outcomes, p| {
                if plausible_rotations(labels, bases, outcomes) == vec![value] {
                    total += p;
                }
            });
        }
    }
    total / (arr.len() * 4) as f64
}

/// Can some reveal `cs'` make the miner accept a value other than `value`?
pub fn forgery_exists(
    labels: &[StateLabel],
    value: u8,
    bases: &[MeasBasis],
    outcomes: &[u8],
) -> bool {
    let pairs = labels.len() / 2;
    (0..1usize << pairs).any(|mask| {
        let assumed = permuted(labels, mask);
        let c = plausible_rotations(&assumed, bases, outcomes);
        c.len() == 1 && c[0] != value
    })
}

/// Exact probability that a record-aware voter can forge, by full enumeration.
pub fn informed_forgery_exact(n: usize) -> f64 {
    let arr = arrangements(n);
    let pairs = n / 2;
    let mut total = 0.0;
    let mut cases = 0usize;
    for labels in &arr {
        for value in 0..4u8 {
            for cs in 0..1usize << pairs {
                let received = permuted(labels, cs);
                for_each_record(&received, value, |bases, outcomes, p| {
                    if forgery_exists(labels, value, bases, outcomes) {
                        total += p;
                    }
                });
                cases += 1;
            }
        }
    }
    total / cases as f64
}

/// Does the miner open the reveal `forged_cs` as exactly `claimed`?
pub fn forged_reveal_accepted(
    labels: &[StateLabel],
    forged_cs: &[u8],
    claimed: u8,
    bases: &[MeasBasis],
    outcomes: &[u8],
) -> bool {
    let assumed = permuted(labels, cs_mask(forged_cs));
    plausible_rotations(&assumed, bases, outcomes) == vec![claimed]
}

/// Exact acceptance of a blind forgery flipping `flipped` pairs and claiming `value + shift`.
///
/// Averages over arrangements, values, true swap strings and every choice of flipped pairs.
pub fn blind_forgery_exact(n: usize, flipped: usize, shift: u8) -> f64 {
    let arr = arrangements(n);
    let pairs = n / 2;
    let flips: Vec<usize> = (0..1usize << pairs)
        .filter(|m| m.count_ones() as usize == flipped)
        .collect();
    let mut total = 0.0;
    let mut cases = 0usize;
    for labels in &arr {
        for value in 0..4u8 {
            for cs in 0..1usize << pairs {
                let received = permuted(labels, cs);
                for &flip in &flips {
                    let forged: Vec<u8> = (0..pairs).map(|p| (((cs ^ flip) >> p) & 1) as u8).collect();
                    let claimed = (value + shift) % 4;
                    for_each_record(&received, value, |bases, outcomes, p| {
                        if forged_reveal_accepted(labels, &forged, claimed, bases, outcomes) {
                            total += p;
                        }
                    });
                    cases += 1;
                }
            }
        }
    }
    total / cases as f64
}

/// Pearson goodness-of-fit statistic.
pub fn chi_square_gof(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Pearson homogeneity statistic for a table of rows (groups) by columns (categories).
pub fn chi_square_homogeneity(table: &[Vec<usize>]) -> (f64, usize) {
    let cols = table[0].len();
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<usize>() as f64)
        .collect();
    let grand: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    let mut used_cols = 0;
    for c in 0..cols {
        if col_tot[c] == 0.0 {
            continue;
        }
        used_cols += 1;
        for (r, row) in table.iter().enumerate() {
            let e = row_tot[r] * col_tot[c] / grand;
            stat += (row[c] as f64 - e).powi(2) / e;
        }
    }
    (stat, (table.len() - 1) * (used_cols - 1))
}

pub fn chi_square_quantile(df: usize, q: f64) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(q)
}

/// Binomial three-sigma band check.
pub fn within_3sigma(observed: f64, expected: f64, trials: usize) -> bool {
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    (observed - expected).abs() <= 3.0 * sigma.max(1e-12)
}

/// Exact binomial two-sided test at the three-sigma level (tail mass 0.00135 each side).
///
/// Used where the normal band is meaningless because `trials * p * (1 - p)` is tiny.
pub fn binomial_3sigma(successes: usize, trials: usize, p: f64) -> bool {
    let b = Binomial::new(p, trials as u64).unwrap();
    let k = successes as u64;
    let lower = b.cdf(k);
    let upper = if k == 0 { 1.0 } else { b.sf(k - 1) };
    lower >= 0.00135 && upper >= 0.00135
}
