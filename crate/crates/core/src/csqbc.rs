//! Cheat-sensitive quantum bit commitment.
//!
//! The miner prepares balanced-uniform sequences (BUS), the voter audits `m`
//! of them and keeps `k` as commitment substrates. Two bits `b0 b1` are
//! committed by rotating a retained sequence with `R_X(pi (b0 + b1/2))` and
//! hiding its qubit order behind `n/2` secret pair swaps (`cs`). The miner
//! measures every qubit in a random Pauli basis; once `cs` is opened it can
//! check which rotation is consistent with its preparation record.

use std::f64::consts::FRAC_PI_2;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{MeasBasis, ProductRegister, QuantumError, StateLabel};
use crate::rng::trial_rng;

/// Above this many swap pairs the cheating voter samples reveals instead of enumerating them.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 12;
/// Reveals tried per trial when sampling.
pub const SAMPLED_REVEALS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsqbcError {
    #[error("invalid commitment parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} sequences, got {got}")]
    SequenceCount { expected: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("committed value {0} is not a two-bit value")]
    InvalidValue(u8),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Sequence length `n`, decoy count `m` and retained count `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsqbcParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl CsqbcParams {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self, CsqbcError> {
        let p = Self { n, m, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CsqbcError> {
        if self.n == 0 || !self.n.is_multiple_of(4) {
            return Err(CsqbcError::InvalidParams(format!(
                "n = {} must be a positive multiple of 4",
                self.n
            )));
        }
        if self.m == 0 {
            return Err(CsqbcError::InvalidParams("m must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(CsqbcError::InvalidParams("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Sequences the miner prepares for one voter.
    pub fn sequences(&self) -> usize {
        self.m + self.k
    }

    /// Qubits consumed by one commitment session.
    pub fn qubits_used(&self) -> usize {
        self.sequences() * self.n
    }
}

/// Two committed bits `b0 b1`, stored as `2*b0 + b1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommitValue(u8);

impl CommitValue {
    pub const ALL: [CommitValue; 4] = [
        CommitValue(0),
        CommitValue(1),
        CommitValue(2),
        CommitValue(3),
    ];

    pub fn new(value: u8) -> Result<Self, CsqbcError> {
        if value > 3 {
            return Err(CsqbcError::InvalidValue(value));
        }
        Ok(Self(value))
    }

    pub fn from_bits(b0: u8, b1: u8) -> Self {
        Self(((b0 & 1) << 1) | (b1 & 1))
    }

    pub fn bits(self) -> [u8; 2] {
        [self.0 >> 1, self.0 & 1]
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Quarter turns of `R_X(pi/2)`, equal to the value itself.
    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    /// `pi * (b0 + b1 / 2)`.
    pub fn theta(self) -> f64 {
        self.0 as f64 * FRAC_PI_2
    }
}

/// Miner-side preparation record plus the qubits it describes.
#[derive(Debug, Clone)]
pub struct BalancedUniformSequence {
    /// Labels the miner will reveal (honestly, the true preparation).
    pub labels: Vec<StateLabel>,
    pub register: ProductRegister,
}

/// `n/4` copies of every label, uniformly shuffled.
pub fn balanced_labels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<StateLabel> {
    let mut labels: Vec<StateLabel> = StateLabel::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, n / 4))
        .collect();
    labels.shuffle(rng);
    labels
}

pub fn is_balanced(labels: &[StateLabel]) -> bool {
    let mut counts = [0usize; 4];
    for l in labels {
        counts[l.index()] += 1;
    }
    labels.len().is_multiple_of(4) && counts.iter().all(|&c| c == labels.len() / 4)
}

pub fn prepare_bus<R: Rng + ?Sized>(
    params: &CsqbcParams,
    rng: &mut R,
) -> Result<BalancedUniformSequence, CsqbcError> {
    params.validate()?;
    let labels = balanced_labels(params.n, rng);
    let register = ProductRegister::from_labels(&labels);
    Ok(BalancedUniformSequence { labels, register })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusVerdict {
    Pass,
    Fail,
}

/// Measure every qubit in the basis of its revealed label.
///
/// Passes iff the revealed labels are balanced and every outcome matches.
/// The register is consumed by the measurement.
pub fn verify_bus<R: Rng + ?Sized>(
    register: &mut ProductRegister,
    revealed: &[StateLabel],
    rng: &mut R,
) -> Result<BusVerdict, CsqbcError> {
    if revealed.len() != register.len() {
        return Err(CsqbcError::LengthMismatch {
            expected: register.len(),
            got: revealed.len(),
        });
    }
    let balanced = is_balanced(revealed);
    let mut matches = true;
    for (i, label) in revealed.iter().enumerate() {
        let out = register.measure(i, label.basis(), rng)?;
        matches &= out == label.outcome();
    }
    Ok(if balanced && matches {
        BusVerdict::Pass
    } else {
        BusVerdict::Fail
    })
}

/// Uniform `m`-subset of `0..m+k` for verification, in ascending order.
pub fn choose_verification_set<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen = index::sample(rng, m + k, m).into_vec();
    chosen.sort_unstable();
    chosen
}

/// Outcome of the voter's audit of the miner's sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub verified: Vec<usize>,
    pub retained: Vec<usize>,
    pub verdict: BusVerdict,
}

/// Verify a random `m` of the `m + k` sequences; the rest become the retained QS.
pub fn select_and_verify<R: Rng + ?Sized>(
    sequences: Vec<BalancedUniformSequence>,
    params: &CsqbcParams,
    rng: &mut R,
) -> Result<(Vec<BalancedUniformSequence>, Selection), CsqbcError> {
    params.validate()?;
    if sequences.len() != params.sequences() {
        return Err(CsqbcError::SequenceCount {
            expected: params.sequences(),
            got: sequences.len(),
        });
    }
    let verified = choose_verification_set(params.m, params.k, rng);
    let mut verdict = BusVerdict::Pass;
    let mut retained = Vec::with_capacity(params.k);
    let mut retained_idx = Vec::with_capacity(params.k);
    for (i, mut seq) in sequences.into_iter().enumerate() {
        if verified.binary_search(&i).is_ok() {
            if verify_bus(&mut seq.register, &seq.labels, rng)? == BusVerdict::Fail {
                verdict = BusVerdict::Fail;
            }
        } else {
            retained.push(seq);
            retained_idx.push(i);
        }
    }
    Ok((
        retained,
        Selection {
            verified,
            retained: retained_idx,
            verdict,
        },
    ))
}

pub fn random_cs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n / 2).map(|_| rng.gen_range(0..=1)).collect()
}

/// Rotate every qubit by the committed angle, then swap pairs `(2p, 2p+1)` where `cs[p] = 1`.
pub fn commit_bits_with_cs(
    qs: &mut ProductRegister,
    value: CommitValue,
    cs: &[u8],
) -> Result<(), CsqbcError> {
    if !qs.len().is_multiple_of(2) || cs.len() != qs.len() / 2 {
        return Err(CsqbcError::LengthMismatch {
            expected: qs.len() / 2,
            got: cs.len(),
        });
    }
    qs.apply_rx_all(value.theta());
    for (p, &bit) in cs.iter().enumerate() {
        if bit == 1 {
            qs.swap(2 * p, 2 * p + 1)?;
        }
    }
    Ok(())
}

/// Commit two bits with a freshly sampled swap string, which is returned.
pub fn commit_bits<R: Rng + ?Sized>(
    qs: &mut ProductRegister,
    value: CommitValue,
    rng: &mut R,
) -> Result<Vec<u8>, CsqbcError> {
    let cs = random_cs(qs.len(), rng);
    commit_bits_with_cs(qs, value, &cs)?;
    Ok(cs)
}

/// Measure each qubit in an independently chosen uniform basis.
pub fn miner_measure<R: Rng + ?Sized>(
    register: &mut ProductRegister,
    rng: &mut R,
) -> Result<(Vec<MeasBasis>, Vec<u8>), CsqbcError> {
    let bases: Vec<MeasBasis> = (0..register.len())
        .map(|_| if rng.gen::<bool>() { MeasBasis::Y } else { MeasBasis::Z })
        .collect();
    let outcomes = measure_in(register, &bases, rng)?;
    Ok((bases, outcomes))
}

/// Measure each qubit in the given basis.
pub fn measure_in<R: Rng + ?Sized>(
    register: &mut ProductRegister,
    bases: &[MeasBasis],
    rng: &mut R,
) -> Result<Vec<u8>, CsqbcError> {
    bases
        .iter()
        .enumerate()
        .map(|(i, &b)| register.measure(i, b, rng).map_err(CsqbcError::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DecodeFailure {
    Ambiguous,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeResult {
    Bits(CommitValue),
    Failed(DecodeFailure),
}

impl DecodeResult {
    pub fn bits(self) -> Option<CommitValue> {
        match self {
            DecodeResult::Bits(v) => Some(v),
            DecodeResult::Failed(_) => None,
        }
    }
}

/// Position in the received record of original qubit `i`.
fn received_position(i: usize, cs: &[u8]) -> usize {
    if cs[i / 2] == 1 {
        i ^ 1
    } else {
        i
    }
}

/// Which of the four rotations are consistent with the measurement record.
///
/// For each candidate, the qubits whose rotated label lies in the measured
/// basis must show the label's outcome.
pub fn consistent_candidates(
    qs_labels: &[StateLabel],
    cs: &[u8],
    bases: &[MeasBasis],
    outcomes: &[u8],
) -> Result<[bool; 4], CsqbcError> {
    let n = qs_labels.len();
    if cs.len() * 2 != n || !n.is_multiple_of(2) {
        return Err(CsqbcError::LengthMismatch {
            expected: n / 2,
            got: cs.len(),
        });
    }
    if bases.len() != n || outcomes.len() != n {
        return Err(CsqbcError::LengthMismatch {
            expected: n,
            got: bases.len().min(outcomes.len()),
        });
    }
    let mut ok = [true; 4];
    for (i, label) in qs_labels.iter().enumerate() {
        let r = received_position(i, cs);
        for (steps, flag) in ok.iter_mut().enumerate() {
            let rotated = label.rotated(steps as u8);
            if rotated.basis() == bases[r] && rotated.outcome() != outcomes[r] {
                *flag = false;
            }
        }
    }
    Ok(ok)
}

/// Undo the swaps given by `cs` and pick the unique consistent rotation.
pub fn decode_commitment(
    qs_labels: &[StateLabel],
    cs: &[u8],
    bases: &[MeasBasis],
    outcomes: &[u8],
) -> Result<DecodeResult, CsqbcError> {
    let ok = consistent_candidates(qs_labels, cs, bases, outcomes)?;
    let mut found = ok.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i);
    Ok(match (found.next(), found.next()) {
        (None, _) => DecodeResult::Failed(DecodeFailure::Inconsistent),
        (Some(v), None) => DecodeResult::Bits(CommitValue(v as u8)),
        (Some(_), Some(_)) => DecodeResult::Failed(DecodeFailure::Ambiguous),
    })
}

/// Everything one two-bit commitment produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentRecord {
    pub params: CsqbcParams,
    pub qs_labels: Vec<StateLabel>,
    pub cs: Vec<u8>,
    pub meas_bases: Vec<MeasBasis>,
    pub meas_outcomes: Vec<u8>,
    /// Voter's secret, compared against the decode only for evaluation.
    pub committed: CommitValue,
}

impl CommitmentRecord {
    pub fn decode(&self) -> Result<DecodeResult, CsqbcError> {
        decode_commitment(&self.qs_labels, &self.cs, &self.meas_bases, &self.meas_outcomes)
    }
}

/// One honest two-bit commitment over a full `m + k` preparation, opened immediately.
///
/// Commits `value` on the first retained sequence.
pub fn honest_commitment<R: Rng + ?Sized>(
    params: &CsqbcParams,
    value: CommitValue,
    rng: &mut R,
) -> Result<(CommitmentRecord, Selection), CsqbcError> {
    let sequences = (0..params.sequences())
        .map(|_| prepare_bus(params, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut retained, selection) = select_and_verify(sequences, params, rng)?;
    let mut qs = retained.swap_remove(0);
    let cs = commit_bits(&mut qs.register, value, rng)?;
    let (meas_bases, meas_outcomes) = miner_measure(&mut qs.register, rng)?;
    let record = CommitmentRecord {
        params: *params,
        qs_labels: qs.labels,
        cs,
        meas_bases,
        meas_outcomes,
        committed: value,
    };
    Ok((record, selection))
}

/// A blind forgery: flip `flipped` swap pairs of the true `cs` and claim `value + shift`.
///
/// The voter never sees the miner's bases or outcomes, so its forged reveal
/// can only depend on how many pairs it flips and which value it claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeryStrategy {
    pub flipped: usize,
    pub shift: u8,
}

/// Probability that a single qubit keeps every candidate in `candidates` consistent.
///
/// `truth` is the prepared label, `assumed` the label the miner attributes to
/// the position after the forged unswap, `steps` the rotation actually applied.
fn qubit_consistency(truth: StateLabel, assumed: StateLabel, steps: u8, candidates: &[u8]) -> f64 {
    let state = truth.rotated(steps);
    let mut p = 0.0;
    for basis in [MeasBasis::Z, MeasBasis::Y] {
        for outcome in 0..2u8 {
            let born = if state.basis() == basis {
                if state.outcome() == outcome {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.5
            };
            let all = candidates.iter().all(|&c| {
                let l = assumed.rotated(c);
                l.basis() != basis || l.outcome() == outcome
            });
            if all {
                p += 0.5 * born;
            }
        }
    }
    p
}

/// Exact probability that the miner opens a blind forgery as the claimed value.
///
/// Averages over every balanced label arrangement with a forward pass over
/// the pairs, tracking the remaining label counts. Uniqueness of the claimed
/// candidate is handled by inclusion-exclusion over the other three.
pub fn blind_forgery_acceptance(n: usize, strategy: ForgeryStrategy) -> f64 {
    assert!(n.is_multiple_of(4) && strategy.flipped <= n / 2);
    let claimed = strategy.shift % 4;
    let others: Vec<u8> = (0..4).filter(|&c| c != claimed).collect();
    let mut total = 0.0;
    for subset in 0..1u32 << others.len() {
        let mut cands = vec![claimed];
        cands.extend(
            others
                .iter()
                .enumerate()
                .filter(|(i, _)| (subset >> i) & 1 == 1)
                .map(|(_, &c)| c),
        );
        let sign = if subset.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * arrangement_average(n, strategy.flipped, &cands);
    }
    total
}

/// E over balanced arrangements of the product of per-qubit consistency factors.
fn arrangement_average(n: usize, flipped: usize, cands: &[u8]) -> f64 {
    use std::collections::BTreeMap;
    let mut layer: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    layer.insert([n / 4; 4], 1.0);
    for pair in 0..n / 2 {
        let swapped = pair < flipped;
        let mut next = BTreeMap::new();
        for (counts, weight) in layer {
            let remaining: usize = counts.iter().sum();
            for a in StateLabel::ALL {
                if counts[a.index()] == 0 {
                    continue;
                }
                let pa = counts[a.index()] as f64 / remaining as f64;
                let mut after_a = counts;
                after_a[a.index()] -= 1;
                for b in StateLabel::ALL {
                    if after_a[b.index()] == 0 {
                        continue;
                    }
                    let pb = after_a[b.index()] as f64 / (remaining - 1) as f64;
                    let mut after_b = after_a;
                    after_b[b.index()] -= 1;
                    // rotation is relabelled to 0 by symmetry of the balanced ensemble
                    let factor = if swapped {
                        qubit_consistency(a, b, 0, cands) * qubit_consistency(b, a, 0, cands)
                    } else {
                        qubit_consistency(a, a, 0, cands) * qubit_consistency(b, b, 0, cands)
                    };
                    *next.entry(after_b).or_insert(0.0) += weight * pa * pb * factor;
                }
            }
        }
        layer = next;
    }
    layer.values().sum()
}

/// Exhaustive search over forgery classes for the highest acceptance probability.
pub fn best_blind_forgery(n: usize) -> (ForgeryStrategy, f64) {
    let mut best = (ForgeryStrategy { flipped: 0, shift: 1 }, -1.0);
    for flipped in 0..=n / 2 {
        for shift in 1..4u8 {
            let s = ForgeryStrategy { flipped, shift };
            let p = blind_forgery_acceptance(n, s);
            if p > best.1 + 1e-15 {
                best = (s, p);
            }
        }
    }
    best
}

/// A cheating voter's attempt to open its commitment as a different value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterCheatTrial {
    pub record: CommitmentRecord,
    pub forged_cs: Vec<u8>,
    pub claimed: CommitValue,
    /// The miner opened the forged reveal as `claimed`.
    pub accepted: bool,
    /// Some reveal would have fooled the miner had the voter known its record.
    pub informed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterCheatReport {
    pub n: usize,
    pub strategy: ForgeryStrategy,
    /// Exact acceptance probability of `strategy`.
    pub predicted: f64,
    pub trials: Vec<VoterCheatTrial>,
}

impl VoterCheatReport {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.accepted).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.trials.len() as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.success_rate(), self.trials.len())
    }

    /// Upper bound: fraction of trials where a record-aware voter could forge.
    pub fn informed_rate(&self) -> f64 {
        self.trials.iter().filter(|t| t.informed).count() as f64 / self.trials.len() as f64
    }
}

pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Does any swap string open `record` as a value other than the committed one?
///
/// Enumerates all reveals up to [`EXHAUSTIVE_PAIR_LIMIT`] pairs, samples beyond.
pub fn forgery_exists<R: Rng + ?Sized>(
    record: &CommitmentRecord,
    rng: &mut R,
) -> Result<bool, CsqbcError> {
    let pairs = record.qs_labels.len() / 2;
    let fools = |cs: &[u8]| -> Result<bool, CsqbcError> {
        let res = decode_commitment(&record.qs_labels, cs, &record.meas_bases, &record.meas_outcomes)?;
        Ok(res.bits().is_some_and(|v| v != record.committed))
    };
    if pairs <= EXHAUSTIVE_PAIR_LIMIT {
        for mask in 0..1usize << pairs {
            let cs: Vec<u8> = (0..pairs).map(|p| ((mask >> p) & 1) as u8).collect();
            if fools(&cs)? {
                return Ok(true);
            }
        }
    } else {
        for _ in 0..SAMPLED_REVEALS {
            if fools(&random_cs(record.qs_labels.len(), rng))? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Commit honestly to a random value, then open it with a blind forgery.
pub fn voter_cheat_trial<R: Rng + ?Sized>(
    n: usize,
    strategy: ForgeryStrategy,
    rng: &mut R,
) -> Result<VoterCheatTrial, CsqbcError> {
    let params = CsqbcParams::new(n, 1, 1)?;
    let labels = balanced_labels(n, rng);
    let mut qs = ProductRegister::from_labels(&labels);
    let committed = CommitValue(rng.gen_range(0..4));
    let cs = commit_bits(&mut qs, committed, rng)?;
    let (meas_bases, meas_outcomes) = miner_measure(&mut qs, rng)?;
    let record = CommitmentRecord {
        params,
        qs_labels: labels,
        cs,
        meas_bases,
        meas_outcomes,
        committed,
    };
    let mut forged_cs = record.cs.clone();
    for p in index::sample(rng, n / 2, strategy.flipped) {
        forged_cs[p] ^= 1;
    }
    let claimed = CommitValue((committed.0 + strategy.shift) % 4);
    let opened = decode_commitment(
        &record.qs_labels,
        &forged_cs,
        &record.meas_bases,
        &record.meas_outcomes,
    )?;
    let informed = forgery_exists(&record, rng)?;
    Ok(VoterCheatTrial {
        record,
        forged_cs,
        claimed,
        accepted: opened == DecodeResult::Bits(claimed),
        informed,
    })
}

/// Fraction of commitments a cheating voter opens as a different value.
///
/// The voter plays the best blind forgery for `params.n`.
pub fn simulate_voter_cheat<R: Rng + ?Sized>(
    params: &CsqbcParams,
    trials: usize,
    rng: &mut R,
) -> Result<VoterCheatReport, CsqbcError> {
    params.validate()?;
    if trials == 0 {
        return Err(CsqbcError::NoTrials);
    }
    let (strategy, predicted) = best_blind_forgery(params.n);
    let base: u64 = rng.gen();
    let trials = (0..trials as u32)
        .into_par_iter()
        .map(|t| voter_cheat_trial(params.n, strategy, &mut trial_rng(base, 0, t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VoterCheatReport {
        n: params.n,
        strategy,
        predicted,
        trials,
    })
}

/// What a probing miner reads off an unrotated all-`|0>` sequence.
///
/// The first half is measured in Z, the second in Y. Z outcomes all 0 or all 1
/// reveal a half or no turn; otherwise the Y half distinguishes the odd turns.
pub fn probe_inference(bases: &[MeasBasis], outcomes: &[u8]) -> CommitValue {
    let all = |basis: MeasBasis, v: u8| {
        bases
            .iter()
            .zip(outcomes)
            .filter(|(&b, _)| b == basis)
            .all(|(_, &o)| o == v)
    };
    if all(MeasBasis::Z, 0) {
        CommitValue(0)
    } else if all(MeasBasis::Z, 1) {
        CommitValue(2)
    } else if all(MeasBasis::Y, 1) {
        CommitValue(1)
    } else {
        CommitValue(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerCheatReport {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    /// Probe survived as the retained sequence.
    pub successes: usize,
    /// Probe was audited and failed verification.
    pub detections: usize,
    /// Successful trials where the miner's inferred bits were right.
    pub bits_learned: usize,
}

impl MinerCheatReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn detection_rate(&self) -> f64 {
        self.detections as f64 / self.trials as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.success_rate(), self.trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MinerCheatTrial {
    success: bool,
    detected: bool,
    learned: bool,
}

fn miner_cheat_trial<R: Rng + ?Sized>(
    params: &CsqbcParams,
    rng: &mut R,
) -> Result<MinerCheatTrial, CsqbcError> {
    let total = params.sequences();
    let probe_at = rng.gen_range(0..total);
    let sequences = (0..total)
        .map(|i| {
            if i == probe_at {
                // fully known |0...0> register behind a balanced-looking claim
                Ok(BalancedUniformSequence {
                    labels: balanced_labels(params.n, rng),
                    register: ProductRegister::zeros(params.n),
                })
            } else {
                prepare_bus(params, rng)
            }
        })
        .collect::<Result<Vec<_>, CsqbcError>>()?;
    let (mut retained, selection) = select_and_verify(sequences, params, rng)?;
    let probe_retained = selection.retained.contains(&probe_at);
    let detected = !probe_retained && selection.verdict == BusVerdict::Fail;
    let mut learned = false;
    if probe_retained {
        let mut qs = retained.swap_remove(0);
        let value = CommitValue(rng.gen_range(0..4));
        commit_bits(&mut qs.register, value, rng)?;
        let bases: Vec<MeasBasis> = (0..params.n)
            .map(|i| if i < params.n / 2 { MeasBasis::Z } else { MeasBasis::Y })
            .collect();
        let outcomes = measure_in(&mut qs.register, &bases, rng)?;
        learned = probe_inference(&bases, &outcomes) == value;
    }
    Ok(MinerCheatTrial {
        success: probe_retained,
        detected,
        learned,
    })
}

/// A miner slips one known-state probe among its sequences; it wins if the voter keeps it.
pub fn simulate_miner_cheat<R: Rng + ?Sized>(
    params: &CsqbcParams,
    trials: usize,
    rng: &mut R,
) -> Result<MinerCheatReport, CsqbcError> {
    params.validate()?;
    if params.k != 1 {
        return Err(CsqbcError::InvalidParams(
            "miner probe model requires k = 1".into(),
        ));
    }
    if trials == 0 {
        return Err(CsqbcError::NoTrials);
    }
    let base: u64 = rng.gen();
    let results = (0..trials as u32)
        .into_par_iter()
        .map(|t| miner_cheat_trial(params, &mut trial_rng(base, 0, t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MinerCheatReport {
        m: params.m,
        n: params.n,
        trials,
        successes: results.iter().filter(|r| r.success).count(),
        detections: results.iter().filter(|r| r.detected).count(),
        bits_learned: results.iter().filter(|r| r.learned).count(),
    })
}
