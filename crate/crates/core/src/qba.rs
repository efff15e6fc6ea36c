//! Detectable broadcast among three miners using shared Aharonov states.
//!
//! Each round the leader broadcasts a bit `x` with the index set
//! `I = {t : a_leader(t) = x}`. Because every copy of `|A>` yields a
//! permutation of `{0,1,2}`, an honest receiver never holds `x` at an index in
//! `I`; that is its consistency check. Two consistent receivers holding
//! different bits run the convince step, where the first receiver exhibits
//! indices that only an honest recipient of the other bit could know.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csqbc::binomial_stderr;
use crate::quantum::{decode_trit, prepare_aharonov, MeasBasis, AHARONOV_QUBITS};
use crate::rng::trial_rng;

pub const MINERS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QbaError {
    #[error("agreement threshold {0} outside (0, 1]")]
    Lambda(f64),
    #[error("consensus needs exactly {MINERS} miners, got {0}")]
    MinerCount(usize),
    #[error("gamma {0} is not 0 or a miner index 1..=3")]
    Gamma(u8),
    #[error("copy range is empty")]
    EmptyRange,
    #[error("trial count must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopySource {
    /// Draw the permutation directly.
    #[default]
    Ideal,
    /// Prepare `|A>` and measure all six qubits.
    Statevector,
}

/// Measured trits of `T` shared copies, ordered (leader, receiver 1, receiver 2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AharonovBatch {
    pub trits: Vec<[u8; 3]>,
}

impl AharonovBatch {
    pub fn len(&self) -> usize {
        self.trits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trits.is_empty()
    }

    /// Column of trits held by one party (0 leader, 1 and 2 receivers).
    pub fn party(&self, p: usize) -> impl Iterator<Item = u8> + '_ {
        self.trits.iter().map(move |t| t[p])
    }
}

pub fn sample_copies<R: Rng + ?Sized>(t: usize, rng: &mut R, source: CopySource) -> AharonovBatch {
    let trits = match source {
        CopySource::Ideal => (0..t)
            .map(|_| {
                let mut p = [0u8, 1, 2];
                p.shuffle(rng);
                p
            })
            .collect(),
        CopySource::Statevector => {
            let a = prepare_aharonov();
            (0..t)
                .map(|_| {
                    let mut s = a.clone();
                    let bits: Vec<u8> = (0..AHARONOV_QUBITS)
                        .map(|q| s.measure(q, MeasBasis::Z, rng).expect("qubit in range"))
                        .collect();
                    let mut out = [0u8; 3];
                    for (i, pair) in bits.chunks(2).enumerate() {
                        out[i] = decode_trit(pair[0], pair[1]).expect("|A> has no 11 component");
                    }
                    out
                })
                .collect()
        }
    };
    AharonovBatch { trits }
}

/// How a complicit first receiver backs its false claim in the convince step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverForgery {
    /// Replays its own index set; every index sits in the other receiver's set.
    #[default]
    Invalid,
    /// Offers every index where its own trit equals the leader's bit; each
    /// passes the check with probability 1/2.
    OwnTrits,
}

/// Which party in a round is complicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complicit {
    #[default]
    None,
    Leader,
    Receiver1,
    Receiver2,
}

impl Complicit {
    fn is_receiver(self, slot: usize) -> bool {
        matches!(
            (self, slot),
            (Complicit::Receiver1, 0) | (Complicit::Receiver2, 1)
        )
    }
}

/// Who misbehaves across rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AdversaryModel {
    #[default]
    Honest,
    /// 0: a uniformly random miner is complicit in each round; `i`: miner `i` always is.
    Gamma(u8),
    /// The leader is complicit in every round.
    Leader,
    /// A uniformly chosen receiver is complicit in every round.
    Receiver,
}

impl AdversaryModel {
    pub fn from_gamma(gamma: Option<u8>) -> Result<Self, QbaError> {
        match gamma {
            None => Ok(AdversaryModel::Honest),
            Some(g) if g as usize <= MINERS => Ok(AdversaryModel::Gamma(g)),
            Some(g) => Err(QbaError::Gamma(g)),
        }
    }

    pub fn validate(&self) -> Result<(), QbaError> {
        match *self {
            AdversaryModel::Gamma(g) if g as usize > MINERS => Err(QbaError::Gamma(g)),
            _ => Ok(()),
        }
    }

    /// Role of the complicit miner given the round's leader (0-based).
    ///
    /// Receiver slot 1 is the lower-indexed non-leader.
    pub fn resolve<R: Rng + ?Sized>(&self, leader: usize, rng: &mut R) -> Complicit {
        let miner = match *self {
            AdversaryModel::Honest => return Complicit::None,
            AdversaryModel::Leader => return Complicit::Leader,
            AdversaryModel::Receiver => {
                return if rng.gen() {
                    Complicit::Receiver1
                } else {
                    Complicit::Receiver2
                }
            }
            AdversaryModel::Gamma(0) => rng.gen_range(0..MINERS),
            AdversaryModel::Gamma(g) => g as usize - 1,
        };
        let receivers = receivers_of(leader);
        if miner == leader {
            Complicit::Leader
        } else if miner == receivers[0] {
            Complicit::Receiver1
        } else {
            Complicit::Receiver2
        }
    }
}

pub fn receivers_of(leader: usize) -> [usize; 2] {
    let mut r = (0..MINERS).filter(|&m| m != leader);
    [r.next().unwrap(), r.next().unwrap()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BroadcastKind {
    Successful,
    Detectable,
}

impl fmt::Display for BroadcastKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BroadcastKind::Successful => "SUCCESSFUL",
            BroadcastKind::Detectable => "DETECTABLE",
        })
    }
}

/// A receiver's view of the round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverState {
    pub honest: bool,
    /// Bit the leader sent.
    pub received: u8,
    pub index_set: Vec<usize>,
    /// Bit and flag announced to the other receiver.
    pub claimed: u8,
    pub consistent: bool,
    pub final_bit: u8,
}

/// What the convince step exchanged, if it ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvinceStep {
    pub indices: Vec<usize>,
    pub valid: usize,
    pub convinced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastOutcome {
    pub kind: BroadcastKind,
    pub agreed_bit: Option<u8>,
    pub leader_bit: u8,
    pub complicit: Complicit,
    pub receivers: [ReceiverState; 2],
    pub convince: Option<ConvinceStep>,
}

impl BroadcastOutcome {
    /// Every honest miner, leader included, ends holding the same bit.
    pub fn honest_agreement(&self) -> bool {
        let mut bits = self
            .receivers
            .iter()
            .filter(|r| r.honest)
            .map(|r| r.final_bit)
            .collect::<Vec<_>>();
        if self.complicit != Complicit::Leader {
            bits.push(self.leader_bit);
        }
        bits.windows(2).all(|w| w[0] == w[1])
    }

    /// Honest miners either agree or know the round failed.
    pub fn guarantee_holds(&self) -> bool {
        self.honest_agreement() || self.kind == BroadcastKind::Detectable
    }

    /// Honest receivers both end on one bit whenever the round reports success.
    pub fn is_safe(&self) -> bool {
        if self.kind != BroadcastKind::Successful {
            return true;
        }
        let honest: Vec<u8> = self.receivers.iter().filter(|r| r.honest).map(|r| r.final_bit).collect();
        honest.windows(2).all(|w| w[0] == w[1])
    }
}

fn check_lambda(lambda: f64) -> Result<(), QbaError> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(QbaError::Lambda(lambda))
    }
}

fn index_set(batch: &AharonovBatch, bit: u8) -> Vec<usize> {
    batch.party(0).enumerate().filter(|&(_, a)| a == bit).map(|(t, _)| t).collect()
}

/// One broadcast of `x` from the leader to the two receivers.
pub fn run_broadcast(
    x: u8,
    batch: &AharonovBatch,
    complicit: Complicit,
    lambda: f64,
) -> Result<BroadcastOutcome, QbaError> {
    run_broadcast_with(x, batch, complicit, ReceiverForgery::default(), lambda)
}

pub fn run_broadcast_with(
    x: u8,
    batch: &AharonovBatch,
    complicit: Complicit,
    forgery: ReceiverForgery,
    lambda: f64,
) -> Result<BroadcastOutcome, QbaError> {
    check_lambda(lambda)?;
    let x = x & 1;
    // a complicit leader splits the receivers, each with a matching index set
    let sent = if complicit == Complicit::Leader {
        [x, 1 - x]
    } else {
        [x, x]
    };
    let mut receivers: [ReceiverState; 2] = std::array::from_fn(|slot| {
        let received = sent[slot];
        let index_set = index_set(batch, received);
        let honest = !complicit.is_receiver(slot);
        let own = &batch.trits;
        let consistent_check = index_set.iter().all(|&t| own[t][slot + 1] != received);
        let (claimed, consistent) = if honest {
            (received, consistent_check)
        } else {
            (1 - received, true)
        };
        ReceiverState {
            honest,
            received,
            index_set,
            claimed,
            consistent,
            final_bit: claimed,
        }
    });

    let [r1, r2] = &receivers;
    let mut convince = None;
    let kind = match (r1.consistent, r2.consistent) {
        (true, true) if r1.claimed == r2.claimed => BroadcastKind::Successful,
        (true, false) => {
            receivers[1].final_bit = receivers[0].claimed;
            BroadcastKind::Successful
        }
        (false, true) => {
            receivers[0].final_bit = receivers[1].claimed;
            BroadcastKind::Successful
        }
        (false, false) => BroadcastKind::Detectable,
        (true, true) => {
            let step = convince_step(batch, &receivers, forgery, lambda);
            let kind = if step.convinced {
                receivers[1].final_bit = receivers[0].claimed;
                BroadcastKind::Successful
            } else {
                BroadcastKind::Detectable
            };
            convince = Some(step);
            kind
        }
    };
    let agreed_bit = match kind {
        BroadcastKind::Successful => receivers.iter().find(|r| r.honest).map(|r| r.final_bit),
        BroadcastKind::Detectable => None,
    };
    let outcome = BroadcastOutcome {
        kind,
        agreed_bit,
        leader_bit: x,
        complicit,
        receivers,
        convince,
    };
    assert!(outcome.is_safe(), "honest receivers disagree after a successful round");
    Ok(outcome)
}

/// Receiver 1 backs its bit `x1` with indices where it holds `1 - x1`.
///
/// A complicit receiver 1 has no valid index set for its claim and forges one
/// per `forgery`. A complicit receiver 2 refuses to be convinced.
fn convince_step(
    batch: &AharonovBatch,
    receivers: &[ReceiverState; 2],
    forgery: ReceiverForgery,
    lambda: f64,
) -> ConvinceStep {
    let (r1, r2) = (&receivers[0], &receivers[1]);
    let target = 1 - r1.claimed;
    let indices: Vec<usize> = match (r1.honest, forgery) {
        (true, _) => r1.index_set.iter().copied().filter(|&t| batch.trits[t][1] == target).collect(),
        (false, ReceiverForgery::Invalid) => r1.index_set.clone(),
        (false, ReceiverForgery::OwnTrits) => {
            batch.party(1).enumerate().filter(|&(_, a)| a == target).map(|(t, _)| t).collect()
        }
    };
    let valid = indices
        .iter()
        .filter(|&&t| r2.index_set.binary_search(&t).is_err() && batch.trits[t][2] == 2)
        .count();
    let convinced = r2.honest && !indices.is_empty() && valid as f64 >= lambda * indices.len() as f64;
    ConvinceStep {
        indices,
        valid,
        convinced,
    }
}

/// Agreement on one ballot bit, with the miners' reference copies compared afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitConsensus {
    pub leader: usize,
    pub outcome: BroadcastOutcome,
    /// Final bit per miner (index order); the leader keeps what it sent.
    pub miner_bits: [u8; MINERS],
    /// Honest miners whose final bit differs from their reference copy.
    pub reference_mismatches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotConsensus {
    pub bits: Vec<BitConsensus>,
}

impl BallotConsensus {
    /// Bits every honest miner agreed on; `None` where a round was not successful.
    pub fn agreed(&self) -> Vec<Option<u8>> {
        self.bits.iter().map(|b| b.outcome.agreed_bit).collect()
    }

    pub fn kinds(&self) -> Vec<BroadcastKind> {
        self.bits.iter().map(|b| b.outcome.kind).collect()
    }

    pub fn all_successful(&self) -> bool {
        self.bits.iter().all(|b| b.outcome.kind == BroadcastKind::Successful)
    }
}

/// Run one broadcast per bit, each with a fresh uniformly chosen leader and fresh copies.
///
/// `references[m]` is miner `m`'s own decoded copy of the ballot bits; the
/// leader broadcasts its copy.
pub fn consensus_on_ballot<R: Rng + ?Sized>(
    references: &[Vec<u8>],
    copies_per_bit: usize,
    adversary: AdversaryModel,
    lambda: f64,
    source: CopySource,
    rng: &mut R,
) -> Result<BallotConsensus, QbaError> {
    if references.len() != MINERS {
        return Err(QbaError::MinerCount(references.len()));
    }
    check_lambda(lambda)?;
    adversary.validate()?;
    let len = references.iter().map(Vec::len).min().unwrap_or(0);
    let mut bits = Vec::with_capacity(len);
    for i in 0..len {
        let leader = rng.gen_range(0..MINERS);
        let complicit = adversary.resolve(leader, rng);
        let batch = sample_copies(copies_per_bit, rng, source);
        let outcome = run_broadcast(references[leader][i], &batch, complicit, lambda)?;
        let rec = receivers_of(leader);
        let mut miner_bits = [0u8; MINERS];
        miner_bits[leader] = outcome.leader_bit;
        for slot in 0..2 {
            miner_bits[rec[slot]] = outcome.receivers[slot].final_bit;
        }
        let honest = |m: usize| {
            if m == leader {
                complicit != Complicit::Leader
            } else {
                outcome.receivers[if m == rec[0] { 0 } else { 1 }].honest
            }
        };
        let reference_mismatches = (0..MINERS)
            .filter(|&m| honest(m) && miner_bits[m] != references[m][i])
            .collect();
        bits.push(BitConsensus {
            leader,
            outcome,
            miner_bits,
            reference_mismatches,
        });
    }
    Ok(BallotConsensus { bits })
}

/// One point of a success curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub copies: usize,
    pub trials: usize,
    /// Rounds where honest miners agreed or detected the failure.
    pub p_detectable: f64,
    /// Rounds where every honest miner ended on the same bit.
    pub p_successful: f64,
    pub stderr_detectable: f64,
    pub stderr_successful: f64,
}

pub const CURVE_HEADER: &str = "T,trials,p_detectable,p_successful,stderr_detectable,stderr_successful";

impl CurveRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.copies, self.trials, self.p_detectable, self.p_successful, self.stderr_detectable, self.stderr_successful
        )
    }
}

/// Monte-Carlo success curve: one random round per trial, uniform leader and bit.
pub fn estimate_success<R: Rng + ?Sized>(
    copies: &[usize],
    lambda: f64,
    adversary: AdversaryModel,
    trials: usize,
    source: CopySource,
    rng: &mut R,
) -> Result<Vec<CurveRow>, QbaError> {
    if copies.is_empty() {
        return Err(QbaError::EmptyRange);
    }
    if trials == 0 {
        return Err(QbaError::NoTrials);
    }
    check_lambda(lambda)?;
    adversary.validate()?;
    let base: u64 = rng.gen();
    copies
        .iter()
        .enumerate()
        .map(|(point, &t)| {
            let results = (0..trials as u32)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(base, point as u32, trial);
                    let leader = rng.gen_range(0..MINERS);
                    let complicit = adversary.resolve(leader, &mut rng);
                    let x: u8 = rng.gen_range(0..=1);
                    let batch = sample_copies(t, &mut rng, source);
                    let out = run_broadcast(x, &batch, complicit, lambda)?;
                    Ok((out.guarantee_holds(), out.honest_agreement()))
                })
                .collect::<Result<Vec<_>, QbaError>>()?;
            let d = results.iter().filter(|r| r.0).count() as f64 / trials as f64;
            let s = results.iter().filter(|r| r.1).count() as f64 / trials as f64;
            Ok(CurveRow {
                copies: t,
                trials,
                p_detectable: d,
                p_successful: s,
                stderr_detectable: binomial_stderr(d, trials),
                stderr_successful: binomial_stderr(s, trials),
            })
        })
        .collect()
}
