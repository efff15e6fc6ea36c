//! One election end to end.
//!
//! Phases run in order: registration, ballot preparation (share exchange),
//! commitment of every masked ballot to every miner, opening, per-bit
//! consensus among the miners, tally, and the auditor's share cross-check.
//! Every exchange goes through [`Network`], so the transcript is the full
//! record of the run.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ballot::{
    audit, commitment_count, masked_ballot, share_sent, tally, AuditClaim, BallotError, LyingShare, MaskedBallot,
    Verdict, VoteMatrix, DEFAULT_ENTRY_BOUND,
};
use crate::csqbc::{
    balanced_labels, choose_verification_set, commit_bits, decode_commitment, miner_measure, verify_bus, BusVerdict,
    CommitValue, CsqbcError, CsqbcParams, DecodeFailure, DecodeResult,
};
use crate::netsim::{Message, NetError, Network, PartyId, RegisterId, Role, TranscriptEntry};
use crate::qba::{consensus_on_ballot, receivers_of, AdversaryModel, BroadcastKind, CopySource, QbaError, MINERS};
use crate::quantum::{MeasBasis, ProductRegister, StateLabel};
use crate::rng::{seeded, SimRng};

pub const DEFAULT_RETRY_BUDGET: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ballot(#[from] BallotError),
    #[error(transparent)]
    Csqbc(#[from] CsqbcError),
    #[error(transparent)]
    Qba(#[from] QbaError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Votes {
    Random,
    Explicit(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ElectionAdversary {
    pub qba: AdversaryModel,
    pub lying_shares: Vec<LyingShare>,
    /// Miner that slips a known-state probe among its sequences in every session.
    pub probing_miner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectionConfig {
    pub voters: usize,
    pub miners: usize,
    pub votes: Votes,
    pub n: usize,
    pub m: usize,
    pub copies: usize,
    pub lambda: f64,
    pub adversary: ElectionAdversary,
    pub entry_bound: u64,
    pub retry_budget: usize,
    pub copy_source: CopySource,
    pub seed: u64,
}

impl ElectionConfig {
    /// An honest election with the default operating point.
    pub fn honest(voters: usize, votes: Votes, seed: u64) -> Self {
        Self {
            voters,
            miners: MINERS,
            votes,
            n: 16,
            m: 3,
            copies: 30,
            lambda: 0.9,
            adversary: ElectionAdversary::default(),
            entry_bound: DEFAULT_ENTRY_BOUND,
            retry_budget: DEFAULT_RETRY_BUDGET,
            copy_source: CopySource::Ideal,
            seed,
        }
    }

    pub fn csqbc_params(&self) -> Result<CsqbcParams, ElectionError> {
        Ok(CsqbcParams::new(self.n, self.m, commitment_count(self.voters))?)
    }

    pub fn validate(&self) -> Result<(), ElectionError> {
        let bad = |s: String| Err(ElectionError::Config(s));
        if self.voters < 2 {
            return bad(format!("need at least 2 voters, got {}", self.voters));
        }
        if self.miners != MINERS {
            return bad(format!("exactly {MINERS} miners are supported, got {}", self.miners));
        }
        if let Votes::Explicit(v) = &self.votes {
            if v.len() != self.voters {
                return bad(format!("{} votes for {} voters", v.len(), self.voters));
            }
            if let Some(x) = v.iter().find(|&&x| x > 1) {
                return bad(format!("vote {x} is not 0 or 1"));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda {} outside (0, 1]", self.lambda));
        }
        if self.entry_bound == 0 {
            return bad("entry bound must be positive".into());
        }
        for l in &self.adversary.lying_shares {
            if l.from >= self.voters || l.to >= self.voters || l.from == l.to {
                return bad(format!("lying share {} -> {} is not between two voters", l.from, l.to));
            }
        }
        if self.adversary.probing_miner.is_some_and(|p| p >= MINERS) {
            return bad("probing miner index out of range".into());
        }
        self.adversary.qba.validate()?;
        self.csqbc_params()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AbortReason {
    BusVerificationFailed { voter: usize, miner: usize, session: usize },
    RetriesExhausted { voter: usize, miner: usize, chunk: usize, attempts: usize },
    ConsensusDetectable { voter: usize, bit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ElectionStats {
    pub sessions: usize,
    pub retries: usize,
    pub ambiguous: usize,
    pub inconsistent: usize,
    pub qubits_used: usize,
    pub aharonov_copies: usize,
    pub probes_retained: usize,
    pub probes_audited: usize,
    pub transcript_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub i: usize,
    pub j: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectionResult {
    pub config: ElectionConfig,
    pub votes: Vec<u8>,
    pub expected_tally: u64,
    pub status: Status,
    pub abort: Option<AbortReason>,
    pub tally: Option<u64>,
    /// `decoded[voter][miner]`: the ballot bits that miner opened.
    pub decoded: Vec<Vec<Vec<u8>>>,
    /// `consensus[voter][bit]`.
    pub consensus: Vec<Vec<BroadcastKind>>,
    pub agreed_ballots: Vec<Vec<u8>>,
    pub audit: Vec<AuditRecord>,
    pub stats: ElectionStats,
}

#[derive(Debug, Clone)]
pub struct ElectionOutput {
    pub result: ElectionResult,
    pub network: Network,
}

impl ElectionOutput {
    pub fn transcript(&self) -> &[TranscriptEntry] {
        self.network.transcript()
    }

    pub fn transcript_jsonl(&self) -> String {
        self.network.transcript_jsonl()
    }
}

/// One commitment session between a voter and a miner.
struct Session {
    id: usize,
    voter: PartyId,
    miner: PartyId,
    values: Vec<CommitValue>,
    /// What the miner recorded per chunk.
    labels: Vec<Vec<StateLabel>>,
    cs: Vec<Vec<u8>>,
    bases: Vec<Vec<MeasBasis>>,
    outcomes: Vec<Vec<u8>>,
}

struct Run<'a> {
    config: &'a ElectionConfig,
    net: Network,
    rng: SimRng,
    stats: ElectionStats,
}

impl Run<'_> {
    /// BUS hand-over, audit of `m` sequences, then commitment of each value on a retained one.
    fn commit(&mut self, voter: PartyId, miner: PartyId, values: &[CommitValue]) -> Result<Result<Session, AbortReason>, ElectionError> {
        let (n, m, k) = (self.config.n, self.config.m, values.len());
        let id = self.stats.sessions;
        self.stats.sessions += 1;
        let total = m + k;
        self.stats.qubits_used += total * n;
        let probe_at = (self.config.adversary.probing_miner == Some(miner.index)).then(|| self.rng.gen_range(0..total));

        let mut sequences: Vec<(Vec<StateLabel>, RegisterId)> = Vec::with_capacity(total);
        for s in 0..total {
            let labels = balanced_labels(n, &mut self.rng);
            let register = if probe_at == Some(s) {
                ProductRegister::zeros(n)
            } else {
                ProductRegister::from_labels(&labels)
            };
            let reg = self.net.create_register(miner, register)?;
            self.net.transfer_quantum(
                miner,
                voter,
                reg,
                Message::BusTransfer {
                    session: id,
                    sequence: s,
                    qubits: n,
                },
            )?;
            sequences.push((labels, reg));
        }

        let verified = choose_verification_set(m, k, &mut self.rng);
        self.net.send_classical(
            voter,
            miner,
            Message::VerifyRequest {
                session: id,
                sequences: verified.clone(),
            },
        )?;
        let mut verdict = BusVerdict::Pass;
        for &s in &verified {
            let (labels, reg) = &sequences[s];
            self.net.send_classical(
                miner,
                voter,
                Message::RevealLabels {
                    session: id,
                    sequence: s,
                    labels: labels.clone(),
                },
            )?;
            if verify_bus(self.net.register_mut(voter, *reg)?, labels, &mut self.rng)? == BusVerdict::Fail {
                verdict = BusVerdict::Fail;
            }
        }
        self.net.send_classical(voter, miner, Message::VerifyVerdict { session: id, verdict })?;
        if let Some(p) = probe_at {
            if verified.contains(&p) {
                self.stats.probes_audited += 1;
            } else {
                self.stats.probes_retained += 1;
            }
        }
        if verdict == BusVerdict::Fail {
            return Ok(Err(AbortReason::BusVerificationFailed {
                voter: voter.index,
                miner: miner.index,
                session: id,
            }));
        }

        let retained: Vec<usize> = (0..total).filter(|s| !verified.contains(s)).collect();
        let mut session = Session {
            id,
            voter,
            miner,
            values: values.to_vec(),
            labels: vec![],
            cs: vec![],
            bases: vec![],
            outcomes: vec![],
        };
        for (chunk, &value) in values.iter().enumerate() {
            let (labels, reg) = &sequences[retained[chunk]];
            let cs = commit_bits(self.net.register_mut(voter, *reg)?, value, &mut self.rng)?;
            self.net.transfer_quantum(
                voter,
                miner,
                *reg,
                Message::CommitTransfer {
                    session: id,
                    chunk,
                    qubits: n,
                },
            )?;
            // the miner measures on arrival, before anything is revealed
            let (bases, outcomes) = miner_measure(self.net.register_mut(miner, *reg)?, &mut self.rng)?;
            session.labels.push(labels.clone());
            session.cs.push(cs);
            session.bases.push(bases);
            session.outcomes.push(outcomes);
        }
        Ok(Ok(session))
    }

    fn open(&mut self, session: &Session, chunk: usize) -> Result<DecodeResult, ElectionError> {
        self.net.send_classical(
            session.voter,
            session.miner,
            Message::CsReveal {
                session: session.id,
                chunk,
                cs: session.cs[chunk].clone(),
            },
        )?;
        let result = decode_commitment(
            &session.labels[chunk],
            &session.cs[chunk],
            &session.bases[chunk],
            &session.outcomes[chunk],
        )?;
        match result {
            DecodeResult::Failed(DecodeFailure::Ambiguous) => self.stats.ambiguous += 1,
            DecodeResult::Failed(DecodeFailure::Inconsistent) => self.stats.inconsistent += 1,
            DecodeResult::Bits(_) => {}
        }
        self.net.send_classical(
            session.miner,
            session.voter,
            Message::DecodeResult {
                session: session.id,
                chunk,
                result,
            },
        )?;
        Ok(result)
    }

    /// Open every chunk, re-committing failed ones in fresh single-chunk sessions.
    fn open_with_retries(&mut self, session: &Session) -> Result<Result<Vec<u8>, AbortReason>, ElectionError> {
        let mut bits = Vec::with_capacity(2 * session.values.len());
        for chunk in 0..session.values.len() {
            let mut result = self.open(session, chunk)?;
            let mut attempts = 0;
            while result.bits().is_none() {
                if attempts == self.config.retry_budget {
                    return Ok(Err(AbortReason::RetriesExhausted {
                        voter: session.voter.index,
                        miner: session.miner.index,
                        chunk,
                        attempts,
                    }));
                }
                attempts += 1;
                self.stats.retries += 1;
                let retry = match self.commit(session.voter, session.miner, &session.values[chunk..=chunk])? {
                    Ok(s) => s,
                    Err(abort) => return Ok(Err(abort)),
                };
                result = self.open(&retry, 0)?;
            }
            bits.extend(result.bits().expect("loop exits on success").bits());
        }
        Ok(Ok(bits))
    }
}

/// Rebuild every `(i, j)` claim pair from the audit responses in a transcript.
pub fn audit_claims_from_transcript(transcript: &[TranscriptEntry]) -> Vec<AuditClaim> {
    use std::collections::BTreeMap;
    let mut answers: BTreeMap<(usize, usize), (Option<u64>, Option<u64>)> = BTreeMap::new();
    for e in transcript {
        if let Message::AuditResponse { i, j, value } = e.message {
            let slot = answers.entry((i, j)).or_default();
            if e.from == PartyId::voter(i) {
                slot.0 = Some(value);
            } else if e.from == PartyId::voter(j) {
                slot.1 = Some(value);
            }
        }
    }
    answers
        .into_iter()
        .filter_map(|((i, j), (a, b))| {
            Some(AuditClaim {
                asker: j,
                i,
                j,
                value_from_i: a?,
                value_from_j: b?,
            })
        })
        .collect()
}

pub fn run_election(config: &ElectionConfig) -> Result<ElectionOutput, ElectionError> {
    config.validate()?;
    let params = config.csqbc_params()?;
    let n_voters = config.voters;
    let mut run = Run {
        config,
        net: Network::new(),
        rng: seeded(config.seed),
        stats: ElectionStats::default(),
    };

    // registration
    let voters = (0..n_voters)
        .map(|i| run.net.register_party(Role::Voter, &format!("voter-{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let miners = (0..MINERS)
        .map(|j| run.net.register_party(Role::Miner, &format!("miner-{j}")))
        .collect::<Result<Vec<_>, _>>()?;
    let auditor = run.net.register_party(Role::Auditor, "auditor-0")?;
    let votes = match &config.votes {
        Votes::Explicit(v) => v.clone(),
        Votes::Random => (0..n_voters).map(|_| run.rng.gen_range(0..=1)).collect(),
    };
    let expected_tally = votes.iter().map(|&v| v as u64).sum();

    // ballot preparation
    let matrix = VoteMatrix::generate(n_voters, config.entry_bound, &mut run.rng)?;
    let mut received = vec![vec![0u64; n_voters]; n_voters];
    for i in 0..n_voters {
        received[i][i] = matrix.get(i, i);
        for j in (0..n_voters).filter(|&j| j != i) {
            let value = share_sent(&matrix, i, j, &config.adversary.lying_shares);
            run.net.send_classical(voters[i], voters[j], Message::Share { value })?;
            received[j][i] = value;
        }
    }
    let masked = (0..n_voters)
        .map(|v| masked_ballot(v, &received[v], votes[v], n_voters))
        .collect::<Result<Vec<MaskedBallot>, _>>()?;

    let mut result = ElectionResult {
        config: config.clone(),
        votes,
        expected_tally,
        status: Status::Completed,
        abort: None,
        tally: None,
        decoded: vec![vec![]; n_voters],
        consensus: vec![vec![]; n_voters],
        agreed_ballots: vec![],
        audit: vec![],
        stats: ElectionStats::default(),
    };
    let finish = |mut result: ElectionResult, run: Run, abort: Option<AbortReason>| {
        if abort.is_some() {
            result.status = Status::Aborted;
            result.abort = abort;
        }
        result.stats = run.stats;
        result.stats.transcript_entries = run.net.transcript().len();
        Ok(ElectionOutput {
            result,
            network: run.net,
        })
    };

    // commitment
    let mut sessions = Vec::with_capacity(n_voters * MINERS);
    for (v, ballot) in masked.iter().enumerate() {
        let values: Vec<CommitValue> = ballot.bits.chunks(2).map(|c| CommitValue::from_bits(c[0], c[1])).collect();
        debug_assert_eq!(values.len(), params.k);
        for &miner in &miners {
            match run.commit(voters[v], miner, &values)? {
                Ok(s) => sessions.push(s),
                Err(abort) => return finish(result, run, Some(abort)),
            }
        }
    }

    // opening
    for session in &sessions {
        match run.open_with_retries(session)? {
            Ok(bits) => result.decoded[session.voter.index].push(bits),
            Err(abort) => return finish(result, run, Some(abort)),
        }
    }

    // consensus, one agreement per ballot bit
    for v in 0..n_voters {
        let outcome = consensus_on_ballot(
            &result.decoded[v],
            config.copies,
            config.adversary.qba,
            config.lambda,
            config.copy_source,
            &mut run.rng,
        )?;
        run.stats.aharonov_copies += outcome.bits.len() * config.copies;
        for (bit, c) in outcome.bits.iter().enumerate() {
            log_round(&mut run.net, &miners, v, bit, c)?;
        }
        result.consensus[v] = outcome.kinds();
        if let Some(bit) = outcome.kinds().iter().position(|&k| k == BroadcastKind::Detectable) {
            return finish(result, run, Some(AbortReason::ConsensusDetectable { voter: v, bit }));
        }
        result.agreed_ballots.push(outcome.agreed().into_iter().map(|b| b.expect("successful round")).collect());
    }

    // tally
    let ballots: Vec<MaskedBallot> = result
        .agreed_ballots
        .iter()
        .enumerate()
        .map(|(v, bits)| MaskedBallot::from_bits(v, bits))
        .collect();
    result.tally = Some(tally(&ballots, n_voters)?);

    // audit of every off-diagonal share
    for i in 0..n_voters {
        for j in (0..n_voters).filter(|&j| j != i) {
            run.net.send_classical(auditor, voters[i], Message::AuditQuery { i, j })?;
            run.net.send_classical(voters[i], auditor, Message::AuditResponse { i, j, value: matrix.get(i, j) })?;
            run.net.send_classical(auditor, voters[j], Message::AuditQuery { i, j })?;
            run.net.send_classical(voters[j], auditor, Message::AuditResponse { i, j, value: received[j][i] })?;
        }
    }
    for claim in audit_claims_from_transcript(run.net.transcript()) {
        let verdict = audit(&claim);
        run.net.send_classical(auditor, voters[claim.asker], Message::AuditVerdict { i: claim.i, j: claim.j, verdict })?;
        result.audit.push(AuditRecord {
            i: claim.i,
            j: claim.j,
            verdict,
        });
    }
    finish(result, run, None)
}

fn log_round(
    net: &mut Network,
    miners: &[PartyId],
    voter: usize,
    bit: usize,
    c: &crate::qba::BitConsensus,
) -> Result<(), NetError> {
    let rec = receivers_of(c.leader);
    let out = &c.outcome;
    for slot in 0..2 {
        let r = &out.receivers[slot];
        net.send_classical(
            miners[c.leader],
            miners[rec[slot]],
            Message::QbaBroadcast {
                voter,
                bit,
                value: r.received,
                indices: r.index_set.clone(),
            },
        )?;
    }
    for slot in 0..2 {
        let r = &out.receivers[slot];
        net.send_classical(
            miners[rec[slot]],
            miners[rec[1 - slot]],
            Message::QbaFlag {
                voter,
                bit,
                value: r.claimed,
                consistent: r.consistent,
            },
        )?;
    }
    if let Some(step) = &out.convince {
        net.send_classical(
            miners[rec[0]],
            miners[rec[1]],
            Message::QbaConvince {
                voter,
                bit,
                indices: step.indices.clone(),
            },
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_election_counts_two() {
        let mut cfg = ElectionConfig::honest(3, Votes::Explicit(vec![1, 0, 1]), 7);
        cfg.n = 16;
        cfg.m = 3;
        let out = run_election(&cfg).unwrap();
        let r = &out.result;
        assert_eq!(r.status, Status::Completed, "{:?}", r.abort);
        assert_eq!(r.tally, Some(2));
        assert!(r.consensus.iter().flatten().all(|&k| k == BroadcastKind::Successful));
        assert!(r.audit.iter().all(|a| a.verdict == Verdict::Honest));
        assert_eq!(r.audit.len(), 6);
        for v in 0..3 {
            assert!(r.decoded[v].iter().all(|bits| *bits == r.agreed_ballots[v]));
        }
    }

    #[test]
    fn all_zero_votes() {
        let out = run_election(&ElectionConfig::honest(3, Votes::Explicit(vec![0, 0, 0]), 1)).unwrap();
        assert_eq!(out.result.tally, Some(0));
    }

    #[test]
    fn config_errors() {
        let mut cfg = ElectionConfig::honest(3, Votes::Random, 1);
        cfg.miners = 4;
        assert!(matches!(run_election(&cfg), Err(ElectionError::Config(_))));
        let cfg = ElectionConfig::honest(3, Votes::Explicit(vec![1, 0]), 1);
        assert!(matches!(run_election(&cfg), Err(ElectionError::Config(_))));
        let mut cfg = ElectionConfig::honest(3, Votes::Random, 1);
        cfg.n = 6;
        assert!(matches!(run_election(&cfg), Err(ElectionError::Csqbc(_))));
        cfg.n = 8;
        cfg.lambda = 0.0;
        assert!(matches!(run_election(&cfg), Err(ElectionError::Config(_))));
    }

    #[test]
    fn lying_share_is_caught_by_audit() {
        let mut cfg = ElectionConfig::honest(4, Votes::Explicit(vec![1, 1, 0, 0]), 3);
        cfg.adversary.lying_shares = vec![LyingShare { from: 0, to: 2, offset: 1 }];
        let r = run_election(&cfg).unwrap().result;
        assert_eq!(r.status, Status::Completed);
        let cheats: Vec<_> = r.audit.iter().filter(|a| a.verdict == Verdict::Cheating).collect();
        assert_eq!(cheats.len(), 1);
        assert_eq!((cheats[0].i, cheats[0].j), (0, 2));
        assert_eq!(r.tally, Some(3));
    }

    #[test]
    fn probing_miner_is_usually_caught() {
        let mut aborted = 0;
        for seed in 0..20 {
            let mut cfg = ElectionConfig::honest(3, Votes::Random, seed);
            cfg.adversary.probing_miner = Some(1);
            let r = run_election(&cfg).unwrap().result;
            if matches!(r.abort, Some(AbortReason::BusVerificationFailed { miner: 1, .. })) {
                aborted += 1;
            }
        }
        assert!(aborted > 10);
    }

    #[test]
    fn transcript_is_reproducible() {
        let cfg = ElectionConfig::honest(4, Votes::Random, 11);
        let a = run_election(&cfg).unwrap();
        let b = run_election(&cfg).unwrap();
        assert_eq!(a.transcript_jsonl(), b.transcript_jsonl());
        assert_eq!(a.result, b.result);
    }
}
