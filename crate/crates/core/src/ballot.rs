//! Voting matrix, masked ballots, self-tally and the auditor cross-check.
//!
//! Voter `i` owns row `i` of the matrix and privately sends `V[i][j]` to
//! voter `j`. Every row sums to a multiple of `N + 1`, so the column sums
//! cancel out of the ballot total and only the votes survive modulo `N + 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ENTRY_BOUND: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BallotError {
    #[error("need at least 2 voters, got {0}")]
    TooFewVoters(usize),
    #[error("entry bound must be at least 1")]
    ZeroEntryBound,
    #[error("vote must be 0 or 1, got {0}")]
    InvalidVote(u8),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected {expected} ballots, got {got}")]
    BallotCount { expected: usize, got: usize },
    #[error("invalid vote matrix: {0}")]
    InvalidMatrix(String),
}

/// `ceil(log2(n))`, the number of two-bit commitments per ballot.
pub fn commitment_count(voters: usize) -> usize {
    assert!(voters >= 2);
    (usize::BITS - (voters - 1).leading_zeros()) as usize
}

/// Width of an encoded masked ballot: `2 * ceil(log2(N))`.
pub fn ballot_width(voters: usize) -> usize {
    2 * commitment_count(voters)
}

/// Smallest positive value that makes `off_diagonal_sum + d` divisible by `N + 1`.
pub fn diagonal_completion(off_diagonal_sum: u64, voters: usize) -> u64 {
    let modulus = voters as u64 + 1;
    modulus - off_diagonal_sum % modulus
}

/// Row `i` of the voting matrix: uniform off-diagonal entries in `[0, entry_bound]`
/// and a diagonal that completes the row sum to a multiple of `N + 1`.
pub fn generate_row<R: Rng + ?Sized>(
    i: usize,
    voters: usize,
    entry_bound: u64,
    rng: &mut R,
) -> Result<Vec<u64>, BallotError> {
    if voters < 2 {
        return Err(BallotError::TooFewVoters(voters));
    }
    if entry_bound == 0 {
        return Err(BallotError::ZeroEntryBound);
    }
    let mut row: Vec<u64> = (0..voters)
        .map(|j| if j == i { 0 } else { rng.gen_range(0..=entry_bound) })
        .collect();
    row[i] = diagonal_completion(row.iter().sum(), voters);
    Ok(row)
}

/// The integer voting matrix `V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<u64>>", try_from = "Vec<Vec<u64>>")]
pub struct VoteMatrix {
    entries: Vec<Vec<u64>>,
    entry_bound: u64,
}

impl VoteMatrix {
    pub fn generate<R: Rng + ?Sized>(
        voters: usize,
        entry_bound: u64,
        rng: &mut R,
    ) -> Result<Self, BallotError> {
        let entries = (0..voters)
            .map(|i| generate_row(i, voters, entry_bound, rng))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            entries,
            entry_bound,
        })
    }

    pub fn from_rows(entries: Vec<Vec<u64>>, entry_bound: u64) -> Result<Self, BallotError> {
        let m = Self {
            entries,
            entry_bound,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), BallotError> {
        let n = self.entries.len();
        if n < 2 {
            return Err(BallotError::TooFewVoters(n));
        }
        let modulus = n as u64 + 1;
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(BallotError::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row[i] == 0 {
                return Err(BallotError::InvalidMatrix(format!("diagonal {i} is zero")));
            }
            if let Some(j) = (0..n).find(|&j| j != i && row[j] > self.entry_bound) {
                return Err(BallotError::InvalidMatrix(format!(
                    "entry ({i},{j}) exceeds bound {}",
                    self.entry_bound
                )));
            }
            if row.iter().sum::<u64>() % modulus != 0 {
                return Err(BallotError::InvalidMatrix(format!(
                    "row {i} sum is not divisible by {modulus}"
                )));
            }
        }
        Ok(())
    }

    pub fn voters(&self) -> usize {
        self.entries.len()
    }

    pub fn entry_bound(&self) -> u64 {
        self.entry_bound
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i][j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.entries[i]
    }

    /// Column `i`: everything voter `i` receives, including its own diagonal.
    pub fn column(&self, i: usize) -> Vec<u64> {
        self.entries.iter().map(|row| row[i]).collect()
    }
}

impl From<VoteMatrix> for Vec<Vec<u64>> {
    fn from(m: VoteMatrix) -> Self {
        m.entries
    }
}

impl TryFrom<Vec<Vec<u64>>> for VoteMatrix {
    type Error = BallotError;

    fn try_from(entries: Vec<Vec<u64>>) -> Result<Self, Self::Error> {
        let max_off = entries
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, &v)| v))
            .max()
            .unwrap_or(0);
        Self::from_rows(entries, max_off.max(DEFAULT_ENTRY_BOUND))
    }
}

/// A voter's blinded ballot, reduced modulo `N + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedBallot {
    pub voter: usize,
    pub value: u64,
    /// Big-endian, zero-padded, `2 * ceil(log2(N))` bits.
    pub bits: Vec<u8>,
}

impl MaskedBallot {
    pub fn new(voter: usize, value: u64, voters: usize) -> Self {
        let width = ballot_width(voters);
        let bits = (0..width)
            .rev()
            .map(|shift| ((value >> shift) & 1) as u8)
            .collect();
        Self { voter, value, bits }
    }

    /// Rebuild a ballot from its committed bits.
    pub fn from_bits(voter: usize, bits: &[u8]) -> Self {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | (b & 1) as u64);
        Self {
            voter,
            value,
            bits: bits.to_vec(),
        }
    }
}

/// `(sum of received column + vote) mod (N + 1)`.
pub fn masked_ballot(
    voter: usize,
    received_column: &[u64],
    vote: u8,
    voters: usize,
) -> Result<MaskedBallot, BallotError> {
    if vote > 1 {
        return Err(BallotError::InvalidVote(vote));
    }
    if voters < 2 {
        return Err(BallotError::TooFewVoters(voters));
    }
    if received_column.len() != voters {
        return Err(BallotError::LengthMismatch {
            expected: voters,
            got: received_column.len(),
        });
    }
    let modulus = voters as u64 + 1;
    let sum = received_column
        .iter()
        .fold(vote as u64, |acc, &v| (acc + v % modulus) % modulus);
    Ok(MaskedBallot::new(voter, sum, voters))
}

/// Number of yes votes: the ballot sum modulo `N + 1`.
pub fn tally(ballots: &[MaskedBallot], voters: usize) -> Result<u64, BallotError> {
    if ballots.len() != voters {
        return Err(BallotError::BallotCount {
            expected: voters,
            got: ballots.len(),
        });
    }
    let modulus = voters as u64 + 1;
    Ok(ballots.iter().fold(0, |acc, b| (acc + b.value) % modulus))
}

/// A voter that sends `V[from][to] + offset` instead of the true share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyingShare {
    pub from: usize,
    pub to: usize,
    pub offset: u64,
}

/// Value voter `to` receives from voter `from` under the given lies.
pub fn share_sent(matrix: &VoteMatrix, from: usize, to: usize, lies: &[LyingShare]) -> u64 {
    let offset: u64 = lies
        .iter()
        .filter(|l| l.from == from && l.to == to)
        .map(|l| l.offset)
        .sum();
    matrix.get(from, to) + offset
}

/// The two answers an auditor collected about `V[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditClaim {
    pub asker: usize,
    pub i: usize,
    pub j: usize,
    pub value_from_i: u64,
    pub value_from_j: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Honest,
    Cheating,
}

pub fn audit(claim: &AuditClaim) -> Verdict {
    if claim.value_from_i == claim.value_from_j {
        Verdict::Honest
    } else {
        Verdict::Cheating
    }
}
