//! Deterministic in-process network.
//!
//! Parties register through the EPS, classical messages are delivered
//! instantly and in order, and quantum registers have exactly one owner.
//! Everything that crosses a channel lands in an append-only transcript.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ballot::Verdict;
use crate::csqbc::{BusVerdict, DecodeResult};
use crate::quantum::{MeasBasis, ProductRegister, QuantumError, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Voter,
    Miner,
    Eps,
    Auditor,
}

impl Role {
    fn prefix(self) -> &'static str {
        match self {
            Role::Voter => "V",
            Role::Miner => "M",
            Role::Eps => "EPS",
            Role::Auditor => "A",
        }
    }
}

/// `(role, ordinal)`; printed as `V0`, `M2`, `EPS0`, `A0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId {
    pub role: Role,
    pub index: usize,
}

impl PartyId {
    pub fn new(role: Role, index: usize) -> Self {
        Self { role, index }
    }

    pub fn voter(index: usize) -> Self {
        Self::new(Role::Voter, index)
    }

    pub fn miner(index: usize) -> Self {
        Self::new(Role::Miner, index)
    }

    pub const EPS: PartyId = PartyId {
        role: Role::Eps,
        index: 0,
    };
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.role.prefix(), self.index)
    }
}

impl FromStr for PartyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        for role in [Role::Eps, Role::Voter, Role::Miner, Role::Auditor] {
            if let Some(rest) = s.strip_prefix(role.prefix()) {
                return rest
                    .parse()
                    .map(|index| PartyId { role, index })
                    .map_err(|_| format!("bad party id {s:?}"));
            }
        }
        Err(format!("bad party id {s:?}"))
    }
}

impl Serialize for PartyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Classical,
    Quantum,
}

/// Everything that can cross a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Register {
        credentials: String,
    },
    Share {
        value: u64,
    },
    BusTransfer {
        session: usize,
        sequence: usize,
        qubits: usize,
    },
    VerifyRequest {
        session: usize,
        sequences: Vec<usize>,
    },
    RevealLabels {
        session: usize,
        sequence: usize,
        labels: Vec<StateLabel>,
    },
    VerifyVerdict {
        session: usize,
        verdict: BusVerdict,
    },
    CommitTransfer {
        session: usize,
        chunk: usize,
        qubits: usize,
    },
    CsReveal {
        session: usize,
        chunk: usize,
        cs: Vec<u8>,
    },
    DecodeResult {
        session: usize,
        chunk: usize,
        result: DecodeResult,
    },
    QbaBroadcast {
        voter: usize,
        bit: usize,
        value: u8,
        indices: Vec<usize>,
    },
    QbaFlag {
        voter: usize,
        bit: usize,
        value: u8,
        consistent: bool,
    },
    QbaConvince {
        voter: usize,
        bit: usize,
        indices: Vec<usize>,
    },
    AuditQuery {
        i: usize,
        j: usize,
    },
    AuditResponse {
        i: usize,
        j: usize,
        value: u64,
    },
    AuditVerdict {
        i: usize,
        j: usize,
        verdict: Verdict,
    },
}

impl Message {
    pub fn channel(&self) -> Channel {
        match self {
            Message::BusTransfer { .. } | Message::CommitTransfer { .. } => Channel::Quantum,
            _ => Channel::Classical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub from: PartyId,
    pub to: PartyId,
    pub channel: Channel,
    #[serde(flatten)]
    pub message: Message,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("party {0} is not registered")]
    Unregistered(PartyId),
    #[error("credentials {0:?} are already registered")]
    DuplicateCredentials(String),
    #[error("{party} does not own register {register}")]
    NotOwner { party: PartyId, register: RegisterId },
    #[error("register {0} does not exist")]
    UnknownRegister(RegisterId),
    #[error("{0:?} message sent on the wrong channel")]
    WrongChannel(Channel),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterId(pub u64);

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub seq: u64,
}

#[derive(Debug, Clone)]
struct Held {
    owner: PartyId,
    register: ProductRegister,
}

#[derive(Debug, Clone)]
pub struct Network {
    parties: BTreeMap<PartyId, String>,
    credentials: BTreeSet<String>,
    registers: BTreeMap<RegisterId, Held>,
    next_register: u64,
    transcript: Vec<TranscriptEntry>,
}

impl Default for Network {
    fn default() -> Self {
        Self::new()
    }
}

impl Network {
    /// A network containing only the EPS.
    pub fn new() -> Self {
        let mut parties = BTreeMap::new();
        parties.insert(PartyId::EPS, "eps".to_string());
        Self {
            parties,
            credentials: BTreeSet::from(["eps".to_string()]),
            registers: BTreeMap::new(),
            next_register: 0,
            transcript: Vec::new(),
        }
    }

    /// Register a device with the EPS under the next free ordinal for its role.
    pub fn register_party(&mut self, role: Role, credentials: &str) -> Result<PartyId, NetError> {
        if self.credentials.contains(credentials) {
            return Err(NetError::DuplicateCredentials(credentials.to_string()));
        }
        let id = PartyId::new(role, self.parties(role).len());
        self.credentials.insert(credentials.to_string());
        self.parties.insert(id, credentials.to_string());
        self.append(
            id,
            PartyId::EPS,
            Message::Register {
                credentials: credentials.to_string(),
            },
        );
        Ok(id)
    }

    pub fn is_registered(&self, id: PartyId) -> bool {
        self.parties.contains_key(&id)
    }

    pub fn parties(&self, role: Role) -> Vec<PartyId> {
        self.parties.keys().copied().filter(|p| p.role == role).collect()
    }

    fn check(&self, id: PartyId) -> Result<(), NetError> {
        if self.is_registered(id) {
            Ok(())
        } else {
            Err(NetError::Unregistered(id))
        }
    }

    fn append(&mut self, from: PartyId, to: PartyId, message: Message) -> Receipt {
        let seq = self.transcript.len() as u64 + 1;
        self.transcript.push(TranscriptEntry {
            seq,
            from,
            to,
            channel: message.channel(),
            message,
        });
        Receipt { seq }
    }

    pub fn send_classical(&mut self, from: PartyId, to: PartyId, message: Message) -> Result<Receipt, NetError> {
        self.check(from)?;
        self.check(to)?;
        if message.channel() != Channel::Classical {
            return Err(NetError::WrongChannel(Channel::Quantum));
        }
        Ok(self.append(from, to, message))
    }

    /// Hand a freshly prepared register to `owner`.
    pub fn create_register(&mut self, owner: PartyId, register: ProductRegister) -> Result<RegisterId, NetError> {
        self.check(owner)?;
        let id = RegisterId(self.next_register);
        self.next_register += 1;
        self.registers.insert(id, Held { owner, register });
        Ok(id)
    }

    fn owned(&mut self, party: PartyId, id: RegisterId) -> Result<&mut Held, NetError> {
        let held = self.registers.get_mut(&id).ok_or(NetError::UnknownRegister(id))?;
        if held.owner != party {
            return Err(NetError::NotOwner { party, register: id });
        }
        Ok(held)
    }

    /// Move a register to `to` by swapping it into fresh qubits on the receiving side.
    ///
    /// The sender keeps nothing but `|0>` ancillas, and loses the handle.
    pub fn transfer_quantum(
        &mut self,
        from: PartyId,
        to: PartyId,
        id: RegisterId,
        message: Message,
    ) -> Result<Receipt, NetError> {
        self.check(from)?;
        self.check(to)?;
        if message.channel() != Channel::Quantum {
            return Err(NetError::WrongChannel(Channel::Classical));
        }
        let held = self.owned(from, id)?;
        let moved = held.register.transfer_out()?;
        held.register = moved;
        held.owner = to;
        Ok(self.append(from, to, message))
    }

    pub fn owner(&self, id: RegisterId) -> Option<PartyId> {
        self.registers.get(&id).map(|h| h.owner)
    }

    /// Mutable access for local operations by the owner.
    pub fn register_mut(&mut self, party: PartyId, id: RegisterId) -> Result<&mut ProductRegister, NetError> {
        Ok(&mut self.owned(party, id)?.register)
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        party: PartyId,
        id: RegisterId,
        qubit: usize,
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<u8, NetError> {
        Ok(self.register_mut(party, id)?.measure(qubit, basis, rng)?)
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// One JSON object per line.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.transcript {
            out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
            out.push('\n');
        }
        out
    }
}
