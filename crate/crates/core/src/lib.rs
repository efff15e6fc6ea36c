//! Deterministic simulator of a self-tallying quantum binary voting protocol.
//!
//! Voters blind their votes with a shared integer matrix ([`ballot`]), commit
//! the masked ballots to three miners with a cheat-sensitive quantum bit
//! commitment ([`csqbc`]), and the miners agree on every ballot bit with a
//! qutrit-based detectable broadcast ([`qba`]). [`netsim`] carries all traffic
//! and keeps the audit transcript; [`election`] runs whole elections and
//! [`experiments`] the Monte-Carlo sweeps.

pub mod ballot;
pub mod csqbc;
pub mod election;
pub mod experiments;
pub mod netsim;
pub mod qba;
pub mod quantum;
pub mod rng;
