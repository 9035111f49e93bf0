//! The aggregation protocol: configuration, client and server state
//! machines, and the ideal-functionality oracle used to check them.
//!
//! One round has four steps. Clients Shamir-share a fresh seed (step 1),
//! upload their vector masked by the seed's PRG expansion (step 2), under
//! the active-malicious mode co-sign the server's roster of connected
//! clients (step 3), and send one share of the summed live seeds (step 4).
//! The server reconstructs that sum once, expands the aggregate mask,
//! divides it out of the product of masked vectors, and solves a bounded
//! discrete log per component.

pub mod client;
pub mod ideal;
pub mod messages;
pub mod server;

pub use client::Client;
pub use ideal::ideal_aggregate;
pub use server::Server;

use num_bigint::BigUint;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::hprg::{Hprg, MaskBasis};
use crate::modmath::{FieldParams, GroupParams};

pub type ClientId = u32;

/// Message routing endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyId {
    Server,
    Client(ClientId),
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartyId::Server => write!(f, "server"),
            PartyId::Client(id) => write!(f, "client:{id}"),
        }
    }
}

/// Protocol structure: whether the consistency round and signatures exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SemiHonest,
    Malicious,
}

/// Adversary assumption used to derive the minimum safe threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreatModel {
    /// Parties follow the protocol; any threshold works.
    SemiHonest,
    /// Active server, honest clients: the server can try to show different
    /// rosters to different clients, but nobody signs two rosters.
    MaliciousServer,
    /// Active server colluding with up to `assumed_malicious` active
    /// clients, who may double-sign rosters.
    MaliciousServerAndClients { assumed_malicious: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid threshold: need 0 < t <= n, got t={t}, n={n}")]
    InvalidThreshold { t: usize, n: usize },
    #[error("threshold too low: minimum t for this threat model is {required}")]
    ThresholdTooLow { required: usize },
    #[error("too many assumed malicious clients: need n_c < n/3, maximum is {max}")]
    TooManyMaliciousClients { max: usize },
    #[error("q too small: need q > n·alpha")]
    GroupOrderTooSmall,
    #[error("field modulus too small: need P > n·q")]
    FieldTooSmall,
    #[error("mode/threat mismatch: malicious threat models need malicious mode")]
    ModeMismatch,
    #[error("key directory has {got} client entries, expected {expected}")]
    DirectorySize { got: usize, expected: usize },
    #[error("input vector for client {client}: {problem}")]
    BadInput { client: ClientId, problem: String },
    #[error("inputs defined for {got} clients, expected {expected}")]
    InputCount { got: usize, expected: usize },
    #[error("invalid dropout schedule: {0}")]
    BadSchedule(String),
}

/// Minimum-threshold check per threat model.
///
/// With an active server and honest clients, two rosters can both collect
/// `t` distinct signatures only when `t <= n/2`; with `n_c` colluding
/// signers the bound moves to `t <= (n + n_c)/2` and `n_c` itself must stay
/// below `n/3`.
pub fn validate_threshold(n: usize, t: usize, model: &ThreatModel) -> Result<(), ConfigError> {
    if t == 0 || t > n {
        return Err(ConfigError::InvalidThreshold { t, n });
    }
    match model {
        ThreatModel::SemiHonest => Ok(()),
        ThreatModel::MaliciousServer => {
            let required = n / 2 + 1;
            if t < required {
                return Err(ConfigError::ThresholdTooLow { required });
            }
            Ok(())
        }
        ThreatModel::MaliciousServerAndClients { assumed_malicious } => {
            if assumed_malicious * 3 >= n {
                return Err(ConfigError::TooManyMaliciousClients { max: n.saturating_sub(1) / 3 });
            }
            let required = 2 * n / 3 + 1;
            if t < required {
                return Err(ConfigError::ThresholdTooLow { required });
            }
            Ok(())
        }
    }
}

/// Per-party public keys known to everyone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyKeys {
    pub spk: [u8; 32],
    pub cpk: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyDirectory {
    /// Index 0 holds client 1.
    pub clients: Vec<PartyKeys>,
    pub server: PartyKeys,
}

impl KeyDirectory {
    pub fn client(&self, id: ClientId) -> &PartyKeys {
        &self.clients[(id - 1) as usize]
    }
}

/// A client's private input: `m` integers in `[0, alpha]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradientVector(Vec<u64>);

impl GradientVector {
    pub fn new(values: Vec<u64>, m: usize, alpha: u64) -> Result<Self, ConfigError> {
        if values.len() != m {
            return Err(ConfigError::BadInput {
                client: 0,
                problem: format!("length {} != m = {m}", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|&&v| v > alpha) {
            return Err(ConfigError::BadInput {
                client: 0,
                problem: format!("entry {v} exceeds alpha = {alpha}"),
            });
        }
        Ok(GradientVector(values))
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }
}

/// Public parameters of one aggregation round.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub alpha: u64,
    pub mode: Mode,
    pub group: GroupParams,
    pub field: FieldParams,
    pub session_id: Vec<u8>,
    pub round: u32,
    pub directory: KeyDirectory,
}

impl ProtocolConfig {
    /// Checks the arithmetic relations the protocol depends on.
    ///
    /// `q > n·alpha` keeps the aggregated plaintext inside the dlog search
    /// interval; `P > n·q` keeps the integer sum of up to `n` seeds below
    /// the Shamir modulus, so reducing the reconstructed sum mod `q`
    /// matches the sum of the seeds mod `q`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.t == 0 || self.t > self.n {
            return Err(ConfigError::InvalidThreshold { t: self.t, n: self.n });
        }
        let n = BigUint::from(self.n);
        if *self.group.order() <= &n * self.alpha {
            return Err(ConfigError::GroupOrderTooSmall);
        }
        if *self.field.modulus() <= &n * self.group.order() {
            return Err(ConfigError::FieldTooSmall);
        }
        if self.directory.clients.len() != self.n {
            return Err(ConfigError::DirectorySize {
                got: self.directory.clients.len(),
                expected: self.n,
            });
        }
        Ok(())
    }

    /// Domain-separation tag for this round's mask stream.
    pub fn mask_tag(&self) -> Vec<u8> {
        let mut tag = self.session_id.clone();
        tag.extend_from_slice(&self.round.to_be_bytes());
        tag
    }

    pub fn hprg(&self) -> Hprg {
        Hprg::for_session(self.mask_tag())
    }

    /// Precomputed `H(1..=m)` for this round.
    pub fn mask_basis(&self) -> MaskBasis {
        self.hprg().basis(&self.group, self.m)
    }

    /// Discrete-log search bound for a roster of the given size.
    pub fn dlog_bound(&self, roster_len: usize) -> u64 {
        roster_len as u64 * self.alpha
    }
}

/// The nested participation sets of one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Roster {
    pub u: Vec<ClientId>,
    pub u1: Vec<ClientId>,
    pub u2: Vec<ClientId>,
    pub u3: Option<Vec<ClientId>>,
    pub u4: Vec<ClientId>,
}

impl Roster {
    /// `U4 ⊆ U3 ⊆ U2 ⊆ U1 ⊆ U`.
    pub fn is_nested(&self) -> bool {
        fn subset(a: &[ClientId], b: &[ClientId]) -> bool {
            a.iter().all(|x| b.contains(x))
        }
        let u3_ok = match &self.u3 {
            Some(u3) => subset(&self.u4, u3) && subset(u3, &self.u2),
            None => subset(&self.u4, &self.u2),
        };
        u3_ok && subset(&self.u2, &self.u1) && subset(&self.u1, &self.u)
    }
}

/// Why a party stopped; staged variants mirror the ideal functionality.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AbortReason {
    #[error("too few clients at stage {stage}: {have} < {need}")]
    TooFewClients { stage: u8, have: usize, need: usize },
    #[error("too few roster acknowledgements: {have} < {need}")]
    TooFewAcks { have: usize, need: usize },
    #[error("too few unmask shares: {have} < {need}")]
    TooFewShares { have: usize, need: usize },
    #[error("bad signature from {from}")]
    BadSignature { from: PartyId },
    #[error("ciphertext from client {from} failed authentication")]
    AuthFailure { from: ClientId },
    #[error("roster announcement is inconsistent")]
    InconsistentRoster,
    #[error("no share held for roster member {member}")]
    MissingShare { member: ClientId },
    #[error("unmasked component {component} outside the plaintext bound")]
    DlogOutOfRange { component: usize },
    #[error("protocol violation: {detail}")]
    ProtocolViolation { detail: String },
}

impl AbortReason {
    /// The ideal-functionality stage this abort corresponds to, when any.
    pub fn stage(&self) -> Option<u8> {
        match self {
            AbortReason::TooFewClients { stage, .. } => Some(*stage),
            AbortReason::TooFewAcks { .. } => Some(3),
            AbortReason::TooFewShares { .. } => Some(4),
            _ => None,
        }
    }
}

/// Inputs keyed by client id, as the ideal oracle consumes them.
pub type InputMap = BTreeMap<ClientId, GradientVector>;
