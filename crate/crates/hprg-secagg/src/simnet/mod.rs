//! Deterministic synchronous-round network simulator.
//!
//! One call to [`run_round`] executes the whole protocol over an in-memory
//! star topology (all client traffic relayed by the server), with a dropout
//! schedule, a latency model, per-party counters, optional in-transit
//! signature corruption, and a full [`Transcript`] as the result. Every
//! source of randomness derives from the supplied seed, so identical
//! arguments produce byte-identical transcripts.

pub mod adversary;
pub mod metrics;
pub mod sweep;

pub use metrics::{CostModel, Metrics, StepCounters};
pub use sweep::{run_sweep, sweep_csv, SweepRow};

use base64::Engine;
use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::authcrypto::{enc_keygen, sig_keygen, EncKeyPair, SigKeyPair};
use crate::hprg::MaskBasis;
use crate::modmath::{seeded_rng, FieldParams, GroupParams};
use crate::protocol::messages::RoundMessage;
use crate::protocol::{
    AbortReason, Client, ClientId, ConfigError, GradientVector, KeyDirectory, Mode, PartyId,
    PartyKeys, ProtocolConfig, Roster, Server, ThreatModel,
};

/// Whether a client's own step-k messages still go out when it drops there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubPoint {
    BeforeSend,
    AfterSend,
}

/// Which clients leave, when, and whether their last sends count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropoutSchedule {
    entries: BTreeMap<ClientId, (u8, SubPoint)>,
}

impl DropoutSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    /// At most one entry per client; steps outside 1..=4 are rejected.
    pub fn new(
        entries: impl IntoIterator<Item = (ClientId, u8, SubPoint)>,
    ) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (client, step, sub) in entries {
            if !(1..=4).contains(&step) {
                return Err(ConfigError::BadSchedule(format!("step {step} out of range")));
            }
            if map.insert(client, (step, sub)).is_some() {
                return Err(ConfigError::BadSchedule(format!(
                    "client {client} listed twice"
                )));
            }
        }
        Ok(DropoutSchedule { entries: map })
    }

    /// Drops the `ceil(rate · n)` highest-id clients before sending at
    /// `step`.
    pub fn from_rate(n: usize, rate: f64, step: u8) -> Self {
        let k = (rate * n as f64).ceil() as usize;
        let entries = ((n - k.min(n) + 1)..=n)
            .map(|id| (id as ClientId, (step, SubPoint::BeforeSend)))
            .collect();
        DropoutSchedule { entries }
    }

    /// Random schedule: each client independently drops with probability
    /// 0.3 at a uniform (step, sub-point) valid for `mode`.
    pub fn random(n: usize, mode: Mode, rng: &mut ChaCha20Rng) -> Self {
        let steps: &[u8] = match mode {
            Mode::SemiHonest => &[1, 2, 4],
            Mode::Malicious => &[1, 2, 3, 4],
        };
        let mut entries = BTreeMap::new();
        for id in 1..=n as ClientId {
            if rng.gen_bool(0.3) {
                let step = steps[rng.gen_range(0..steps.len())];
                let sub = if rng.gen_bool(0.5) { SubPoint::BeforeSend } else { SubPoint::AfterSend };
                entries.insert(id, (step, sub));
            }
        }
        DropoutSchedule { entries }
    }

    pub fn validate_for(&self, n: usize, mode: Mode) -> Result<(), ConfigError> {
        for (&client, &(step, _)) in &self.entries {
            if client == 0 || client as usize > n {
                return Err(ConfigError::BadSchedule(format!("unknown client {client}")));
            }
            if step == 3 && mode == Mode::SemiHonest {
                return Err(ConfigError::BadSchedule(
                    "step-3 dropouts exist only in malicious mode".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (ClientId, u8, SubPoint)> + '_ {
        self.entries.iter().map(|(&c, &(s, p))| (c, s, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the client still sends its own step-`step` messages.
    fn emits(&self, client: ClientId, step: u8) -> bool {
        match self.entries.get(&client) {
            None => true,
            Some(&(k, SubPoint::BeforeSend)) => step < k,
            Some(&(k, SubPoint::AfterSend)) => step <= k,
        }
    }

    /// True when the client is still around to receive deliveries that
    /// commit at the end of `step`.
    fn receives(&self, client: ClientId, step: u8) -> bool {
        match self.entries.get(&client) {
            None => true,
            Some(&(k, _)) => step < k,
        }
    }
}

/// Fixed per-link latency plus bandwidth, and the per-operation cost
/// constants that drive the simulated clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyModel {
    pub latency_ns: u64,
    pub bandwidth_bps: u64,
    pub cost: CostModel,
}

impl LatencyModel {
    /// Same-region datacenter links: 3.72 ms, 4.80 Gbps.
    pub fn lan() -> Self {
        LatencyModel {
            latency_ns: 3_720_000,
            bandwidth_bps: 4_800_000_000,
            cost: CostModel::default(),
        }
    }

    /// Cross-continent links: 211.31 ms, 4.18 Gbps.
    pub fn wan() -> Self {
        LatencyModel {
            latency_ns: 211_310_000,
            bandwidth_bps: 4_180_000_000,
            cost: CostModel::default(),
        }
    }

    /// Compute-only clock: zero latency, infinite bandwidth.
    pub fn none() -> Self {
        LatencyModel { latency_ns: 0, bandwidth_bps: u64::MAX, cost: CostModel::default() }
    }

    fn tx_ns(&self, bytes: u64) -> u64 {
        if self.bandwidth_bps == u64::MAX {
            return 0;
        }
        ((u128::from(bytes) * 8_000_000_000) / u128::from(self.bandwidth_bps)) as u64
    }
}

/// Everything needed to instantiate one protocol run.
#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub alpha: u64,
    pub mode: Mode,
    pub threat: ThreatModel,
    pub group_bits: u64,
    pub session_id: Vec<u8>,
    pub seed: u64,
}

impl InstanceParams {
    pub fn new(n: usize, t: usize, m: usize, alpha: u64, mode: Mode, seed: u64) -> Self {
        let threat = match mode {
            Mode::SemiHonest => ThreatModel::SemiHonest,
            Mode::Malicious => ThreatModel::MaliciousServerAndClients {
                assumed_malicious: n.saturating_sub(1) / 3,
            },
        };
        InstanceParams {
            n,
            t,
            m,
            alpha,
            mode,
            threat,
            group_bits: 64,
            session_id: b"session-0".to_vec(),
            seed,
        }
    }
}

/// A fully keyed protocol instance: the public configuration plus every
/// party's private keys (the simulator plays all parties).
pub struct Instance {
    pub config: Arc<ProtocolConfig>,
    pub client_sig: Vec<SigKeyPair>,
    pub client_enc: Vec<EncKeyPair>,
    pub server_sig: SigKeyPair,
    pub server_enc: EncKeyPair,
}

impl Instance {
    /// Generates group, field, and keys from the seed; enforces the
    /// threat-model threshold minimums.
    pub fn build(params: &InstanceParams) -> Result<Instance, ConfigError> {
        crate::protocol::validate_threshold(params.n, params.t, &params.threat)?;
        Self::build_unvalidated(params)
    }

    /// Skips the threshold minimums (arithmetic sanity still enforced);
    /// exists so deliberately misconfigured runs can demonstrate the
    /// attacks the validation prevents.
    pub fn build_unvalidated(params: &InstanceParams) -> Result<Instance, ConfigError> {
        let seed = params.seed.to_be_bytes();
        let group = GroupParams::generate(params.group_bits, &seed);
        let min = BigUint::from(params.n) * group.order();
        let field = FieldParams::generate_above(&min, &seed);
        Self::with_params(params, group, field)
    }

    /// Uses caller-supplied group and field parameters (toy groups in
    /// tests); keys still derive from the seed.
    pub fn with_params(
        params: &InstanceParams,
        group: GroupParams,
        field: FieldParams,
    ) -> Result<Instance, ConfigError> {
        if matches!(
            params.threat,
            ThreatModel::MaliciousServer | ThreatModel::MaliciousServerAndClients { .. }
        ) && params.mode != Mode::Malicious
        {
            return Err(ConfigError::ModeMismatch);
        }
        let seed = params.seed.to_be_bytes();
        let mut client_sig = Vec::with_capacity(params.n);
        let mut client_enc = Vec::with_capacity(params.n);
        let mut clients = Vec::with_capacity(params.n);
        for id in 1..=params.n as u64 {
            let mut label = seed.to_vec();
            label.extend_from_slice(&id.to_be_bytes());
            let mut rng = seeded_rng(b"client-keys", &label);
            let sig = sig_keygen(&mut rng);
            let enc = enc_keygen(&mut rng);
            clients.push(PartyKeys { spk: sig.spk, cpk: enc.cpk });
            client_sig.push(sig);
            client_enc.push(enc);
        }
        let mut rng = seeded_rng(b"server-keys", &seed);
        let server_sig = sig_keygen(&mut rng);
        let server_enc = enc_keygen(&mut rng);
        let directory = KeyDirectory {
            clients,
            server: PartyKeys { spk: server_sig.spk, cpk: server_enc.cpk },
        };
        let config = ProtocolConfig {
            n: params.n,
            t: params.t,
            m: params.m,
            alpha: params.alpha,
            mode: params.mode,
            group,
            field,
            session_id: params.session_id.clone(),
            round: 0,
            directory,
        };
        config.validate()?;
        Ok(Instance {
            config: Arc::new(config),
            client_sig,
            client_enc,
            server_sig,
            server_enc,
        })
    }

    /// Per-client vectors drawn uniformly from `[0, alpha]`.
    pub fn synthetic_inputs(&self, seed: u64) -> Vec<GradientVector> {
        let cfg = &self.config;
        (1..=cfg.n as u64)
            .map(|id| {
                let mut label = seed.to_be_bytes().to_vec();
                label.extend_from_slice(&id.to_be_bytes());
                let mut rng = seeded_rng(b"inputs", &label);
                let values = (0..cfg.m).map(|_| rng.gen_range(0..=cfg.alpha)).collect();
                GradientVector::new(values, cfg.m, cfg.alpha).expect("in range by construction")
            })
            .collect()
    }
}

/// In-transit corruption of one signature, modeling a forgery attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tamper {
    /// sigma-1 on the encrypted share `from -> to`.
    ShareSig { from: ClientId, to: ClientId },
    /// sigma-2 on a masked vector.
    MaskedSig { from: ClientId },
    /// sigma-3 on the roster copy delivered to one client.
    RosterSig { to: ClientId },
    /// sigma-4 on a roster acknowledgement.
    AckSig { from: ClientId },
    /// sigma-5 on an unmask share.
    UnmaskSig { from: ClientId },
}

#[derive(Debug, Clone, Serialize)]
pub struct MessageRecord {
    pub from: String,
    pub to: String,
    pub kind: String,
    pub delivered: bool,
    pub bytes_b64: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: u8,
    /// Simulated duration: slowest party's compute + latency + transmission.
    pub time_ns: u64,
    pub messages: Vec<MessageRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSummary {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub alpha: u64,
    pub mode: Mode,
    pub group_p: String,
    pub group_q: String,
    pub group_g: String,
    pub field_p: String,
    pub session_id: String,
    pub round: u32,
    pub latency_ns: u64,
    pub bandwidth_bps: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterTable {
    pub server: Metrics,
    pub clients: BTreeMap<ClientId, Metrics>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Outcome {
    Output { sum: Vec<u64> },
    Abort { stage: Option<u8>, reason: AbortReason },
}

/// Full record of one aggregation round.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub config: ConfigSummary,
    pub rosters: Roster,
    pub steps: Vec<StepRecord>,
    pub counters: CounterTable,
    pub client_aborts: BTreeMap<ClientId, AbortReason>,
    pub outcome: Outcome,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn output(&self) -> Option<&[u64]> {
        match &self.outcome {
            Outcome::Output { sum } => Some(sum),
            Outcome::Abort { .. } => None,
        }
    }

    pub fn abort_reason(&self) -> Option<&AbortReason> {
        match &self.outcome {
            Outcome::Output { .. } => None,
            Outcome::Abort { reason, .. } => Some(reason),
        }
    }

    pub fn total_time_ns(&self) -> u64 {
        self.steps.iter().map(|s| s.time_ns).sum()
    }
}

/// Runs one round end to end. Protocol aborts land in the transcript;
/// only precondition violations (bad inputs or schedule) error out.
pub fn run_round(
    inst: &Instance,
    inputs: &[GradientVector],
    schedule: &DropoutSchedule,
    latency: &LatencyModel,
    seed: u64,
) -> Result<Transcript, ConfigError> {
    run_round_with_tamper(inst, inputs, schedule, latency, seed, None)
}

pub fn run_round_with_tamper(
    inst: &Instance,
    inputs: &[GradientVector],
    schedule: &DropoutSchedule,
    latency: &LatencyModel,
    seed: u64,
    tamper: Option<Tamper>,
) -> Result<Transcript, ConfigError> {
    let cfg = &inst.config;
    cfg.validate()?;
    schedule.validate_for(cfg.n, cfg.mode)?;
    if inputs.len() != cfg.n {
        return Err(ConfigError::InputCount { got: inputs.len(), expected: cfg.n });
    }
    for (i, v) in inputs.iter().enumerate() {
        GradientVector::new(v.values().to_vec(), cfg.m, cfg.alpha).map_err(|_| {
            ConfigError::BadInput {
                client: (i + 1) as ClientId,
                problem: "length or range invalid".into(),
            }
        })?;
    }
    let mut sim = Sim::new(inst, inputs, schedule, latency, seed, tamper);
    let outcome = sim.run_phases();
    Ok(sim.finish(outcome))
}

pub(crate) struct Sim<'a> {
    cfg: Arc<ProtocolConfig>,
    schedule: &'a DropoutSchedule,
    latency: &'a LatencyModel,
    tamper: Option<Tamper>,
    pub(crate) clients: Vec<Client>,
    pub(crate) server: Server,
    basis: MaskBasis,
    steps: Vec<StepRecord>,
    current: Vec<MessageRecord>,
    pub(crate) client_aborts: BTreeMap<ClientId, AbortReason>,
}

impl<'a> Sim<'a> {
    pub(crate) fn new(
        inst: &'a Instance,
        inputs: &[GradientVector],
        schedule: &'a DropoutSchedule,
        latency: &'a LatencyModel,
        seed: u64,
        tamper: Option<Tamper>,
    ) -> Self {
        let cfg = Arc::clone(&inst.config);
        let clients = (1..=cfg.n as ClientId)
            .map(|id| {
                let mut label = seed.to_be_bytes().to_vec();
                label.extend_from_slice(&u64::from(id).to_be_bytes());
                Client::new(
                    id,
                    Arc::clone(&cfg),
                    inputs[(id - 1) as usize].clone(),
                    inst.client_sig[(id - 1) as usize].clone(),
                    inst.client_enc[(id - 1) as usize].clone(),
                    seeded_rng(b"client-rng", &label),
                )
            })
            .collect();
        let server = Server::new(
            Arc::clone(&cfg),
            inst.server_sig.clone(),
            inst.server_enc.clone(),
            seeded_rng(b"server-rng", &seed.to_be_bytes()),
        );
        let basis = cfg.mask_basis();
        Sim {
            cfg,
            schedule,
            latency,
            tamper,
            clients,
            server,
            basis,
            steps: Vec::new(),
            current: Vec::new(),
            client_aborts: BTreeMap::new(),
        }
    }

    fn n(&self) -> ClientId {
        self.cfg.n as ClientId
    }

    fn client(&mut self, id: ClientId) -> &mut Client {
        &mut self.clients[(id - 1) as usize]
    }

    fn aborted(&self, id: ClientId) -> bool {
        self.clients[(id - 1) as usize].is_aborted()
    }

    fn emits(&self, id: ClientId, step: u8) -> bool {
        self.schedule.emits(id, step) && !self.aborted(id)
    }

    pub(crate) fn record_abort(&mut self, id: ClientId) {
        if let Some(r) = self.clients[(id - 1) as usize].abort_reason() {
            self.client_aborts.insert(id, r.clone());
        }
    }

    /// Runs steps 1 and 2 honestly; the adversary harness takes over from
    /// the consistency round.
    pub(crate) fn run_honest_prefix(&mut self) -> Result<(), AbortReason> {
        let r = self.phase1();
        self.close_step(1);
        r?;
        let r = self.phase2();
        self.close_step(2);
        r
    }

    pub(crate) fn client_mut(&mut self, id: ClientId) -> &mut Client {
        self.client(id)
    }

    pub(crate) fn client_is_aborted(&self, id: ClientId) -> bool {
        self.aborted(id)
    }

    pub(crate) fn note_abort(&mut self, id: ClientId) {
        self.record_abort(id);
    }

    pub(crate) fn client_sum_over(
        &self,
        id: ClientId,
        roster: &[ClientId],
    ) -> Result<crate::modmath::FieldElement, AbortReason> {
        self.clients[(id - 1) as usize].sum_shares_over(roster)
    }

    pub(crate) fn masked_of(&self, id: ClientId) -> Vec<crate::modmath::GroupElement> {
        self.server.masked_vector(id).expect("member of U2").clone()
    }

    pub(crate) fn take_client_aborts(&mut self) -> BTreeMap<ClientId, AbortReason> {
        std::mem::take(&mut self.client_aborts)
    }

    fn metrics_mut(&mut self, party: PartyId) -> &mut Metrics {
        match party {
            PartyId::Server => &mut self.server.metrics,
            PartyId::Client(id) => &mut self.clients[(id - 1) as usize].metrics,
        }
    }

    /// Records one directed message: sender bytes always count, receiver
    /// bytes only when delivered.
    pub(crate) fn send(
        &mut self,
        step: u8,
        from: PartyId,
        to: PartyId,
        msg: &RoundMessage,
        delivered: bool,
    ) {
        let bytes = msg.encode();
        let len = bytes.len() as u64;
        self.metrics_mut(from).at(step).bytes_sent += len;
        if delivered {
            self.metrics_mut(to).at(step).bytes_received += len;
        }
        self.current.push(MessageRecord {
            from: from.to_string(),
            to: to.to_string(),
            kind: msg.kind().to_string(),
            delivered,
            bytes_b64: base64::engine::general_purpose::STANDARD.encode(&bytes),
        });
    }

    fn close_step(&mut self, step: u8) {
        let messages = std::mem::take(&mut self.current);
        self.steps.push(StepRecord { step, time_ns: 0, messages });
    }

    pub(crate) fn run_phases(&mut self) -> Result<Vec<u64>, AbortReason> {
        let r = self.phase1();
        self.close_step(1);
        r?;
        let r = self.phase2();
        self.close_step(2);
        r?;
        if self.cfg.mode == Mode::Malicious {
            let r = self.phase3();
            self.close_step(3);
            r?;
        }
        let r = self.phase4();
        self.close_step(4);
        r
    }

    /// Step 1: share seeds through the server relay and compute `U1`.
    fn phase1(&mut self) -> Result<(), AbortReason> {
        let mut emitted: Vec<(ClientId, Vec<RoundMessage>)> = Vec::new();
        for id in 1..=self.n() {
            if self.emits(id, 1) {
                let mut msgs = self.client(id).step1_share_seed();
                if let Some(Tamper::ShareSig { from, to }) = self.tamper {
                    if from == id {
                        for m in &mut msgs {
                            if matches!(m, RoundMessage::EncShare { to: t, .. } if *t == to) {
                                m.corrupt_signature();
                            }
                        }
                    }
                }
                emitted.push((id, msgs));
            }
        }

        let mut inboxes: BTreeMap<ClientId, Vec<RoundMessage>> = BTreeMap::new();
        let mut delivered_count: BTreeMap<ClientId, usize> = BTreeMap::new();
        for (from, msgs) in &emitted {
            for msg in msgs {
                let RoundMessage::EncShare { to, .. } = msg else { unreachable!() };
                let to = *to;
                self.send(1, PartyId::Client(*from), PartyId::Server, msg, true);
                let deliverable = self.schedule.receives(to, 1) && !self.aborted(to);
                self.send(1, PartyId::Server, PartyId::Client(to), msg, deliverable);
                if deliverable {
                    inboxes.entry(to).or_default().push(msg.clone());
                    *delivered_count.entry(*from).or_default() += 1;
                }
            }
        }

        for (id, inbox) in inboxes {
            if self.client(id).step1_receive(&inbox).is_err() {
                self.record_abort(id);
            }
        }

        // U1: emitters whose shares reached at least t holders (the sender
        // itself counts while it is still connected).
        let mut u1 = Vec::new();
        for (from, _) in &emitted {
            let held = delivered_count.get(from).copied().unwrap_or(0)
                + usize::from(self.schedule.receives(*from, 1));
            if held >= self.cfg.t {
                u1.push(*from);
            }
        }
        self.server.register_u1(u1)
    }

    /// Step 2: collect masked vectors into `U2`.
    fn phase2(&mut self) -> Result<(), AbortReason> {
        let mut inbox = Vec::new();
        for id in 1..=self.n() {
            if self.emits(id, 2) {
                let basis = self.basis.clone();
                let mut msg = self.client(id).step2_mask(&basis);
                if matches!(self.tamper, Some(Tamper::MaskedSig { from }) if from == id) {
                    msg.corrupt_signature();
                }
                self.send(2, PartyId::Client(id), PartyId::Server, &msg, true);
                inbox.push(msg);
            }
        }
        self.server.step2_collect(&inbox)
    }

    /// Step 3 (malicious): roster announcement, acknowledgements, bundle.
    fn phase3(&mut self) -> Result<(), AbortReason> {
        let announce = self.server.roster_announce();
        let mut acks = Vec::new();
        for id in self.server.u2.clone() {
            let mut copy = announce.clone();
            if matches!(self.tamper, Some(Tamper::RosterSig { to }) if to == id) {
                copy.corrupt_signature();
            }
            let present = self.emits(id, 3);
            self.send(3, PartyId::Server, PartyId::Client(id), &copy, present);
            if !present {
                continue;
            }
            match self.client(id).receive_roster_announce(&copy) {
                Ok(Some(mut ack)) => {
                    if matches!(self.tamper, Some(Tamper::AckSig { from }) if from == id) {
                        ack.corrupt_signature();
                    }
                    self.send(3, PartyId::Client(id), PartyId::Server, &ack, true);
                    acks.push(ack);
                }
                Ok(None) => unreachable!("malicious mode always acks"),
                Err(_) => self.record_abort(id),
            }
        }
        let bundle = self.server.step3_collect_acks(&acks)?;
        for id in self.server.u3.clone() {
            let deliverable = self.schedule.receives(id, 3) && !self.aborted(id);
            self.send(3, PartyId::Server, PartyId::Client(id), &bundle, deliverable);
            if deliverable {
                if self.client(id).receive_ack_bundle(&bundle).is_err() {
                    self.record_abort(id);
                }
            }
        }
        Ok(())
    }

    /// Step 4: the semi-honest roster fetch, unmask shares, reconstruction
    /// and unmasking.
    fn phase4(&mut self) -> Result<Vec<u64>, AbortReason> {
        if self.cfg.mode == Mode::SemiHonest {
            let announce = self.server.roster_announce();
            for id in self.server.u2.clone() {
                let present = self.emits(id, 4);
                self.send(4, PartyId::Server, PartyId::Client(id), &announce, present);
                if present {
                    if self.client(id).receive_roster_announce(&announce).is_err() {
                        self.record_abort(id);
                    }
                }
            }
        }

        let mut inbox = Vec::new();
        for id in 1..=self.n() {
            if !self.emits(id, 4) || !self.clients[(id - 1) as usize].has_final_roster() {
                continue;
            }
            match self.client(id).step4_unmask_share() {
                Ok(mut msg) => {
                    if matches!(self.tamper, Some(Tamper::UnmaskSig { from }) if from == id) {
                        msg.corrupt_signature();
                    }
                    self.send(4, PartyId::Client(id), PartyId::Server, &msg, true);
                    inbox.push(msg);
                }
                Err(_) => self.record_abort(id),
            }
        }
        let basis = self.basis.clone();
        self.server.step4_unmask(&inbox, &basis)
    }

    /// Derives the simulated clock and assembles the transcript.
    pub(crate) fn finish(mut self, outcome: Result<Vec<u64>, AbortReason>) -> Transcript {
        for rec in &mut self.steps {
            let step = rec.step;
            let mut slowest = 0u64;
            let mut parties: Vec<PartyId> = vec![PartyId::Server];
            parties.extend((1..=self.cfg.n as ClientId).map(PartyId::Client));
            for party in parties {
                let metrics = match party {
                    PartyId::Server => &mut self.server.metrics,
                    PartyId::Client(id) => &mut self.clients[(id - 1) as usize].metrics,
                };
                let counters = metrics.step(step);
                let mut t = self.latency.cost.compute_ns(&counters)
                    + self.latency.tx_ns(counters.bytes_sent);
                if counters.bytes_sent > 0 {
                    t += self.latency.latency_ns;
                }
                metrics.time_ns.insert(step, t);
                slowest = slowest.max(t);
            }
            rec.time_ns = slowest;
        }

        let rosters = Roster {
            u: (1..=self.cfg.n as ClientId).collect(),
            u1: self.server.u1.clone(),
            u2: self.server.u2.clone(),
            u3: (self.cfg.mode == Mode::Malicious).then(|| self.server.u3.clone()),
            u4: self.server.u4.clone(),
        };
        let counters = CounterTable {
            server: self.server.metrics.clone(),
            clients: self.clients.iter().map(|c| (c.id(), c.metrics.clone())).collect(),
        };
        let config = ConfigSummary {
            n: self.cfg.n,
            t: self.cfg.t,
            m: self.cfg.m,
            alpha: self.cfg.alpha,
            mode: self.cfg.mode,
            group_p: self.cfg.group.modulus().to_str_radix(16),
            group_q: self.cfg.group.order().to_str_radix(16),
            group_g: self.cfg.group.generator().value().to_str_radix(16),
            field_p: self.cfg.field.modulus().to_str_radix(16),
            session_id: hex_string(&self.cfg.session_id),
            round: self.cfg.round,
            latency_ns: self.latency.latency_ns,
            bandwidth_bps: self.latency.bandwidth_bps,
        };
        Transcript {
            config,
            rosters,
            steps: self.steps,
            counters,
            client_aborts: self.client_aborts,
            outcome: match outcome {
                Ok(sum) => Outcome::Output { sum },
                Err(reason) => Outcome::Abort { stage: reason.stage(), reason },
            },
        }
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
