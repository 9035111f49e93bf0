//! Server-side state machine: roster keeping, one-shot seed
//! reconstruction, and unmasking.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::authcrypto::{self, EncKeyPair, Sig, SigKeyPair};
use crate::dlog::{self, DlogError};
use crate::hprg::{MaskBasis, Seed};
use crate::modmath::GroupElement;
use crate::protocol::messages::{masked_payload, roster_payload, unmask_payload, RoundMessage};
use crate::protocol::{AbortReason, ClientId, Mode, ProtocolConfig};
use crate::shamir::{self, Share, ShamirConfig};
use crate::simnet::metrics::Metrics;

pub struct Server {
    cfg: Arc<ProtocolConfig>,
    sig_key: SigKeyPair,
    enc_key: EncKeyPair,
    rng: ChaCha20Rng,
    shamir: ShamirConfig,
    pub metrics: Metrics,
    pub u1: Vec<ClientId>,
    pub u2: Vec<ClientId>,
    /// Acknowledging clients; stays empty in semi-honest mode.
    pub u3: Vec<ClientId>,
    pub u4: Vec<ClientId>,
    masked: BTreeMap<ClientId, Vec<GroupElement>>,
    acks: Vec<(ClientId, Sig)>,
}

impl Server {
    pub fn new(
        cfg: Arc<ProtocolConfig>,
        sig_key: SigKeyPair,
        enc_key: EncKeyPair,
        rng: ChaCha20Rng,
    ) -> Self {
        let shamir = ShamirConfig::new(cfg.t, cfg.n, cfg.field.clone())
            .expect("config validated before party construction");
        Server {
            cfg,
            sig_key,
            enc_key,
            rng,
            shamir,
            metrics: Metrics::default(),
            u1: Vec::new(),
            u2: Vec::new(),
            u3: Vec::new(),
            u4: Vec::new(),
            masked: BTreeMap::new(),
            acks: Vec::new(),
        }
    }

    fn malicious(&self) -> bool {
        self.cfg.mode == Mode::Malicious
    }

    /// Clients whose seed shares reached at least `t` holders.
    pub fn register_u1(&mut self, mut u1: Vec<ClientId>) -> Result<(), AbortReason> {
        u1.sort_unstable();
        self.u1 = u1;
        if self.u1.len() < self.cfg.t {
            return Err(AbortReason::TooFewClients {
                stage: 1,
                have: self.u1.len(),
                need: self.cfg.t,
            });
        }
        Ok(())
    }

    /// Step 2: admit masked vectors from `U1` members, dropping malformed
    /// ones and, in malicious mode, any with a bad signature.
    pub fn step2_collect(&mut self, msgs: &[RoundMessage]) -> Result<(), AbortReason> {
        for msg in msgs {
            let RoundMessage::Masked { from, elements, sig } = msg else {
                continue;
            };
            if !self.u1.contains(from) || elements.len() != self.cfg.m {
                continue;
            }
            if self.malicious() {
                let payload = masked_payload(&self.cfg, *from, elements);
                let ok = sig.as_ref().is_some_and(|s| {
                    authcrypto::verify(&self.cfg.directory.client(*from).spk, &payload, s)
                });
                if !ok {
                    continue; // removed from U2
                }
            }
            self.masked.insert(*from, elements.clone());
        }
        self.u2 = self.masked.keys().copied().collect();
        if self.u2.len() < self.cfg.t {
            return Err(AbortReason::TooFewClients {
                stage: 2,
                have: self.u2.len(),
                need: self.cfg.t,
            });
        }
        Ok(())
    }

    /// The roster of connected clients, signed in malicious mode. Serves as
    /// the step-3 announcement and the semi-honest step-4 fetch.
    pub fn roster_announce(&mut self) -> RoundMessage {
        let roster = self.u2.clone();
        let sig = self.malicious().then(|| {
            let payload = roster_payload(&self.cfg, &roster);
            authcrypto::sign(self.sig_key.signing_key(), &payload)
        });
        RoundMessage::RosterAnnounce { roster, sig }
    }

    /// Step 3: collect acknowledgement signatures over the announced
    /// roster; only verifying ones count, so the forwarded bundle defines
    /// the same `U3` everywhere.
    pub fn step3_collect_acks(
        &mut self,
        msgs: &[RoundMessage],
    ) -> Result<RoundMessage, AbortReason> {
        let payload = roster_payload(&self.cfg, &self.u2);
        let mut seen = BTreeMap::new();
        for msg in msgs {
            let RoundMessage::RosterAck { from, sig } = msg else {
                continue;
            };
            if !self.u2.contains(from) || seen.contains_key(from) {
                continue;
            }
            if authcrypto::verify(&self.cfg.directory.client(*from).spk, &payload, sig) {
                seen.insert(*from, sig.clone());
            }
        }
        self.u3 = seen.keys().copied().collect();
        self.acks = seen.into_iter().collect();
        if self.u3.len() < self.cfg.t {
            return Err(AbortReason::TooFewAcks { have: self.u3.len(), need: self.cfg.t });
        }
        Ok(RoundMessage::AckBundle { acks: self.acks.clone() })
    }

    /// The set whose vectors are aggregated: the announced roster.
    pub fn aggregation_roster(&self) -> &[ClientId] {
        &self.u2
    }

    pub fn masked_vector(&self, id: ClientId) -> Option<&Vec<GroupElement>> {
        self.masked.get(&id)
    }

    /// Step 4: admit unmask shares, reconstruct the summed seed once,
    /// expand the aggregate mask, divide it out, and solve the discrete
    /// logs.
    pub fn step4_unmask(
        &mut self,
        msgs: &[RoundMessage],
        basis: &MaskBasis,
    ) -> Result<Vec<u64>, AbortReason> {
        let allowed: &[ClientId] = if self.malicious() { &self.u3 } else { &self.u2 };
        let mut shares: BTreeMap<ClientId, Share> = BTreeMap::new();
        for msg in msgs {
            let RoundMessage::UnmaskShare { from, ciphertext, sig } = msg else {
                continue;
            };
            if !allowed.contains(from) || shares.contains_key(from) {
                continue;
            }
            if self.malicious() {
                let payload = unmask_payload(&self.cfg, *from, ciphertext);
                let ok = sig.as_ref().is_some_and(|s| {
                    authcrypto::verify(&self.cfg.directory.client(*from).spk, &payload, s)
                });
                if !ok {
                    continue; // removed from U4
                }
            }
            let Ok(plain) = authcrypto::decrypt(self.enc_key.secret(), ciphertext) else {
                continue;
            };
            let Ok(share) = Share::decode(&self.cfg.field, &plain) else {
                continue;
            };
            if share.index != *from {
                continue;
            }
            shares.insert(*from, share);
        }
        self.u4 = shares.keys().copied().collect();
        if self.u4.len() < self.cfg.t {
            return Err(AbortReason::TooFewShares { have: self.u4.len(), need: self.cfg.t });
        }

        // One reconstruction per round, whatever the dropout pattern: the
        // t smallest indices with precomputed Lagrange bases.
        let t = self.cfg.t;
        let chosen: Vec<&Share> = shares.values().take(t).collect();
        let indices: Vec<ClientId> = chosen.iter().map(|s| s.index).collect();
        let bases = shamir::precompute_lagrange(&self.shamir, &indices)
            .expect("distinct in-range indices");
        let values: Vec<_> = chosen.iter().map(|s| s.value.clone()).collect();
        let sum = shamir::reconstruct_with_bases(&self.cfg.field, &values, &bases);
        {
            let c = self.metrics.at(4);
            c.reconstructions += 1;
            c.field_mul += t as u64;
        }

        let group = &self.cfg.group;
        let m = self.cfg.m;
        let seed = Seed::reduce(group, sum.value().clone());
        let mask = basis.expand(group, &seed);
        self.metrics.at(4).group_exp += m as u64;

        let roster = self.u2.clone();
        let targets: Vec<GroupElement> = (0..m)
            .map(|j| {
                let mut acc: Option<GroupElement> = None;
                for id in &roster {
                    let y = &self.masked[id][j];
                    acc = Some(match acc {
                        None => y.clone(),
                        Some(a) => group.mul(&a, y),
                    });
                }
                let prod = acc.expect("roster nonempty: |U2| >= t >= 1");
                group.mul(&prod, &group.inv(&mask.elements[j]))
            })
            .collect();
        {
            let c = self.metrics.at(4);
            c.group_mul += (roster.len() as u64) * m as u64; // products + one divide
            c.group_exp += m as u64; // mask inversions
        }

        let bound = self.cfg.dlog_bound(roster.len());
        let dlog_seed = self.rng.gen::<u64>();
        match dlog::solve_vector(group, &targets, bound, dlog_seed) {
            Ok(sol) => {
                self.metrics.at(4).dlog_ops += sol.group_ops;
                Ok(sol.exponents)
            }
            Err(DlogError::ComponentNotInRange { component, .. }) => {
                Err(AbortReason::DlogOutOfRange { component })
            }
            Err(DlogError::NotInRange { .. }) => Err(AbortReason::DlogOutOfRange { component: 0 }),
        }
    }
}
