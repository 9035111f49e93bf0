//! Client-side state machine for one aggregation round.

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::authcrypto::{self, EncKeyPair, SigKeyPair};
use crate::hprg::{MaskBasis, Seed};
use crate::modmath::FieldElement;
use crate::protocol::messages::{
    enc_share_payload, masked_payload, roster_payload, unmask_payload, RoundMessage,
};
use crate::protocol::{AbortReason, ClientId, GradientVector, Mode, PartyId, ProtocolConfig};
use crate::shamir::{self, Share, ShamirConfig};
use crate::simnet::metrics::Metrics;

pub struct Client {
    id: ClientId,
    cfg: Arc<ProtocolConfig>,
    input: GradientVector,
    sig_key: SigKeyPair,
    enc_key: EncKeyPair,
    rng: ChaCha20Rng,
    shamir: ShamirConfig,
    pub metrics: Metrics,
    seed: Option<Seed>,
    /// Decrypted seed shares keyed by dealer, own share included.
    shares: BTreeMap<ClientId, FieldElement>,
    /// The roster announced by the server (the aggregation set).
    roster: Option<Vec<ClientId>>,
    /// Raw acknowledgement bundle; verified during step 4.
    bundle: Option<Vec<(ClientId, authcrypto::Sig)>>,
    aborted: Option<AbortReason>,
}

impl Client {
    pub fn new(
        id: ClientId,
        cfg: Arc<ProtocolConfig>,
        input: GradientVector,
        sig_key: SigKeyPair,
        enc_key: EncKeyPair,
        rng: ChaCha20Rng,
    ) -> Self {
        let shamir = ShamirConfig::new(cfg.t, cfg.n, cfg.field.clone())
            .expect("config validated before party construction");
        Client {
            id,
            cfg,
            input,
            sig_key,
            enc_key,
            rng,
            shamir,
            metrics: Metrics::default(),
            seed: None,
            shares: BTreeMap::new(),
            roster: None,
            bundle: None,
            aborted: None,
        }
    }

    pub fn id(&self) -> ClientId {
        self.id
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    pub fn abort_reason(&self) -> Option<&AbortReason> {
        self.aborted.as_ref()
    }

    fn fail(&mut self, reason: AbortReason) -> AbortReason {
        self.aborted = Some(reason.clone());
        reason
    }

    fn malicious(&self) -> bool {
        self.cfg.mode == Mode::Malicious
    }

    /// Step 1: pick a seed in `Z_q`, Shamir-share it over `Z_P`, and emit
    /// one encrypted share per other client. The own-index share is kept
    /// locally.
    pub fn step1_share_seed(&mut self) -> Vec<RoundMessage> {
        let seed = Seed::random(&self.cfg.group, &mut self.rng);
        let secret = self.cfg.field.element(seed.value().clone());
        self.seed = Some(seed);
        let shares = shamir::share(&self.shamir, &secret, &mut self.rng);
        // Horner evaluation: t-1 field multiplications per evaluation point.
        self.metrics.at(1).field_mul += (self.cfg.n * (self.cfg.t - 1)) as u64;

        let mut out = Vec::with_capacity(self.cfg.n - 1);
        for share in shares {
            if share.index == self.id {
                self.shares.insert(self.id, share.value);
                continue;
            }
            let to = share.index;
            let ciphertext = authcrypto::encrypt(
                &self.cfg.directory.client(to).cpk,
                &share.encode(),
                &mut self.rng,
            );
            let sig = self.malicious().then(|| {
                let payload = enc_share_payload(&self.cfg, self.id, to, &ciphertext);
                authcrypto::sign(self.sig_key.signing_key(), &payload)
            });
            out.push(RoundMessage::EncShare { from: self.id, to, ciphertext, sig });
        }
        out
    }

    /// Step 1 receive: verify (malicious mode), decrypt, and store the seed
    /// shares addressed to this client. Any failure aborts the client.
    pub fn step1_receive(&mut self, msgs: &[RoundMessage]) -> Result<(), AbortReason> {
        for msg in msgs {
            let RoundMessage::EncShare { from, to, ciphertext, sig } = msg else {
                return Err(self.fail(AbortReason::ProtocolViolation {
                    detail: "unexpected message kind in step 1".into(),
                }));
            };
            if *to != self.id {
                return Err(self.fail(AbortReason::ProtocolViolation {
                    detail: format!("share for client {to} routed to {}", self.id),
                }));
            }
            if self.malicious() {
                let payload = enc_share_payload(&self.cfg, *from, *to, ciphertext);
                let ok = sig.as_ref().is_some_and(|s| {
                    authcrypto::verify(&self.cfg.directory.client(*from).spk, &payload, s)
                });
                if !ok {
                    return Err(self.fail(AbortReason::BadSignature {
                        from: PartyId::Client(*from),
                    }));
                }
            }
            let plain = authcrypto::decrypt(self.enc_key.secret(), ciphertext)
                .map_err(|_| self.fail(AbortReason::AuthFailure { from: *from }))?;
            let share = Share::decode(&self.cfg.field, &plain).map_err(|_| {
                self.fail(AbortReason::ProtocolViolation {
                    detail: format!("undecodable share from client {from}"),
                })
            })?;
            if share.index != self.id {
                return Err(self.fail(AbortReason::ProtocolViolation {
                    detail: format!("share from {from} carries index {}", share.index),
                }));
            }
            self.shares.insert(*from, share.value);
        }
        Ok(())
    }

    /// Step 2: expand the seed and upload `y = g^x · r` componentwise.
    pub fn step2_mask(&mut self, basis: &MaskBasis) -> RoundMessage {
        let seed = self.seed.as_ref().expect("step 1 ran before step 2");
        let group = &self.cfg.group;
        let mask = basis.expand(group, seed);
        let g = group.generator();
        let elements: Vec<_> = self
            .input
            .values()
            .iter()
            .zip(&mask.elements)
            .map(|(&x, r)| group.mul(&group.exp(&g, &BigUint::from(x)), r))
            .collect();
        let c = self.metrics.at(2);
        c.group_exp += 2 * self.cfg.m as u64; // mask expansion + g^x
        c.group_mul += self.cfg.m as u64;

        let sig = self.malicious().then(|| {
            let payload = masked_payload(&self.cfg, self.id, &elements);
            authcrypto::sign(self.sig_key.signing_key(), &payload)
        });
        RoundMessage::Masked { from: self.id, elements, sig }
    }

    /// Handles the server's roster announcement. In malicious mode the
    /// roster signature is checked and an acknowledgement signature is
    /// returned; the semi-honest fetch is unauthenticated by design.
    pub fn receive_roster_announce(
        &mut self,
        msg: &RoundMessage,
    ) -> Result<Option<RoundMessage>, AbortReason> {
        let RoundMessage::RosterAnnounce { roster, sig } = msg else {
            return Err(self.fail(AbortReason::ProtocolViolation {
                detail: "expected roster announcement".into(),
            }));
        };
        let sorted = roster.windows(2).all(|w| w[0] < w[1]);
        let in_range = roster.iter().all(|&id| id >= 1 && id as usize <= self.cfg.n);
        if roster.is_empty() || !sorted || !in_range || !roster.contains(&self.id) {
            return Err(self.fail(AbortReason::InconsistentRoster));
        }
        let payload = roster_payload(&self.cfg, roster);
        if self.malicious() {
            let ok = sig
                .as_ref()
                .is_some_and(|s| authcrypto::verify(&self.cfg.directory.server.spk, &payload, s));
            if !ok {
                return Err(self.fail(AbortReason::BadSignature { from: PartyId::Server }));
            }
        }
        self.roster = Some(roster.clone());
        if self.malicious() {
            let ack = authcrypto::sign(self.sig_key.signing_key(), &payload);
            Ok(Some(RoundMessage::RosterAck { from: self.id, sig: ack }))
        } else {
            Ok(None)
        }
    }

    /// Stores the forwarded acknowledgement bundle; verification happens at
    /// the start of step 4.
    pub fn receive_ack_bundle(&mut self, msg: &RoundMessage) -> Result<(), AbortReason> {
        let RoundMessage::AckBundle { acks } = msg else {
            return Err(self.fail(AbortReason::ProtocolViolation {
                detail: "expected acknowledgement bundle".into(),
            }));
        };
        self.bundle = Some(acks.clone());
        Ok(())
    }

    /// Sum of held shares over `roster`; also used by the adversary harness
    /// to model colluding clients answering several rosters.
    pub(crate) fn sum_shares_over(
        &self,
        roster: &[ClientId],
    ) -> Result<FieldElement, AbortReason> {
        let field = &self.cfg.field;
        let mut acc = field.zero();
        for member in roster {
            let share = self
                .shares
                .get(member)
                .ok_or(AbortReason::MissingShare { member: *member })?;
            acc = field.add(&acc, share);
        }
        Ok(acc)
    }

    pub(crate) fn has_final_roster(&self) -> bool {
        self.roster.is_some() && (!self.malicious() || self.bundle.is_some())
    }

    /// Step 4: check the consistency quorum (malicious mode), sum the held
    /// shares over the announced roster, and send the encrypted result.
    pub fn step4_unmask_share(&mut self) -> Result<RoundMessage, AbortReason> {
        let roster = self.roster.clone().ok_or_else(|| {
            self.fail(AbortReason::ProtocolViolation { detail: "no roster held".into() })
        })?;
        if self.malicious() {
            let payload = roster_payload(&self.cfg, &roster);
            let acks = self.bundle.clone().unwrap_or_default();
            let mut valid = std::collections::BTreeSet::new();
            for (from, sig) in &acks {
                if roster.contains(from)
                    && authcrypto::verify(&self.cfg.directory.client(*from).spk, &payload, sig)
                {
                    valid.insert(*from);
                }
            }
            if valid.len() < self.cfg.t {
                return Err(self.fail(AbortReason::TooFewAcks {
                    have: valid.len(),
                    need: self.cfg.t,
                }));
            }
        }
        let sum = match self.sum_shares_over(&roster) {
            Ok(v) => v,
            Err(r) => return Err(self.fail(r)),
        };
        let share = Share { index: self.id, value: sum };
        let ciphertext = authcrypto::encrypt(
            &self.cfg.directory.server.cpk,
            &share.encode(),
            &mut self.rng,
        );
        let sig = self.malicious().then(|| {
            let payload = unmask_payload(&self.cfg, self.id, &ciphertext);
            authcrypto::sign(self.sig_key.signing_key(), &payload)
        });
        Ok(RoundMessage::UnmaskShare { from: self.id, ciphertext, sig })
    }

    #[cfg(test)]
    pub(crate) fn force_seed(&mut self, seed: Seed) {
        self.seed = Some(seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hprg::Hprg;
    use crate::modmath::seeded_rng;
    use crate::simnet::Instance;
    use crate::testkit::toy_instance;

    fn make_client(inst: &Instance, id: ClientId, input: Vec<u64>) -> Client {
        let cfg = Arc::clone(&inst.config);
        let input = GradientVector::new(input, cfg.m, cfg.alpha).unwrap();
        Client::new(
            id,
            cfg,
            input,
            inst.client_sig[(id - 1) as usize].clone(),
            inst.client_enc[(id - 1) as usize].clone(),
            seeded_rng(b"test-client", &[id as u8]),
        )
    }

    #[test]
    fn step1_emits_one_share_per_other_client() {
        let inst = toy_instance(3, 2, 1, 1, Mode::Malicious);
        let mut c1 = make_client(&inst, 1, vec![1]);
        let msgs = c1.step1_share_seed();
        assert_eq!(msgs.len(), 2);
        let mut to: Vec<ClientId> = msgs
            .iter()
            .map(|m| match m {
                RoundMessage::EncShare { to, .. } => *to,
                _ => panic!("wrong kind"),
            })
            .collect();
        to.sort_unstable();
        assert_eq!(to, vec![2, 3]);
        // Every message verifies under the sender's public key.
        for m in &msgs {
            let RoundMessage::EncShare { from, to, ciphertext, sig } = m else { unreachable!() };
            let payload = enc_share_payload(&inst.config, *from, *to, ciphertext);
            assert!(authcrypto::verify(
                &inst.config.directory.client(1).spk,
                &payload,
                sig.as_ref().unwrap()
            ));
        }
    }

    #[test]
    fn shared_seed_reconstructs_and_masks_consistently() {
        // Decrypt the two outgoing shares, reconstruct the seed, and check
        // that the client's masked vector opens to its input under that
        // seed's expansion.
        let inst = toy_instance(3, 2, 2, 2, Mode::SemiHonest);
        let cfg = &inst.config;
        let mut c1 = make_client(&inst, 1, vec![2, 1]);
        let msgs = c1.step1_share_seed();
        let mut shares = Vec::new();
        for m in &msgs {
            let RoundMessage::EncShare { to, ciphertext, .. } = m else { unreachable!() };
            let plain =
                authcrypto::decrypt(inst.client_enc[(*to - 1) as usize].secret(), ciphertext)
                    .unwrap();
            shares.push(Share::decode(&cfg.field, &plain).unwrap());
        }
        let shamir_cfg = ShamirConfig::new(2, 3, cfg.field.clone()).unwrap();
        let seed_value = shamir::reconstruct(&shamir_cfg, &shares).unwrap();
        let seed = Seed::reduce(&cfg.group, seed_value.value().clone());

        let basis = cfg.mask_basis();
        let RoundMessage::Masked { elements, .. } = c1.step2_mask(&basis) else {
            unreachable!()
        };
        let mask = basis.expand(&cfg.group, &seed);
        for (j, (y, r)) in elements.iter().zip(&mask.elements).enumerate() {
            let unmasked = cfg.group.mul(y, &cfg.group.inv(r));
            let x = crate::dlog::brute_force(&cfg.group, &unmasked, cfg.alpha).unwrap();
            assert_eq!(x, [2, 1][j]);
        }
    }

    #[test]
    fn toy_masking_matches_hand_computation() {
        // p=23, q=11, g=4, H(j)=g^j, seed 2, x=[1]: r=[16], y=[4·16 mod 23]=[18].
        let inst = toy_instance(2, 1, 1, 1, Mode::SemiHonest);
        let mut c1 = make_client(&inst, 1, vec![1]);
        c1.step1_share_seed();
        c1.force_seed(Seed::reduce(&inst.config.group, 2u32.into()));
        let basis = Hprg::with_generator_powers().basis(&inst.config.group, 1);
        let RoundMessage::Masked { elements, .. } = c1.step2_mask(&basis) else {
            unreachable!()
        };
        assert_eq!(elements[0].value(), &num_bigint::BigUint::from(18u32));
    }

    #[test]
    fn forged_share_signature_aborts_receiver() {
        let inst = toy_instance(3, 2, 1, 1, Mode::Malicious);
        let mut c1 = make_client(&inst, 1, vec![0]);
        let mut msgs = c1.step1_share_seed();
        let to2 = msgs
            .iter_mut()
            .find(|m| matches!(m, RoundMessage::EncShare { to: 2, .. }))
            .unwrap();
        to2.corrupt_signature();
        let mut c2 = make_client(&inst, 2, vec![0]);
        assert_eq!(
            c2.step1_receive(std::slice::from_ref(to2)).unwrap_err(),
            AbortReason::BadSignature { from: PartyId::Client(1) }
        );
        assert!(c2.is_aborted());
    }

    #[test]
    fn tampered_ciphertext_aborts_receiver() {
        let inst = toy_instance(3, 2, 1, 1, Mode::Malicious);
        let mut c1 = make_client(&inst, 1, vec![0]);
        let msgs = c1.step1_share_seed();
        let RoundMessage::EncShare { from, to, ciphertext, .. } = msgs
            .iter()
            .find(|m| matches!(m, RoundMessage::EncShare { to: 2, .. }))
            .unwrap()
        else {
            unreachable!()
        };
        let mut bad = ciphertext.clone();
        let last = bad.len() - 1;
        bad[last] ^= 1;
        // Re-sign so the verification failure comes from the AEAD layer.
        let payload = enc_share_payload(&inst.config, *from, *to, &bad);
        let sig = authcrypto::sign(inst.client_sig[0].signing_key(), &payload);
        let forged = RoundMessage::EncShare {
            from: *from,
            to: *to,
            ciphertext: bad,
            sig: Some(sig),
        };
        let mut c2 = make_client(&inst, 2, vec![0]);
        assert_eq!(
            c2.step1_receive(&[forged]).unwrap_err(),
            AbortReason::AuthFailure { from: 1 }
        );
    }

    /// Runs the seed exchange with chosen seeds and checks the server-side
    /// reconstruction of the summed unmask shares.
    fn exchange_and_reconstruct(seeds: [u64; 2], roster: Vec<ClientId>) -> u64 {
        let inst = toy_instance(2, 2, 1, 1, Mode::SemiHonest);
        let cfg = &inst.config;
        let shamir_cfg = ShamirConfig::new(2, 2, cfg.field.clone()).unwrap();
        let mut rng = seeded_rng(b"dealer", &[9]);
        let mut clients: Vec<Client> =
            (1..=2).map(|id| make_client(&inst, id, vec![0])).collect();

        // Deal chosen seeds to both clients as crafted step-1 messages.
        for (dealer, seed) in (1u32..=2).zip(seeds) {
            let shares =
                shamir::share(&shamir_cfg, &cfg.field.element_from_u64(seed), &mut rng);
            for share in shares {
                let to = share.index;
                let ciphertext = authcrypto::encrypt(
                    &cfg.directory.client(to).cpk,
                    &share.encode(),
                    &mut rng,
                );
                let msg = RoundMessage::EncShare { from: dealer, to, ciphertext, sig: None };
                clients[(to - 1) as usize].step1_receive(&[msg]).unwrap();
            }
        }

        let announce = RoundMessage::RosterAnnounce { roster: roster.clone(), sig: None };
        let mut unmask_shares = Vec::new();
        for c in clients.iter_mut().take(roster.len()) {
            assert!(c.receive_roster_announce(&announce).unwrap().is_none());
            let RoundMessage::UnmaskShare { ciphertext, .. } = c.step4_unmask_share().unwrap()
            else {
                unreachable!()
            };
            let plain = authcrypto::decrypt(inst.server_enc.secret(), &ciphertext).unwrap();
            unmask_shares.push(Share::decode(&cfg.field, &plain).unwrap());
        }
        let value = shamir::reconstruct(&shamir_cfg, &unmask_shares).unwrap();
        value.value().try_into().unwrap()
    }

    #[test]
    fn summed_unmask_shares_reconstruct_seed_sum() {
        // Seeds 5 and 7 over P=37: the reconstructed sum is 12.
        assert_eq!(exchange_and_reconstruct([5, 7], vec![1, 2]), 12);
    }

    #[test]
    fn missing_share_for_roster_member() {
        let inst = toy_instance(3, 2, 1, 1, Mode::SemiHonest);
        let cfg = &inst.config;
        let mut c1 = make_client(&inst, 1, vec![0]);
        c1.step1_share_seed(); // holds only its own share
        let announce =
            RoundMessage::RosterAnnounce { roster: vec![1, 2], sig: None };
        c1.receive_roster_announce(&announce).unwrap();
        assert_eq!(
            c1.step4_unmask_share().unwrap_err(),
            AbortReason::MissingShare { member: 2 }
        );
        assert!(cfg.mode == Mode::SemiHonest);
    }

    #[test]
    fn single_member_roster_uses_own_share() {
        let inst = toy_instance(2, 1, 1, 1, Mode::SemiHonest);
        let cfg = &inst.config;
        let mut c1 = make_client(&inst, 1, vec![0]);
        c1.step1_share_seed();
        let own = c1.sum_shares_over(&[1]).unwrap();
        let announce = RoundMessage::RosterAnnounce { roster: vec![1], sig: None };
        c1.receive_roster_announce(&announce).unwrap();
        let RoundMessage::UnmaskShare { ciphertext, .. } = c1.step4_unmask_share().unwrap()
        else {
            unreachable!()
        };
        let plain = authcrypto::decrypt(inst.server_enc.secret(), &ciphertext).unwrap();
        let share = Share::decode(&cfg.field, &plain).unwrap();
        assert_eq!(share.index, 1);
        assert_eq!(share.value, own);
    }

    #[test]
    fn malformed_rosters_rejected() {
        let inst = toy_instance(3, 2, 1, 1, Mode::SemiHonest);
        let mut c1 = make_client(&inst, 1, vec![0]);
        c1.step1_share_seed();
        for roster in [vec![], vec![2, 3], vec![2, 1], vec![1, 1], vec![1, 9]] {
            let mut c = make_client(&inst, 1, vec![0]);
            c.step1_share_seed();
            let msg = RoundMessage::RosterAnnounce { roster, sig: None };
            assert_eq!(
                c.receive_roster_announce(&msg).unwrap_err(),
                AbortReason::InconsistentRoster
            );
        }
    }
}
