//! Active-adversary harness: a malicious server showing different rosters
//! to different clients, optionally aided by colluding clients that sign
//! every roster they see.
//!
//! With the threshold below the safe minimum, the split lets the server
//! reconstruct two aggregate masks whose ratio isolates one client's mask,
//! unmasking that client's private vector. At or above the minimum, honest
//! clients cannot gather a signature quorum on any split roster and abort.

use std::collections::BTreeMap;

use crate::authcrypto;
use crate::dlog;
use crate::hprg::Seed;
use crate::modmath::GroupElement;
use crate::protocol::messages::{roster_payload, RoundMessage};
use crate::protocol::{AbortReason, ClientId, ConfigError, GradientVector};
use crate::shamir::{self, Share, ShamirConfig};
use crate::simnet::{DropoutSchedule, Instance, LatencyModel, Sim};

/// One adversarial view: the roster shown to a set of recipients.
#[derive(Debug, Clone)]
pub struct SplitView {
    pub roster: Vec<ClientId>,
    pub recipients: Vec<ClientId>,
}

#[derive(Debug)]
pub struct SplitOutcome {
    /// Honest clients that aborted during the consistency check.
    pub client_aborts: BTreeMap<ClientId, AbortReason>,
    /// Aggregate masks the server managed to reconstruct, one per view.
    pub reconstructed_views: usize,
    /// Private inputs recovered by dividing reconstructed masks.
    pub recovered_inputs: BTreeMap<ClientId, Vec<u64>>,
}

/// Plays steps 1-2 honestly, then runs the roster-split consistency round.
///
/// `colluding` clients acknowledge every view and answer every view's
/// share request; honest clients follow the protocol. Views must be sorted
/// rosters over real clients.
pub fn run_roster_split_attack(
    inst: &Instance,
    inputs: &[GradientVector],
    views: &[SplitView],
    colluding: &[ClientId],
    seed: u64,
) -> Result<SplitOutcome, ConfigError> {
    let cfg = &inst.config;
    cfg.validate()?;
    if inputs.len() != cfg.n {
        return Err(ConfigError::InputCount { got: inputs.len(), expected: cfg.n });
    }
    let schedule = DropoutSchedule::empty();
    let latency = LatencyModel::none();
    let mut sim = Sim::new(inst, inputs, &schedule, &latency, seed, None);

    // Honest steps 1 and 2 (run_phases is not used: step 3 is adversarial).
    sim.run_honest_prefix().expect("full participation cannot abort before step 3");
    let u2 = sim.server.u2.clone();
    let masked: BTreeMap<ClientId, Vec<GroupElement>> =
        u2.iter().map(|&id| (id, sim.masked_of(id))).collect();

    // Step 3, split: each view is announced only to its recipients, with a
    // genuine server signature on each roster.
    let mut acks: BTreeMap<usize, Vec<(ClientId, authcrypto::Sig)>> = BTreeMap::new();
    for (v, view) in views.iter().enumerate() {
        let payload = roster_payload(cfg, &view.roster);
        let sig = authcrypto::sign(inst.server_sig.signing_key(), &payload);
        let announce =
            RoundMessage::RosterAnnounce { roster: view.roster.clone(), sig: Some(sig) };
        for &id in &view.recipients {
            if colluding.contains(&id) {
                continue;
            }
            match sim.client_mut(id).receive_roster_announce(&announce) {
                Ok(Some(ack)) => {
                    if let RoundMessage::RosterAck { from, sig } = ack {
                        acks.entry(v).or_default().push((from, sig));
                    }
                }
                Ok(None) => unreachable!("malicious mode always acks"),
                Err(_) => sim.note_abort(id),
            }
        }
        // Colluding clients sign whatever they are shown, on every view.
        for &id in colluding {
            let sig = authcrypto::sign(inst.client_sig[(id - 1) as usize].signing_key(), &payload);
            acks.entry(v).or_default().push((id, sig));
        }
    }

    // Step 4 per view: forward that view's bundle, collect unmask shares.
    let shamir_cfg = ShamirConfig::new(cfg.t, cfg.n, cfg.field.clone())
        .expect("validated config");
    let mut view_masks: Vec<Option<(Vec<ClientId>, Vec<GroupElement>)>> = Vec::new();
    let basis = cfg.mask_basis();
    for (v, view) in views.iter().enumerate() {
        let bundle = RoundMessage::AckBundle { acks: acks.get(&v).cloned().unwrap_or_default() };
        let mut shares: Vec<Share> = Vec::new();
        for &id in &view.recipients {
            if colluding.contains(&id) {
                continue;
            }
            if sim.client_is_aborted(id) {
                continue;
            }
            sim.client_mut(id).receive_ack_bundle(&bundle).expect("bundle accepted");
            match sim.client_mut(id).step4_unmask_share() {
                Ok(RoundMessage::UnmaskShare { from, ciphertext, .. }) => {
                    let plain = authcrypto::decrypt(inst.server_enc.secret(), &ciphertext)
                        .expect("server opens its own envelope");
                    let share = Share::decode(&cfg.field, &plain).expect("share decodes");
                    debug_assert_eq!(share.index, from);
                    shares.push(share);
                }
                Ok(_) => unreachable!(),
                Err(_) => sim.note_abort(id),
            }
        }
        // Colluding clients answer every view directly.
        for &id in colluding {
            let value = sim.client_sum_over(id, &view.roster).expect("colluders hold all shares");
            shares.push(Share { index: id, value });
        }
        if shares.len() >= cfg.t {
            let sum = shamir::reconstruct(&shamir_cfg, &shares).expect("t shares reconstruct");
            let mask = basis.expand(&cfg.group, &Seed::reduce(&cfg.group, sum.value().clone()));
            view_masks.push(Some((view.roster.clone(), mask.elements)));
        } else {
            view_masks.push(None);
        }
    }

    // Divide masks of view pairs differing in exactly one client: the ratio
    // is that client's personal mask, which unmasks its uploaded vector.
    let mut recovered = BTreeMap::new();
    let reconstructed = view_masks.iter().flatten().count();
    for (small_roster, small_mask) in view_masks.iter().flatten() {
        for (big_roster, big_mask) in view_masks.iter().flatten() {
            let extra: Vec<ClientId> = big_roster
                .iter()
                .copied()
                .filter(|id| !small_roster.contains(id))
                .collect();
            let [victim] = extra.as_slice() else { continue };
            if !small_roster.iter().all(|id| big_roster.contains(id)) {
                continue;
            }
            let Some(y) = masked.get(victim) else { continue };
            let group = &cfg.group;
            let values: Option<Vec<u64>> = y
                .iter()
                .enumerate()
                .map(|(j, yj)| {
                    let personal_mask = group.mul(&big_mask[j], &group.inv(&small_mask[j]));
                    let unmasked = group.mul(yj, &group.inv(&personal_mask));
                    dlog::brute_force(group, &unmasked, cfg.alpha).ok()
                })
                .collect();
            if let Some(values) = values {
                recovered.insert(*victim, values);
            }
        }
    }

    Ok(SplitOutcome {
        client_aborts: sim.take_client_aborts(),
        reconstructed_views: reconstructed,
        recovered_inputs: recovered,
    })
}
