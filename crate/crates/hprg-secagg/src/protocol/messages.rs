//! Round messages and their canonical byte encodings.
//!
//! Signed payloads are `kind tag ‖ session id ‖ round ‖ body fields in
//! declaration order`, each variable-length field length-prefixed, so every
//! party verifies signatures over bit-identical bytes. The wire encoding is
//! the same body plus the signature; session id and round stay ambient.

use crate::authcrypto::Sig;
use crate::codec::{put_block, put_u32, CodecError, Reader};
use crate::modmath::GroupElement;
use crate::protocol::{ClientId, ProtocolConfig};

const KIND_ENC_SHARE: u8 = 0x01;
const KIND_MASKED: u8 = 0x02;
const KIND_ROSTER: u8 = 0x03;
const KIND_ACK: u8 = 0x04;
const KIND_ACK_BUNDLE: u8 = 0x05;
const KIND_UNMASK: u8 = 0x06;

/// Every message exchanged in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundMessage {
    /// Step 1: encrypted Shamir share of the sender's seed, one recipient.
    EncShare { from: ClientId, to: ClientId, ciphertext: Vec<u8>, sig: Option<Sig> },
    /// Step 2: the masked input vector.
    Masked { from: ClientId, elements: Vec<GroupElement>, sig: Option<Sig> },
    /// Step 3 (or the step-4 fetch in semi-honest mode): the roster of
    /// connected clients, signed by the server in malicious mode.
    RosterAnnounce { roster: Vec<ClientId>, sig: Option<Sig> },
    /// Step 3: a client's signature over the announced roster.
    RosterAck { from: ClientId, sig: Sig },
    /// Step 3: the collected acknowledgements, forwarded by the server.
    AckBundle { acks: Vec<(ClientId, Sig)> },
    /// Step 4: encrypted share of the summed live seeds.
    UnmaskShare { from: ClientId, ciphertext: Vec<u8>, sig: Option<Sig> },
}

fn preamble(kind: u8, cfg: &ProtocolConfig) -> Vec<u8> {
    let mut out = vec![kind];
    put_block(&mut out, &cfg.session_id);
    put_u32(&mut out, cfg.round);
    out
}

/// Signed payload for an encrypted share (sigma-1).
pub fn enc_share_payload(
    cfg: &ProtocolConfig,
    from: ClientId,
    to: ClientId,
    ciphertext: &[u8],
) -> Vec<u8> {
    let mut out = preamble(KIND_ENC_SHARE, cfg);
    put_u32(&mut out, from);
    put_u32(&mut out, to);
    put_block(&mut out, ciphertext);
    out
}

/// Signed payload for a masked vector (sigma-2).
pub fn masked_payload(cfg: &ProtocolConfig, from: ClientId, elements: &[GroupElement]) -> Vec<u8> {
    let mut out = preamble(KIND_MASKED, cfg);
    put_u32(&mut out, from);
    put_u32(&mut out, elements.len() as u32);
    for e in elements {
        out.extend_from_slice(&e.encode());
    }
    out
}

/// Signed payload for a roster; used by both the server announcement
/// (sigma-3) and client acknowledgements (sigma-4). Rosters are sorted
/// ascending before signing so byte-identical views are well-defined.
pub fn roster_payload(cfg: &ProtocolConfig, roster: &[ClientId]) -> Vec<u8> {
    debug_assert!(roster.windows(2).all(|w| w[0] < w[1]), "roster must be sorted");
    let mut out = preamble(KIND_ROSTER, cfg);
    put_u32(&mut out, roster.len() as u32);
    for &id in roster {
        put_u32(&mut out, id);
    }
    out
}

/// Signed payload for an unmask share (sigma-5).
pub fn unmask_payload(cfg: &ProtocolConfig, from: ClientId, ciphertext: &[u8]) -> Vec<u8> {
    let mut out = preamble(KIND_UNMASK, cfg);
    put_u32(&mut out, from);
    put_block(&mut out, ciphertext);
    out
}

fn put_opt_sig(out: &mut Vec<u8>, sig: &Option<Sig>) {
    match sig {
        Some(s) => {
            out.push(1);
            put_block(out, &s.0);
        }
        None => out.push(0),
    }
}

fn read_opt_sig(r: &mut Reader<'_>) -> Result<Option<Sig>, CodecError> {
    match r.u8()? {
        0 => Ok(None),
        1 => Ok(Some(Sig(r.block()?.to_vec()))),
        _ => Err(CodecError::Malformed("signature flag")),
    }
}

impl RoundMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            RoundMessage::EncShare { .. } => "enc-share",
            RoundMessage::Masked { .. } => "masked",
            RoundMessage::RosterAnnounce { .. } => "roster",
            RoundMessage::RosterAck { .. } => "roster-ack",
            RoundMessage::AckBundle { .. } => "ack-bundle",
            RoundMessage::UnmaskShare { .. } => "unmask-share",
        }
    }

    /// Wire encoding; drives byte counters and the transcript record.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            RoundMessage::EncShare { from, to, ciphertext, sig } => {
                out.push(KIND_ENC_SHARE);
                put_u32(&mut out, *from);
                put_u32(&mut out, *to);
                put_block(&mut out, ciphertext);
                put_opt_sig(&mut out, sig);
            }
            RoundMessage::Masked { from, elements, sig } => {
                out.push(KIND_MASKED);
                put_u32(&mut out, *from);
                put_u32(&mut out, elements.len() as u32);
                for e in elements {
                    out.extend_from_slice(&e.encode());
                }
                put_opt_sig(&mut out, sig);
            }
            RoundMessage::RosterAnnounce { roster, sig } => {
                out.push(KIND_ROSTER);
                put_u32(&mut out, roster.len() as u32);
                for &id in roster {
                    put_u32(&mut out, id);
                }
                put_opt_sig(&mut out, sig);
            }
            RoundMessage::RosterAck { from, sig } => {
                out.push(KIND_ACK);
                put_u32(&mut out, *from);
                put_block(&mut out, &sig.0);
            }
            RoundMessage::AckBundle { acks } => {
                out.push(KIND_ACK_BUNDLE);
                put_u32(&mut out, acks.len() as u32);
                for (id, sig) in acks {
                    put_u32(&mut out, *id);
                    put_block(&mut out, &sig.0);
                }
            }
            RoundMessage::UnmaskShare { from, ciphertext, sig } => {
                out.push(KIND_UNMASK);
                put_u32(&mut out, *from);
                put_block(&mut out, ciphertext);
                put_opt_sig(&mut out, sig);
            }
        }
        out
    }

    /// Parses a wire message, checking group membership of mask elements.
    pub fn decode(cfg: &ProtocolConfig, bytes: &[u8]) -> Result<RoundMessage, CodecError> {
        let mut r = Reader::new(bytes);
        let msg = match r.u8()? {
            KIND_ENC_SHARE => {
                let from = r.u32()?;
                let to = r.u32()?;
                let ciphertext = r.block()?.to_vec();
                let sig = read_opt_sig(&mut r)?;
                RoundMessage::EncShare { from, to, ciphertext, sig }
            }
            KIND_MASKED => {
                let from = r.u32()?;
                let count = r.u32()?;
                let elements = (0..count)
                    .map(|_| {
                        let v = r.biguint()?;
                        cfg.group
                            .element(v)
                            .map_err(|_| CodecError::Malformed("mask element outside subgroup"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let sig = read_opt_sig(&mut r)?;
                RoundMessage::Masked { from, elements, sig }
            }
            KIND_ROSTER => {
                let count = r.u32()?;
                let roster = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
                let sig = read_opt_sig(&mut r)?;
                RoundMessage::RosterAnnounce { roster, sig }
            }
            KIND_ACK => {
                let from = r.u32()?;
                let sig = Sig(r.block()?.to_vec());
                RoundMessage::RosterAck { from, sig }
            }
            KIND_ACK_BUNDLE => {
                let count = r.u32()?;
                let acks = (0..count)
                    .map(|_| Ok::<_, CodecError>((r.u32()?, Sig(r.block()?.to_vec()))))
                    .collect::<Result<Vec<_>, _>>()?;
                RoundMessage::AckBundle { acks }
            }
            KIND_UNMASK => {
                let from = r.u32()?;
                let ciphertext = r.block()?.to_vec();
                let sig = read_opt_sig(&mut r)?;
                RoundMessage::UnmaskShare { from, ciphertext, sig }
            }
            _ => return Err(CodecError::Malformed("unknown message kind")),
        };
        r.finish()?;
        Ok(msg)
    }

    /// Flips a bit in the carried signature; the adversary harness uses
    /// this to model forgery attempts in transit.
    pub fn corrupt_signature(&mut self) {
        let sig = match self {
            RoundMessage::EncShare { sig, .. }
            | RoundMessage::Masked { sig, .. }
            | RoundMessage::RosterAnnounce { sig, .. }
            | RoundMessage::UnmaskShare { sig, .. } => sig.as_mut(),
            RoundMessage::RosterAck { sig, .. } => Some(sig),
            RoundMessage::AckBundle { acks } => acks.first_mut().map(|(_, s)| s),
        };
        if let Some(s) = sig {
            if let Some(b) = s.0.first_mut() {
                *b ^= 0x01;
            }
        }
    }
}
