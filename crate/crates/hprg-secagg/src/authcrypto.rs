//! Signatures and authenticated public-key encryption for share delivery.
//!
//! Signing is Ed25519. Encryption is a hybrid envelope: an ephemeral X25519
//! agreement against the recipient's public key, HKDF-SHA256 to a 128-bit
//! key, then AES-128-GCM with a random 96-bit nonce. The ephemeral public
//! value and the recipient key are bound as associated data, so any
//! modification of the envelope fails authentication.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Nonce};
use ed25519_dalek::{Signer, Verifier};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use thiserror::Error;
use x25519_dalek::{PublicKey, StaticSecret};

use crate::codec::{put_block, Reader};

const TAG_LEN: usize = 16;
const NONCE_LEN: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthCryptoError {
    #[error("ciphertext failed authentication")]
    AuthFailure,
}

/// Ed25519 keypair for message origin authentication.
#[derive(Clone)]
pub struct SigKeyPair {
    signing: ed25519_dalek::SigningKey,
    pub spk: [u8; 32],
}

impl SigKeyPair {
    pub fn signing_key(&self) -> &ed25519_dalek::SigningKey {
        &self.signing
    }
}

/// X25519 keypair for the hybrid envelope.
#[derive(Clone)]
pub struct EncKeyPair {
    secret: StaticSecret,
    pub cpk: [u8; 32],
}

impl EncKeyPair {
    pub fn secret(&self) -> &StaticSecret {
        &self.secret
    }
}

/// Detached signature bytes; kept as a plain byte vector so that malformed
/// or mutated signatures remain representable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sig(pub Vec<u8>);

pub fn sig_keygen(rng: &mut (impl RngCore + CryptoRng)) -> SigKeyPair {
    let mut secret = [0u8; 32];
    rng.fill_bytes(&mut secret);
    let signing = ed25519_dalek::SigningKey::from_bytes(&secret);
    let spk = signing.verifying_key().to_bytes();
    SigKeyPair { signing, spk }
}

pub fn sign(ssk: &ed25519_dalek::SigningKey, payload: &[u8]) -> Sig {
    Sig(ssk.sign(payload).to_bytes().to_vec())
}

/// Returns true only for a signature produced by the key behind `spk` on
/// exactly `payload`; malformed inputs return false rather than erroring.
pub fn verify(spk: &[u8; 32], payload: &[u8], sig: &Sig) -> bool {
    let Ok(key) = ed25519_dalek::VerifyingKey::from_bytes(spk) else {
        return false;
    };
    let Ok(bytes): Result<[u8; 64], _> = sig.0.as_slice().try_into() else {
        return false;
    };
    let signature = ed25519_dalek::Signature::from_bytes(&bytes);
    key.verify(payload, &signature).is_ok()
}

pub fn enc_keygen(rng: &mut (impl RngCore + CryptoRng)) -> EncKeyPair {
    let mut secret = [0u8; 32];
    rng.fill_bytes(&mut secret);
    let secret = StaticSecret::from(secret);
    let cpk = PublicKey::from(&secret).to_bytes();
    EncKeyPair { secret, cpk }
}

fn derive_key(shared: &[u8; 32], eph_pk: &[u8; 32], recipient_pk: &[u8; 32]) -> [u8; 16] {
    let mut salt = Vec::with_capacity(64);
    salt.extend_from_slice(eph_pk);
    salt.extend_from_slice(recipient_pk);
    let hk = Hkdf::<Sha256>::new(Some(&salt), shared);
    let mut key = [0u8; 16];
    hk.expand(b"hprg-secagg/envelope/v1", &mut key).expect("16 bytes fits");
    key
}

/// Wire format: ephemeral public value, nonce, body, tag, each
/// length-prefixed.
pub fn encrypt(cpk: &[u8; 32], plaintext: &[u8], rng: &mut (impl RngCore + CryptoRng)) -> Vec<u8> {
    let mut eph_secret = [0u8; 32];
    rng.fill_bytes(&mut eph_secret);
    let eph = StaticSecret::from(eph_secret);
    let eph_pk = PublicKey::from(&eph).to_bytes();
    let shared = eph.diffie_hellman(&PublicKey::from(*cpk)).to_bytes();
    let key = derive_key(&shared, &eph_pk, cpk);

    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let mut aad = Vec::with_capacity(64);
    aad.extend_from_slice(&eph_pk);
    aad.extend_from_slice(cpk);

    let cipher = Aes128Gcm::new(&key.into());
    let sealed = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad: &aad })
        .expect("AES-GCM encryption is infallible for in-memory buffers");
    let (body, tag) = sealed.split_at(sealed.len() - TAG_LEN);

    let mut out = Vec::new();
    put_block(&mut out, &eph_pk);
    put_block(&mut out, &nonce);
    put_block(&mut out, body);
    put_block(&mut out, tag);
    out
}

/// Authenticates and opens an envelope produced by [`encrypt`].
pub fn decrypt(csk: &StaticSecret, ciphertext: &[u8]) -> Result<Vec<u8>, AuthCryptoError> {
    let mut r = Reader::new(ciphertext);
    let parse = |r: &mut Reader<'_>| -> Result<(Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>), ()> {
        let eph = r.block().map_err(|_| ())?.to_vec();
        let nonce = r.block().map_err(|_| ())?.to_vec();
        let body = r.block().map_err(|_| ())?.to_vec();
        let tag = r.block().map_err(|_| ())?.to_vec();
        Ok((eph, nonce, body, tag))
    };
    let (eph, nonce, body, tag) = parse(&mut r).map_err(|_| AuthCryptoError::AuthFailure)?;
    r.finish().map_err(|_| AuthCryptoError::AuthFailure)?;
    let eph_pk: [u8; 32] = eph.as_slice().try_into().map_err(|_| AuthCryptoError::AuthFailure)?;
    if nonce.len() != NONCE_LEN || tag.len() != TAG_LEN {
        return Err(AuthCryptoError::AuthFailure);
    }

    let recipient_pk = PublicKey::from(csk).to_bytes();
    let shared = csk.diffie_hellman(&PublicKey::from(eph_pk)).to_bytes();
    let key = derive_key(&shared, &eph_pk, &recipient_pk);
    let mut aad = Vec::with_capacity(64);
    aad.extend_from_slice(&eph_pk);
    aad.extend_from_slice(&recipient_pk);

    let mut sealed = body;
    sealed.extend_from_slice(&tag);
    let cipher = Aes128Gcm::new(&key.into());
    cipher
        .decrypt(Nonce::from_slice(&nonce), Payload { msg: &sealed, aad: &aad })
        .map_err(|_| AuthCryptoError::AuthFailure)
}
