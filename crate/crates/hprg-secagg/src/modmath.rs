//! Arbitrary-precision modular arithmetic: the Shamir field `Z_P` and the
//! prime-order cyclic group used for masking.
//!
//! The group is the quadratic-residue subgroup of `Z_p*` for a safe prime
//! `p = 2q + 1`, so the subgroup has prime order `q` and every non-identity
//! element generates it. Hashing onto the subgroup reduces a wide hash output
//! mod `p` and squares it, which maps uniformly onto the quadratic residues.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use std::sync::OnceLock;
use thiserror::Error;

use crate::codec::{put_biguint, CodecError, Reader};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModMathError {
    #[error("modulus is not prime")]
    NotPrime,
    #[error("invalid group parameters: {0}")]
    InvalidGroup(&'static str),
    #[error("value is not a member of the order-q subgroup")]
    NotInSubgroup,
    #[error("value out of range for the field")]
    OutOfRange,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// An element of `Z_P`, always reduced to `[0, P)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(BigUint);

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_biguint(&mut out, &self.0);
        out
    }
}

/// The prime field `Z_P` backing Shamir secret sharing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldParams {
    p: BigUint,
}

impl FieldParams {
    /// Builds the field, verifying that `p` is (probably) prime.
    pub fn new(p: BigUint) -> Result<Self, ModMathError> {
        if !is_probable_prime(&p) {
            return Err(ModMathError::NotPrime);
        }
        Ok(FieldParams { p })
    }

    pub fn from_u64(p: u64) -> Result<Self, ModMathError> {
        Self::new(BigUint::from(p))
    }

    /// Deterministically finds a prime strictly greater than `min`.
    ///
    /// The result has one more bit than `min`, so `P > min` always holds and
    /// the search space stays dense in primes.
    pub fn generate_above(min: &BigUint, seed: &[u8]) -> FieldParams {
        let mut rng = seeded_rng(b"field-prime", seed);
        let bits = min.bits() + 1;
        loop {
            let mut cand = rng.gen_biguint(bits);
            cand.set_bit(bits - 1, true);
            cand.set_bit(0, true);
            if cand <= *min {
                continue;
            }
            if is_probable_prime(&cand) {
                return FieldParams { p: cand };
            }
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    /// Reduces an arbitrary integer into the field.
    pub fn element(&self, v: BigUint) -> FieldElement {
        FieldElement(v % &self.p)
    }

    pub fn element_from_u64(&self, v: u64) -> FieldElement {
        self.element(BigUint::from(v))
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(BigUint::zero())
    }

    pub fn random_element(&self, rng: &mut impl RngCore) -> FieldElement {
        FieldElement(rng.gen_biguint_below(&self.p))
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement((&a.0 + &b.0) % &self.p)
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement(((&self.p + &a.0) - &b.0) % &self.p)
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement((&a.0 * &b.0) % &self.p)
    }

    /// Multiplicative inverse by Fermat's little theorem; `None` for zero.
    pub fn inv(&self, a: &FieldElement) -> Option<FieldElement> {
        if a.0.is_zero() {
            return None;
        }
        let e = &self.p - 2u32;
        Some(FieldElement(a.0.modpow(&e, &self.p)))
    }

    pub fn decode_element(&self, r: &mut Reader<'_>) -> Result<FieldElement, ModMathError> {
        let v = r.biguint()?;
        if v >= self.p {
            return Err(ModMathError::OutOfRange);
        }
        Ok(FieldElement(v))
    }
}

/// A member of the order-`q` subgroup of `Z_p*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement(BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_biguint(&mut out, &self.0);
        out
    }
}

/// Safe-prime group parameters: `p = 2q + 1`, `g` generates the
/// quadratic-residue subgroup of order `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
}

impl GroupParams {
    /// Validates externally supplied parameters.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, ModMathError> {
        if &p != &(&q * 2u32 + 1u32) {
            return Err(ModMathError::InvalidGroup("p != 2q + 1"));
        }
        if !is_probable_prime(&p) || !is_probable_prime(&q) {
            return Err(ModMathError::InvalidGroup("p or q not prime"));
        }
        if g.is_zero() || g.is_one() || g >= p {
            return Err(ModMathError::InvalidGroup("generator out of range"));
        }
        if !g.modpow(&q, &p).is_one() {
            return Err(ModMathError::InvalidGroup("generator not of order q"));
        }
        Ok(GroupParams { p, q, g })
    }

    /// Deterministically generates a safe prime `p` of `bit_length` bits with
    /// `q = (p-1)/2` prime, and `g = h^2 mod p` for the smallest `h >= 2`
    /// whose square is not 1 (h = 2 for any p > 5, so g = 4).
    pub fn generate(bit_length: u64, seed: &[u8]) -> GroupParams {
        assert!(bit_length >= 16, "group modulus below 16 bits");
        let mut rng = seeded_rng(b"group-params", seed);
        loop {
            let mut q = rng.gen_biguint(bit_length - 1);
            q.set_bit(bit_length - 2, true);
            q.set_bit(0, true);
            let p = &q * 2u32 + 1u32;
            if !passes_trial_division(&q) || !passes_trial_division(&p) {
                continue;
            }
            if miller_rabin(&q, &mut rng) && miller_rabin(&p, &mut rng) {
                let g = BigUint::from(4u32) % &p;
                return GroupParams { p, q, g };
            }
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    pub fn order(&self) -> &BigUint {
        &self.q
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    /// Checks subgroup membership before admitting a raw value.
    pub fn element(&self, v: BigUint) -> Result<GroupElement, ModMathError> {
        if v.is_zero() || v >= self.p {
            return Err(ModMathError::NotInSubgroup);
        }
        if !v.modpow(&self.q, &self.p).is_one() {
            return Err(ModMathError::NotInSubgroup);
        }
        Ok(GroupElement(v))
    }

    /// `base^e`; the exponent is reduced mod `q` before use, so exponents
    /// produced by Shamir reconstruction over `Z_P` land in the right range.
    pub fn exp(&self, base: &GroupElement, e: &BigUint) -> GroupElement {
        GroupElement(base.0.modpow(&(e % &self.q), &self.p))
    }

    pub fn exp_u64(&self, base: &GroupElement, e: u64) -> GroupElement {
        self.exp(base, &BigUint::from(e))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    /// Inverse via `a^(q-1)`, valid for subgroup members.
    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.modpow(&(&self.q - 1u32), &self.p))
    }

    pub fn random_exponent(&self, rng: &mut impl RngCore) -> BigUint {
        rng.gen_biguint_below(&self.q)
    }

    /// Hashes `(tag, index)` onto the subgroup, never returning the identity.
    ///
    /// SHA-256 in counter mode expands the input to `|p| + 64` bits (the
    /// extra 64 bits keep the mod-p reduction bias below 2^-64), the result
    /// is reduced mod `p` and squared; a square of 0 or 1 bumps the attempt
    /// counter and retries.
    pub fn hash_to_group(&self, tag: &[u8], index: u64) -> GroupElement {
        let need_bytes = ((self.p.bits() + 64) as usize).div_ceil(8);
        let mut attempt: u32 = 0;
        loop {
            let mut stream = Vec::with_capacity(need_bytes + 32);
            let mut block: u32 = 0;
            while stream.len() < need_bytes {
                let mut h = Sha256::new();
                h.update(b"hprg-secagg/hash-to-group/v1");
                h.update((tag.len() as u32).to_be_bytes());
                h.update(tag);
                h.update(index.to_be_bytes());
                h.update(attempt.to_be_bytes());
                h.update(block.to_be_bytes());
                stream.extend_from_slice(&h.finalize());
                block += 1;
            }
            let x = BigUint::from_bytes_be(&stream[..need_bytes]) % &self.p;
            let e = x.modpow(&BigUint::from(2u32), &self.p);
            if !e.is_zero() && !e.is_one() {
                return GroupElement(e);
            }
            attempt += 1;
        }
    }

    /// Serializes as `(p, q, g)`, each length-prefixed minimal big-endian.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_biguint(&mut out, &self.p);
        put_biguint(&mut out, &self.q);
        put_biguint(&mut out, &self.g);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<GroupParams, ModMathError> {
        let mut r = Reader::new(bytes);
        let p = r.biguint()?;
        let q = r.biguint()?;
        let g = r.biguint()?;
        r.finish()?;
        GroupParams::new(p, q, g)
    }
}

/// Derives a 32-byte ChaCha20 key from an arbitrary-length seed and a label.
pub fn seeded_rng(label: &[u8], seed: &[u8]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"hprg-secagg/rng/v1");
    h.update((label.len() as u32).to_be_bytes());
    h.update(label);
    h.update(seed);
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 2000usize;
        let mut sieve = vec![true; limit];
        let mut out = Vec::new();
        for i in 2..limit {
            if sieve[i] {
                out.push(i as u64);
                let mut j = i * i;
                while j < limit {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        out
    })
}

fn passes_trial_division(n: &BigUint) -> bool {
    for &sp in small_primes() {
        let d = BigUint::from(sp);
        if *n == d {
            return true;
        }
        if (n % d).is_zero() {
            return false;
        }
    }
    true
}

/// Miller-Rabin with 32 bases drawn from `rng`.
fn miller_rabin(n: &BigUint, rng: &mut ChaCha20Rng) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if n.is_even() {
        return *n == two;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..32 {
        let a = rng.gen_biguint_range(&two, &n_minus_1.clone().max(two.clone() + &one));
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Deterministic primality check: trial division plus Miller-Rabin with
/// bases derived from the candidate itself.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in small_primes() {
        let d = BigUint::from(sp);
        if *n == d {
            return true;
        }
        if (n % d).is_zero() {
            return false;
        }
    }
    let mut rng = seeded_rng(b"primality", &n.to_bytes_be());
    miller_rabin(n, &mut rng)
}
