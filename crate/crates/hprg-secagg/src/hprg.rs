//! Seed-homomorphic pseudorandom generator.
//!
//! A seed `s` in `Z_q` expands to the vector `H(1)^s, ..., H(m)^s`, so the
//! pointwise product of two expansions equals the expansion of the seed sum.
//! `H` is the random-oracle hash onto the group, domain-separated by a
//! session tag so that distinct rounds draw independent mask streams; a
//! hand-checkable mode substitutes `H(j) = g^j` for toy examples.

use num_bigint::BigUint;
use rand::RngCore;

use crate::modmath::{GroupElement, GroupParams};

/// A seed in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed(BigUint);

impl Seed {
    /// Reduces an arbitrary integer into `[0, q)`.
    pub fn reduce(params: &GroupParams, value: BigUint) -> Seed {
        Seed(value % params.order())
    }

    pub fn random(params: &GroupParams, rng: &mut impl RngCore) -> Seed {
        Seed(params.random_exponent(rng))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn add(params: &GroupParams, a: &Seed, b: &Seed) -> Seed {
        Seed((&a.0 + &b.0) % params.order())
    }
}

/// A vector of mask elements, one per vector component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector {
    pub elements: Vec<GroupElement>,
}

impl MaskVector {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// The index-to-group map `H`, fixed per protocol session.
#[derive(Debug, Clone)]
pub enum IndexHash {
    /// Random-oracle construction, domain-separated by the session tag.
    Session(Vec<u8>),
    /// Test hook: `H(j) = g^j`, for hand-checkable expansions.
    GeneratorPowers,
}

#[derive(Debug, Clone)]
pub struct Hprg {
    hash: IndexHash,
}

impl Hprg {
    pub fn for_session(tag: impl Into<Vec<u8>>) -> Hprg {
        Hprg { hash: IndexHash::Session(tag.into()) }
    }

    pub fn with_generator_powers() -> Hprg {
        Hprg { hash: IndexHash::GeneratorPowers }
    }

    /// `H(j)` for the 1-based index `j`.
    pub fn index_element(&self, params: &GroupParams, j: u64) -> GroupElement {
        match &self.hash {
            IndexHash::Session(tag) => params.hash_to_group(tag, j),
            IndexHash::GeneratorPowers => params.exp_u64(&params.generator(), j),
        }
    }

    /// Precomputes `H(1..=m)`; expansions against the same basis share it.
    pub fn basis(&self, params: &GroupParams, m: usize) -> MaskBasis {
        MaskBasis {
            elements: (1..=m as u64).map(|j| self.index_element(params, j)).collect(),
        }
    }

    /// Expands `seed` into `m` mask elements.
    pub fn expand(&self, params: &GroupParams, seed: &Seed, m: usize) -> MaskVector {
        self.basis(params, m).expand(params, seed)
    }
}

/// Precomputed `H(1..=m)` table.
#[derive(Debug, Clone)]
pub struct MaskBasis {
    elements: Vec<GroupElement>,
}

impl MaskBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// One group exponentiation per component.
    pub fn expand(&self, params: &GroupParams, seed: &Seed) -> MaskVector {
        MaskVector {
            elements: self.elements.iter().map(|h| params.exp(h, seed.value())).collect(),
        }
    }
}
