//! (t, n) Shamir secret sharing over `Z_P` with additive homomorphism.
//!
//! Evaluation points are fixed to `{1..n}` for every dealer so that shares
//! from different dealers can be summed pointwise. Reconstruction uses the
//! `t` shares with the smallest indices when more are supplied, keeping
//! transcripts reproducible.

use num_bigint::BigUint;
use rand::RngCore;
use thiserror::Error;

use crate::codec::{put_u32, CodecError, Reader};
use crate::modmath::{FieldElement, FieldParams, ModMathError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShamirError {
    #[error("invalid threshold: need 0 < t <= n < P")]
    InvalidThreshold,
    #[error("duplicate share index {0}")]
    DuplicateIndex(u32),
    #[error("insufficient shares: got {got}, need {need}")]
    InsufficientShares { got: usize, need: usize },
    #[error("share index mismatch: {a} vs {b}")]
    IndexMismatch { a: u32, b: u32 },
    #[error("share index {0} outside 1..=n")]
    IndexOutOfRange(u32),
    #[error("expected {expected} random coefficients, got {got}")]
    WrongCoefficientCount { expected: usize, got: usize },
    #[error(transparent)]
    Math(#[from] ModMathError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone)]
pub struct ShamirConfig {
    t: usize,
    n: usize,
    field: FieldParams,
}

impl ShamirConfig {
    pub fn new(t: usize, n: usize, field: FieldParams) -> Result<Self, ShamirError> {
        if t == 0 || t > n || BigUint::from(n) >= *field.modulus() {
            return Err(ShamirError::InvalidThreshold);
        }
        Ok(ShamirConfig { t, n, field })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }
}

/// One evaluation `(x_i, f(x_i))` of the dealer's polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub index: u32,
    pub value: FieldElement,
}

impl Share {
    /// 4-byte big-endian index followed by the field element encoding.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_u32(&mut out, self.index);
        out.extend_from_slice(&self.value.encode());
        out
    }

    pub fn decode(field: &FieldParams, bytes: &[u8]) -> Result<Share, ShamirError> {
        let mut r = Reader::new(bytes);
        let share = Self::decode_from(field, &mut r)?;
        r.finish().map_err(ShamirError::from)?;
        Ok(share)
    }

    pub fn decode_from(field: &FieldParams, r: &mut Reader<'_>) -> Result<Share, ShamirError> {
        let index = r.u32().map_err(ShamirError::from)?;
        let value = field.decode_element(r)?;
        Ok(Share { index, value })
    }
}

/// Splits `secret` into `n` shares of a degree-(t-1) polynomial with
/// uniformly random coefficients.
pub fn share(cfg: &ShamirConfig, secret: &FieldElement, rng: &mut impl RngCore) -> Vec<Share> {
    let coeffs: Vec<FieldElement> =
        (0..cfg.t - 1).map(|_| cfg.field.random_element(rng)).collect();
    share_with_coefficients(cfg, secret, &coeffs).expect("coefficient count is t-1")
}

/// Deterministic variant taking the `t-1` non-constant coefficients
/// explicitly (ascending degree).
pub fn share_with_coefficients(
    cfg: &ShamirConfig,
    secret: &FieldElement,
    coeffs: &[FieldElement],
) -> Result<Vec<Share>, ShamirError> {
    if coeffs.len() != cfg.t - 1 {
        return Err(ShamirError::WrongCoefficientCount {
            expected: cfg.t - 1,
            got: coeffs.len(),
        });
    }
    let field = &cfg.field;
    Ok((1..=cfg.n as u32)
        .map(|x| {
            // Horner evaluation of secret + a_1 x + ... + a_{t-1} x^{t-1}.
            let xe = field.element_from_u64(u64::from(x));
            let mut acc = field.zero();
            for c in coeffs.iter().rev() {
                acc = field.add(&field.mul(&acc, &xe), c);
            }
            acc = field.add(&field.mul(&acc, &xe), secret);
            Share { index: x, value: acc }
        })
        .collect())
}

fn validated_prefix<'a>(
    cfg: &ShamirConfig,
    shares: &'a [Share],
) -> Result<Vec<&'a Share>, ShamirError> {
    if shares.len() < cfg.t {
        return Err(ShamirError::InsufficientShares { got: shares.len(), need: cfg.t });
    }
    let mut sorted: Vec<&Share> = shares.iter().collect();
    sorted.sort_by_key(|s| s.index);
    for w in sorted.windows(2) {
        if w[0].index == w[1].index {
            return Err(ShamirError::DuplicateIndex(w[0].index));
        }
    }
    sorted.truncate(cfg.t);
    Ok(sorted)
}

/// Recovers the secret from at least `t` shares with distinct indices.
pub fn reconstruct(cfg: &ShamirConfig, shares: &[Share]) -> Result<FieldElement, ShamirError> {
    let chosen = validated_prefix(cfg, shares)?;
    let indices: Vec<u32> = chosen.iter().map(|s| s.index).collect();
    let bases = precompute_lagrange(cfg, &indices)?;
    let values: Vec<FieldElement> = chosen.iter().map(|s| s.value.clone()).collect();
    Ok(reconstruct_with_bases(&cfg.field, &values, &bases))
}

/// Lagrange basis values at 0: `lambda_j = prod_{m != j} x_m / (x_m - x_j)`.
pub fn precompute_lagrange(
    cfg: &ShamirConfig,
    indices: &[u32],
) -> Result<Vec<FieldElement>, ShamirError> {
    let field = &cfg.field;
    for (i, &a) in indices.iter().enumerate() {
        if a == 0 || a as usize > cfg.n {
            return Err(ShamirError::IndexOutOfRange(a));
        }
        if indices[i + 1..].contains(&a) {
            return Err(ShamirError::DuplicateIndex(a));
        }
    }
    indices
        .iter()
        .map(|&j| {
            let xj = field.element_from_u64(u64::from(j));
            let mut num = field.element_from_u64(1);
            let mut den = field.element_from_u64(1);
            for &m in indices.iter().filter(|&&m| m != j) {
                let xm = field.element_from_u64(u64::from(m));
                num = field.mul(&num, &xm);
                den = field.mul(&den, &field.sub(&xm, &xj));
            }
            // den is a product of nonzero differences, hence invertible.
            let inv = field.inv(&den).expect("nonzero denominator");
            Ok(field.mul(&num, &inv))
        })
        .collect()
}

/// Dot product of share values with precomputed bases; exactly `t` field
/// multiplications. Caller guarantees positional alignment with the index
/// set the bases were computed for.
pub fn reconstruct_with_bases(
    field: &FieldParams,
    values: &[FieldElement],
    bases: &[FieldElement],
) -> FieldElement {
    debug_assert_eq!(values.len(), bases.len());
    let mut acc = field.zero();
    for (v, b) in values.iter().zip(bases) {
        acc = field.add(&acc, &field.mul(v, b));
    }
    acc
}

/// Pointwise sum of two shares at the same evaluation index.
pub fn add_shares(a: &Share, b: &Share, field: &FieldParams) -> Result<Share, ShamirError> {
    if a.index != b.index {
        return Err(ShamirError::IndexMismatch { a: a.index, b: b.index });
    }
    Ok(Share { index: a.index, value: field.add(&a.value, &b.value) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::seeded_rng;
    use proptest::prelude::*;

    fn f17() -> FieldParams {
        FieldParams::from_u64(17).unwrap()
    }

    #[test]
    fn worked_example_p17() {
        // f(x) = 5 + 3x mod 17
        let cfg = ShamirConfig::new(2, 3, f17()).unwrap();
        let shares = share_with_coefficients(
            &cfg,
            &cfg.field().element_from_u64(5),
            &[cfg.field().element_from_u64(3)],
        )
        .unwrap();
        let values: Vec<u64> =
            shares.iter().map(|s| s.value.value().try_into().unwrap()).collect();
        assert_eq!(values, vec![8, 11, 14]);
        assert_eq!(shares[0].index, 1);

        // Reconstruct from shares (1,8) and (3,14).
        let subset = vec![shares[0].clone(), shares[2].clone()];
        let secret = reconstruct(&cfg, &subset).unwrap();
        assert_eq!(secret, cfg.field().element_from_u64(5));
    }

    #[test]
    fn lagrange_bases_p17() {
        let cfg = ShamirConfig::new(2, 3, f17()).unwrap();
        let bases = precompute_lagrange(&cfg, &[1, 3]).unwrap();
        assert_eq!(bases[0], cfg.field().element_from_u64(10));
        assert_eq!(bases[1], cfg.field().element_from_u64(8));
        let values = vec![cfg.field().element_from_u64(8), cfg.field().element_from_u64(14)];
        let dot = reconstruct_with_bases(cfg.field(), &values, &bases);
        assert_eq!(dot, cfg.field().element_from_u64(5));
    }

    #[test]
    fn t_equals_one_is_constant_polynomial() {
        let cfg = ShamirConfig::new(1, 4, f17()).unwrap();
        let secret = cfg.field().element_from_u64(9);
        let mut rng = seeded_rng(b"t1", &[0]);
        for s in share(&cfg, &secret, &mut rng) {
            assert_eq!(s.value, secret);
        }
        let bases = precompute_lagrange(&cfg, &[3]).unwrap();
        assert_eq!(bases, vec![cfg.field().element_from_u64(1)]);
    }

    #[test]
    fn every_t_subset_reconstructs() {
        let field = FieldParams::from_u64(257).unwrap();
        let cfg = ShamirConfig::new(3, 5, field).unwrap();
        let mut rng = seeded_rng(b"subsets", &[1]);
        let secret = cfg.field().random_element(&mut rng);
        let shares = share(&cfg, &secret, &mut rng);
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    let subset =
                        vec![shares[a].clone(), shares[b].clone(), shares[c].clone()];
                    assert_eq!(reconstruct(&cfg, &subset).unwrap(), secret);
                }
            }
        }
    }

    #[test]
    fn insufficient_and_duplicate_shares_rejected() {
        let cfg = ShamirConfig::new(2, 3, f17()).unwrap();
        let s = Share { index: 1, value: cfg.field().element_from_u64(8) };
        assert_eq!(
            reconstruct(&cfg, &[s.clone()]).unwrap_err(),
            ShamirError::InsufficientShares { got: 1, need: 2 }
        );
        assert_eq!(
            reconstruct(&cfg, &[s.clone(), s]).unwrap_err(),
            ShamirError::DuplicateIndex(1)
        );
    }

    #[test]
    fn reconstruct_uses_smallest_indices() {
        let cfg = ShamirConfig::new(2, 4, f17()).unwrap();
        let mut rng = seeded_rng(b"smallest", &[2]);
        let secret = cfg.field().element_from_u64(6);
        let mut shares = share(&cfg, &secret, &mut rng);
        // Corrupt the largest-index share; reconstruction must ignore it.
        shares[3].value = cfg.field().element_from_u64(0);
        assert_eq!(reconstruct(&cfg, &shares).unwrap(), secret);
    }

    #[test]
    fn additive_homomorphism() {
        let cfg = ShamirConfig::new(2, 3, f17()).unwrap();
        let mut rng = seeded_rng(b"homo", &[3]);
        let sa = share(&cfg, &cfg.field().element_from_u64(5), &mut rng);
        let sb = share(&cfg, &cfg.field().element_from_u64(7), &mut rng);
        let summed: Vec<Share> = sa
            .iter()
            .zip(&sb)
            .map(|(a, b)| add_shares(a, b, cfg.field()).unwrap())
            .collect();
        assert_eq!(
            reconstruct(&cfg, &summed[1..]).unwrap(),
            cfg.field().element_from_u64(12)
        );
    }

    #[test]
    fn adding_zero_share_is_identity() {
        let cfg = ShamirConfig::new(2, 3, f17()).unwrap();
        let mut rng = seeded_rng(b"zero", &[4]);
        let shares = share(&cfg, &cfg.field().element_from_u64(5), &mut rng);
        // Zero polynomial: all-zero coefficients sharing secret 0.
        let zeros = share_with_coefficients(
            &cfg,
            &cfg.field().zero(),
            &[cfg.field().zero()],
        )
        .unwrap();
        for (s, z) in shares.iter().zip(&zeros) {
            assert_eq!(&add_shares(s, z, cfg.field()).unwrap(), s);
        }
    }

    #[test]
    fn index_mismatch_rejected() {
        let f = f17();
        let a = Share { index: 1, value: f.element_from_u64(3) };
        let b = Share { index: 2, value: f.element_from_u64(4) };
        assert_eq!(
            add_shares(&a, &b, &f).unwrap_err(),
            ShamirError::IndexMismatch { a: 1, b: 2 }
        );
    }

    #[test]
    fn share_encoding_round_trip() {
        let f = f17();
        let s = Share { index: 3, value: f.element_from_u64(14) };
        assert_eq!(Share::decode(&f, &s.encode()).unwrap(), s);
    }

    /// Brute-force secrecy check: with t-1 shares, every candidate secret in
    /// Z_P is consistent with some polynomial.
    #[test]
    fn two_shares_reveal_nothing_at_t3() {
        let field = f17();
        let cfg = ShamirConfig::new(3, 5, field).unwrap();
        let p: u64 = 17;
        let mut rng = seeded_rng(b"secrecy", &[5]);
        let shares = share(&cfg, &cfg.field().element_from_u64(11), &mut rng);
        let observed = [&shares[0], &shares[3]];
        for candidate in 0..p {
            // Search all degree-2 polynomials with constant term `candidate`.
            let mut consistent = false;
            'poly: for a1 in 0..p {
                for a2 in 0..p {
                    let eval = |x: u64| (candidate + a1 * x + a2 * x * x) % p;
                    if observed.iter().all(|s| {
                        let held: u64 = s.value.value().try_into().unwrap();
                        eval(u64::from(s.index)) == held
                    }) {
                        consistent = true;
                        break 'poly;
                    }
                }
            }
            assert!(consistent, "secret {candidate} excluded by 2 shares");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_random(secret in 0u64..257, t in 1usize..5, extra in 0usize..3, seed: u64) {
            let field = FieldParams::from_u64(257).unwrap();
            let n = t + extra;
            let cfg = ShamirConfig::new(t, n, field).unwrap();
            let secret = cfg.field().element_from_u64(secret);
            let mut rng = seeded_rng(b"prop", &seed.to_be_bytes());
            let shares = share(&cfg, &secret, &mut rng);
            prop_assert_eq!(reconstruct(&cfg, &shares).unwrap(), secret);
        }

        #[test]
        fn homomorphism_random(a in 0u64..257, b in 0u64..257, seed: u64) {
            let field = FieldParams::from_u64(257).unwrap();
            let cfg = ShamirConfig::new(3, 4, field).unwrap();
            let mut rng = seeded_rng(b"prop2", &seed.to_be_bytes());
            let sa = share(&cfg, &cfg.field().element_from_u64(a), &mut rng);
            let sb = share(&cfg, &cfg.field().element_from_u64(b), &mut rng);
            let sum: Vec<Share> = sa.iter().zip(&sb)
                .map(|(x, y)| add_shares(x, y, cfg.field()).unwrap())
                .collect();
            let expect = cfg.field().element_from_u64((a + b) % 257);
            prop_assert_eq!(reconstruct(&cfg, &sum).unwrap(), expect);
        }
    }
}
