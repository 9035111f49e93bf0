//! Shamir sharing over Z_P: split, reconstruct from any t shares, and add
//! shares of two secrets without reconstructing either.
//!
//!     cargo run --release --example shamir_sharing

use hprg_secagg::modmath::{seeded_rng, FieldParams};
use hprg_secagg::shamir::{self, ShamirConfig};

fn main() {
    let field = FieldParams::from_u64(2147483659).unwrap(); // prime > 2^31
    let cfg = ShamirConfig::new(3, 5, field).unwrap();
    let mut rng = seeded_rng(b"demo", &[1]);

    let secret = cfg.field().element_from_u64(123_456_789);
    let shares = shamir::share(&cfg, &secret, &mut rng);
    println!("secret 123456789 split into {} shares (t = 3):", shares.len());
    for s in &shares {
        println!("  x = {}: f(x) = {}", s.index, s.value.value());
    }

    let subset = vec![shares[4].clone(), shares[0].clone(), shares[2].clone()];
    let recovered = shamir::reconstruct(&cfg, &subset).unwrap();
    println!("reconstructed from shares 5, 1, 3: {}", recovered.value());
    assert_eq!(recovered, secret);

    let two = vec![shares[1].clone(), shares[3].clone()];
    println!("two shares alone: {:?}", shamir::reconstruct(&cfg, &two).unwrap_err());

    // Additive homomorphism: pointwise-summed shares open to the sum.
    let other = cfg.field().element_from_u64(876_543_211);
    let other_shares = shamir::share(&cfg, &other, &mut rng);
    let summed: Vec<_> = shares
        .iter()
        .zip(&other_shares)
        .map(|(a, b)| shamir::add_shares(a, b, cfg.field()).unwrap())
        .collect();
    let sum = shamir::reconstruct(&cfg, &summed).unwrap();
    println!(
        "shares of 123456789 + shares of 876543211 reconstruct to {}",
        sum.value()
    );
    assert_eq!(sum, cfg.field().element_from_u64(123_456_789 + 876_543_211));

    // Precomputed Lagrange bases: reconstruction as one dot product.
    let bases = shamir::precompute_lagrange(&cfg, &[1, 2, 3]).unwrap();
    let values: Vec<_> = shares[..3].iter().map(|s| s.value.clone()).collect();
    let via_bases = shamir::reconstruct_with_bases(cfg.field(), &values, &bases);
    println!("dot product with precomputed bases: {}", via_bases.value());
    assert_eq!(via_bases, secret);
}
