//! Bounded discrete logarithms: the brute-force oracle against Pollard's
//! lambda, and the square-root growth of the kangaroo's work.
//!
//!     cargo run --release --example kangaroo

use hprg_secagg::dlog;
use hprg_secagg::modmath::{seeded_rng, GroupParams};
use rand::Rng;

fn main() {
    let group = GroupParams::generate(256, b"kangaroo-demo");
    let g = group.generator();

    println!("solving g^z for a few planted z with bound 2^16:");
    let bound = 1u64 << 16;
    for z in [0u64, 1, 777, 40000, bound] {
        let target = group.exp_u64(&g, z);
        let sol = dlog::pollard_lambda(&group, &target, bound, 1).unwrap();
        assert_eq!(sol.exponent, z);
        println!("  z = {z:>6}: recovered in {} group ops", sol.group_ops);
    }
    let outside = group.exp_u64(&g, bound + 1);
    println!(
        "  z = {} (outside): {:?}",
        bound + 1,
        dlog::pollard_lambda(&group, &outside, bound, 1).unwrap_err()
    );

    println!("\nmean ops over 50 random targets per bound (theory: ~sqrt growth):");
    let mut rng = seeded_rng(b"demo", &[1]);
    let mut prev: Option<f64> = None;
    for shift in [12u32, 16, 20] {
        let bound = 1u64 << shift;
        let total: u64 = (0..50)
            .map(|i| {
                let z = rng.gen_range(0..=bound);
                let target = group.exp_u64(&g, z);
                dlog::pollard_lambda(&group, &target, bound, 100 + i).unwrap().group_ops
            })
            .sum();
        let mean = total as f64 / 50.0;
        match prev {
            Some(p) => println!("  B = 2^{shift}: {mean:>8.0} ops  (x{:.2})", mean / p),
            None => println!("  B = 2^{shift}: {mean:>8.0} ops"),
        }
        prev = Some(mean);
    }

    println!("\nvector solve shares the precomputed tables across components:");
    let bound = 1u64 << 16;
    let exps: Vec<u64> = (0..64).map(|_| rng.gen_range(0..=bound)).collect();
    let targets: Vec<_> = exps.iter().map(|&z| group.exp_u64(&g, z)).collect();
    let sol = dlog::solve_vector(&group, &targets, bound, 5).unwrap();
    assert_eq!(sol.exponents, exps);
    let single: u64 = dlog::pollard_lambda(&group, &targets[0], bound, 5).unwrap().group_ops;
    println!(
        "  64 components: {} ops total ({:.0} per component; one alone costs {})",
        sol.group_ops,
        sol.group_ops as f64 / 64.0,
        single
    );
}
