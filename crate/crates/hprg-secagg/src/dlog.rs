//! Bounded discrete logarithm: a linear-scan oracle and Pollard's lambda
//! (kangaroo) solver for exponents known to lie in `[0, B]`.
//!
//! The kangaroo uses distinguished points: a tame walk starts at `g^B` and
//! records distinguished positions with their known exponents; a wild walk
//! starts at the target and probes the table. Both walks share one jump
//! function per attempt, so once the wild path lands on any tame position
//! the paths coincide and the next recorded distinguished point yields the
//! exponent. A failed attempt re-derives the jump set and tries again, up
//! to eight restarts.

use num_bigint::BigUint;
use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

use crate::modmath::{seeded_rng, GroupElement, GroupParams};

const MAX_RESTARTS: u32 = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DlogError {
    #[error("no exponent in [0, {bound}] matches the target")]
    NotInRange { bound: u64 },
    #[error("component {component}: no exponent in [0, {bound}] matches")]
    ComponentNotInRange { component: usize, bound: u64 },
}

/// A recovered exponent together with the group multiplications spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Solution {
    pub exponent: u64,
    pub group_ops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSolution {
    pub exponents: Vec<u64>,
    pub group_ops: u64,
}

/// Scans `g^0, g^1, ..., g^B`; the independent oracle for the kangaroo.
pub fn brute_force(
    params: &GroupParams,
    target: &GroupElement,
    bound: u64,
) -> Result<u64, DlogError> {
    let g = params.generator();
    let mut acc = params.identity();
    for z in 0..=bound {
        if &acc == target {
            return Ok(z);
        }
        acc = params.mul(&acc, &g);
    }
    Err(DlogError::NotInRange { bound })
}

/// `dlog_pollard_lambda`: solves one target with a fresh solver.
pub fn pollard_lambda(
    params: &GroupParams,
    target: &GroupElement,
    bound: u64,
    rng_seed: u64,
) -> Result<Solution, DlogError> {
    LambdaSolver::new(params, bound, rng_seed).solve(target)
}

/// Componentwise kangaroo sharing the tame-walk tables across components.
pub fn solve_vector(
    params: &GroupParams,
    targets: &[GroupElement],
    bound: u64,
    rng_seed: u64,
) -> Result<VectorSolution, DlogError> {
    let mut solver = LambdaSolver::new(params, bound, rng_seed);
    let mut exponents = Vec::with_capacity(targets.len());
    for (component, t) in targets.iter().enumerate() {
        match solver.solve(t) {
            Ok(sol) => exponents.push(sol.exponent),
            Err(DlogError::NotInRange { bound }) => {
                return Err(DlogError::ComponentNotInRange { component, bound })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(VectorSolution { exponents, group_ops: solver.total_ops })
}

struct Attempt {
    jump_elems: Vec<GroupElement>,
    jump_dists: Vec<u64>,
    salt: u64,
    table: HashMap<BigUint, u128>, // distinguished tame position -> exponent
}

/// Kangaroo solver for a fixed `(params, bound, seed)`; tame tables are
/// built lazily per restart level and reused across `solve` calls.
pub struct LambdaSolver<'a> {
    params: &'a GroupParams,
    bound: u64,
    seed: u64,
    attempts: Vec<Attempt>,
    dp_bits: u32,
    tame_steps: u64,
    wild_budget: u64,
    /// Group multiplications spent so far, table builds included.
    pub total_ops: u64,
}

impl<'a> LambdaSolver<'a> {
    pub fn new(params: &'a GroupParams, bound: u64, seed: u64) -> Self {
        let root = bound.isqrt().max(1);
        // Distinguished when the low dp_bits of the value are zero; denser
        // than the classic sqrt(B)/4 spacing because the expected tail a
        // merged walk pays before the next recorded point, and the
        // run-to-run variance of that tail, both scale with the gap.
        let dp_bits = log2_ceil(root).saturating_sub(4);
        let wild_budget = 8 * root + 4 * (1u64 << dp_bits) + 64;
        // A merged wild walk advances along the tame path one step per step,
        // so a trail of wild_budget steps plus a few distinguished-point
        // gaps makes a merged walk hit a recorded point almost surely.
        let tame_steps = wild_budget + 8 * (1u64 << dp_bits) + 64;
        LambdaSolver {
            params,
            bound,
            seed,
            attempts: Vec::new(),
            dp_bits,
            tame_steps,
            wild_budget,
            total_ops: 0,
        }
    }

    pub fn solve(&mut self, target: &GroupElement) -> Result<Solution, DlogError> {
        let ops_before = self.total_ops;
        if target.is_identity() {
            return Ok(Solution { exponent: 0, group_ops: 0 });
        }
        if self.bound == 0 {
            return Err(DlogError::NotInRange { bound: 0 });
        }
        let mut walked: Vec<(usize, Vec<(BigUint, u128)>)> = Vec::new();
        for attempt in 0..=MAX_RESTARTS {
            self.ensure_attempt(attempt as usize);
            let (outcome, visited) = self.wild_walk(attempt as usize, target);
            walked.push((attempt as usize, visited));
            match outcome {
                WalkOutcome::Found(z) => {
                    // The walks' positions now have known absolute
                    // exponents; feeding them back into the per-level
                    // tables lets later walks that funnel into the same
                    // paths stop at the first recorded point.
                    for (level, visited) in walked {
                        let table = &mut self.attempts[level].table;
                        for (value, d) in visited {
                            table.entry(value).or_insert(u128::from(z) + d);
                        }
                    }
                    return Ok(Solution {
                        exponent: z,
                        group_ops: self.total_ops - ops_before,
                    });
                }
                WalkOutcome::OutOfRange => {
                    return Err(DlogError::NotInRange { bound: self.bound })
                }
                WalkOutcome::Miss => continue,
            }
        }
        Err(DlogError::NotInRange { bound: self.bound })
    }

    fn ensure_attempt(&mut self, level: usize) {
        while self.attempts.len() <= level {
            let idx = self.attempts.len() as u32;
            let attempt = self.build_attempt(idx);
            self.attempts.push(attempt);
        }
    }

    fn build_attempt(&mut self, index: u32) -> Attempt {
        let mut label = self.seed.to_be_bytes().to_vec();
        label.extend_from_slice(&index.to_be_bytes());
        let mut rng = seeded_rng(b"kangaroo", &label);
        let salt = rng.gen::<u64>();
        let root = self.bound.isqrt().max(1);
        let count = (log2_ceil(self.bound) as usize + 1) / 2 + 2;
        let raw: Vec<u64> = (0..count).map(|_| rng.gen_range(1..=root)).collect();
        // Rescale so the realized mean sits at root/2: with this few jumps
        // an unnormalized draw can skew the walk speed by a large factor.
        let sum: u128 = raw.iter().map(|&d| u128::from(d)).sum();
        let target_mean = u128::from((root / 2).max(1));
        let mut jump_dists: Vec<u64> = raw
            .iter()
            .map(|&d| {
                let scaled = u128::from(d) * target_mean * raw.len() as u128 / sum.max(1);
                (scaled as u64).max(1)
            })
            .collect();
        // A common divisor would confine every walk to one residue class,
        // so walks in different classes could never meet.
        while jump_dists.iter().fold(0u64, |g, &d| gcd(g, d)) > 1 {
            jump_dists[0] += 1;
        }
        let jump_elems: Vec<GroupElement> = jump_dists
            .iter()
            .map(|&d| counted_exp(self.params, &self.params.generator(), d, &mut self.total_ops))
            .collect();

        // Tame walk from g^B, recording distinguished positions.
        let mut table = HashMap::new();
        let walk = |start: u64, steps: u64, table: &mut HashMap<BigUint, u128>,
                    ops: &mut u64| {
            let mut pos = counted_exp(self.params, &self.params.generator(), start, ops);
            let mut dist = u128::from(start);
            for _ in 0..steps {
                if self.distinguished(&pos) {
                    table.insert(pos.value().clone(), dist);
                }
                let j = jump_index(&pos, salt, count);
                pos = self.params.mul(&pos, &jump_elems[j]);
                *ops += 1;
                dist += u128::from(jump_dists[j]);
            }
            if self.distinguished(&pos) {
                table.insert(pos.value().clone(), dist);
            }
        };
        let mut ops = 0u64;
        walk(self.bound, self.tame_steps, &mut table, &mut ops);
        // Short scout walks from known exponents across the interval, so a
        // wild walk anywhere in [0, B] funnels into a recorded path after a
        // few jumps instead of wandering to the main trail.
        let scouts = 16u64;
        let scout_steps = 4 * (1u64 << self.dp_bits) + 64;
        for k in 0..scouts {
            walk(self.bound * k / scouts, scout_steps, &mut table, &mut ops);
        }
        self.total_ops += ops;
        Attempt { jump_elems, jump_dists, salt, table }
    }

    /// One wild walk at the given restart level. Returns the outcome and
    /// the distinguished points visited, as (position, distance) pairs.
    fn wild_walk(
        &mut self,
        level: usize,
        target: &GroupElement,
    ) -> (WalkOutcome, Vec<(BigUint, u128)>) {
        let attempt = &self.attempts[level];
        let count = (log2_ceil(self.bound) as usize + 1) / 2 + 2;
        let mut pos = target.clone();
        let mut dist: u128 = 0;
        let mut ops = 0u64;
        let mut outcome = WalkOutcome::Miss;
        let mut visited: Vec<(BigUint, u128)> = Vec::new();
        for _ in 0..self.wild_budget {
            if self.distinguished(&pos) {
                if let Some(&known_exp) = attempt.table.get(pos.value()) {
                    if let Some(cand) = known_exp.checked_sub(dist) {
                        if let Ok(cand) = u64::try_from(cand) {
                            let check =
                                counted_exp(self.params, &self.params.generator(), cand, &mut ops);
                            if &check == target {
                                outcome = if cand <= self.bound {
                                    WalkOutcome::Found(cand)
                                } else {
                                    WalkOutcome::OutOfRange
                                };
                                break;
                            }
                        }
                    }
                }
                visited.push((pos.value().clone(), dist));
            }
            let j = jump_index(&pos, attempt.salt, count);
            pos = self.params.mul(&pos, &attempt.jump_elems[j]);
            ops += 1;
            dist += u128::from(attempt.jump_dists[j]);
        }
        self.total_ops += ops;
        (outcome, visited)
    }

    fn distinguished(&self, e: &GroupElement) -> bool {
        if self.dp_bits == 0 {
            return true;
        }
        let low = e.value().iter_u64_digits().next().unwrap_or(0);
        low & ((1u64 << self.dp_bits) - 1) == 0
    }
}

enum WalkOutcome {
    Found(u64),
    OutOfRange,
    Miss,
}

fn log2_ceil(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Square-and-multiply exponentiation counting every group multiplication.
fn counted_exp(
    params: &GroupParams,
    base: &GroupElement,
    e: u64,
    ops: &mut u64,
) -> GroupElement {
    if e == 0 {
        return params.identity();
    }
    let bits = 64 - e.leading_zeros();
    let mut acc = base.clone();
    for i in (0..bits - 1).rev() {
        acc = params.mul(&acc, &acc);
        *ops += 1;
        if (e >> i) & 1 == 1 {
            acc = params.mul(&acc, base);
            *ops += 1;
        }
    }
    acc
}

fn jump_index(e: &GroupElement, salt: u64, count: usize) -> usize {
    let low = e.value().iter_u64_digits().next().unwrap_or(0);
    let mut z = low ^ salt;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    (z % count as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_group() -> GroupParams {
        GroupParams::new(BigUint::from(23u32), BigUint::from(11u32), BigUint::from(4u32))
            .unwrap()
    }

    #[test]
    fn brute_force_toy_example() {
        let gp = toy_group();
        let target = gp.element(BigUint::from(12u32)).unwrap();
        assert_eq!(brute_force(&gp, &target, 10).unwrap(), 5);
        assert_eq!(brute_force(&gp, &gp.identity(), 10).unwrap(), 0);
    }

    #[test]
    fn brute_force_out_of_range() {
        let gp = GroupParams::generate(64, &[1]);
        let bound = 32;
        let target = gp.exp_u64(&gp.generator(), bound + 1);
        assert_eq!(
            brute_force(&gp, &target, bound).unwrap_err(),
            DlogError::NotInRange { bound }
        );
    }

    #[test]
    fn lambda_matches_brute_force_exhaustively() {
        let gp = GroupParams::generate(64, &[2]);
        let bound = 256;
        let g = gp.generator();
        let mut acc = gp.identity();
        for z in 0..=bound {
            let sol = pollard_lambda(&gp, &acc, bound, 7).unwrap();
            assert_eq!(sol.exponent, z, "kangaroo disagreed at z={z}");
            acc = gp.mul(&acc, &g);
        }
    }

    #[test]
    fn lambda_rejects_out_of_range() {
        let gp = GroupParams::generate(64, &[3]);
        let bound = 128;
        let target = gp.exp_u64(&gp.generator(), bound + 1);
        assert_eq!(
            pollard_lambda(&gp, &target, bound, 1).unwrap_err(),
            DlogError::NotInRange { bound }
        );
        // A random-looking element far outside the interval also fails.
        let far = gp.exp(&gp.generator(), &(gp.order() - 12345u32));
        assert!(pollard_lambda(&gp, &far, bound, 1).is_err());
    }

    #[test]
    fn lambda_zero_and_zero_bound() {
        let gp = GroupParams::generate(64, &[4]);
        assert_eq!(pollard_lambda(&gp, &gp.identity(), 100, 1).unwrap().exponent, 0);
        assert_eq!(pollard_lambda(&gp, &gp.identity(), 0, 1).unwrap().exponent, 0);
        let g = gp.generator();
        assert!(pollard_lambda(&gp, &g, 0, 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let gp = GroupParams::generate(64, &[5]);
        let target = gp.exp_u64(&gp.generator(), 777);
        let a = pollard_lambda(&gp, &target, 1 << 12, 42).unwrap();
        let b = pollard_lambda(&gp, &target, 1 << 12, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vector_solve() {
        let gp = GroupParams::generate(64, &[6]);
        let g = gp.generator();
        let targets = vec![gp.identity(), g.clone(), gp.exp_u64(&g, 2)];
        let sol = solve_vector(&gp, &targets, 4, 1).unwrap();
        assert_eq!(sol.exponents, vec![0, 1, 2]);
        assert!(solve_vector(&gp, &[], 4, 1).unwrap().exponents.is_empty());
    }

    #[test]
    fn vector_solve_random_exponents() {
        let gp = GroupParams::generate(64, &[7]);
        let bound = 1 << 10;
        let mut rng = seeded_rng(b"dlog-vec", &[1]);
        let exps: Vec<u64> = (0..50).map(|_| rng.gen_range(0..=bound)).collect();
        let targets: Vec<GroupElement> =
            exps.iter().map(|&z| gp.exp_u64(&gp.generator(), z)).collect();
        let sol = solve_vector(&gp, &targets, bound, 3).unwrap();
        assert_eq!(sol.exponents, exps);
    }

    #[test]
    fn vector_solve_reports_component() {
        let gp = GroupParams::generate(64, &[8]);
        let bound = 64;
        let targets = vec![gp.generator(), gp.exp_u64(&gp.generator(), bound + 7)];
        match solve_vector(&gp, &targets, bound, 1).unwrap_err() {
            DlogError::ComponentNotInRange { component, .. } => assert_eq!(component, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn op_count_grows_roughly_as_sqrt() {
        let gp = GroupParams::generate(64, &[9]);
        let mut rng = seeded_rng(b"dlog-scale", &[2]);
        let mean_ops = |bound: u64, rng: &mut rand_chacha::ChaCha20Rng| {
            let total: u64 = (0..24)
                .map(|i| {
                    let z = rng.gen_range(0..=bound);
                    let target = gp.exp_u64(&gp.generator(), z);
                    pollard_lambda(&gp, &target, bound, 100 + i).unwrap().group_ops
                })
                .sum();
            total as f64 / 24.0
        };
        let small = mean_ops(1 << 12, &mut rng);
        let large = mean_ops(1 << 16, &mut rng);
        let ratio = large / small;
        assert!((2.0..8.0).contains(&ratio), "sqrt scaling off: ratio {ratio}");
    }
}
