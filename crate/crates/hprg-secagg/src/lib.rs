//! Dropout-resilient secure aggregation for privacy-preserving machine
//! learning.
//!
//! A single untrusted server learns the componentwise sum of integer vectors
//! held by `n` clients and nothing else, even when clients drop out at any
//! step. Each client masks its vector with the expansion of a private seed
//! under a seed-homomorphic PRG (`F(s, j) = H(j)^s` in a DDH group) and
//! Shamir-shares the seed. Because the PRG is homomorphic in the seed and
//! Shamir sharing is additive, surviving clients each send a single share of
//! the *sum* of the live seeds, the server runs one reconstruction, expands
//! the aggregate mask, and removes it from the product of the masked
//! vectors. A bounded discrete logarithm then yields the plain sums.
//!
//! Module map:
//!
//! - [`modmath`]: the Shamir field and the safe-prime group, with
//!   hash-to-group.
//! - [`shamir`]: (t, n) sharing, Lagrange reconstruction, share addition.
//! - [`hprg`]: the seed-homomorphic generator.
//! - [`dlog`]: bounded discrete log (brute force and Pollard's lambda).
//! - [`authcrypto`]: signatures and hybrid authenticated encryption.
//! - [`protocol`]: client and server state machines, semi-honest and
//!   malicious modes, the ideal-functionality oracle.
//! - [`simnet`]: deterministic synchronous-round simulator with dropout
//!   schedules, latency models, per-party counters, and adversary harnesses.
//! - [`cli`]: the `hsecagg` command-line experiment runner.
//!
//! The `examples/` directory contains one runnable program per capability;
//! start with `cargo run --release --example one_round`.

pub mod authcrypto;
pub mod cli;
pub mod codec;
pub mod dlog;
pub mod hprg;
pub mod modmath;
pub mod protocol;
pub mod shamir;
pub mod simnet;

#[cfg(test)]
pub(crate) mod testkit;

pub use protocol::{GradientVector, Mode, ProtocolConfig, ThreatModel};
pub use simnet::{DropoutSchedule, Instance, InstanceParams, LatencyModel, Transcript};
