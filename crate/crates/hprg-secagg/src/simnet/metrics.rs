//! Per-party operation and traffic counters, and the counter-driven clock.
//!
//! Counters are kept per protocol step so trends (who spends what, where)
//! survive into the transcript. Simulated time is derived from the counters
//! through per-operation constants instead of wall-clock measurements, so
//! identical runs produce identical transcripts on any machine.

use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

use crate::modmath::GroupParams;

/// Counter snapshot for one protocol step.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepCounters {
    pub group_exp: u64,
    pub group_mul: u64,
    pub field_mul: u64,
    pub reconstructions: u64,
    pub dlog_ops: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

impl StepCounters {
    fn add(&mut self, other: &StepCounters) {
        self.group_exp += other.group_exp;
        self.group_mul += other.group_mul;
        self.field_mul += other.field_mul;
        self.reconstructions += other.reconstructions;
        self.dlog_ops += other.dlog_ops;
        self.bytes_sent += other.bytes_sent;
        self.bytes_received += other.bytes_received;
    }
}

/// One party's counters across the round, keyed by step.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub steps: BTreeMap<u8, StepCounters>,
    /// Simulated per-step time in nanoseconds.
    pub time_ns: BTreeMap<u8, u64>,
}

impl Metrics {
    pub fn at(&mut self, step: u8) -> &mut StepCounters {
        self.steps.entry(step).or_default()
    }

    pub fn step(&self, step: u8) -> StepCounters {
        self.steps.get(&step).copied().unwrap_or_default()
    }

    pub fn totals(&self) -> StepCounters {
        let mut total = StepCounters::default();
        for c in self.steps.values() {
            total.add(c);
        }
        total
    }

    pub fn total_time_ns(&self) -> u64 {
        self.time_ns.values().sum()
    }
}

/// Nanosecond cost of each counted operation.
///
/// Defaults approximate a 1024-bit software group; [`CostModel::calibrate`]
/// measures the actual machine. The constants live in the run configuration,
/// so a transcript is reproducible from its inputs alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostModel {
    pub group_exp_ns: u64,
    pub group_mul_ns: u64,
    pub field_mul_ns: u64,
    pub dlog_op_ns: u64,
    pub reconstruction_ns: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            group_exp_ns: 1_800_000,
            group_mul_ns: 1_500,
            field_mul_ns: 300,
            dlog_op_ns: 1_500,
            reconstruction_ns: 20_000,
        }
    }
}

impl CostModel {
    /// Times a few hundred operations in the given group.
    pub fn calibrate(params: &GroupParams) -> CostModel {
        let mut rng = crate::modmath::seeded_rng(b"calibrate", &[0]);
        let g = params.generator();
        let e = params.random_exponent(&mut rng);
        let reps = 64u32;

        let start = Instant::now();
        let mut acc = g.clone();
        for _ in 0..reps {
            acc = params.exp(&acc, &e);
        }
        let group_exp_ns = (start.elapsed().as_nanos() / u128::from(reps)) as u64;

        let start = Instant::now();
        let mut m = g.clone();
        for _ in 0..reps * 16 {
            m = params.mul(&m, &g);
        }
        let group_mul_ns = (start.elapsed().as_nanos() / u128::from(reps * 16)) as u64;

        CostModel {
            group_exp_ns: group_exp_ns.max(1),
            group_mul_ns: group_mul_ns.max(1),
            field_mul_ns: (group_mul_ns / 4).max(1),
            dlog_op_ns: group_mul_ns.max(1),
            reconstruction_ns: 20_000,
        }
    }

    /// Compute time implied by a counter snapshot.
    pub fn compute_ns(&self, c: &StepCounters) -> u64 {
        c.group_exp * self.group_exp_ns
            + c.group_mul * self.group_mul_ns
            + c.field_mul * self.field_mul_ns
            + c.dlog_ops * self.dlog_op_ns
            + c.reconstructions * self.reconstruction_ns
    }
}
