//! Shared fixtures for unit tests: the p=23 toy group and small instances.

use num_bigint::BigUint;

use crate::modmath::{FieldParams, GroupParams};
use crate::protocol::{Mode, ThreatModel};
use crate::simnet::{Instance, InstanceParams};

/// p = 23, q = 11, g = 4: hand-checkable and large enough for n·alpha <= 10.
pub(crate) fn toy_group() -> GroupParams {
    GroupParams::new(BigUint::from(23u32), BigUint::from(11u32), BigUint::from(4u32)).unwrap()
}

/// A toy instance over the p=23 group; the Shamir field is 37 where that
/// satisfies P > n·q, otherwise the next suitable prime.
pub(crate) fn toy_instance(n: usize, t: usize, m: usize, alpha: u64, mode: Mode) -> Instance {
    let params = InstanceParams {
        n,
        t,
        m,
        alpha,
        mode,
        threat: ThreatModel::SemiHonest,
        group_bits: 16,
        session_id: b"toy".to_vec(),
        seed: 7,
    };
    let min = BigUint::from(n as u64 * 11);
    let field = if min < BigUint::from(37u32) {
        FieldParams::from_u64(37).unwrap()
    } else {
        FieldParams::generate_above(&min, &[7])
    };
    Instance::with_params(&params, toy_group(), field)
        .expect("toy parameters satisfy q > n·alpha and P > n·q")
}

/// A realistic small instance over a generated 64-bit group.
pub(crate) fn small_instance(n: usize, t: usize, m: usize, mode: Mode, seed: u64) -> Instance {
    Instance::build(&InstanceParams::new(n, t, m, 255, mode, seed)).unwrap()
}
