//! The trusted-third-party oracle the real protocol is checked against.
//!
//! Mirrors the staged behavior of the functionality: abort as soon as a
//! participation set falls below the threshold, otherwise output the plain
//! componentwise sum over the aggregation roster.

use crate::protocol::{AbortReason, InputMap, Mode, Roster};

pub fn ideal_aggregate(
    inputs: &InputMap,
    rosters: &Roster,
    t: usize,
    mode: Mode,
) -> Result<Vec<u64>, AbortReason> {
    if rosters.u1.len() < t {
        return Err(AbortReason::TooFewClients { stage: 1, have: rosters.u1.len(), need: t });
    }
    if rosters.u2.len() < t {
        return Err(AbortReason::TooFewClients { stage: 2, have: rosters.u2.len(), need: t });
    }
    if mode == Mode::Malicious {
        let acked = rosters.u3.as_ref().map_or(0, Vec::len);
        if acked < t {
            return Err(AbortReason::TooFewAcks { have: acked, need: t });
        }
    }
    if rosters.u4.len() < t {
        return Err(AbortReason::TooFewShares { have: rosters.u4.len(), need: t });
    }

    let m = rosters
        .u2
        .first()
        .and_then(|id| inputs.get(id))
        .map_or(0, |v| v.values().len());
    let mut sums = vec![0u128; m];
    for id in &rosters.u2 {
        let input = inputs
            .get(id)
            .unwrap_or_else(|| panic!("input missing for roster member {id}"));
        for (acc, &v) in sums.iter_mut().zip(input.values()) {
            *acc += u128::from(v);
        }
    }
    Ok(sums.into_iter().map(|v| u64::try_from(v).expect("sum below n·alpha")).collect())
}
