//! Transcript export: every round produces a JSON record with the
//! configuration, rosters, per-step messages, per-party counters, and the
//! outcome. Identical inputs give byte-identical transcripts.
//!
//!     cargo run --release --example transcript_json

use hprg_secagg::protocol::Mode;
use hprg_secagg::simnet::{
    run_round, DropoutSchedule, Instance, InstanceParams, LatencyModel, SubPoint,
};

fn main() {
    let params = InstanceParams::new(3, 2, 2, 15, Mode::Malicious, 77);
    let inst = Instance::build_unvalidated(&params).unwrap(); // t=2 of 3 for a small demo
    let inputs = inst.synthetic_inputs(1);
    let schedule = DropoutSchedule::new([(3, 4, SubPoint::BeforeSend)]).unwrap();

    let a = run_round(&inst, &inputs, &schedule, &LatencyModel::wan(), 5).unwrap();
    let b = run_round(&inst, &inputs, &schedule, &LatencyModel::wan(), 5).unwrap();
    assert_eq!(a.to_json(), b.to_json(), "replays are byte-identical");

    println!("{}", a.to_json());
}
