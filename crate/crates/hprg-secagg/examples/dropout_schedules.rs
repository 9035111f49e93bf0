//! How dropout timing decides whose input lands in the aggregate.
//!
//! A client gone before uploading its masked vector is excluded (and its
//! mask never enters the aggregate); a client gone right after uploading is
//! still included, because the survivors hold enough shares of its seed.
//!
//!     cargo run --release --example dropout_schedules

use hprg_secagg::protocol::Mode;
use hprg_secagg::simnet::{
    run_round, DropoutSchedule, Instance, InstanceParams, LatencyModel, SubPoint,
};

fn main() {
    let params = InstanceParams::new(5, 3, 4, 255, Mode::SemiHonest, 9);
    let inst = Instance::build(&params).unwrap();
    let inputs = inst.synthetic_inputs(3);
    let latency = LatencyModel::none();

    let full: Vec<u64> =
        (0..4).map(|j| inputs.iter().map(|v| v.values()[j]).sum()).collect();
    println!("sum over all five clients: {full:?}\n");

    let cases = [
        ("no dropouts", DropoutSchedule::empty()),
        (
            "client 5 drops before uploading its vector (step 2)",
            DropoutSchedule::new([(5, 2, SubPoint::BeforeSend)]).unwrap(),
        ),
        (
            "client 5 drops right after uploading (step 2, after send)",
            DropoutSchedule::new([(5, 2, SubPoint::AfterSend)]).unwrap(),
        ),
        (
            "clients 4 and 5 drop before the unmask shares (step 4)",
            DropoutSchedule::new([
                (4, 4, SubPoint::BeforeSend),
                (5, 4, SubPoint::BeforeSend),
            ])
            .unwrap(),
        ),
        (
            "three clients drop before step 4: below the threshold",
            DropoutSchedule::new([
                (3, 4, SubPoint::BeforeSend),
                (4, 4, SubPoint::BeforeSend),
                (5, 4, SubPoint::BeforeSend),
            ])
            .unwrap(),
        ),
    ];

    for (label, schedule) in cases {
        let t = run_round(&inst, &inputs, &schedule, &latency, 5).unwrap();
        match t.output() {
            Some(sum) => println!(
                "{label}:\n    U2 = {:?}, U4 = {:?}, output = {:?}",
                t.rosters.u2, t.rosters.u4, sum
            ),
            None => println!(
                "{label}:\n    U4 = {:?}, abort: {}",
                t.rosters.u4,
                t.abort_reason().unwrap()
            ),
        }
    }
}
