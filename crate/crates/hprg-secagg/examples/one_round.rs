//! One semi-honest aggregation round, end to end.
//!
//! Five clients mask their vectors, the server aggregates, and the output
//! is checked against the trusted-party oracle.
//!
//!     cargo run --release --example one_round

use hprg_secagg::protocol::{ideal_aggregate, InputMap, Mode};
use hprg_secagg::simnet::{run_round, DropoutSchedule, Instance, InstanceParams, LatencyModel};

fn main() {
    let params = InstanceParams::new(5, 3, 8, 255, Mode::SemiHonest, 42);
    let inst = Instance::build(&params).expect("valid parameters");
    let inputs = inst.synthetic_inputs(7);

    for (i, v) in inputs.iter().enumerate() {
        println!("client {} input: {:?}", i + 1, v.values());
    }

    let transcript = run_round(
        &inst,
        &inputs,
        &DropoutSchedule::empty(),
        &LatencyModel::lan(),
        1,
    )
    .expect("preconditions hold");

    println!("\nrosters: {:?}", transcript.rosters);
    println!("server output: {:?}", transcript.output().unwrap());

    let map: InputMap =
        inputs.iter().enumerate().map(|(i, v)| ((i + 1) as u32, v.clone())).collect();
    let ideal = ideal_aggregate(&map, &transcript.rosters, 3, Mode::SemiHonest).unwrap();
    assert_eq!(transcript.output().unwrap(), &ideal[..]);
    println!("matches the trusted-party oracle: {:?}", ideal);

    println!(
        "\nsimulated round time: {:.2} ms over {} steps",
        transcript.total_time_ns() as f64 / 1e6,
        transcript.steps.len()
    );
    let server = transcript.counters.server.totals();
    println!(
        "server: {} group mul, {} group exp, {} dlog ops, {} reconstruction",
        server.group_mul, server.group_exp, server.dlog_ops, server.reconstructions
    );
}
