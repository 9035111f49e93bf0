//! Dropout-rate sweep: server work falls as more clients drop, because
//! fewer masked vectors are multiplied and the discrete-log interval
//! shrinks — one Shamir reconstruction either way.
//!
//!     cargo run --release --example dropout_sweep

use hprg_secagg::protocol::Mode;
use hprg_secagg::simnet::{run_sweep, sweep_csv, Instance, InstanceParams, LatencyModel};

fn main() {
    let params = InstanceParams {
        group_bits: 256,
        ..InstanceParams::new(30, 20, 256, 255, Mode::SemiHonest, 11)
    };
    let inst = Instance::build(&params).unwrap();
    let rows = run_sweep(
        &inst,
        &[0.0, 0.1, 0.2, 0.3],
        2,
        2, // drop before the masked-vector upload
        &LatencyModel::lan(),
        12,
    )
    .unwrap();
    print!("{}", sweep_csv(&rows));

    eprintln!();
    for pair in rows.windows(2) {
        eprintln!(
            "rate {} -> {}: server group-mul {} -> {}, simulated {:.1} ms -> {:.1} ms",
            pair[0].rate,
            pair[1].rate,
            pair[0].server_group_mul,
            pair[1].server_group_mul,
            pair[0].sim_time_ms,
            pair[1].sim_time_ms
        );
    }
}
