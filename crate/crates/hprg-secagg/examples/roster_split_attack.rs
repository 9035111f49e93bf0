//! Why the threshold minimums exist: the roster-splitting attack.
//!
//! A malicious server shows different "connected clients" lists to
//! different clients. Below the safe threshold both lists collect enough
//! acknowledgement signatures, the server reconstructs two aggregate
//! masks, and their ratio is one victim's personal mask — which unmasks
//! that victim's private vector. At t = floor(2n/3)+1 no split roster can
//! reach a quorum and every honest client aborts.
//!
//!     cargo run --release --example roster_split_attack

use hprg_secagg::protocol::{validate_threshold, Mode, ThreatModel};
use hprg_secagg::simnet::adversary::{run_roster_split_attack, SplitView};
use hprg_secagg::simnet::{Instance, InstanceParams};

fn main() {
    // Four clients with t = 2: validation rejects this, so bypass it.
    let err = validate_threshold(4, 2, &ThreatModel::MaliciousServer).unwrap_err();
    println!("validate_threshold(n=4, t=2, active server): {err}");

    let params = InstanceParams::new(4, 2, 4, 255, Mode::Malicious, 31);
    let inst = Instance::build_unvalidated(&params).expect("bypassing threshold validation");
    let inputs = inst.synthetic_inputs(32);
    println!("client 4's private input: {:?}", inputs[3].values());

    let views = vec![
        SplitView { roster: vec![1, 2, 3], recipients: vec![1, 2] },
        SplitView { roster: vec![1, 2, 3, 4], recipients: vec![3, 4] },
    ];
    let out = run_roster_split_attack(&inst, &inputs, &views, &[], 33).unwrap();
    println!("honest aborts: {}", out.client_aborts.len());
    println!("aggregate masks reconstructed: {}", out.reconstructed_views);
    println!("server recovered client 4's input: {:?}", out.recovered_inputs.get(&4).unwrap());
    assert_eq!(out.recovered_inputs[&4], inputs[3].values());

    // Same split at the enforced minimum: every honest client aborts.
    println!("\n--- n = 6, t = floor(2n/3)+1 = 5 ---");
    let params = InstanceParams::new(6, 5, 4, 255, Mode::Malicious, 36);
    let inst = Instance::build(&params).unwrap();
    let inputs = inst.synthetic_inputs(37);
    let views = vec![
        SplitView { roster: vec![1, 2, 3], recipients: vec![1, 2, 3] },
        SplitView { roster: vec![1, 2, 3, 4, 5, 6], recipients: vec![4, 5, 6] },
    ];
    let out = run_roster_split_attack(&inst, &inputs, &views, &[], 38).unwrap();
    for (id, reason) in &out.client_aborts {
        println!("client {id}: {reason}");
    }
    println!("masks reconstructed: {}", out.reconstructed_views);
    println!("inputs recovered: {}", out.recovered_inputs.len());

    // With colluding clients that double-sign, floor(n/2)+1 is still not
    // enough; that is what pushes the minimum to floor(2n/3)+1.
    println!("\n--- n = 6, t = 4, clients 1 and 2 collude with the server ---");
    let params = InstanceParams {
        threat: ThreatModel::MaliciousServer, // t=4 passes the weaker rule
        ..InstanceParams::new(6, 4, 4, 255, Mode::Malicious, 39)
    };
    let inst = Instance::build_unvalidated(&params).unwrap();
    let inputs = inst.synthetic_inputs(40);
    let views = vec![
        SplitView { roster: vec![1, 2, 3, 4, 5], recipients: vec![3, 4] },
        SplitView { roster: vec![1, 2, 3, 4, 5, 6], recipients: vec![5, 6] },
    ];
    let out = run_roster_split_attack(&inst, &inputs, &views, &[1, 2], 41).unwrap();
    println!("honest aborts: {}", out.client_aborts.len());
    println!(
        "client 6's input leaked: {:?} (actual {:?})",
        out.recovered_inputs.get(&6).unwrap(),
        inputs[5].values()
    );
}
