//! Active-malicious mode: the roster consistency round and signature
//! checks in action.
//!
//! Every message kind carries a signature; the example corrupts one of
//! each in transit and shows how the forgery is caught — the sender is
//! excluded from the corresponding roster or the receiving party aborts.
//!
//!     cargo run --release --example malicious_round

use hprg_secagg::protocol::Mode;
use hprg_secagg::simnet::{
    run_round_with_tamper, DropoutSchedule, Instance, InstanceParams, LatencyModel, Tamper,
};

fn main() {
    let params = InstanceParams::new(5, 4, 4, 255, Mode::Malicious, 21);
    let inst = Instance::build(&params).unwrap();
    let inputs = inst.synthetic_inputs(3);
    let schedule = DropoutSchedule::empty();
    let latency = LatencyModel::none();

    let clean = run_round_with_tamper(&inst, &inputs, &schedule, &latency, 2, None).unwrap();
    println!("clean run: U3 = {:?}, output = {:?}\n", clean.rosters.u3, clean.output().unwrap());

    let cases: [(&str, Tamper); 5] = [
        ("sigma-1 (encrypted share, client 2 -> 3)", Tamper::ShareSig { from: 2, to: 3 }),
        ("sigma-2 (masked vector from client 2)", Tamper::MaskedSig { from: 2 }),
        ("sigma-3 (server roster, copy for client 4)", Tamper::RosterSig { to: 4 }),
        ("sigma-4 (roster ack from client 5)", Tamper::AckSig { from: 5 }),
        ("sigma-5 (unmask share from client 1)", Tamper::UnmaskSig { from: 1 }),
    ];
    for (label, tamper) in cases {
        let t =
            run_round_with_tamper(&inst, &inputs, &schedule, &latency, 2, Some(tamper)).unwrap();
        println!("forged {label}:");
        if !t.client_aborts.is_empty() {
            for (id, reason) in &t.client_aborts {
                println!("    client {id} aborted: {reason}");
            }
        }
        println!(
            "    U2 = {:?}, U3 = {:?}, U4 = {:?}",
            t.rosters.u2, t.rosters.u3, t.rosters.u4
        );
        match t.output() {
            Some(sum) => println!("    round still completed: {sum:?}"),
            None => println!("    round aborted: {}", t.abort_reason().unwrap()),
        }
        println!();
    }
}
