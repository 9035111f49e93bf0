//! Dropout-rate sweeps: repeated rounds per rate, mean counters, CSV out.

use crate::protocol::ConfigError;
use crate::simnet::{run_round, DropoutSchedule, Instance, LatencyModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rate: f64,
    pub clients: usize,
    pub t: usize,
    pub m: usize,
    pub server_group_mul: f64,
    pub server_group_exp: f64,
    pub reconstructions: f64,
    pub client_bytes: f64,
    pub server_bytes: f64,
    pub sim_time_ms: f64,
}

/// Runs `reps` rounds per rate, dropping the highest-id clients before they
/// send at `dropout_step` (step 2 shrinks the set of masked vectors, which
/// is what makes server work fall with the rate). Inputs and run seeds are
/// derived per repetition, identically across rates, so rows are
/// comparable.
pub fn run_sweep(
    inst: &Instance,
    rates: &[f64],
    reps: u32,
    dropout_step: u8,
    latency: &LatencyModel,
    seed: u64,
) -> Result<Vec<SweepRow>, ConfigError> {
    let cfg = &inst.config;
    let mut rows = Vec::with_capacity(rates.len());
    for &rate in rates {
        if !(0.0..1.0).contains(&rate) {
            return Err(ConfigError::BadSchedule(format!("dropout rate {rate} outside [0,1)")));
        }
        let schedule = DropoutSchedule::from_rate(cfg.n, rate, dropout_step);
        let mut agg = SweepRow {
            rate,
            clients: cfg.n,
            t: cfg.t,
            m: cfg.m,
            server_group_mul: 0.0,
            server_group_exp: 0.0,
            reconstructions: 0.0,
            client_bytes: 0.0,
            server_bytes: 0.0,
            sim_time_ms: 0.0,
        };
        for rep in 0..reps {
            let inputs = inst.synthetic_inputs(seed ^ (u64::from(rep) << 32));
            let transcript =
                run_round(inst, &inputs, &schedule, latency, seed.wrapping_add(rep.into()))?;
            let server = transcript.counters.server.totals();
            agg.server_group_mul += server.group_mul as f64;
            agg.server_group_exp += server.group_exp as f64;
            agg.reconstructions += server.reconstructions as f64;
            agg.server_bytes += server.bytes_sent as f64;
            let client_total: u64 = transcript
                .counters
                .clients
                .values()
                .map(|m| m.totals().bytes_sent)
                .sum();
            agg.client_bytes += client_total as f64 / cfg.n as f64;
            agg.sim_time_ms += transcript.total_time_ns() as f64 / 1e6;
        }
        let k = f64::from(reps);
        agg.server_group_mul /= k;
        agg.server_group_exp /= k;
        agg.reconstructions /= k;
        agg.client_bytes /= k;
        agg.server_bytes /= k;
        agg.sim_time_ms /= k;
        rows.push(agg);
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "rate,clients,t,m,server_group_mul,server_group_exp,reconstructions,client_bytes,server_bytes,sim_time_ms\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.3}\n",
            r.rate,
            r.clients,
            r.t,
            r.m,
            r.server_group_mul,
            r.server_group_exp,
            r.reconstructions,
            r.client_bytes,
            r.server_bytes,
            r.sim_time_ms,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::small_instance;
    use crate::protocol::Mode;

    #[test]
    fn server_products_shrink_with_the_dropout_rate() {
        let inst = small_instance(10, 5, 16, Mode::SemiHonest, 8);
        let rates = [0.0, 0.1, 0.2, 0.3];
        let rows = run_sweep(&inst, &rates, 2, 2, &LatencyModel::lan(), 17).unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.windows(2) {
            assert!(
                pair[1].server_group_mul < pair[0].server_group_mul,
                "products over U2 must shrink strictly"
            );
            assert!(pair[1].sim_time_ms <= pair[0].sim_time_ms);
        }
        for row in &rows {
            assert_eq!(row.reconstructions, 1.0, "one reconstruction per round");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_csv_is_stable() {
        let inst = small_instance(6, 3, 4, Mode::SemiHonest, 9);
        let a = run_sweep(&inst, &[0.0, 0.2], 2, 2, &LatencyModel::none(), 3).unwrap();
        let b = run_sweep(&inst, &[0.0, 0.2], 2, 2, &LatencyModel::none(), 3).unwrap();
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        assert!(sweep_csv(&a).starts_with(
            "rate,clients,t,m,server_group_mul,server_group_exp,reconstructions,client_bytes,server_bytes,sim_time_ms\n"
        ));
        assert!(run_sweep(&inst, &[1.0], 1, 2, &LatencyModel::none(), 3).is_err());
    }
}
