//! Online estimation: a sliding window of recent timestamps is re-solved
//! (warm-started) as each new batch of observations arrives, and the
//! per-append deviation value flags change points in real time.
//!
//! Run with: cargo run --example streaming

use tvnet::data::empirical_covariances;
use tvnet::eval::{generate_scenario, ScenarioKind};
use tvnet::penalty::{PenaltyKind, PenaltySpec};
use tvnet::solver::SolverConfig;
use tvnet::stream::StreamState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, obs) = generate_scenario(ScenarioKind::GlobalShift, 5, 16, 40, 1)?;
    let covs = empirical_covariances(&obs);

    let penalty = PenaltySpec::new(PenaltyKind::GroupL2, 0.5, 10.0)?;
    let cfg = SolverConfig {
        rho: 10.0,
        max_iter: 4000,
        ..Default::default()
    };
    let mut state = StreamState::new(6, penalty, cfg)?;

    println!("planted change point: timestamp {}", truth.shift_time);
    for (k, (cov, &time)) in covs.covs.iter().zip(obs.timestamps()).enumerate() {
        let update = state.append(cov.clone(), covs.counts[k], time)?;
        let bar_dev = update.newest_deviation.unwrap_or(0.0);
        let bar = "#".repeat((bar_dev * 20.0).round() as usize);
        println!(
            "t = {time:>4}  deviation {bar_dev:>7.4}  {bar}{}",
            if truth.shift_time == k { "   <- planted shift" } else { "" }
        );
    }
    println!(
        "processed {} appends over a window of {} timestamps",
        state.appends(),
        state.window()
    );
    Ok(())
}
