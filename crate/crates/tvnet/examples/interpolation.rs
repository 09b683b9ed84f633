//! Estimating the network between observed timestamps.
//!
//! A virtual timestamp at time s is tied to its two solved neighbors by the
//! evolution penalty, weighted by inverse distance; the penalty choice
//! decides how the estimate moves between them (Laplacian: linear blend;
//! l1: snaps to the nearer side; group penalties: in between).
//!
//! Run with: cargo run --example interpolation

use tvnet::data::empirical_covariances;
use tvnet::eval::{generate_scenario, ScenarioKind};
use tvnet::interpolate::infer_intermediate;
use tvnet::penalty::{PenaltyKind, PenaltySpec};
use tvnet::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, obs) = generate_scenario(ScenarioKind::GlobalShift, 4, 8, 50, 5)?;
    let covs = empirical_covariances(&obs);
    let penalty = PenaltySpec::new(PenaltyKind::Laplacian, 0.1, 1.0)?;
    let (networks, _) = solve(&covs, &penalty, &SolverConfig::default(), None)?;

    // sweep between solved timestamps 2 and 3
    let (left, right) = (&networks.thetas[2], &networks.thetas[3]);
    println!("entry (0,1) moving from t=2 to t=3:");
    println!("  at t=2.0: {:+.5}", left[(0, 1)]);
    for k in 1..5 {
        let s = 2.0 + 0.2 * k as f64;
        let mid = infer_intermediate(left, right, 2.0, 3.0, s, &penalty)?;
        println!("  at t={s:.1}: {:+.5}", mid[(0, 1)]);
    }
    println!("  at t=3.0: {:+.5}", right[(0, 1)]);
    Ok(())
}
