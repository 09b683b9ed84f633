//! Choosing lambda and beta by information criterion.
//!
//! Scores a small grid of (lambda, beta) pairs by AIC on the training data
//! and reports the winner. Grid points are solved in parallel.
//!
//! Run with: cargo run --release --example model_selection

use tvnet::data::empirical_covariances;
use tvnet::eval::{aic, aic_select, generate_scenario, ScenarioKind};
use tvnet::penalty::{PenaltyKind, PenaltySpec};
use tvnet::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (_, obs) = generate_scenario(ScenarioKind::GlobalShift, 6, 10, 30, 11)?;
    let cfg = SolverConfig {
        rho: 5.0,
        max_iter: 4000,
        ..Default::default()
    };

    let mut grid = Vec::new();
    for &lambda in &[0.05, 0.1, 0.2, 0.4, 0.8] {
        for &beta in &[0.5, 2.0, 8.0] {
            grid.push((lambda, beta));
        }
    }
    let (lambda, beta) = aic_select(&obs, &grid, PenaltyKind::GroupL2, &cfg)?;
    println!("selected lambda = {lambda}, beta = {beta}");

    let covs = empirical_covariances(&obs);
    let penalty = PenaltySpec::new(PenaltyKind::GroupL2, lambda, beta)?;
    let (networks, _) = solve(&covs, &penalty, &cfg, None)?;
    println!(
        "AIC at the winner: {:.2} ({} edges at t=0)",
        aic(&networks, &covs)?,
        networks.edges_at(0).len()
    );
    Ok(())
}
