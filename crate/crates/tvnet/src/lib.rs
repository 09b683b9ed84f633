//! Inference of time-varying sparse Gaussian graphical models from
//! multivariate time series.
//!
//! Given timestamped observations, the library estimates a sequence of
//! sparse inverse covariance matrices whose zero pattern encodes the
//! conditional-independence network at each timestamp. Consecutive estimates
//! are coupled by one of five temporal evolution penalties (element-wise l1,
//! group l2, Laplacian, l-infinity, perturbed node), and the joint convex
//! problem is solved by an ADMM scheme with closed-form updates.
//!
//! Entry points:
//! - [`data`]: ingestion, grouping, and empirical covariances
//! - [`solver::solve`]: the batch estimator
//! - [`stream`]: fixed-window streaming updates
//! - [`interpolate`]: network estimates between observed timestamps
//! - [`eval`]: synthetic scenarios, F1 / temporal-deviation metrics, AIC
//!   parameter selection
//! - [`output`]: JSON / CSV artifacts shared with the CLI
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod data;
pub mod error;
pub mod eval;
pub mod interpolate;
pub mod output;
pub mod penalty;
pub mod prox;
pub mod solver;
pub mod stream;

pub use data::{
    center_columns, empirical_covariances, load_timeseries, EmpiricalCovSequence, InputFormat,
    ObservationSet,
};
pub use error::{Result, TvnetError};
pub use penalty::{async_weights, PenaltyKind, PenaltySpec};
pub use solver::{objective, solve, SolveReport, SolverConfig, ThetaSequence};
