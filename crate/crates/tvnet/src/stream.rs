//! Fixed-window streaming updates: as each new timestamp arrives, only the
//! most recent `m` estimates are re-solved, with the estimate just outside
//! the window held fixed and coupled to the window through the evolution
//! penalty. Per-append work is therefore bounded regardless of how long the
//! stream has been running.

use nalgebra::DMatrix;

use crate::data::EmpiricalCovSequence;
use crate::error::{Result, TvnetError};
use crate::penalty::PenaltySpec;
use crate::solver::{solve_anchored, Anchor, SolveReport, SolverConfig, ThetaSequence};

/// Default number of re-solvable timestamps.
pub const DEFAULT_WINDOW: usize = 10;

/// State of a streaming estimation run.
#[derive(Debug, Clone)]
pub struct StreamState {
    window: usize,
    penalty: PenaltySpec,
    cfg: SolverConfig,
    /// Estimates frozen out of the window, oldest first.
    frozen: Vec<DMatrix<f64>>,
    frozen_times: Vec<f64>,
    /// In-window data, oldest first.
    covs: Vec<DMatrix<f64>>,
    counts: Vec<usize>,
    times: Vec<f64>,
    /// Current in-window estimates (from the last append).
    current: Vec<DMatrix<f64>>,
    appends: usize,
    skipped: usize,
}

/// Estimates returned by one append: the in-window sequence plus the newest
/// temporal-deviation value.
#[derive(Debug, Clone)]
pub struct StreamUpdate {
    pub window_estimates: ThetaSequence,
    /// ||Theta_new - Theta_prev||_F against the previous estimate, if any
    /// previous timestamp exists.
    pub newest_deviation: Option<f64>,
    pub report: SolveReport,
}

impl StreamState {
    pub fn new(window: usize, penalty: PenaltySpec, cfg: SolverConfig) -> Result<Self> {
        if window == 0 {
            return Err(TvnetError::Input("window must be >= 1".into()));
        }
        Ok(Self {
            window,
            penalty,
            cfg,
            frozen: Vec::new(),
            frozen_times: Vec::new(),
            covs: Vec::new(),
            counts: Vec::new(),
            times: Vec::new(),
            current: Vec::new(),
            appends: 0,
            skipped: 0,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn appends(&self) -> usize {
        self.appends
    }

    /// Count of malformed inputs skipped by the caller; tracked here so a
    /// summary can be emitted at the end of the stream.
    pub fn record_skip(&mut self) {
        self.skipped += 1;
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// All estimates produced so far: frozen prefix followed by the current
    /// window, oldest first.
    pub fn full_sequence(&self) -> ThetaSequence {
        let mut all = self.frozen.clone();
        all.extend(self.current.iter().cloned());
        ThetaSequence::new(all)
    }

    pub fn timestamps(&self) -> Vec<f64> {
        let mut all = self.frozen_times.clone();
        all.extend_from_slice(&self.times);
        all
    }

    /// Incorporate the empirical covariance of a new timestamp and re-solve
    /// the window, warm-started from the previous solution.
    pub fn append(
        &mut self,
        new_cov: DMatrix<f64>,
        n_new: usize,
        time: f64,
        ) -> Result<StreamUpdate> {
        let p = new_cov.nrows();
        if new_cov.ncols() != p {
            return Err(TvnetError::Input("covariance must be square".into()));
        }
        if let Some(first) = self.covs.first() {
            if first.nrows() != p {
                return Err(TvnetError::Input(format!(
                    "dimension mismatch: stream is {}-variate, got {p}",
                    first.nrows()
                )));
            }
        }
        if n_new == 0 {
            return Err(TvnetError::Input("n_new must be >= 1".into()));
        }
        if let Some(&last) = self.times.last().or(self.frozen_times.last()) {
            if time <= last {
                return Err(TvnetError::Input(format!(
                    "timestamps must be increasing (got {time} after {last})"
                )));
            }
        }

        let prev_last = self.current.last().cloned();

        self.covs.push(new_cov);
        self.counts.push(n_new);
        self.times.push(time);

        // freeze the oldest in-window estimate when the window overflows
        if self.covs.len() > self.window {
            self.covs.remove(0);
            self.counts.remove(0);
            let frozen_time = self.times.remove(0);
            let frozen_theta = self.current.remove(0);
            self.frozen_times.push(frozen_time);
            self.frozen.push(frozen_theta);
        }

        let gaps: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        let covs = EmpiricalCovSequence {
            covs: self.covs.clone(),
            counts: self.counts.clone(),
            gaps,
        };
        let anchor = match (self.frozen.last(), self.frozen_times.last()) {
            (Some(theta), Some(&t)) => Some(Anchor {
                theta: theta.clone(),
                gap: self.times[0] - t,
            }),
            _ => None,
        };

        // warm start: previous window estimates, newest slot seeded with the
        // most recent estimate (identity on the first append)
        let mut warm = self.current.clone();
        if warm.len() + 1 == self.covs.len() {
            warm.push(
                prev_last
                    .clone()
                    .unwrap_or_else(|| DMatrix::identity(p, p)),
            );
        }
        let init = if warm.len() == self.covs.len() {
            Some(crate::solver::AdmmState::warm(
                &warm,
                self.cfg.rho,
                anchor.is_some(),
            ))
        } else {
            None
        };

        let (seq, report, _state) =
            solve_anchored(&covs, &self.penalty, &self.cfg, anchor.as_ref(), init)?;
        self.current = seq.thetas.clone();
        self.appends += 1;

        let newest_deviation = if self.current.len() >= 2 {
            let n = self.current.len();
            Some((&self.current[n - 1] - &self.current[n - 2]).norm())
        } else {
            prev_last.map(|prev| (self.current.last().unwrap() - prev).norm())
        };

        Ok(StreamUpdate {
            window_estimates: seq,
            newest_deviation,
            report,
        })
    }
}
