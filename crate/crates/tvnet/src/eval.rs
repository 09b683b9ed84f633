//! Synthetic ground-truth scenarios, accuracy metrics (F1 and
//! temporal-deviation ratio), and AIC-based selection of the regularization
//! weights.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{empirical_covariances, EmpiricalCovSequence, ObservationSet};
use crate::error::{Result, TvnetError};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::solver::{log_det_spd, solve, SolverConfig, ThetaSequence};

/// Edge probability and weight range for random sparse precision matrices.
const EDGE_PROB: f64 = 0.2;
const WEIGHT_LO: f64 = 0.2;
const WEIGHT_HI: f64 = 0.6;
/// Diagonal margin added above |min eigenvalue| to force positive
/// definiteness.
const DIAG_MARGIN: f64 = 0.5;

/// Shape of the planted temporal change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// The entire network restructures at the shift time.
    GlobalShift,
    /// One node rewires its row/column at the shift time.
    LocalShift,
}

/// A planted ground truth: piecewise-constant true inverse covariances with
/// one change at `shift_time`.
#[derive(Debug, Clone)]
pub struct GroundTruthScenario {
    pub kind: ScenarioKind,
    pub p: usize,
    pub t: usize,
    /// First timestamp index governed by the post-shift network.
    pub shift_time: usize,
    pub samples_per_t: usize,
    pub seed: u64,
    pub true_inverse_covs: Vec<DMatrix<f64>>,
}

fn random_sparse_precision(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.gen::<f64>() < EDGE_PROB {
                let mag = rng.gen_range(WEIGHT_LO..WEIGHT_HI);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                m[(i, j)] = sign * mag;
                m[(j, i)] = m[(i, j)];
            }
        }
    }
    set_spd_diagonal(&mut m);
    m
}

/// Overwrite the diagonal with |min eigenvalue of the off-diagonal part|
/// plus a fixed margin, making the matrix strictly diagonally dominated in
/// the spectral sense.
fn set_spd_diagonal(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        m[(i, i)] = 0.0;
    }
    let min_eig = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let d = min_eig.abs() + DIAG_MARGIN;
    for i in 0..p {
        m[(i, i)] = d;
    }
}

/// Resample one node's row/column, keeping the rest of the support intact.
fn perturb_node(rng: &mut ChaCha8Rng, base: &DMatrix<f64>, node: usize) -> DMatrix<f64> {
    let p = base.nrows();
    let mut m = base.clone();
    for j in 0..p {
        if j != node {
            m[(node, j)] = 0.0;
            m[(j, node)] = 0.0;
        }
    }
    for j in 0..p {
        if j != node && rng.gen::<f64>() < EDGE_PROB {
            let mag = rng.gen_range(WEIGHT_LO..WEIGHT_HI);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            m[(node, j)] = sign * mag;
            m[(j, node)] = m[(node, j)];
        }
    }
    set_spd_diagonal(&mut m);
    m
}

/// Generate a planted scenario and samples drawn from it.
///
/// The truth is a random sparse symmetric positive-definite precision matrix
/// (random support at edge probability 0.2, weights of magnitude 0.2-0.6);
/// the shifted segment either redraws the whole matrix (global) or one
/// node's row/column (local). `samples_per_t` vectors are drawn from
/// N(0, inverse of the truth) at each of `t` unit-spaced timestamps.
pub fn generate_scenario(
    kind: ScenarioKind,
    p: usize,
    t: usize,
    samples_per_t: usize,
    seed: u64,
) -> Result<(GroundTruthScenario, ObservationSet)> {
    if p < 2 || t < 2 {
        return Err(TvnetError::Input("need p >= 2 and T >= 2".into()));
    }
    if samples_per_t == 0 {
        return Err(TvnetError::Input("samples_per_t must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift_time = t / 2;
    let before = random_sparse_precision(&mut rng, p);
    let after = match kind {
        ScenarioKind::GlobalShift => random_sparse_precision(&mut rng, p),
        ScenarioKind::LocalShift => {
            let node = rng.gen_range(0..p);
            perturb_node(&mut rng, &before, node)
        }
    };
    let true_inverse_covs: Vec<DMatrix<f64>> = (0..t)
        .map(|i| {
            if i < shift_time {
                before.clone()
            } else {
                after.clone()
            }
        })
        .collect();

    let chol_before = sigma_factor(&before)?;
    let chol_after = sigma_factor(&after)?;
    let mut timestamps = Vec::with_capacity(t);
    let mut samples = Vec::with_capacity(t);
    for i in 0..t {
        let factor = if i < shift_time {
            &chol_before
        } else {
            &chol_after
        };
        let bucket = (0..samples_per_t)
            .map(|_| {
                let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                factor * z
            })
            .collect();
        timestamps.push(i as f64);
        samples.push(bucket);
    }
    let obs = ObservationSet::new(timestamps, samples)?;
    Ok((
        GroundTruthScenario {
            kind,
            p,
            t,
            shift_time,
            samples_per_t,
            seed,
            true_inverse_covs,
        },
        obs,
    ))
}

/// Cholesky factor of Sigma = Theta^{-1}.
fn sigma_factor(theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sigma = theta
        .clone()
        .try_inverse()
        .ok_or_else(|| TvnetError::Numeric("singular truth matrix".into()))?;
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(sigma
        .cholesky()
        .ok_or_else(|| TvnetError::Numeric("truth covariance not SPD".into()))?
        .l())
}

/// Harmonic mean of edge precision and recall over all timestamps. Supports
/// are the off-diagonal entries exceeding the estimate's edge threshold in
/// magnitude. Zero when no edges are predicted.
pub fn f1_score(estimated: &ThetaSequence, truth: &GroundTruthScenario) -> f64 {
    assert_eq!(estimated.len(), truth.t, "timestamp count mismatch");
    let thresh = estimated.edge_threshold;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    for (est, tru) in estimated.thetas.iter().zip(&truth.true_inverse_covs) {
        for i in 0..truth.p {
            for j in (i + 1)..truth.p {
                let pred = est[(i, j)].abs() > thresh;
                let real = tru[(i, j)].abs() > thresh;
                match (pred, real) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fne += 1,
                    (false, false) => {}
                }
            }
        }
    }
    if tp + fp == 0 || tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fne) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Frobenius norms of consecutive differences, length T - 1.
pub fn temporal_deviation(thetas: &ThetaSequence) -> Vec<f64> {
    thetas
        .thetas
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm())
        .collect()
}

/// Sharpness of a detected shift.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TdRatio {
    /// Deviation at the shift divided by the mean deviation.
    pub ratio: f64,
    /// Timestamp index at which the largest deviation occurs (the first
    /// timestamp of the post-change pair).
    pub argmax_timestamp: usize,
    /// Set when every deviation is zero; the ratio is then reported as 0.
    pub degenerate: bool,
}

/// Ratio of the temporal deviation at the known shift timestamp to the mean
/// deviation. `shift_index` is the first timestamp governed by the
/// post-shift network (so the deviation of interest is between
/// `shift_index - 1` and `shift_index`).
pub fn td_ratio(thetas: &ThetaSequence, shift_index: usize) -> TdRatio {
    let devs = temporal_deviation(thetas);
    assert!(
        shift_index >= 1 && shift_index < thetas.len(),
        "shift index out of range"
    );
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    if mean == 0.0 {
        return TdRatio {
            ratio: 0.0,
            argmax_timestamp: shift_index,
            degenerate: true,
        };
    }
    let argmax = devs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    TdRatio {
        ratio: devs[shift_index - 1] / mean,
        argmax_timestamp: argmax + 1,
        degenerate: false,
    }
}

/// AIC value of a fitted sequence: 2K - 2 sum_i l_i, where K counts the
/// distinct off-diagonal support pairs per timestamp and l_i is the scaled
/// log likelihood n_i (log det Theta_i - tr(S_i Theta_i)).
pub fn aic(seq: &ThetaSequence, covs: &EmpiricalCovSequence) -> Result<f64> {
    let mut k = 0usize;
    let mut ll = 0.0;
    for (i, theta) in seq.thetas.iter().enumerate() {
        k += seq.edges_at(i).len();
        let n = covs.counts[i] as f64;
        ll += n * (log_det_spd(theta)? - (&covs.covs[i] * theta).trace());
    }
    Ok(2.0 * k as f64 - 2.0 * ll)
}

/// Pick the (lambda, beta) grid point minimizing AIC on the training set.
/// Grid points are solved independently in parallel; points whose solve or
/// likelihood evaluation fails are skipped. Ties break toward larger lambda,
/// then larger beta.
pub fn aic_select(
    train: &ObservationSet,
    grid: &[(f64, f64)],
    kind: PenaltyKind,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(TvnetError::Input("empty parameter grid".into()));
    }
    let covs = empirical_covariances(train);
    let scored: Vec<Option<((f64, f64), f64)>> = grid
        .par_iter()
        .map(|&(lambda, beta)| {
            let penalty = PenaltySpec::new(kind, lambda, beta).ok()?;
            let mut point_cfg = *cfg;
            point_cfg.record_objective = false;
            point_cfg.threads = 1;
            let (seq, _) = solve(&covs, &penalty, &point_cfg, None).ok()?;
            let score = aic(&seq, &covs).ok()?;
            Some(((lambda, beta), score))
        })
        .collect();
    let mut best: Option<((f64, f64), f64)> = None;
    for entry in scored.into_iter().flatten() {
        best = Some(match best {
            None => entry,
            Some(cur) => {
                let ((la, ba), sa) = entry;
                let ((lb, bb), sb) = cur;
                // strict improvement, or a tie resolved toward sparser and
                // smoother fits
                if sa < sb || (sa == sb && (la, ba) > (lb, bb)) {
                    entry
                } else {
                    cur
                }
            }
        });
    }
    best.map(|(params, _)| params)
        .ok_or_else(|| TvnetError::Numeric("every grid point failed to solve".into()))
}
