//! Outer ADMM loop for the time-varying graphical lasso: per-timestamp
//! likelihood proxes, consensus updates for the sparsity and temporal
//! penalties, dual ascent, and residual-based stopping.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmpiricalCovSequence;
use crate::error::{Result, TvnetError};
use crate::penalty::{offdiag_l1, psi_value, PenaltyKind, PenaltySpec};
use crate::prox::{
    prox_logdet_trace, prox_pair_psi, prox_perturbed_node, prox_perturbed_node_single,
    prox_psi_columns, soft_threshold_offdiag, ProxWorkspace,
};

/// Default magnitude below which an off-diagonal entry is reported as a
/// non-edge.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 1e-4;

/// ADMM solver controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    /// ADMM penalty parameter, > 0.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Iteration cap for the perturbed-node inner ADMM.
    pub inner_max_iter: usize,
    /// Stopping tolerance for the perturbed-node inner ADMM.
    pub inner_eps: f64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Record the exact objective each iteration (diagnostic; costs one
    /// likelihood evaluation per timestamp per iteration).
    pub record_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            eps_abs: 1e-5,
            eps_rel: 1e-4,
            max_iter: 1000,
            inner_max_iter: 200,
            inner_eps: 1e-8,
            threads: 0,
            record_objective: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho <= 0.0 {
            return Err(TvnetError::Input("rho must be positive".into()));
        }
        if self.eps_abs <= 0.0 || self.eps_rel <= 0.0 || self.inner_eps <= 0.0 {
            return Err(TvnetError::Input("tolerances must be positive".into()));
        }
        if self.max_iter < 1 || self.inner_max_iter < 1 {
            return Err(TvnetError::Input("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

/// The estimated inverse covariances.
#[derive(Debug, Clone)]
pub struct ThetaSequence {
    pub thetas: Vec<DMatrix<f64>>,
    pub edge_threshold: f64,
}

impl ThetaSequence {
    pub fn new(thetas: Vec<DMatrix<f64>>) -> Self {
        Self {
            thetas,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(0, |t| t.nrows())
    }

    /// Off-diagonal support (i < j) of the matrix at `t`, as index pairs.
    pub fn edges_at(&self, t: usize) -> Vec<(usize, usize, f64)> {
        let m = &self.thetas[t];
        let mut edges = Vec::new();
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if m[(i, j)].abs() > self.edge_threshold {
                    edges.push((i, j, m[(i, j)]));
                }
            }
        }
        edges
    }
}

/// Fixed left boundary for windowed (streaming) solves: the frozen matrix
/// and the time gap separating it from the first in-window timestamp.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub theta: DMatrix<f64>,
    pub gap: f64,
}

/// Consensus variables, scaled duals, and iteration bookkeeping for one
/// solve. Z1/U1 are indexed by pair k coupling timestamps (k, k+1).
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub thetas: Vec<DMatrix<f64>>,
    pub z0: Vec<DMatrix<f64>>,
    pub z1: Vec<DMatrix<f64>>,
    pub z2: Vec<DMatrix<f64>>,
    pub u0: Vec<DMatrix<f64>>,
    pub u1: Vec<DMatrix<f64>>,
    pub u2: Vec<DMatrix<f64>>,
    /// Consensus copy and dual for the anchor coupling on timestamp 0.
    pub z_anchor: Option<DMatrix<f64>>,
    pub u_anchor: Option<DMatrix<f64>>,
    pub rho: f64,
    pub iter: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    workspaces: Vec<ProxWorkspace>,
}

impl AdmmState {
    /// Identity initialization: Theta = Z = I, U = 0.
    pub fn init(p: usize, t: usize, rho: f64, anchored: bool) -> Self {
        let eye = DMatrix::identity(p, p);
        let zero = DMatrix::zeros(p, p);
        let pairs = t.saturating_sub(1);
        Self {
            thetas: vec![eye.clone(); t],
            z0: vec![eye.clone(); t],
            z1: vec![eye.clone(); pairs],
            z2: vec![eye.clone(); pairs],
            u0: vec![zero.clone(); t],
            u1: vec![zero.clone(); pairs],
            u2: vec![zero.clone(); pairs],
            z_anchor: anchored.then(|| eye.clone()),
            u_anchor: anchored.then(|| zero.clone()),
            rho,
            iter: 0,
            primal_res: f64::INFINITY,
            dual_res: f64::INFINITY,
            workspaces: vec![ProxWorkspace::new(p); pairs + usize::from(anchored)],
        }
    }

    /// Warm start from a previous solution: Theta and all consensus copies
    /// take the given values, duals restart at zero.
    pub fn warm(thetas: &[DMatrix<f64>], rho: f64, anchored: bool) -> Self {
        let t = thetas.len();
        let p = thetas.first().map_or(0, |m| m.nrows());
        let mut state = Self::init(p, t, rho, anchored);
        state.thetas = thetas.to_vec();
        state.z0 = thetas.to_vec();
        state.z1 = thetas[..t.saturating_sub(1)].to_vec();
        state.z2 = thetas[1..].to_vec();
        if anchored {
            state.z_anchor = Some(thetas[0].clone());
        }
        state
    }

    fn check_shape(&self, p: usize, t: usize, anchored: bool) -> Result<()> {
        let pairs = t.saturating_sub(1);
        let ok = self.thetas.len() == t
            && self.z0.len() == t
            && self.u0.len() == t
            && self.z1.len() == pairs
            && self.z2.len() == pairs
            && self.u1.len() == pairs
            && self.u2.len() == pairs
            && self.z_anchor.is_some() == anchored
            && self.thetas.iter().all(|m| m.nrows() == p && m.ncols() == p);
        if ok {
            Ok(())
        } else {
            Err(TvnetError::Input(
                "initial ADMM state does not match problem shape".into(),
            ))
        }
    }
}

/// Outcome diagnostics for one solve. The objective trace is diagnostic
/// only; ADMM iterates are not monotone in the objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub objective_trace: Vec<f64>,
    pub wall_time_secs: f64,
    /// Outer iterations in which some perturbed-node inner solve hit its cap.
    pub inner_cap_warnings: usize,
}

/// Solve the time-varying graphical lasso on the given covariance sequence.
///
/// Returns the thresholded consensus estimate (exactly sparse) together with
/// the solve diagnostics and the final state (reusable as a warm start).
pub fn solve(
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
    cfg: &SolverConfig,
    init: Option<AdmmState>,
) -> Result<(ThetaSequence, SolveReport)> {
    let (seq, report, _) = solve_anchored(covs, penalty, cfg, None, init)?;
    Ok((seq, report))
}

/// [`solve`] with an optional fixed left-boundary matrix whose temporal
/// coupling to timestamp 0 is included in the objective. Used by the
/// streaming window update.
pub fn solve_anchored(
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
    cfg: &SolverConfig,
    anchor: Option<&Anchor>,
    init: Option<AdmmState>,
) -> Result<(ThetaSequence, SolveReport, AdmmState)> {
    cfg.validate()?;
    let t = covs.len();
    if t == 0 {
        return Err(TvnetError::Input("no timestamps to solve for".into()));
    }
    let p = covs.dim();
    if covs.gaps.len() != t - 1 || covs.counts.len() != t {
        return Err(TvnetError::Input("covariance sequence is inconsistent".into()));
    }
    if let Some(a) = anchor {
        if a.theta.nrows() != p || a.theta.ncols() != p {
            return Err(TvnetError::Input("anchor dimension mismatch".into()));
        }
    }
    // per-pair effective beta (gap scaling in asynchronous mode)
    let pair_betas: Vec<f64> = covs
        .gaps
        .iter()
        .map(|&h| penalty.gap_scale(h).map(|s| penalty.beta * s))
        .collect::<Result<_>>()?;
    let anchor_beta = match anchor {
        Some(a) => penalty.beta * penalty.gap_scale(a.gap)?,
        None => 0.0,
    };

    let mut state = match init {
        Some(s) => {
            s.check_shape(p, t, anchor.is_some())?;
            s
        }
        None => AdmmState::init(p, t, cfg.rho, anchor.is_some()),
    };
    state.rho = cfg.rho;

    let report = if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| TvnetError::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| {
            run_admm(covs, penalty, cfg, anchor, anchor_beta, &pair_betas, &mut state)
        })?
    } else {
        run_admm(covs, penalty, cfg, anchor, anchor_beta, &pair_betas, &mut state)?
    };

    let mut seq = ThetaSequence::new(state.z0.clone());
    seq.edge_threshold = DEFAULT_EDGE_THRESHOLD;
    Ok((seq, report, state))
}

fn run_admm(
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
    cfg: &SolverConfig,
    anchor: Option<&Anchor>,
    anchor_beta: f64,
    pair_betas: &[f64],
    state: &mut AdmmState,
) -> Result<SolveReport> {
    let start = Instant::now();
    let t = covs.len();
    let p = covs.dim();
    let rho = cfg.rho;
    let pairs = t - 1;
    // total scalar entries in the stacked consensus vector
    let copies = t + 2 * pairs + usize::from(anchor.is_some());
    let sqrt_n = ((copies * p * p) as f64).sqrt();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut inner_cap_warnings = 0usize;

    for iter in 0..cfg.max_iter {
        state.iter = iter + 1;

        theta_step(state, covs, anchor.is_some(), rho)?;

        let z_shift_sq = z_step(state, penalty, cfg, anchor, anchor_beta, pair_betas)?;
        if state
            .workspaces
            .iter()
            .any(|w| w.hit_cap)
        {
            inner_cap_warnings += 1;
        }

        // dual ascent
        for i in 0..t {
            let r = &state.thetas[i] - &state.z0[i];
            state.u0[i] += r;
        }
        for k in 0..pairs {
            let r1 = &state.thetas[k] - &state.z1[k];
            state.u1[k] += r1;
            let r2 = &state.thetas[k + 1] - &state.z2[k];
            state.u2[k] += r2;
        }
        if let (Some(za), Some(ua)) = (&state.z_anchor, &mut state.u_anchor) {
            *ua += &state.thetas[0] - za;
        }

        let (primal, dual, theta_norm, z_norm, u_norm) = residual_norms(state, z_shift_sq);
        state.primal_res = primal;
        state.dual_res = dual;

        if state.thetas.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(TvnetError::Numeric(format!(
                "non-finite values at iteration {}",
                state.iter
            )));
        }

        if cfg.record_objective {
            trace.push(objective_raw(
                &state.thetas,
                covs,
                penalty,
                anchor,
            )?);
        }

        let eps_pri = sqrt_n * cfg.eps_abs + cfg.eps_rel * theta_norm.max(z_norm);
        let eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * rho * u_norm;
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        converged,
        iterations: state.iter,
        primal_res: state.primal_res,
        dual_res: state.dual_res,
        objective_trace: trace,
        wall_time_secs: start.elapsed().as_secs_f64(),
        inner_cap_warnings,
    })
}

fn consensus_iter(state: &AdmmState) -> impl Iterator<Item = &DMatrix<f64>> {
    state
        .z0
        .iter()
        .chain(&state.z1)
        .chain(&state.z2)
        .chain(state.z_anchor.iter())
}

/// Per-timestamp likelihood prox. Each timestamp averages its existing
/// consensus copies (3 interior, 2 at the chain ends, 1 when T = 1, plus one
/// for the anchor) and applies the log-det prox with eta = n_i / (c rho).
pub fn theta_step(
    state: &mut AdmmState,
    covs: &EmpiricalCovSequence,
    anchored: bool,
    rho: f64,
) -> Result<()> {
    let t = covs.len();
    let p = covs.dim();
    let AdmmState {
        thetas,
        z0,
        z1,
        z2,
        u0,
        u1,
        u2,
        z_anchor,
        u_anchor,
        ..
    } = state;
    let updated: Vec<Result<DMatrix<f64>>> = (0..t)
        .into_par_iter()
        .map(|i| {
            let mut acc = DMatrix::zeros(p, p);
            let mut copies = 0usize;
            acc += &z0[i] - &u0[i];
            copies += 1;
            if i < t - 1 {
                acc += &z1[i] - &u1[i];
                copies += 1;
            }
            if i > 0 {
                acc += &z2[i - 1] - &u2[i - 1];
                copies += 1;
            }
            if i == 0 && anchored {
                acc += z_anchor.as_ref().unwrap() - u_anchor.as_ref().unwrap();
                copies += 1;
            }
            let a = acc / copies as f64;
            let eta = covs.counts[i] as f64 / (copies as f64 * rho);
            prox_logdet_trace(&a, &covs.covs[i], eta)
        })
        .collect();
    for (i, theta) in updated.into_iter().enumerate() {
        thetas[i] = theta?;
    }
    Ok(())
}

/// Consensus update: Z0 by off-diagonal soft threshold at lambda / rho,
/// (Z1, Z2) pairs by the coupled psi prox at 2 beta / rho, the anchor copy by
/// a single-sided psi prox at beta / rho. Returns the squared Frobenius norm
/// of the total consensus change (the unscaled dual residual).
pub fn z_step(
    state: &mut AdmmState,
    penalty: &PenaltySpec,
    cfg: &SolverConfig,
    anchor: Option<&Anchor>,
    anchor_beta: f64,
    pair_betas: &[f64],
) -> Result<f64> {
    let t = state.thetas.len();
    let pairs = t - 1;
    let rho = cfg.rho;
    let thresh = penalty.lambda / rho;
    let mut shift_sq = 0.0;

    let z0: Vec<DMatrix<f64>> = (0..t)
        .into_par_iter()
        .map(|i| soft_threshold_offdiag(&(&state.thetas[i] + &state.u0[i]), thresh))
        .collect();
    for (new, old) in z0.iter().zip(&state.z0) {
        shift_sq += (new - old).norm_squared();
    }
    state.z0 = z0;

    let AdmmState {
        thetas,
        u1,
        u2,
        workspaces,
        ..
    } = &mut *state;
    let thetas = &*thetas;
    let u1 = &*u1;
    let u2 = &*u2;
    let pair_results: Vec<Result<(DMatrix<f64>, DMatrix<f64>)>> = workspaces[..pairs]
        .par_iter_mut()
        .enumerate()
        .map(|(k, ws)| {
            let beta_k = pair_betas[k];
            match penalty.kind {
                PenaltyKind::PerturbedNode => Ok(prox_perturbed_node(
                    &thetas[k],
                    &thetas[k + 1],
                    &u1[k],
                    &u2[k],
                    beta_k,
                    rho,
                    cfg.inner_eps,
                    cfg.inner_max_iter,
                    ws,
                )),
                _ => prox_pair_psi(
                    &thetas[k],
                    &thetas[k + 1],
                    &u1[k],
                    &u2[k],
                    penalty,
                    2.0 * beta_k / rho,
                ),
            }
        })
        .collect();
    for (k, res) in pair_results.into_iter().enumerate() {
        let (z1, z2) = res?;
        shift_sq += (&z1 - &state.z1[k]).norm_squared();
        shift_sq += (&z2 - &state.z2[k]).norm_squared();
        state.z1[k] = z1;
        state.z2[k] = z2;
    }

    if let Some(a) = anchor {
        let target = &state.thetas[0] + state.u_anchor.as_ref().unwrap() - &a.theta;
        let eta = anchor_beta / rho;
        let moved = match penalty.kind {
            PenaltyKind::PerturbedNode => {
                prox_perturbed_node_single(&target, eta, cfg.inner_eps, cfg.inner_max_iter)
            }
            _ if eta == 0.0 => target,
            _ => prox_psi_columns(penalty.kind, &target, eta)?,
        };
        let za = &a.theta + moved;
        shift_sq += (&za - state.z_anchor.as_ref().unwrap()).norm_squared();
        state.z_anchor = Some(za);
    }
    Ok(shift_sq)
}

/// Frobenius norms of the consensus violations and the consensus change,
/// plus the stacked norms entering the stopping thresholds.
fn residual_norms(state: &AdmmState, z_shift_sq: f64) -> (f64, f64, f64, f64, f64) {
    let t = state.thetas.len();
    let pairs = t - 1;
    let mut primal_sq = 0.0;
    let mut theta_sq = 0.0;
    for i in 0..t {
        primal_sq += (&state.thetas[i] - &state.z0[i]).norm_squared();
        theta_sq += state.thetas[i].norm_squared();
    }
    for k in 0..pairs {
        primal_sq += (&state.thetas[k] - &state.z1[k]).norm_squared();
        primal_sq += (&state.thetas[k + 1] - &state.z2[k]).norm_squared();
        theta_sq += state.thetas[k].norm_squared() + state.thetas[k + 1].norm_squared();
    }
    if let Some(za) = &state.z_anchor {
        primal_sq += (&state.thetas[0] - za).norm_squared();
        theta_sq += state.thetas[0].norm_squared();
    }
    let mut z_sq = 0.0;
    for znew in consensus_iter(state) {
        z_sq += znew.norm_squared();
    }
    let dual_sq = z_shift_sq;
    let mut u_sq = 0.0;
    for u in state
        .u0
        .iter()
        .chain(&state.u1)
        .chain(&state.u2)
        .chain(state.u_anchor.iter())
    {
        u_sq += u.norm_squared();
    }
    (
        primal_sq.sqrt(),
        state.rho * dual_sq.sqrt(),
        theta_sq.sqrt(),
        z_sq.sqrt(),
        u_sq.sqrt(),
    )
}

/// log det of an SPD matrix via Cholesky.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| TvnetError::Numeric("matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

fn objective_raw(
    thetas: &[DMatrix<f64>],
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
    anchor: Option<&Anchor>,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, theta) in thetas.iter().enumerate() {
        let n = covs.counts[i] as f64;
        let ll = n * (log_det_spd(theta)? - (&covs.covs[i] * theta).trace());
        total += -ll + penalty.lambda * offdiag_l1(theta);
    }
    for k in 0..thetas.len().saturating_sub(1) {
        let diff = &thetas[k + 1] - &thetas[k];
        total += penalty.beta * pair_psi_value(penalty, &diff, covs.gaps[k]);
    }
    if let Some(a) = anchor {
        let diff = &thetas[0] - &a.theta;
        total += penalty.beta * pair_psi_value(penalty, &diff, a.gap);
    }
    Ok(total)
}

/// h * psi(X / h) in asynchronous mode, psi(X) otherwise.
fn pair_psi_value(penalty: &PenaltySpec, diff: &DMatrix<f64>, gap: f64) -> f64 {
    if penalty.asynchronous {
        gap * psi_value(penalty.kind, &(diff / gap))
    } else {
        psi_value(penalty.kind, diff)
    }
}

/// Exact objective of the time-varying graphical lasso at the given
/// sequence. For the perturbed-node penalty the psi value is itself obtained
/// by solving its inner row-column split. Errors if any matrix is not SPD.
pub fn objective(
    thetas: &ThetaSequence,
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
) -> Result<f64> {
    if thetas.len() != covs.len() {
        return Err(TvnetError::Input("sequence length mismatch".into()));
    }
    objective_raw(&thetas.thetas, covs, penalty, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{empirical_covariances, ObservationSet};
    use nalgebra::DVector;

    fn cov_seq(covs: Vec<DMatrix<f64>>, counts: Vec<usize>) -> EmpiricalCovSequence {
        let gaps = vec![1.0; covs.len().saturating_sub(1)];
        EmpiricalCovSequence { covs, counts, gaps }
    }

    fn id_seq(p: usize, t: usize) -> EmpiricalCovSequence {
        cov_seq(vec![DMatrix::identity(p, p); t], vec![1; t])
    }

    #[test]
    fn empty_problem_is_an_error() {
        let covs = cov_seq(vec![], vec![]);
        let pen = PenaltySpec::new(PenaltyKind::ElementL1, 0.1, 0.1).unwrap();
        assert!(solve(&covs, &pen, &SolverConfig::default(), None).is_err());
    }

    #[test]
    fn theta_step_single_timestamp_scalar() {
        // T=1, one consensus copy: Z = U = 0, n = rho = 1, S = 0, p = 1
        // gives eta = 1 and theta = 1.
        let covs = cov_seq(vec![DMatrix::zeros(1, 1)], vec![1]);
        let mut state = AdmmState::init(1, 1, 1.0, false);
        state.z0[0][(0, 0)] = 0.0;
        theta_step(&mut state, &covs, false, 1.0).unwrap();
        assert!((state.thetas[0][(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_step_interior_scalar() {
        // interior node, all Z = U = 0, n = rho = 1, S = 0: eta = 1/3,
        // theta = 1/sqrt(3)
        let covs = cov_seq(vec![DMatrix::zeros(1, 1); 3], vec![1; 3]);
        let mut state = AdmmState::init(1, 3, 1.0, false);
        for z in state.z0.iter_mut().chain(&mut state.z1).chain(&mut state.z2) {
            z[(0, 0)] = 0.0;
        }
        theta_step(&mut state, &covs, false, 1.0).unwrap();
        assert!((state.thetas[1][(0, 0)] - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn z_step_zero_lambda_copies_theta() {
        let covs = id_seq(2, 2);
        let pen = PenaltySpec::new(PenaltyKind::ElementL1, 0.0, 0.0).unwrap();
        let cfg = SolverConfig::default();
        let mut state = AdmmState::init(2, 2, 1.0, false);
        state.thetas[0] = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        state.u0[0] = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.1, 0.0]);
        z_step(&mut state, &pen, &cfg, None, 0.0, &[0.0]).unwrap();
        let expect = &state.thetas[0] + &state.u0[0];
        assert!((&state.z0[0] - expect).norm() < 1e-14);
        // beta = 0: Z1 = Theta_prev + U1, Z2 = Theta_cur + U2
        assert!((&state.z1[0] - (&state.thetas[0] + &state.u1[0])).norm() < 1e-14);
        assert!((&state.z2[0] - (&state.thetas[1] + &state.u2[0])).norm() < 1e-14);
        let _ = covs;
    }

    #[test]
    fn fixed_point_terminates_immediately() {
        // identity covariance, lambda = beta = 0: theta = z = solution of the
        // unpenalized problem; with identity S the optimum is the identity.
        let covs = id_seq(2, 3);
        let pen = PenaltySpec::new(PenaltyKind::Laplacian, 0.0, 0.0).unwrap();
        let cfg = SolverConfig {
            max_iter: 200,
            ..Default::default()
        };
        let (seq, report) = solve(&covs, &pen, &cfg, None).unwrap();
        assert!(report.converged);
        for th in &seq.thetas {
            assert!((th - DMatrix::identity(2, 2)).norm() < 1e-3);
        }
        assert!(report.primal_res < 1e-3);
    }

    #[test]
    fn huge_lambda_gives_diagonal_solution() {
        let obs = ObservationSet::new(
            vec![0.0, 1.0],
            vec![
                vec![DVector::from_vec(vec![1.0, 2.0, -1.0])],
                vec![DVector::from_vec(vec![0.5, 0.3, 0.7])],
            ],
        )
        .unwrap();
        let covs = empirical_covariances(&obs);
        let pen = PenaltySpec::new(PenaltyKind::GroupL2, 1e6, 1.0).unwrap();
        let (seq, _) = solve(&covs, &pen, &SolverConfig::default(), None).unwrap();
        for th in &seq.thetas {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(th[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn huge_beta_makes_all_thetas_equal() {
        let covs = cov_seq(
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]),
                DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]),
                DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.5]),
            ],
            vec![4, 4, 4],
        );
        let pen = PenaltySpec::new(PenaltyKind::ElementL1, 0.1, 1e6).unwrap();
        let cfg = SolverConfig {
            max_iter: 3000,
            ..Default::default()
        };
        let (seq, _) = solve(&covs, &pen, &cfg, None).unwrap();
        for th in &seq.thetas[1..] {
            assert!((th - &seq.thetas[0]).norm() < 1e-3, "{th}");
        }
    }

    #[test]
    fn objective_identity_case() {
        // T=1, Theta=I, S=I, n=1, lambda=0 -> objective = p
        let covs = id_seq(3, 1);
        let pen = PenaltySpec::new(PenaltyKind::ElementL1, 0.0, 1.0).unwrap();
        let seq = ThetaSequence::new(vec![DMatrix::identity(3, 3)]);
        let obj = objective(&seq, &covs, &pen).unwrap();
        assert!((obj - 3.0).abs() < 1e-12);
    }

    #[test]
    fn objective_constant_sequence_has_no_temporal_term() {
        let covs = id_seq(2, 3);
        let th = DMatrix::from_row_slice(2, 2, &[1.5, 0.1, 0.1, 1.5]);
        let seq = ThetaSequence::new(vec![th; 3]);
        for kind in [
            PenaltyKind::ElementL1,
            PenaltyKind::GroupL2,
            PenaltyKind::Laplacian,
            PenaltyKind::LInf,
            PenaltyKind::PerturbedNode,
        ] {
            let with_beta = PenaltySpec::new(kind, 0.2, 5.0).unwrap();
            let no_beta = PenaltySpec::new(kind, 0.2, 0.0).unwrap();
            let a = objective(&seq, &covs, &with_beta).unwrap();
            let b = objective(&seq, &covs, &no_beta).unwrap();
            assert!((a - b).abs() < 1e-9, "{kind:?}");
        }
    }

    #[test]
    fn objective_rejects_non_spd() {
        let covs = id_seq(2, 1);
        let pen = PenaltySpec::new(PenaltyKind::ElementL1, 0.0, 0.0).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let seq = ThetaSequence::new(vec![bad]);
        assert!(objective(&seq, &covs, &pen).is_err());
    }

    #[test]
    fn report_records_iterations_and_trace() {
        let covs = id_seq(2, 2);
        let pen = PenaltySpec::new(PenaltyKind::Laplacian, 0.05, 0.5).unwrap();
        let (_, report) = solve(&covs, &pen, &SolverConfig::default(), None).unwrap();
        assert!(report.converged);
        assert_eq!(report.objective_trace.len(), report.iterations);
    }
}
