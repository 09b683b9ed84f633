//! Proximal operators backing the ADMM updates: the log-det/trace prox for
//! the likelihood step, the off-diagonal soft threshold, the four
//! column-separable evolution proxes, and the perturbed-node inner ADMM.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, TvnetError};
use crate::penalty::{PenaltyKind, PenaltySpec};

/// Bisection controls for the l-infinity prox.
const LINF_BISECT_TOL: f64 = 1e-10;
const LINF_BISECT_CAP: usize = 200;

/// prox of eta * (-log det X + tr(S X)) over symmetric positive-definite X.
///
/// A is symmetrized internally; the result is the spectral formula
/// (eta/2) Q (D + sqrt(D^2 + 4/eta I)) Q^T where Q D Q^T is the
/// eigendecomposition of (A + A^T)/(2 eta) - S.
pub fn prox_logdet_trace(a: &DMatrix<f64>, s: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    assert!(eta > 0.0, "eta must be positive");
    let sym = (a + a.transpose()) * 0.5;
    let m = sym / eta - s;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(TvnetError::Numeric(
            "non-finite input to log-det prox".into(),
        ));
    }
    let eig = SymmetricEigen::new(m);
    let p = a.nrows();
    let mut d = DMatrix::zeros(p, p);
    for i in 0..p {
        let lam = eig.eigenvalues[i];
        d[(i, i)] = 0.5 * eta * (lam + (lam * lam + 4.0 / eta).sqrt());
    }
    let q = eig.eigenvectors;
    let theta = &q * d * q.transpose();
    // clean up asymmetry from the two matrix products
    Ok((&theta + theta.transpose()) * 0.5)
}

/// Scalar soft threshold.
pub fn soft_threshold(x: f64, thresh: f64) -> f64 {
    if x.abs() <= thresh {
        0.0
    } else {
        x.signum() * (x.abs() - thresh)
    }
}

/// Element-wise soft threshold of the off-diagonal entries; the diagonal is
/// left unchanged (the sparsity seminorm is off-diagonal only).
pub fn soft_threshold_offdiag(a: &DMatrix<f64>, thresh: f64) -> DMatrix<f64> {
    assert!(thresh >= 0.0);
    let mut out = a.clone();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if i != j {
                out[(i, j)] = soft_threshold(a[(i, j)], thresh);
            }
        }
    }
    out
}

/// prox of eta * ||.||_1 on a column: element-wise soft threshold.
pub fn prox_col_l1(a: &DVector<f64>, eta: f64) -> DVector<f64> {
    a.map(|x| soft_threshold(x, eta))
}

/// prox of eta * ||.||_2 on a column: block soft threshold.
pub fn prox_col_l2(a: &DVector<f64>, eta: f64) -> DVector<f64> {
    let norm = a.norm();
    if norm <= eta {
        DVector::zeros(a.len())
    } else {
        a * (1.0 - eta / norm)
    }
}

/// prox of eta * ||.||_2^2 on a column: uniform shrinkage by 1/(1 + 2 eta).
pub fn prox_col_laplacian(a: &DVector<f64>, eta: f64) -> DVector<f64> {
    a / (1.0 + 2.0 * eta)
}

/// prox of eta * ||.||_inf on a column.
///
/// Zero when ||a||_1 <= eta; otherwise a - eta * P(a / eta) where P projects
/// onto the l1 unit ball. The projection threshold sigma solves
/// sum_i max(|a_i| / eta - sigma, 0) = 1 and is found by bisection on
/// [0, max_i |a_i| / eta]. Signs are handled by operating on absolute values
/// and restoring them afterwards.
pub fn prox_col_linf(a: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    if eta == 0.0 {
        return Ok(a.clone());
    }
    assert!(eta > 0.0);
    let l1: f64 = a.iter().map(|x| x.abs()).sum();
    if l1 <= eta {
        return Ok(DVector::zeros(a.len()));
    }
    let b: Vec<f64> = a.iter().map(|x| x.abs() / eta).collect();
    let residual = |sigma: f64| -> f64 {
        b.iter().map(|&v| (v - sigma).max(0.0)).sum::<f64>() - 1.0
    };
    let mut lo = 0.0;
    let mut hi = b.iter().cloned().fold(0.0, f64::max);
    // residual(lo) = ||a||_1/eta - 1 > 0, residual(hi) = -1 < 0
    let mut sigma = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..LINF_BISECT_CAP {
        sigma = 0.5 * (lo + hi);
        let r = residual(sigma);
        if r.abs() < LINF_BISECT_TOL {
            converged = true;
            break;
        }
        if r > 0.0 {
            lo = sigma;
        } else {
            hi = sigma;
        }
        if hi - lo < LINF_BISECT_TOL * LINF_BISECT_TOL {
            converged = true;
            break;
        }
    }
    if !converged && residual(sigma).abs() > 1e-6 {
        return Err(TvnetError::Numeric(
            "l-infinity prox bisection did not converge".into(),
        ));
    }
    Ok(DVector::from_iterator(
        a.len(),
        a.iter()
            .zip(&b)
            .map(|(&x, &bv)| x - x.signum() * eta * (bv - sigma).max(0.0)),
    ))
}

/// Column prox dispatch for the four column-separable penalties.
pub fn prox_col(kind: PenaltyKind, a: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    match kind {
        PenaltyKind::ElementL1 => Ok(prox_col_l1(a, eta)),
        PenaltyKind::GroupL2 => Ok(prox_col_l2(a, eta)),
        PenaltyKind::Laplacian => Ok(prox_col_laplacian(a, eta)),
        PenaltyKind::LInf => prox_col_linf(a, eta),
        PenaltyKind::PerturbedNode => Err(TvnetError::Input(
            "perturbed-node penalty is not column-separable".into(),
        )),
    }
}

/// Matrix prox of eta * psi applied column by column.
pub fn prox_psi_columns(kind: PenaltyKind, a: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        let col = prox_col(kind, &a.column(j).into_owned(), eta)?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Warm-startable scratch for one perturbed-node inner ADMM instance.
#[derive(Debug, Clone)]
pub struct ProxWorkspace {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    /// Set when the last inner solve hit its iteration cap.
    pub hit_cap: bool,
}

impl ProxWorkspace {
    pub fn new(p: usize) -> Self {
        Self {
            v: DMatrix::zeros(p, p),
            w: DMatrix::zeros(p, p),
            u1: DMatrix::zeros(p, p),
            u2: DMatrix::zeros(p, p),
            hit_cap: false,
        }
    }
}

/// Joint (Z_prev, Z_cur) update for the temporal coupling term.
///
/// Computes E = prox of the column-separable psi at the consensus difference
/// and recombines it with the half-sum of the inputs. `eta` is the effective
/// 2 beta / rho for the pair. Perturbed node must go through
/// [`prox_perturbed_node`] instead.
pub fn prox_pair_psi(
    theta_prev: &DMatrix<f64>,
    theta_cur: &DMatrix<f64>,
    u_prev: &DMatrix<f64>,
    u_cur: &DMatrix<f64>,
    penalty: &PenaltySpec,
    eta: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if eta == 0.0 {
        return Ok((theta_prev + u_prev, theta_cur + u_cur));
    }
    let diff = theta_cur - theta_prev + u_cur - u_prev;
    let e = prox_psi_columns(penalty.kind, &diff, eta)?;
    let sum = (theta_prev + theta_cur + u_prev + u_cur) * 0.5;
    let half_e = e * 0.5;
    Ok((&sum - &half_e, &sum + &half_e))
}

/// Inner ADMM for the perturbed-node (row-column overlap) pair update.
///
/// Solves
///   minimize  beta * min_{V + V^T = Z2 - Z1} sum_j ||V_j||
///             + (rho/2)(||Z1 - R1||^2 + ||Z2 - R2||^2)
/// with R1 = theta_prev + u_prev, R2 = theta_cur + u_cur, via the splitting
/// V + W = Y2 - Y1, V = W^T. The (W, Y1, Y2) block solve uses the fixed
/// 3x3 block inverse of (C^T C + I) with C = [I I -I], applied analytically.
/// Returns (Y1, Y2) and whether the iteration cap was hit.
#[allow(clippy::too_many_arguments)]
pub fn prox_perturbed_node(
    theta_prev: &DMatrix<f64>,
    theta_cur: &DMatrix<f64>,
    u_prev: &DMatrix<f64>,
    u_cur: &DMatrix<f64>,
    beta: f64,
    rho: f64,
    inner_eps: f64,
    inner_max_iter: usize,
    ws: &mut ProxWorkspace,
) -> (DMatrix<f64>, DMatrix<f64>) {
    assert!(rho > 0.0);
    let r1 = theta_prev + u_prev;
    let r2 = theta_cur + u_cur;
    if beta == 0.0 {
        ws.hit_cap = false;
        return (r1, r2);
    }
    let p = r1.nrows();
    let thresh = beta / (2.0 * rho);
    let mut y1 = r1.clone();
    let mut y2 = r2.clone();
    ws.hit_cap = true;
    for _ in 0..inner_max_iter {
        // (a) V-update: column-wise group soft threshold at beta / (2 rho)
        // of the average of the two consensus targets for V.
        let a = (&y2 - &y1 - &ws.w - &ws.u1 + ws.w.transpose() - &ws.u2) * 0.5;
        for j in 0..p {
            let col = a.column(j);
            let norm = col.norm();
            let scale = if norm <= thresh { 0.0 } else { 1.0 - thresh / norm };
            for i in 0..p {
                ws.v[(i, j)] = scale * a[(i, j)];
            }
        }
        // (b) joint (W, Y1, Y2) solve: (C^T C + I) x = b - C^T d
        let b1 = (&ws.v + &ws.u2).transpose();
        let d = &ws.v + &ws.u1;
        let q1 = b1 - &d;
        let q2 = &r1 - &d;
        let q3 = &r2 + &d;
        let w_new = (&q1 * 3.0 - &q2 + &q3) * 0.25;
        let y1_new = (&q2 * 3.0 - &q1 + &q3) * 0.25;
        let y2_new = (&q3 * 3.0 + &q1 + &q2) * 0.25;
        let dual_shift =
            ((&w_new - &ws.w).norm_squared() + (&y1_new - &y1).norm_squared()
                + (&y2_new - &y2).norm_squared())
            .sqrt()
                * rho;
        ws.w = w_new;
        y1 = y1_new;
        y2 = y2_new;
        // (c) dual ascent on both couplings
        let res1 = &ws.v + &ws.w - (&y2 - &y1);
        let res2 = &ws.v - ws.w.transpose();
        ws.u1 += &res1;
        ws.u2 += &res2;
        let primal = (res1.norm_squared() + res2.norm_squared()).sqrt();
        if primal < inner_eps && dual_shift < inner_eps {
            ws.hit_cap = false;
            break;
        }
    }
    (y1, y2)
}

/// prox of eta * psi_pn at a single matrix, where psi_pn is the row-column
/// overlap penalty. Minimizes sum_j ||V_j|| + ||V + V^T - A||^2 / (2 eta)
/// over V by ADMM on the split V = W, returning W + W^T.
pub fn prox_perturbed_node_single(
    a: &DMatrix<f64>,
    eta: f64,
    inner_eps: f64,
    inner_max_iter: usize,
) -> DMatrix<f64> {
    if eta == 0.0 {
        return a.clone();
    }
    let p = a.nrows();
    let a_sym = (a + a.transpose()) * 0.5;
    let rho = 1.0;
    let mut v = &a_sym * 0.5;
    let mut w = v.clone();
    let mut u = DMatrix::<f64>::zeros(p, p);
    // W-block solve: symmetric part (2/eta A_sym + rho B_sym) / (4/eta + rho),
    // skew part passes through.
    let sym_scale = 1.0 / (4.0 / eta + rho);
    for _ in 0..inner_max_iter {
        let target = &w - &u;
        for j in 0..p {
            let norm = target.column(j).norm();
            let scale = if norm <= 1.0 / rho {
                0.0
            } else {
                1.0 - 1.0 / (rho * norm)
            };
            for i in 0..p {
                v[(i, j)] = scale * target[(i, j)];
            }
        }
        let b = &v + &u;
        let b_sym = (&b + b.transpose()) * 0.5;
        let b_skew = (&b - b.transpose()) * 0.5;
        let s = (&a_sym * (2.0 / eta) + b_sym * rho) * sym_scale;
        let w_new = &s + b_skew;
        let shift = (&w_new - &w).norm() * rho;
        w = w_new;
        let res = &v - &w;
        let primal = res.norm();
        u += res;
        if primal < inner_eps && shift < inner_eps {
            break;
        }
    }
    &w + w.transpose()
}
