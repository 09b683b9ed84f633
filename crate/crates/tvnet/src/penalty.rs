//! Temporal evolution penalties and their exact evaluation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TvnetError};

/// The five temporal-evolution penalty families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    /// Element-wise l1: a few edges changing at a time.
    ElementL1,
    /// Group lasso l2 over columns: global restructuring at few timestamps.
    GroupL2,
    /// Squared Frobenius (Laplacian): smooth drift.
    Laplacian,
    /// Column-wise l-infinity: block-wise restructuring.
    LInf,
    /// Row-column overlap: a single node rewiring its edges.
    PerturbedNode,
}

impl PenaltyKind {
    /// Flag-style name as accepted by the CLI.
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::ElementL1 => "l1",
            PenaltyKind::GroupL2 => "l2",
            PenaltyKind::Laplacian => "laplacian",
            PenaltyKind::LInf => "linf",
            PenaltyKind::PerturbedNode => "perturbed-node",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "l1" => Ok(PenaltyKind::ElementL1),
            "l2" => Ok(PenaltyKind::GroupL2),
            "laplacian" => Ok(PenaltyKind::Laplacian),
            "linf" => Ok(PenaltyKind::LInf),
            "perturbed-node" => Ok(PenaltyKind::PerturbedNode),
            other => Err(TvnetError::Input(format!(
                "unknown penalty '{other}' (expected l1 | l2 | laplacian | linf | perturbed-node)"
            ))),
        }
    }
}

/// Which penalty is in force, with its weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// Sparsity weight, lambda >= 0.
    pub lambda: f64,
    /// Temporal weight, beta >= 0.
    pub beta: f64,
    /// Whether gap scaling for irregularly-spaced timestamps is applied.
    pub asynchronous: bool,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64, beta: f64) -> Result<Self> {
        if lambda < 0.0 || beta < 0.0 {
            return Err(TvnetError::Input("lambda and beta must be >= 0".into()));
        }
        Ok(Self {
            kind,
            lambda,
            beta,
            asynchronous: false,
        })
    }

    pub fn asynchronous(mut self, on: bool) -> Self {
        self.asynchronous = on;
        self
    }

    /// Per-pair multiplier on beta induced by the gap h between timestamps.
    ///
    /// The asynchronous objective term is `h psi(X / h)`. For the degree-1
    /// penalties this equals `psi(X)` so the scale is 1; for the Laplacian
    /// (degree 2) it equals `psi(X) / h`.
    pub fn gap_scale(&self, gap: f64) -> Result<f64> {
        if !self.asynchronous {
            return Ok(1.0);
        }
        if gap <= 0.0 {
            return Err(TvnetError::Input(format!("nonpositive gap {gap}")));
        }
        Ok(match self.kind {
            PenaltyKind::Laplacian => 1.0 / gap,
            _ => 1.0,
        })
    }
}

/// Per-pair effective penalty scales for a run, one per gap.
pub fn async_weights(gaps: &[f64], penalty: &PenaltySpec) -> Result<Vec<f64>> {
    gaps.iter().map(|&h| penalty.gap_scale(h)).collect()
}

/// Off-diagonal l1 seminorm, sum over i != j of |X_ij|.
pub fn offdiag_l1(x: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if i != j {
                total += x[(i, j)].abs();
            }
        }
    }
    total
}

/// Exact value of psi(X) for the given penalty kind (unit weight).
///
/// The perturbed-node value requires an inner minimization over the
/// row-column split of X; see [`perturbed_node_value`].
pub fn psi_value(kind: PenaltyKind, x: &DMatrix<f64>) -> f64 {
    match kind {
        PenaltyKind::ElementL1 => x.iter().map(|v| v.abs()).sum(),
        PenaltyKind::GroupL2 => (0..x.ncols()).map(|j| x.column(j).norm()).sum(),
        PenaltyKind::Laplacian => x.iter().map(|v| v * v).sum(),
        PenaltyKind::LInf => (0..x.ncols())
            .map(|j| x.column(j).amax())
            .sum(),
        PenaltyKind::PerturbedNode => perturbed_node_value(x),
    }
}

/// psi(X) = min over V with V + V^T = X of sum_j ||[V]_j||_2.
///
/// Every feasible V is X/2 plus an antisymmetric matrix, so this is an
/// unconstrained convex problem over the antisymmetric part. Solved by
/// alternating a group soft-threshold with re-projection onto the affine
/// feasible set (ADMM on the split V = W, W feasible).
pub fn perturbed_node_value(x: &DMatrix<f64>) -> f64 {
    let p = x.nrows();
    let half = x * 0.5;
    let mut v = half.clone();
    let mut w = half.clone();
    let mut u = DMatrix::<f64>::zeros(p, p);
    let rho = 1.0;
    for _ in 0..5000 {
        // V-update: column-wise group soft threshold of (W - U) at 1/rho.
        let target = &w - &u;
        for j in 0..p {
            let col = target.column(j);
            let norm = col.norm();
            let scale = if norm <= 1.0 / rho {
                0.0
            } else {
                1.0 - 1.0 / (rho * norm)
            };
            for i in 0..p {
                v[(i, j)] = scale * target[(i, j)];
            }
        }
        // W-update: project V + U onto {W : W + W^T = X}.
        let t = &v + &u;
        let skew = (&t - t.transpose()) * 0.5;
        let w_new = &half + skew;
        let shift = (&w_new - &w).norm();
        w = w_new;
        u += &v - &w;
        let primal = (&v - &w).norm();
        if primal < 1e-10 && rho * shift < 1e-10 {
            break;
        }
    }
    (0..p).map(|j| w.column(j).norm()).sum()
}
