//! Network estimates at times between observed timestamps.
//!
//! A dummy timestamp at `s` is coupled to its two bracketing estimates by
//! the evolution penalty, weighted by the inverse distance to each side:
//!
//!   minimize  w(s - t_left) psi(Theta_s - Theta_left)
//!           + w(t_right - s) psi(Theta_right - Theta_s)
//!
//! with w(d) = 1/d. The Laplacian and l1 penalties have closed forms; the
//! remaining penalties are solved by Douglas-Rachford iteration on the two
//! prox maps.

use nalgebra::DMatrix;

use crate::error::{Result, TvnetError};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::prox::{prox_perturbed_node_single, prox_psi_columns};

const DR_MAX_ITER: usize = 2000;
const DR_TOL: f64 = 1e-9;

/// Estimate the network at time `s`, strictly between `t_left` and
/// `t_right`, from the bracketing estimates.
pub fn infer_intermediate(
    theta_left: &DMatrix<f64>,
    theta_right: &DMatrix<f64>,
    t_left: f64,
    t_right: f64,
    s: f64,
    penalty: &PenaltySpec,
) -> Result<DMatrix<f64>> {
    if !(t_left < s && s < t_right) {
        return Err(TvnetError::Input(format!(
            "interpolation time {s} is outside ({t_left}, {t_right})"
        )));
    }
    if theta_left.shape() != theta_right.shape() {
        return Err(TvnetError::Input("matrix shape mismatch".into()));
    }
    let w_left = 1.0 / (s - t_left);
    let w_right = 1.0 / (t_right - s);

    match penalty.kind {
        PenaltyKind::Laplacian => {
            // weighted quadratic: minimizer is the weighted average
            Ok((theta_left * w_left + theta_right * w_right) / (w_left + w_right))
        }
        PenaltyKind::ElementL1 => {
            // element-wise: total cost w_left |x - a| + w_right |b - x| is
            // minimized at the endpoint with the larger weight; midpoint on
            // ties (any point in [a, b] is then optimal)
            let mut out = theta_left.clone();
            for j in 0..out.ncols() {
                for i in 0..out.nrows() {
                    out[(i, j)] = if w_left > w_right {
                        theta_left[(i, j)]
                    } else if w_right > w_left {
                        theta_right[(i, j)]
                    } else {
                        0.5 * (theta_left[(i, j)] + theta_right[(i, j)])
                    };
                }
            }
            Ok(out)
        }
        kind => douglas_rachford(theta_left, theta_right, w_left, w_right, kind),
    }
}

/// Minimize w_l psi(X - A) + w_r psi(B - X) via Douglas-Rachford splitting,
/// using the shifted psi proxes of each term.
fn douglas_rachford(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    w_left: f64,
    w_right: f64,
    kind: PenaltyKind,
) -> Result<DMatrix<f64>> {
    let step = 1.0;
    let prox_f = |y: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        Ok(a + prox_shifted(kind, &(y - a), step * w_left))
    };
    let prox_g = |y: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        Ok(b - prox_shifted(kind, &(b - y), step * w_right))
    };
    let mut y = (a + b) * 0.5;
    let mut x = y.clone();
    for _ in 0..DR_MAX_ITER {
        x = prox_f(&y)?;
        let reflected = &x * 2.0 - &y;
        let z = prox_g(&reflected)?;
        let update = &z - &x;
        y += &update;
        if update.norm() < DR_TOL {
            break;
        }
    }
    Ok(x)
}

fn prox_shifted(kind: PenaltyKind, m: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    match kind {
        PenaltyKind::PerturbedNode => prox_perturbed_node_single(m, eta, 1e-10, 2000),
        _ => prox_psi_columns(kind, m, eta).expect("column-separable kind"),
    }
}
