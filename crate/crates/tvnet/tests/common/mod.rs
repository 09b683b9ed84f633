//! Independent reference implementations used to cross-check the solver and
//! the proximal operators. Everything here minimizes a smoothed version of
//! the relevant convex objective by gradient descent with Barzilai-Borwein
//! steps and a feasibility-aware backtracking line search, sharing no code
//! with the library's ADMM machinery.

#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvnet::data::EmpiricalCovSequence;
use tvnet::penalty::{PenaltyKind, PenaltySpec};

/// Smoothed |x|: sqrt(x^2 + mu^2) - mu.
fn sabs(x: f64, mu: f64) -> f64 {
    (x * x + mu * mu).sqrt() - mu
}

fn sabs_grad(x: f64, mu: f64) -> f64 {
    x / (x * x + mu * mu).sqrt()
}

/// Smoothed ||x||_2.
fn snorm(x: &DVector<f64>, mu: f64) -> f64 {
    (x.norm_squared() + mu * mu).sqrt() - mu
}

fn snorm_grad(x: &DVector<f64>, mu: f64) -> DVector<f64> {
    x / (x.norm_squared() + mu * mu).sqrt()
}

/// Smoothed column max |.|: mu * logsumexp over both signs.
fn smax(x: &DVector<f64>, mu: f64) -> f64 {
    let m = x.amax();
    let z: f64 = x
        .iter()
        .map(|&v| ((v - m) / mu).exp() + ((-v - m) / mu).exp())
        .sum();
    m + mu * z.ln()
}

fn smax_grad(x: &DVector<f64>, mu: f64) -> DVector<f64> {
    let m = x.amax();
    let mut z = 0.0;
    let mut g = DVector::zeros(x.len());
    for (i, &v) in x.iter().enumerate() {
        let ep = ((v - m) / mu).exp();
        let en = ((-v - m) / mu).exp();
        z += ep + en;
        g[i] = ep - en;
    }
    g / z
}

fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn stack_norm_sq(vars: &[DMatrix<f64>]) -> f64 {
    vars.iter().map(|m| m.norm_squared()).sum()
}

fn stack_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Barzilai-Borwein gradient descent with backtracking; `feasible` gates
/// trial points (used for positive-definiteness).
fn minimize_bb<F, G, P>(
    mut x: Vec<DMatrix<f64>>,
    value: F,
    grad: G,
    feasible: P,
    max_iter: usize,
    tol: f64,
) -> Vec<DMatrix<f64>>
where
    F: Fn(&[DMatrix<f64>]) -> f64,
    G: Fn(&[DMatrix<f64>]) -> Vec<DMatrix<f64>>,
    P: Fn(&[DMatrix<f64>]) -> bool,
{
    assert!(feasible(&x), "infeasible start");
    let mut fx = value(&x);
    let mut g = grad(&x);
    let mut step: f64 = 1e-2;
    for _ in 0..max_iter {
        let gnorm_sq = stack_norm_sq(&g);
        if gnorm_sq.sqrt() < tol {
            break;
        }
        let mut t = step.clamp(1e-12, 1e6);
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<DMatrix<f64>> =
                x.iter().zip(&g).map(|(xi, gi)| xi - gi * t).collect();
            if feasible(&trial) {
                let ft = value(&trial);
                if ft <= fx - 1e-4 * t * gnorm_sq {
                    let g_new = grad(&trial);
                    // BB1 step from the accepted move
                    let s: Vec<DMatrix<f64>> =
                        trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let y: Vec<DMatrix<f64>> =
                        g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let sy = stack_dot(&s, &y);
                    step = if sy > 1e-18 {
                        (stack_norm_sq(&s) / sy).clamp(1e-12, 1e6)
                    } else {
                        t * 2.0
                    };
                    x = trial;
                    fx = ft;
                    g = g_new;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Smoothed value of the evolution penalty psi at X (columns of X penalized
/// per `kind`). Perturbed node introduces a skew variable internally.
fn psi_smooth(kind: PenaltyKind, x: &DMatrix<f64>, mu: f64) -> f64 {
    match kind {
        PenaltyKind::ElementL1 => x.iter().map(|&v| sabs(v, mu)).sum(),
        PenaltyKind::GroupL2 => (0..x.ncols())
            .map(|j| snorm(&x.column(j).into_owned(), mu))
            .sum(),
        PenaltyKind::Laplacian => x.norm_squared(),
        PenaltyKind::LInf => (0..x.ncols())
            .map(|j| smax(&x.column(j).into_owned(), mu))
            .sum(),
        PenaltyKind::PerturbedNode => unreachable!("handled via explicit skew variable"),
    }
}

fn psi_smooth_grad(kind: PenaltyKind, x: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    let p = x.nrows();
    let mut g = DMatrix::zeros(p, x.ncols());
    match kind {
        PenaltyKind::ElementL1 => {
            for j in 0..x.ncols() {
                for i in 0..p {
                    g[(i, j)] = sabs_grad(x[(i, j)], mu);
                }
            }
        }
        PenaltyKind::GroupL2 => {
            for j in 0..x.ncols() {
                g.set_column(j, &snorm_grad(&x.column(j).into_owned(), mu));
            }
        }
        PenaltyKind::Laplacian => g = x * 2.0,
        PenaltyKind::LInf => {
            for j in 0..x.ncols() {
                g.set_column(j, &smax_grad(&x.column(j).into_owned(), mu));
            }
        }
        PenaltyKind::PerturbedNode => unreachable!(),
    }
    g
}

/// Column-group value of V for the perturbed-node split (sum of smoothed
/// column norms).
fn group_smooth(v: &DMatrix<f64>) -> f64 {
    (0..v.ncols())
        .map(|j| v.column(j).norm())
        .sum()
}

/// Exact row-column overlap value of X: minimize sum_j ||(X/2 + K)_j|| over
/// skew K with the smoothed minimizer.
pub fn oracle_psi_pn_value(x: &DMatrix<f64>) -> f64 {
    let p = x.nrows();
    let half = sym_part(x) * 0.5;
    let mut k = vec![DMatrix::zeros(p, p)];
    for &mu in &[1e-2, 1e-4, 1e-6, 1e-8] {
        k = minimize_bb(
            k,
            |vars| {
                let v = &half + &vars[0];
                (0..p).map(|j| snorm(&v.column(j).into_owned(), mu)).sum()
            },
            |vars| {
                let v = &half + &vars[0];
                let mut g = DMatrix::zeros(p, p);
                for j in 0..p {
                    g.set_column(j, &snorm_grad(&v.column(j).into_owned(), mu));
                }
                vec![skew_part(&g)]
            },
            |_| true,
            2000,
            1e-10,
        );
    }
    let v = half + &k[0];
    (0..p).map(|j| v.column(j).norm()).sum()
}

fn is_pd(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite()) && Cholesky::new(sym_part(m)).is_some()
}

fn log_det(m: &DMatrix<f64>) -> f64 {
    let chol = Cholesky::new(sym_part(m)).expect("PD");
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Exact objective value evaluated by the oracle's own code path (exact
/// penalties; perturbed node via the skew minimizer).
pub fn oracle_objective(
    covs: &EmpiricalCovSequence,
    penalty: &PenaltySpec,
    thetas: &[DMatrix<f64>],
) -> f64 {
    let mut total = 0.0;
    for (i, theta) in thetas.iter().enumerate() {
        let n = covs.counts[i] as f64;
        total += n * (-log_det(theta) + (covs.covs[i].transpose() * theta).trace());
        let mut od = 0.0;
        for c in 0..theta.ncols() {
            for r in 0..theta.nrows() {
                if r != c {
                    od += theta[(r, c)].abs();
                }
            }
        }
        total += penalty.lambda * od;
    }
    for i in 1..thetas.len() {
        let h = covs.gaps[i - 1];
        let scale = penalty.gap_scale(h).unwrap();
        let diff = &thetas[i] - &thetas[i - 1];
        let val = match penalty.kind {
            PenaltyKind::ElementL1 => diff.iter().map(|v| v.abs()).sum(),
            PenaltyKind::GroupL2 => (0..diff.ncols()).map(|j| diff.column(j).norm()).sum(),
            PenaltyKind::Laplacian => diff.norm_squared(),
            PenaltyKind::LInf => (0..diff.ncols())
                .map(|j| diff.column(j).amax())
                .sum(),
            PenaltyKind::PerturbedNode => oracle_psi_pn_value(&diff),
        };
        total += penalty.beta * scale * val;
    }
    total
}

/// Minimize the full time-varying objective by smoothed gradient descent
/// with mu-continuation; returns the estimated precision sequence.
pub fn oracle_solve(covs: &EmpiricalCovSequence, penalty: &PenaltySpec) -> Vec<DMatrix<f64>> {
    let p = covs.dim();
    let t = covs.len();
    let pn = penalty.kind == PenaltyKind::PerturbedNode;
    // vars: t thetas, then t-1 skew matrices when perturbed node
    let mut vars: Vec<DMatrix<f64>> = (0..t).map(|_| DMatrix::identity(p, p)).collect();
    if pn {
        vars.extend((1..t).map(|_| DMatrix::zeros(p, p)));
    }
    let betas: Vec<f64> = covs
        .gaps
        .iter()
        .map(|&h| penalty.beta * penalty.gap_scale(h).unwrap())
        .collect();

    for &mu in &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let value = |v: &[DMatrix<f64>]| -> f64 {
            let mut total = 0.0;
            for i in 0..t {
                let n = covs.counts[i] as f64;
                total += n * (-log_det(&v[i]) + (covs.covs[i].transpose() * &v[i]).trace());
                for c in 0..p {
                    for r in 0..p {
                        if r != c {
                            total += penalty.lambda * sabs(v[i][(r, c)], mu);
                        }
                    }
                }
            }
            for i in 1..t {
                let diff = &v[i] - &v[i - 1];
                total += betas[i - 1]
                    * if pn {
                        let vv = sym_part(&diff) * 0.5 + &v[t + i - 1];
                        (0..p).map(|j| snorm(&vv.column(j).into_owned(), mu)).sum::<f64>()
                    } else {
                        psi_smooth(penalty.kind, &diff, mu)
                    };
            }
            total
        };
        let grad = |v: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
            let mut g: Vec<DMatrix<f64>> =
                (0..v.len()).map(|_| DMatrix::zeros(p, p)).collect();
            for i in 0..t {
                let n = covs.counts[i] as f64;
                let inv = Cholesky::new(sym_part(&v[i])).expect("PD").inverse();
                g[i] += (sym_part(&covs.covs[i]) - inv) * n;
                for c in 0..p {
                    for r in 0..p {
                        if r != c {
                            g[i][(r, c)] += penalty.lambda * sabs_grad(v[i][(r, c)], mu);
                        }
                    }
                }
            }
            for i in 1..t {
                let diff = &v[i] - &v[i - 1];
                if pn {
                    let vv = sym_part(&diff) * 0.5 + &v[t + i - 1];
                    let mut gv = DMatrix::zeros(p, p);
                    for j in 0..p {
                        gv.set_column(j, &snorm_grad(&vv.column(j).into_owned(), mu));
                    }
                    let gd = sym_part(&gv) * (0.5 * betas[i - 1]);
                    g[i] += &gd;
                    g[i - 1] -= &gd;
                    g[t + i - 1] += skew_part(&gv) * betas[i - 1];
                } else {
                    let gd = sym_part(&psi_smooth_grad(penalty.kind, &diff, mu))
                        * betas[i - 1];
                    g[i] += &gd;
                    g[i - 1] -= &gd;
                }
            }
            // keep theta iterates symmetric
            for gi in g.iter_mut().take(t) {
                *gi = sym_part(gi);
            }
            g
        };
        let feasible = |v: &[DMatrix<f64>]| v.iter().take(t).all(is_pd);
        vars = minimize_bb(vars, value, grad, feasible, 2500, 1e-8);
    }
    vars.truncate(t);
    vars
}

/// Numeric prox oracle for the column penalties: minimize
/// eta * g(x) + ||x - a||^2 / 2 by smoothed descent.
pub fn oracle_prox_col(kind: PenaltyKind, a: &DVector<f64>, eta: f64) -> DVector<f64> {
    let n = a.len();
    let a_m = DMatrix::from_column_slice(n, 1, a.as_slice());
    let mut x = vec![a_m.clone()];
    for &mu in &[1e-2, 1e-4, 1e-6, 1e-8] {
        x = minimize_bb(
            x,
            |v| {
                let col = v[0].column(0).into_owned();
                eta * match kind {
                    PenaltyKind::ElementL1 => col.iter().map(|&t| sabs(t, mu)).sum(),
                    PenaltyKind::GroupL2 => snorm(&col, mu),
                    PenaltyKind::Laplacian => col.norm_squared(),
                    PenaltyKind::LInf => smax(&col, mu),
                    PenaltyKind::PerturbedNode => unreachable!(),
                } + 0.5 * (&v[0] - &a_m).norm_squared()
            },
            |v| {
                let col = v[0].column(0).into_owned();
                let gp: DVector<f64> = match kind {
                    PenaltyKind::ElementL1 => col.map(|t| sabs_grad(t, mu)),
                    PenaltyKind::GroupL2 => snorm_grad(&col, mu),
                    PenaltyKind::Laplacian => &col * 2.0,
                    PenaltyKind::LInf => smax_grad(&col, mu),
                    PenaltyKind::PerturbedNode => unreachable!(),
                };
                vec![DMatrix::from_column_slice(n, 1, gp.as_slice()) * eta + (&v[0] - &a_m)]
            },
            |_| true,
            3000,
            1e-11,
        );
    }
    x[0].column(0).into_owned()
}

/// Column-wise group soft threshold (the prox of thresh * sum_j ||x_j||).
fn group_shrink(v: &DMatrix<f64>, thresh: f64) -> DMatrix<f64> {
    let mut out = v.clone();
    for j in 0..v.ncols() {
        let norm = v.column(j).norm();
        let scale = if norm <= thresh { 0.0 } else { 1.0 - thresh / norm };
        for i in 0..v.nrows() {
            out[(i, j)] = scale * v[(i, j)];
        }
    }
    out
}

/// Numeric prox oracle for eta * psi_pn at A: accelerated proximal gradient
/// over free V on eta * sum_j ||V_j|| + ||V + V^T - A_sym||^2 / 2; returns
/// V + V^T. Independent of the library's inner ADMM splitting.
pub fn oracle_prox_pn_single(a: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let a_sym = sym_part(a);
    let step = 0.25; // 1 / Lipschitz(grad), Lipschitz = 4
    let mut v = &a_sym * 0.5;
    let mut y = v.clone();
    let mut tk = 1.0f64;
    for _ in 0..200_000 {
        let r = &y + y.transpose() - &a_sym;
        let grad = r * 2.0;
        let v_new = group_shrink(&(&y - grad * step), eta * step);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let momentum = (tk - 1.0) / t_new;
        let y_new = &v_new + (&v_new - &v) * momentum;
        let shift = (&v_new - &v).norm();
        v = v_new;
        y = y_new;
        tk = t_new;
        if shift < 1e-12 {
            break;
        }
    }
    &v + v.transpose()
}

/// Numeric prox oracle for the pair update: accelerated proximal gradient
/// over (Z1, V) on
/// beta * sum_j ||V_j|| + rho/2 (||Z1 - R1||^2 + ||Z1 + V + V^T - R2||^2).
pub fn oracle_prox_pn_pair(
    r1: &DMatrix<f64>,
    r2: &DMatrix<f64>,
    beta: f64,
    rho: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = r1.nrows();
    let step = 1.0 / (10.0 * rho);
    let mut z = r1.clone();
    let mut v = DMatrix::zeros(p, p);
    let (mut yz, mut yv) = (z.clone(), v.clone());
    let mut tk = 1.0f64;
    for _ in 0..200_000 {
        let e = (&yz + &yv + yv.transpose() - r2) * rho;
        let gz = (&yz - r1) * rho + &e;
        let gv = &e + e.transpose();
        let z_new = &yz - gz * step;
        let v_new = group_shrink(&(&yv - gv * step), beta * step);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let momentum = (tk - 1.0) / t_new;
        yz = &z_new + (&z_new - &z) * momentum;
        yv = &v_new + (&v_new - &v) * momentum;
        let shift = ((&z_new - &z).norm_squared() + (&v_new - &v).norm_squared()).sqrt();
        z = z_new;
        v = v_new;
        tk = t_new;
        if shift < 1e-12 {
            break;
        }
    }
    let z2 = &z + &v + v.transpose();
    (z, z2)
}

/// Numeric oracle for the log-det prox: minimize
/// eta (-log det X + tr(S X)) + ||X - A_sym||^2 / 2 over PD X.
pub fn oracle_prox_logdet(a: &DMatrix<f64>, s: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let p = a.nrows();
    let a_sym = sym_part(a);
    let s_sym = sym_part(s);
    let x = minimize_bb(
        vec![DMatrix::identity(p, p)],
        |v| eta * (-log_det(&v[0]) + (&s_sym * &v[0]).trace()) + 0.5 * (&v[0] - &a_sym).norm_squared(),
        |v| {
            let inv = Cholesky::new(sym_part(&v[0])).expect("PD").inverse();
            vec![(&s_sym - inv) * eta + (&v[0] - &a_sym)]
        },
        |v| is_pd(&v[0]),
        8000,
        1e-12,
    );
    x.into_iter().next().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric PSD matrix with unit-scale diagonal loading.
pub fn random_psd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() / p as f64 + DMatrix::identity(p, p) * 0.1
}

pub fn random_cov_sequence(
    p: usize,
    t: usize,
    rng: &mut ChaCha8Rng,
) -> EmpiricalCovSequence {
    EmpiricalCovSequence {
        covs: (0..t).map(|_| random_psd(p, rng)).collect(),
        counts: (0..t).map(|_| rng.gen_range(3..20)).collect(),
        gaps: (0..t.saturating_sub(1)).map(|_| 1.0).collect(),
    }
}
