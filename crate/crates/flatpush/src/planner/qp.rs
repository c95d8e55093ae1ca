//! Dense convex quadratic programming.
//!
//! Solves `min 0.5 x'Hx + g'x` subject to `A_eq x = b_eq` and
//! `A_in x >= b_in` for strictly convex `H` (a small ridge is added when
//! the Cholesky factorization needs it). Equalities are eliminated once
//! through a null-space basis; the reduced inequality-only problem runs a
//! dual active-set iteration that starts at the unconstrained minimum and
//! adds violated constraints, so no feasible starting point is needed.
//! Sized for the dimensions this crate produces (a few hundred variables),
//! favoring plain re-solves over incremental factor updates.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("quadratic term is not positive definite even after regularization")]
    NotPositiveDefinite,
    #[error("equality constraints are rank deficient or inconsistent")]
    BadEqualities,
    #[error("constraints admit no feasible point")]
    Infeasible,
    #[error("active-set iteration limit reached")]
    IterationLimit,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Primal solution with the multipliers the outer solver needs.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of `A_eq x = b_eq` (sign free).
    pub eq_duals: DVector<f64>,
    /// Multipliers of `A_in x >= b_in` (non-negative, zero when inactive).
    pub ineq_duals: DVector<f64>,
}

/// Householder QR with the full square Q, for null-space extraction.
struct FullQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn full_qr(a: &DMatrix<f64>) -> FullQr {
    let (n, m) = (a.nrows(), a.ncols());
    let mut r = a.clone();
    let mut q = DMatrix::identity(n, n);
    for k in 0..m.min(n.saturating_sub(1)) {
        let mut v = DVector::zeros(n - k);
        for i in k..n {
            v[i - k] = r[(i, k)];
        }
        let alpha = -v[0].signum() * v.norm();
        if alpha == 0.0 {
            continue;
        }
        v[0] -= alpha;
        let vn = v.norm();
        if vn < f64::MIN_POSITIVE.sqrt() {
            continue;
        }
        v /= vn;
        // r <- (I - 2vv') r, q <- q (I - 2vv') on the trailing block.
        for col in 0..m {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * r[(i, col)];
            }
            for i in k..n {
                r[(i, col)] -= 2.0 * v[i - k] * dot;
            }
        }
        for row in 0..n {
            let mut dot = 0.0;
            for i in k..n {
                dot += q[(row, i)] * v[i - k];
            }
            for i in k..n {
                q[(row, i)] -= 2.0 * dot * v[i - k];
            }
        }
    }
    FullQr { q, r }
}

/// Cholesky with escalating ridge; returns the factor and the ridge used.
fn robust_cholesky(
    h: &DMatrix<f64>,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, QpError> {
    let n = h.nrows();
    let scale = (h.diagonal().amax()).max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut trial = h.clone();
        if ridge > 0.0 {
            for i in 0..n {
                trial[(i, i)] += ridge;
            }
        }
        if let Some(chol) = nalgebra::Cholesky::new(trial) {
            return Ok(chol);
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
    }
    Err(QpError::NotPositiveDefinite)
}

pub fn solve_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    a_in: &DMatrix<f64>,
    b_in: &DVector<f64>,
) -> Result<QpSolution, QpError> {
    let n = h.nrows();
    if h.ncols() != n || g.len() != n {
        return Err(QpError::Shape("quadratic term and gradient disagree".into()));
    }
    let m_eq = a_eq.nrows();
    let m_in = a_in.nrows();
    if (m_eq > 0 && a_eq.ncols() != n) || b_eq.len() != m_eq {
        return Err(QpError::Shape("equality block".into()));
    }
    if (m_in > 0 && a_in.ncols() != n) || b_in.len() != m_in {
        return Err(QpError::Shape("inequality block".into()));
    }
    if m_eq > n {
        return Err(QpError::BadEqualities);
    }

    // Null-space split: x = x0 + Z y with A_eq x0 = b_eq and A_eq Z = 0.
    let (x0, z) = if m_eq == 0 {
        (DVector::zeros(n), DMatrix::identity(n, n))
    } else {
        let qr = full_qr(&a_eq.transpose());
        let r1 = qr.r.rows(0, m_eq).into_owned();
        let scale = r1.amax().max(1e-300);
        if (0..m_eq).any(|i| r1[(i, i)].abs() < 1e-12 * scale) {
            return Err(QpError::BadEqualities);
        }
        // Minimum-norm particular solution x0 = Q1 R^-T b.
        let mut w = b_eq.clone();
        for i in 0..m_eq {
            let mut acc = w[i];
            for j in 0..i {
                acc -= r1[(j, i)] * w[j];
            }
            w[i] = acc / r1[(i, i)];
        }
        let q1 = qr.q.columns(0, m_eq).into_owned();
        let x0 = &q1 * &w;
        let z = qr.q.columns(m_eq, n - m_eq).into_owned();
        (x0, z)
    };
    let nr = z.ncols();
    if nr == 0 {
        // Fully determined by the equalities.
        let x = x0;
        for i in 0..m_in {
            let s = a_in.row(i).transpose().dot(&x) - b_in[i];
            if s < -1e-8 {
                return Err(QpError::Infeasible);
            }
        }
        let grad = h * &x + g;
        let eq_duals = recover_eq_duals(a_eq, &grad)?;
        return Ok(QpSolution { x, eq_duals, ineq_duals: DVector::zeros(m_in) });
    }

    let hr = z.transpose() * h * &z;
    let gr = z.transpose() * (g + h * &x0);
    let ar = if m_in > 0 { a_in * &z } else { DMatrix::zeros(0, nr) };
    let br = if m_in > 0 { b_in - a_in * &x0 } else { DVector::zeros(0) };

    let chol = robust_cholesky(&hr)?;
    let mut y = -chol.solve(&gr);
    let mut active: Vec<usize> = Vec::new();
    let mut duals: Vec<f64> = Vec::new();

    let row = |i: usize| ar.row(i).transpose();
    let feas_tol = 1e-9;
    let max_outer = 4 * (m_in + nr) + 16;
    for _ in 0..max_outer {
        // Most violated inequality.
        let mut worst = (0usize, -feas_tol);
        for i in 0..m_in {
            let s = row(i).dot(&y) - br[i];
            let norm = 1.0 + br[i].abs();
            if s / norm < worst.1 {
                worst = (i, s / norm);
            }
        }
        if worst.1 >= -feas_tol {
            let x = &x0 + &z * &y;
            let mut ineq_duals = DVector::zeros(m_in);
            for (idx, &c) in active.iter().enumerate() {
                ineq_duals[c] = duals[idx].max(0.0);
            }
            let grad = h * &x + g - a_in.transpose() * &ineq_duals;
            let eq_duals = if m_eq > 0 {
                recover_eq_duals(a_eq, &grad)?
            } else {
                DVector::zeros(0)
            };
            return Ok(QpSolution { x, eq_duals, ineq_duals });
        }
        let p = worst.0;
        let n_plus = row(p);
        let mut u_plus = 0.0;
        let mut s_p = n_plus.dot(&y) - br[p];

        // Inner loop: dual steps drop blocking constraints until the new
        // constraint can be taken to its boundary.
        let max_inner = 2 * (nr + active.len()) + 8;
        let mut done = false;
        for _ in 0..max_inner {
            let q = active.len();
            // Projected step direction and dual sensitivity.
            let (step, r_sense) = if q == 0 {
                (chol.solve(&n_plus), DVector::zeros(0))
            } else {
                let mut nmat = DMatrix::zeros(nr, q);
                for (k, &c) in active.iter().enumerate() {
                    nmat.set_column(k, &row(c));
                }
                let hin = chol.solve(&nmat);
                let m = nmat.transpose() * &hin;
                let rhs = hin.transpose() * &n_plus;
                let r = m
                    .lu()
                    .solve(&rhs)
                    .ok_or(QpError::IterationLimit)?;
                let step = chol.solve(&(&n_plus - &nmat * &r));
                (step, r)
            };

            let denom = step.dot(&n_plus);
            let full_step = if denom > 1e-13 { -s_p / denom } else { f64::INFINITY };
            let mut block = (f64::INFINITY, usize::MAX);
            for k in 0..active.len() {
                if r_sense[k] > 1e-13 {
                    let t = duals[k] / r_sense[k];
                    if t < block.0 {
                        block = (t, k);
                    }
                }
            }
            let t = full_step.min(block.0);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }
            if full_step.is_finite() {
                y += &step * t;
                s_p = n_plus.dot(&y) - br[p];
            }
            for k in 0..duals.len() {
                duals[k] -= t * r_sense[k];
            }
            u_plus += t;
            if t == full_step && full_step <= block.0 {
                active.push(p);
                duals.push(u_plus);
                done = true;
                break;
            }
            // Blocked: remove the exhausted constraint and retry.
            let k = block.1;
            active.remove(k);
            duals.remove(k);
        }
        if !done {
            return Err(QpError::IterationLimit);
        }
    }
    Err(QpError::IterationLimit)
}

/// Least-squares recovery of equality multipliers from the stationarity
/// residual `grad = A_eq' nu`.
fn recover_eq_duals(a_eq: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>, QpError> {
    if a_eq.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let at = a_eq.transpose();
    let normal = a_eq * &at;
    normal
        .lu()
        .solve(&(a_eq * grad))
        .ok_or(QpError::BadEqualities)
}
