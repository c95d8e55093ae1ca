//! Sequential quadratic programming for small dense nonlinear programs.
//!
//! Minimizes `f(x)` subject to `c_eq(x) = 0` and `c_in(x) >= 0`. Each
//! iteration solves a convex QP built from a damped BFGS model of the
//! Lagrangian, globalized by an l1 merit function with backtracking. When
//! the linearized constraints are inconsistent the step falls back to an
//! elastic subproblem that trades constraint violation against a large
//! penalty, which keeps progress alive far from the feasible set.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::qp::{solve_qp, QpError};

#[derive(Debug, Error)]
pub enum SqpError {
    #[error("problem reports zero decision variables")]
    EmptyProblem,
    #[error("objective or constraints returned a non-finite value at the initial point")]
    BadInitialPoint,
    #[error("quadratic subproblem failed: {0}")]
    Subproblem(#[from] QpError),
}

/// Smooth nonlinear program in standard form.
///
/// Jacobian and gradient defaults use forward differences; problems with
/// cheap analytic derivatives should override them.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    fn n_eq(&self) -> usize {
        0
    }
    fn n_ineq(&self) -> usize {
        0
    }
    fn objective(&self, x: &DVector<f64>) -> f64;
    fn eq_constraints(&self, _x: &DVector<f64>, _out: &mut DVector<f64>) {}
    fn ineq_constraints(&self, _x: &DVector<f64>, _out: &mut DVector<f64>) {}
    fn initial(&self) -> DVector<f64>;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut g = DVector::zeros(n);
        let f0 = self.objective(x);
        let mut xp = x.clone();
        for i in 0..n {
            let h = fd_step(x[i]);
            xp[i] = x[i] + h;
            g[i] = (self.objective(&xp) - f0) / h;
            xp[i] = x[i];
        }
        g
    }

    fn eq_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(self.n_eq(), x, |x, out| self.eq_constraints(x, out))
    }

    fn ineq_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(self.n_ineq(), x, |x, out| self.ineq_constraints(x, out))
    }
}

fn fd_step(xi: f64) -> f64 {
    1e-7 * (1.0 + xi.abs())
}

fn fd_jacobian<F>(m: usize, x: &DVector<f64>, eval: F) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    if m == 0 {
        return jac;
    }
    let mut base = DVector::zeros(m);
    eval(x, &mut base);
    let mut shifted = DVector::zeros(m);
    let mut xp = x.clone();
    for j in 0..n {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        eval(&xp, &mut shifted);
        for i in 0..m {
            jac[(i, j)] = (shifted[i] - base[i]) / h;
        }
        xp[j] = x[j];
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqpStatus {
    /// KKT residual and constraint violation below tolerance.
    Converged,
    /// Iteration budget exhausted; iterate may still be useful.
    IterationLimit,
    /// Merit line search stalled before reaching tolerance.
    LineSearchFailure,
    /// Even the elastic subproblem failed; linearization is hopeless.
    InfeasibleSubproblem,
}

#[derive(Debug, Clone, Copy)]
pub struct SqpOptions {
    pub max_iter: usize,
    /// Stationarity tolerance on the Lagrangian gradient (infinity norm).
    pub kkt_tol: f64,
    /// Feasibility tolerance on constraint violation (infinity norm).
    pub feas_tol: f64,
    /// Step-size floor below which the iteration is declared stalled.
    pub step_tol: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self { max_iter: 200, kkt_tol: 1e-6, feas_tol: 1e-6, step_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct SqpReport {
    pub status: SqpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Infinity norm of the Lagrangian gradient at the final iterate.
    pub kkt_residual: f64,
    /// Infinity norm of constraint violation at the final iterate.
    pub constraint_violation: f64,
    pub eq_duals: DVector<f64>,
    pub ineq_duals: DVector<f64>,
}

struct Evaluation {
    f: f64,
    grad: DVector<f64>,
    c_eq: DVector<f64>,
    c_in: DVector<f64>,
    j_eq: DMatrix<f64>,
    j_in: DMatrix<f64>,
}

fn evaluate<P: NlpProblem + ?Sized>(p: &P, x: &DVector<f64>) -> Evaluation {
    let mut c_eq = DVector::zeros(p.n_eq());
    let mut c_in = DVector::zeros(p.n_ineq());
    p.eq_constraints(x, &mut c_eq);
    p.ineq_constraints(x, &mut c_in);
    Evaluation {
        f: p.objective(x),
        grad: p.gradient(x),
        c_eq,
        c_in,
        j_eq: p.eq_jacobian(x),
        j_in: p.ineq_jacobian(x),
    }
}

fn violation(c_eq: &DVector<f64>, c_in: &DVector<f64>) -> f64 {
    let ve = c_eq.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let vi = c_in.iter().fold(0.0f64, |m, &v| m.max((-v).max(0.0)));
    ve.max(vi)
}

fn l1_infeasibility(c_eq: &DVector<f64>, c_in: &DVector<f64>) -> f64 {
    c_eq.iter().map(|v| v.abs()).sum::<f64>()
        + c_in.iter().map(|v| (-v).max(0.0)).sum::<f64>()
}

/// Restoration step used when the hard subproblem has no feasible point.
/// Equality rows get a signed slack pair; the whole inequality block
/// shares one slack bounding the worst linearized violation, so the
/// subproblem stays barely larger than the hard one. Variables are
/// `[d, s_eq+, s_eq-, e]`. Returns the step and the worst linearized
/// violation left at the subproblem optimum.
fn elastic_step(
    b: &DMatrix<f64>,
    grad: &DVector<f64>,
    j_eq: &DMatrix<f64>,
    c_eq: &DVector<f64>,
    j_in: &DMatrix<f64>,
    c_in: &DVector<f64>,
    penalty: f64,
) -> Result<(DVector<f64>, f64), QpError> {
    let n = b.nrows();
    let me = j_eq.nrows();
    let mi = j_in.nrows();
    let total = n + 2 * me + 1;
    let slack_curvature = 1e-8;
    let mut h = DMatrix::zeros(total, total);
    h.view_mut((0, 0), (n, n)).copy_from(b);
    for i in n..total {
        h[(i, i)] = slack_curvature;
    }
    let mut g = DVector::zeros(total);
    g.rows_mut(0, n).copy_from(grad);
    for i in n..total {
        g[i] = penalty;
    }
    // J_eq d + s+ - s- = -c_eq.
    let mut ae = DMatrix::zeros(me, total);
    ae.view_mut((0, 0), (me, n)).copy_from(j_eq);
    for i in 0..me {
        ae[(i, n + i)] = 1.0;
        ae[(i, n + me + i)] = -1.0;
    }
    let be = -c_eq.clone();
    // J_in d + e >= -c_in, plus slack non-negativity.
    let rows = mi + 2 * me + 1;
    let mut ai = DMatrix::zeros(rows, total);
    let mut bi = DVector::zeros(rows);
    ai.view_mut((0, 0), (mi, n)).copy_from(j_in);
    for i in 0..mi {
        ai[(i, total - 1)] = 1.0;
        bi[i] = -c_in[i];
    }
    for i in 0..(2 * me + 1) {
        ai[(mi + i, n + i)] = 1.0;
    }
    let sol = solve_qp(&h, &g, &ae, &be, &ai, &bi)?;
    let mut residual = sol.x[total - 1];
    for i in 0..me {
        residual = residual.max(sol.x[n + i] + sol.x[n + me + i]);
    }
    Ok((sol.x.rows(0, n).into_owned(), residual))
}

pub fn nlp_solve<P: NlpProblem + ?Sized>(problem: &P, options: &SqpOptions) -> Result<SqpReport, SqpError> {
    let n = problem.dim();
    if n == 0 {
        return Err(SqpError::EmptyProblem);
    }
    let mut x = problem.initial();
    assert_eq!(x.len(), n, "initial point has wrong dimension");
    let mut eval = evaluate(problem, &x);
    if !eval.f.is_finite()
        || eval.grad.iter().any(|v| !v.is_finite())
        || eval.c_eq.iter().any(|v| !v.is_finite())
        || eval.c_in.iter().any(|v| !v.is_finite())
    {
        return Err(SqpError::BadInitialPoint);
    }

    let mut bmat = DMatrix::identity(n, n);
    let mut mu = 1.0f64;
    let mut eq_duals = DVector::zeros(problem.n_eq());
    let mut ineq_duals = DVector::zeros(problem.n_ineq());
    let mut status = SqpStatus::IterationLimit;
    let mut iterations = 0;
    let mut elastic_streak = 0usize;
    let mut streak_viol = f64::INFINITY;

    for iter in 0..options.max_iter {
        iterations = iter + 1;

        // Step subproblem: min 0.5 d'Bd + grad'd with linearized constraints.
        let be = -&eval.c_eq;
        let bi = -&eval.c_in;
        let mut restoration = None;
        let step = match solve_qp(&bmat, &eval.grad, &eval.j_eq, &be, &eval.j_in, &bi) {
            Ok(sol) => {
                elastic_streak = 0;
                eq_duals = sol.eq_duals;
                ineq_duals = sol.ineq_duals;
                sol.x
            }
            Err(QpError::Infeasible) | Err(QpError::BadEqualities) | Err(QpError::IterationLimit) => {
                // Deep but recoverable infeasibility can need many elastic
                // rounds; declare the problem infeasible only when a whole
                // window of them bought no feasibility progress.
                if elastic_streak == 0 {
                    streak_viol = violation(&eval.c_eq, &eval.c_in);
                }
                elastic_streak += 1;
                if elastic_streak > 8 {
                    let now = violation(&eval.c_eq, &eval.c_in);
                    if now > 0.99 * streak_viol {
                        status = SqpStatus::InfeasibleSubproblem;
                        break;
                    }
                    streak_viol = now;
                    elastic_streak = 1;
                }
                let penalty = 1e4 * (1.0 + eval.grad.amax());
                match elastic_step(
                    &bmat, &eval.grad, &eval.j_eq, &eval.c_eq, &eval.j_in, &eval.c_in, penalty,
                ) {
                    Ok((d, residual)) => {
                        restoration = Some(residual);
                        d
                    }
                    Err(_) => {
                        status = SqpStatus::InfeasibleSubproblem;
                        break;
                    }
                }
            }
            Err(e) => return Err(SqpError::Subproblem(e)),
        };
        let used_elastic = restoration.is_some();

        // Termination on a vanishing step at a feasible point. The
        // Lagrangian gradient alone is not a safe test: at the QP optimum
        // it equals -B d, which BFGS can shrink while d stays large.
        let viol = violation(&eval.c_eq, &eval.c_in);
        let step_norm = step.amax();
        log::debug!(
            "sqp iter {iter}: f {:.6e}, viol {:.3e}, step {:.3e}{}",
            eval.f,
            viol,
            step_norm,
            if used_elastic { " (elastic)" } else { "" }
        );
        let lag_grad = &eval.grad
            - eval.j_eq.transpose() * &eq_duals
            - eval.j_in.transpose() * &ineq_duals;
        let step_scale = (1e-9 * (1.0 + x.amax())).max(options.step_tol);
        if viol <= options.feas_tol
            && (step_norm <= step_scale
                || (step_norm <= 1e-6 * (1.0 + x.amax()) && lag_grad.amax() <= options.kkt_tol))
        {
            status = SqpStatus::Converged;
            break;
        }

        // l1 merit with a penalty that dominates the multipliers.
        let dual_scale = eq_duals
            .iter()
            .chain(ineq_duals.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        mu = mu.max(1.2 * dual_scale + 1.0);
        let phi0 = eval.f + mu * l1_infeasibility(&eval.c_eq, &eval.c_in);
        // Directional derivative bound: g'd - mu * infeasibility.
        let descent = eval.grad.dot(&step) - mu * l1_infeasibility(&eval.c_eq, &eval.c_in);

        // Restoration steps ignore the objective: they are accepted on a
        // sufficient decrease of the worst violation, whose linearized
        // target is the elastic residual. No decrease available means the
        // linearization cannot be restored at all.
        let restore_drop = restoration.map(|residual| viol - residual);
        if let Some(drop) = restore_drop {
            if drop <= 1e-12 * (1.0 + viol) {
                status = SqpStatus::InfeasibleSubproblem;
                break;
            }
        }

        let mut t = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        for _ in 0..40 {
            x_new = &x + &step * t;
            let f_new = problem.objective(&x_new);
            let mut ce = DVector::zeros(problem.n_eq());
            let mut ci = DVector::zeros(problem.n_ineq());
            problem.eq_constraints(&x_new, &mut ce);
            problem.ineq_constraints(&x_new, &mut ci);
            let ok = match restore_drop {
                Some(drop) => {
                    let viol_new = violation(&ce, &ci);
                    viol_new.is_finite() && viol_new <= viol - 1e-4 * t * drop
                }
                None => {
                    let phi = f_new + mu * l1_infeasibility(&ce, &ci);
                    phi.is_finite() && phi <= phi0 + 1e-4 * t * descent.min(0.0)
                }
            };
            if ok {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            log::debug!("sqp iter {iter}: line search failed, mu {mu:.3e}");
            status = SqpStatus::LineSearchFailure;
            break;
        }
        log::trace!("sqp iter {iter}: accepted t {t:.3e}, mu {mu:.3e}");

        let eval_new = evaluate(problem, &x_new);

        // Damped BFGS update on the Lagrangian gradient difference.
        let s = &x_new - &x;
        let grad_l_new = &eval_new.grad
            - eval_new.j_eq.transpose() * &eq_duals
            - eval_new.j_in.transpose() * &ineq_duals;
        let grad_l_old = &eval.grad
            - eval.j_eq.transpose() * &eq_duals
            - eval.j_in.transpose() * &ineq_duals;
        let mut yvec = grad_l_new - grad_l_old;
        let bs = &bmat * &s;
        let sbs = s.dot(&bs);
        let sy = s.dot(&yvec);
        if sbs > 0.0 {
            if sy < 0.2 * sbs {
                let theta = 0.8 * sbs / (sbs - sy);
                yvec = yvec * theta + &bs * (1.0 - theta);
            }
            let sy_damped = s.dot(&yvec);
            if sy_damped > 1e-12 * sbs {
                bmat = bmat - &bs * bs.transpose() / sbs + &yvec * yvec.transpose() / sy_damped;
            }
        }

        x = x_new;
        eval = eval_new;
    }

    let viol = violation(&eval.c_eq, &eval.c_in);
    let lag_grad = &eval.grad
        - eval.j_eq.transpose() * &eq_duals
        - eval.j_in.transpose() * &ineq_duals;
    Ok(SqpReport {
        status,
        objective: eval.f,
        iterations,
        kkt_residual: lag_grad.amax(),
        constraint_violation: viol,
        eq_duals,
        ineq_duals,
        x,
    })
}
