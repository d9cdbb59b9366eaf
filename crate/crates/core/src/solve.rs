//! Minimization of the (full or coreset-weighted) regularized classification
//! objective.
//!
//! One solver serves both problems: a limited-memory quasi-Newton method
//! with Armijo backtracking. Coreset weights enter only the loss/gradient
//! assembly, so the full-data optimum and the coreset optimum come from the
//! identical algorithm and differ only in data. For the nonsmooth hinge the
//! same loop runs on subgradients, with a decaying plain subgradient step
//! whenever the line search cannot make progress, and convergence is judged
//! by objective decrease instead of gradient norm.

use serde::{Deserialize, Serialize};

use crate::coreset::Coreset;
use crate::data::LabeledMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::losses::{total_loss, NiceHinge, Regularizer};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Convergence threshold on `‖∇‖_∞ / (1 + |objective|)` for smooth losses.
    pub grad_tol: f64,
    /// Initial backtracking step.
    pub step_init: f64,
    /// Backtracking shrink factor.
    pub step_shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    /// Quasi-Newton memory (number of correction pairs).
    pub history: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            step_init: 1.0,
            step_shrink: 0.5,
            sufficient_decrease: 1e-4,
            history: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The weighted rows the solver actually sees.
struct WorkingSet<'a> {
    matrix: std::borrow::Cow<'a, DenseMatrix>,
    /// None means every row has weight 1 (the full-data problem).
    weights: Option<Vec<f64>>,
}

impl<'a> WorkingSet<'a> {
    fn full(z: &'a LabeledMatrix) -> Self {
        Self {
            matrix: std::borrow::Cow::Borrowed(z.matrix()),
            weights: None,
        }
    }

    fn gathered(z: &LabeledMatrix, coreset: &Coreset) -> Result<WorkingSet<'static>> {
        let n = z.n();
        let mut rows = Vec::with_capacity(coreset.len());
        for &i in coreset.indices() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, rows: n });
            }
            rows.push(z.matrix().row(i).to_vec());
        }
        Ok(WorkingSet {
            matrix: std::borrow::Cow::Owned(DenseMatrix::from_rows(&rows)),
            weights: Some(coreset.weights().to_vec()),
        })
    }

    fn objective(&self, beta: &[f64], f: &NiceHinge, reg: &Regularizer) -> f64 {
        let m = self.matrix.rows();
        let mut sum = 0.0;
        match &self.weights {
            None => {
                for i in 0..m {
                    sum += f.value(dot(self.matrix.row(i), beta));
                }
            }
            Some(w) => {
                for (i, wi) in w.iter().enumerate() {
                    sum += wi * f.value(dot(self.matrix.row(i), beta));
                }
            }
        }
        sum + reg.value(beta)
    }

    fn gradient(&self, beta: &[f64], f: &NiceHinge, reg: &Regularizer) -> Vec<f64> {
        let m = self.matrix.rows();
        let mut grad = reg.grad(beta);
        for i in 0..m {
            let row = self.matrix.row(i);
            let mut slope = f.derivative(dot(row, beta));
            if let Some(w) = &self.weights {
                slope *= w[i];
            }
            if slope != 0.0 {
                for (g, &x) in grad.iter_mut().zip(row) {
                    *g += slope * x;
                }
            }
        }
        grad
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Two-loop recursion producing the quasi-Newton direction `-H g`.
fn lbfgs_direction(history: &[(Vec<f64>, Vec<f64>, f64)], g: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.last() {
        let scale = dot(s, y) / dot(y, y).max(1e-300);
        for qi in q.iter_mut() {
            *qi *= scale;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `Σ w_i f((Zβ)_i) + reg(β)` over β, starting from `beta0`
/// (default the zero vector). When `coreset` is given the sum runs over its
/// draws with their importance weights; otherwise over all rows with unit
/// weight.
pub fn minimize(
    z: &LabeledMatrix,
    f: &NiceHinge,
    reg: &Regularizer,
    coreset: Option<&Coreset>,
    cfg: &SolveConfig,
    beta0: Option<&[f64]>,
) -> Result<SolveResult> {
    let d = z.d();
    let x0 = match beta0 {
        Some(b) => {
            if b.len() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: b.len(),
                });
            }
            if !b.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("initial parameter vector"));
            }
            b.to_vec()
        }
        None => vec![0.0; d],
    };

    let work = match coreset {
        Some(c) => WorkingSet::gathered(z, c)?,
        None => WorkingSet::full(z),
    };

    let smooth = f.is_smooth();
    let mut x = x0;
    let mut fx = work.objective(&x, f, reg);
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at start"));
    }
    let mut g = work.gradient(&x, f, reg);

    let mut best_f = fx;
    let mut best_x = x.clone();
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    // best objective over a trailing window, for the nonsmooth stop rule
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;
    // Unregularized separable problems have infimum 0 and no minimizer; once
    // the objective is this far below its starting value there is nothing
    // left to resolve and we stop (converged stays false).
    let objective_floor = 1e-10 * (1.0 + fx.abs());

    for iter in 0..cfg.max_iters {
        iterations = iter + 1;

        if fx < objective_floor {
            iterations = iter;
            break;
        }

        let gnorm = inf_norm(&g);
        if smooth && gnorm <= cfg.grad_tol * (1.0 + fx.abs()) {
            converged = true;
            iterations = iter;
            break;
        }
        if !smooth {
            window.push_back(best_f);
            if window.len() > 20 {
                let past = window.pop_front().unwrap();
                if past - best_f < 1e-10 * (1.0 + best_f.abs()) {
                    converged = true;
                    iterations = iter;
                    break;
                }
            }
        }

        let mut dir = lbfgs_direction(&history, &g);
        let mut dg = dot(&dir, &g);
        if dg >= 0.0 || dg.is_nan() || !dir.iter().all(|v| v.is_finite()) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            dg = dot(&dir, &g);
            if dg >= 0.0 || dg.is_nan() {
                // zero gradient: stationary
                converged = true;
                iterations = iter;
                break;
            }
        }

        let mut step = cfg.step_init;
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let fc = work.objective(&cand, f, reg);
            if fc.is_finite() && fc <= fx + cfg.sufficient_decrease * step * dg {
                accepted = Some((cand, fc));
                break;
            }
            step *= cfg.step_shrink;
        }

        match accepted {
            Some((new_x, new_f)) => {
                let new_g = work.gradient(&new_x, f, reg);
                let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = new_g.iter().zip(&g).map(|(a, b)| a - b).collect();
                let ys = dot(&y, &s);
                if ys > 1e-10 * l2_norm(&y) * l2_norm(&s) {
                    if history.len() == cfg.history {
                        history.remove(0);
                    }
                    history.push((s, y, 1.0 / ys));
                }
                x = new_x;
                fx = new_f;
                g = new_g;
            }
            None if smooth => {
                // descent direction but no decrease: numerical floor reached
                break;
            }
            None => {
                // plain subgradient step with a decaying length
                let gl2 = l2_norm(&g).max(1e-12);
                let eta = cfg.step_init / (1.0 + iter as f64);
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= eta * gi / gl2;
                }
                fx = work.objective(&x, f, reg);
                if !fx.is_finite() {
                    return Err(Error::NonFinite("objective during subgradient step"));
                }
                g = work.gradient(&x, f, reg);
                history.clear();
            }
        }

        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
    }

    let grad_norm = inf_norm(&work.gradient(&best_x, f, reg));
    if smooth && !converged {
        converged = grad_norm <= cfg.grad_tol * (1.0 + best_f.abs());
    }
    Ok(SolveResult {
        beta: best_x,
        objective: best_f,
        grad_norm,
        iterations,
        converged,
    })
}

/// The evaluation metric `|L(β̃) - L(β*)| / L(β*)` where `L` is the full-data
/// objective (including the regularizer when the scenario is regularized).
pub fn relative_loss(
    beta_star_obj: f64,
    beta_tilde: &[f64],
    z: &LabeledMatrix,
    f: &NiceHinge,
    reg: &Regularizer,
) -> Result<f64> {
    if beta_star_obj <= 0.0 {
        return Err(Error::DivisionByZero(
            "full-data optimum is zero (degenerate/separable instance)",
        ));
    }
    let lt = total_loss(z, beta_tilde, f, reg)?;
    Ok((lt - beta_star_obj).abs() / beta_star_obj)
}
