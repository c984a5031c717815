//! Damped Gauss-Newton (Levenberg-Marquardt) least squares on small
//! dense problems.
//!
//! The damping matrix is Marquardt's diagonal scaling floored at a small
//! fraction of its largest entry so parameters with a vanishing Jacobian
//! column stay put instead of blowing up. The damping factor follows
//! Nielsen's gain-ratio update.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    fn n_params(&self) -> usize;

    fn residuals(&self, params: &[f64]) -> Vec<f64>;

    /// Defaults to central differences with relative step `1e-6`.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        central_difference_jacobian(self, params, 1e-6)
    }
}

fn fd_step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

pub fn central_difference_jacobian<P: LeastSquares + ?Sized>(problem: &P, params: &[f64], rel_step: f64) -> DMatrix<f64> {
    let n = params.len();
    let mut p = params.to_vec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = fd_step(params[j], rel_step);
        p[j] = params[j] + h;
        let up = problem.residuals(&p);
        p[j] = params[j] - h;
        let down = problem.residuals(&p);
        p[j] = params[j];
        cols.push(DVector::from_iterator(up.len(), up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h))));
    }
    DMatrix::from_columns(&cols)
}

pub fn forward_difference_jacobian<P: LeastSquares + ?Sized>(problem: &P, params: &[f64], rel_step: f64) -> DMatrix<f64> {
    let n = params.len();
    let base = problem.residuals(params);
    let mut p = params.to_vec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = fd_step(params[j], rel_step);
        p[j] = params[j] + h;
        let up = problem.residuals(&p);
        p[j] = params[j];
        cols.push(DVector::from_iterator(base.len(), up.iter().zip(&base).map(|(u, b)| (u - b) / h)));
    }
    DMatrix::from_columns(&cols)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Scaled gradient tolerance, `max_j |J_jᵀ r| / (‖J_j‖ ‖r‖)`.
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub cost_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iterations: 200, gradient_tol: 1e-10, step_tol: 1e-12, cost_tol: 1e-15 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    Cost,
    ZeroResidual,
    /// No descent direction left at working precision.
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    /// `½‖r‖²`
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Cost after the initial point and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl LmOutcome {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIterations
    }

    pub fn sum_squares(&self) -> f64 {
        2.0 * self.cost
    }

    pub fn rms(&self) -> f64 {
        if self.residuals.is_empty() {
            0.0
        } else {
            (self.sum_squares() / self.residuals.len() as f64).sqrt()
        }
    }

    /// 1σ parameter uncertainties from `s² (JᵀJ)⁺`, `s² = SSR/(m − n)`.
    /// Parameters touching a numerically null direction get `+∞`.
    pub fn uncertainties(&self) -> Vec<f64> {
        covariance_sigmas(&self.jacobian, self.sum_squares())
    }
}

pub fn covariance_sigmas(jacobian: &DMatrix<f64>, ssr: f64) -> Vec<f64> {
    let (m, n) = jacobian.shape();
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = ssr / dof;
    let svd = jacobian.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut var = 0.0;
        for (i, &sv) in svd.singular_values.iter().enumerate() {
            let vji = v_t[(i, j)];
            if sv <= 1e-10 * smax || sv == 0.0 {
                if vji.abs() > 1e-8 {
                    var = f64::INFINITY;
                    break;
                }
            } else {
                var += vji * vji / (sv * sv);
            }
        }
        // Rank-deficient columns beyond the SVD's min(m, n) rows.
        if svd.singular_values.len() < n && var.is_finite() {
            let covered: f64 = (0..svd.singular_values.len()).map(|i| v_t[(i, j)].powi(2)).sum();
            if covered < 1.0 - 1e-8 {
                var = f64::INFINITY;
            }
        }
        *slot = (s2 * var).sqrt();
        if var.is_infinite() {
            *slot = f64::INFINITY;
        }
    }
    out
}

fn half_norm2(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub fn minimize<P: LeastSquares + ?Sized>(problem: &P, init: &[f64], config: &LmConfig) -> LmOutcome {
    let n = problem.n_params();
    assert_eq!(init.len(), n, "initial point has wrong dimension");
    let mut x = init.to_vec();
    let mut r = problem.residuals(&x);
    let mut cost = half_norm2(&r);
    let mut jac = problem.jacobian(&x);
    let mut history = vec![cost];
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut iterations = 0;

    let finish = |x: Vec<f64>, r: Vec<f64>, jac: DMatrix<f64>, cost: f64, it: usize, t: Termination, h: Vec<f64>| LmOutcome {
        params: x,
        residuals: r,
        jacobian: jac,
        cost,
        iterations: it,
        termination: t,
        cost_history: h,
    };

    loop {
        if cost == 0.0 {
            return finish(x, r, jac, cost, iterations, Termination::ZeroResidual, history);
        }
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        let rnorm = rv.norm();
        let scaled_grad = (0..n)
            .map(|j| {
                let cn = jac.column(j).norm();
                if cn == 0.0 { 0.0 } else { g[j].abs() / (cn * rnorm) }
            })
            .fold(0.0, f64::max);
        if scaled_grad <= config.gradient_tol {
            return finish(x, r, jac, cost, iterations, Termination::Gradient, history);
        }
        if iterations >= config.max_iterations {
            return finish(x, r, jac, cost, iterations, Termination::MaxIterations, history);
        }
        iterations += 1;

        let jtj = jac.transpose() * &jac;
        let dmax = jtj.diagonal().iter().cloned().fold(0.0, f64::max);
        let floor = (dmax * 1e-12).max(f64::MIN_POSITIVE);
        let damp = DVector::from_iterator(n, jtj.diagonal().iter().map(|&d| d.max(floor)));
        if lambda < 0.0 {
            lambda = 1e-3;
        }

        // Inner loop: raise damping until a step is accepted.
        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * damp[j];
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e20 {
                        return finish(x, r, jac, cost, iterations, Termination::Stalled, history);
                    }
                    continue;
                }
            };
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step.norm() <= config.step_tol * (xnorm + config.step_tol) {
                return finish(x, r, jac, cost, iterations, Termination::Step, history);
            }
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_trial = problem.residuals(&trial);
            let cost_trial = half_norm2(&r_trial);
            let damped: f64 = (0..n).map(|j| lambda * damp[j] * step[j] * step[j]).sum();
            let predicted = 0.5 * (damped - g.dot(&step));
            let actual = cost - cost_trial;
            if cost_trial.is_finite() && actual > 0.0 && predicted > 0.0 {
                let rho = actual / predicted;
                lambda *= (1.0_f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                let small_gain = actual <= config.cost_tol * cost;
                x = trial;
                r = r_trial;
                cost = cost_trial;
                jac = problem.jacobian(&x);
                history.push(cost);
                if small_gain {
                    return finish(x, r, jac, cost, iterations, Termination::Cost, history);
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e20 {
                return finish(x, r, jac, cost, iterations, Termination::Stalled, history);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn n_params(&self) -> usize {
            2
        }
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
        }
    }

    struct ExpDecay {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for ExpDecay {
        fn n_params(&self) -> usize {
            2
        }
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.t.iter().zip(&self.y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect()
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &LmConfig::default());
        assert!(out.converged());
        assert!((out.params[0] - 1.0).abs() < 1e-8);
        assert!((out.params[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cost_never_increases() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &LmConfig::default());
        assert!(out.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.cost_history.len() > 3);
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let out = minimize(&ExpDecay { t, y }, &[1.0, 0.5], &LmConfig::default());
        assert!((out.params[0] - 2.5).abs() < 1e-8);
        assert!((out.params[1] - 1.3).abs() < 1e-8);
    }

    #[test]
    fn central_and_forward_differences_agree() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y = vec![0.0; 10];
        let p = ExpDecay { t: t.clone(), y };
        let params = [1.7, 0.8];
        let c = central_difference_jacobian(&p, &params, 1e-6);
        let f = forward_difference_jacobian(&p, &params, 1e-7);
        for (i, ti) in t.iter().enumerate() {
            let exact0 = (-0.8 * ti).exp();
            let exact1 = -1.7 * ti * (-0.8 * ti).exp();
            assert!((c[(i, 0)] - exact0).abs() < 1e-8);
            assert!((c[(i, 1)] - exact1).abs() < 1e-8);
            assert!((c[(i, 0)] - f[(i, 0)]).abs() < 1e-5);
            assert!((c[(i, 1)] - f[(i, 1)]).abs() < 1e-5);
        }
    }

    #[test]
    fn null_direction_gives_infinite_sigma() {
        let j = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let s = covariance_sigmas(&j, 1.0);
        assert!(s[0].is_finite());
        assert!(s[1].is_infinite());
    }
}
