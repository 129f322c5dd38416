//! Semiparametric estimator: L2NW denoising followed by minimization of the
//! convex suboptimality loss
//!
//! `Rbar_n(theta) = (1/n) sum_i [ f(xbar_i, u_i, theta) - V(u_i, theta) ]`,
//!
//! the reduction of the dual-bounded fit after eliminating the multipliers
//! by strong duality. The loss is convex in theta (f is affine in theta and
//! V is a pointwise minimum of such functions), generally nonsmooth where
//! the forward active set changes, so the solver is a projected subgradient
//! pass with best-iterate tracking followed by a coordinate-descent polish.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::descent::coordinate_descent;
use crate::estimators::{l2nw_denoise, Diagnostics, EstimateResult, KernelConfig, Method};
use crate::forward::{Family, ParamBox, ProblemInstance};
use crate::risk::Dataset;

const MAX_SUBGRADIENT_ITERS: usize = 2000;
const STALL_WINDOW: usize = 200;
const STALL_IMPROVEMENT: f64 = 1e-10;
const POLISH_SWEEPS: usize = 30;

/// `Rbar_n(theta)`: mean suboptimality of the denoised points under theta.
///
/// The `xbar_i` must lie in the objective's domain (project them onto the
/// feasible set first for `LogSimplex`).
pub fn suboptimality_loss(
    prob: &ProblemInstance,
    xbar: &[Vec<f64>],
    data: &Dataset,
    theta: &[f64],
) -> Result<f64> {
    Ok(loss_and_subgradient(prob, xbar, data, theta, false)?.0)
}

/// Subgradient of `Rbar_n` at theta: the mean of
/// `grad_theta f(xbar_i) - grad_theta f(S(u_i,theta))`, the envelope
/// (Danskin) subgradient of `-V` being the second term.
pub fn suboptimality_subgradient(
    prob: &ProblemInstance,
    xbar: &[Vec<f64>],
    data: &Dataset,
    theta: &[f64],
) -> Result<Vec<f64>> {
    Ok(loss_and_subgradient(prob, xbar, data, theta, true)?
        .1
        .expect("requested gradient"))
}

fn loss_and_subgradient(
    prob: &ProblemInstance,
    xbar: &[Vec<f64>],
    data: &Dataset,
    theta: &[f64],
    want_gradient: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    data.check_dims(prob)?;
    if xbar.len() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "denoised points",
            expected: data.n(),
            got: xbar.len(),
        });
    }
    let n = data.n();
    let p = prob.dims().p;

    let one = |i: usize| -> Result<(f64, Vec<f64>)> {
        let (u, _) = data.obs(i);
        let solution = prob.solve_forward(u, theta)?;
        let f_bar = prob.objective(&xbar[i], u, theta)?;
        let term = f_bar - solution.value;
        let grad = if want_gradient {
            let g_bar = prob.grad_theta(&xbar[i], u, theta)?;
            let g_sol = prob.grad_theta(&solution.point, u, theta)?;
            g_bar.iter().zip(&g_sol).map(|(&a, &b)| a - b).collect()
        } else {
            Vec::new()
        };
        Ok((term, grad))
    };

    let terms: Vec<(f64, Vec<f64>)> = if n >= 512 {
        (0..n).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..n).map(one).collect::<Result<_>>()?
    };

    let loss = terms.iter().map(|(t, _)| t).sum::<f64>() / n as f64;
    let gradient = want_gradient.then(|| {
        let mut g = vec![0.0; p];
        for (_, gi) in &terms {
            for k in 0..p {
                g[k] += gi[k];
            }
        }
        g.iter_mut().for_each(|v| *v /= n as f64);
        g
    });
    Ok((loss, gradient))
}

/// Minimize `Rbar_n` over the box for already-denoised points.
///
/// Projected subgradient with step `diam(Theta)/sqrt(t)` and best-iterate
/// tracking, then a coordinate-descent polish of the best iterate.
pub fn minimize_suboptimality(
    prob: &ProblemInstance,
    xbar: &[Vec<f64>],
    data: &Dataset,
    theta_box: &ParamBox,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    if theta_box.dim() != prob.dims().p {
        return Err(Error::DimensionMismatch {
            what: "theta_box dimension",
            expected: prob.dims().p,
            got: theta_box.dim(),
        });
    }
    let step0 = theta_box.diameter().max(1e-12);
    let mut theta = theta_box.center();
    let mut best_theta = theta.clone();
    let mut best_value = f64::INFINITY;
    let mut last_mark = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=MAX_SUBGRADIENT_ITERS {
        iterations = t;
        let (value, gradient) = loss_and_subgradient(prob, xbar, data, &theta, true)?;
        let gradient = gradient.expect("gradient requested");
        if value < best_value {
            best_value = value;
            best_theta = theta.clone();
        }
        if t % STALL_WINDOW == 0 {
            if last_mark - best_value < STALL_IMPROVEMENT {
                converged = true;
                break;
            }
            last_mark = best_value;
        }
        let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            converged = true;
            break;
        }
        let step = step0 / (t as f64).sqrt() / norm;
        for k in 0..theta.len() {
            theta[k] -= step * gradient[k];
        }
        theta = theta_box.project(&theta);
    }

    // Polish: the loss is convex, so cyclic line searches reach the argmin.
    let objective = |th: &[f64]| suboptimality_loss(prob, xbar, data, th);
    let line_tol = 1e-7
        * theta_box
            .lo()
            .iter()
            .zip(theta_box.hi())
            .map(|(&l, &h)| h - l)
            .fold(1.0f64, f64::max);
    let (polished, polished_value, _) = coordinate_descent(
        objective,
        theta_box,
        best_theta.clone(),
        POLISH_SWEEPS,
        line_tol,
        1e-9,
    )?;
    if polished_value < best_value {
        best_theta = polished;
        best_value = polished_value;
    }
    Ok((best_theta, best_value, iterations, converged))
}

/// Semiparametric estimate: denoise, optionally project onto the feasible
/// set, then minimize the suboptimality loss over the box.
///
/// `project` is mandatory for `LogSimplex` (logs of negative values
/// otherwise).
pub fn spa_estimate(
    prob: &ProblemInstance,
    data: &Dataset,
    theta_box: &ParamBox,
    cfg: &KernelConfig,
    project: bool,
) -> Result<EstimateResult> {
    data.check_dims(prob)?;
    if matches!(prob.family(), Family::LogSimplex { .. }) && !project {
        return Err(Error::InvalidArgument(
            "LogSimplex requires projecting the denoised points onto the feasible set".into(),
        ));
    }
    let mut xbar = l2nw_denoise(data, cfg)?;
    if project {
        for (i, x) in xbar.iter_mut().enumerate() {
            let (u, _) = data.obs(i);
            *x = prob.project_feasible(x, u)?;
        }
    }
    let (theta_hat, loss, iterations, converged) =
        minimize_suboptimality(prob, &xbar, data, theta_box)?;
    Ok(EstimateResult {
        theta_hat,
        loss,
        method: Method::Spa,
        diagnostics: Diagnostics {
            kernel: Some((cfg.gamma, cfg.sigma)),
            iterations: Some(iterations),
            converged,
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fop_b() -> ProblemInstance {
        ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0], vec![0.0], vec![1.0]).unwrap()
    }

    fn fop_d(p: usize) -> ProblemInstance {
        ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0; p], vec![0.0; p], vec![1.0; p])
            .unwrap()
    }

    #[test]
    fn single_observation_loss() {
        let prob = fop_b();
        let data = Dataset::new(vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        let loss = suboptimality_loss(&prob, &[vec![0.5]], &data, &[0.5]).unwrap();
        assert_abs_diff_eq!(loss, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn loss_vanishes_at_exact_solutions() {
        let prob = fop_b();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut us = Vec::new();
        let mut xbar = Vec::new();
        for _ in 0..30 {
            let u = vec![rng.gen_range(0.0..2.0)];
            xbar.push(prob.solve_forward(&u, &[0.7]).unwrap().point);
            us.push(u);
        }
        let ys = xbar.clone();
        let data = Dataset::new(us, ys).unwrap();
        let loss = suboptimality_loss(&prob, &xbar, &data, &[0.7]).unwrap();
        assert_abs_diff_eq!(loss, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn loss_is_convex_in_theta() {
        let prob = fop_d(3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut us = Vec::new();
        let mut xbar = Vec::new();
        for _ in 0..25 {
            us.push((0..3).map(|_| rng.gen_range(0.0..2.0)).collect::<Vec<_>>());
            xbar.push((0..3).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<_>>());
        }
        let ys = xbar.clone();
        let data = Dataset::new(us, ys).unwrap();
        for _ in 0..50 {
            let ta: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            let tb: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mid: Vec<f64> = ta.iter().zip(&tb).map(|(&a, &b)| 0.5 * (a + b)).collect();
            let fa = suboptimality_loss(&prob, &xbar, &data, &ta).unwrap();
            let fb = suboptimality_loss(&prob, &xbar, &data, &tb).unwrap();
            let fm = suboptimality_loss(&prob, &xbar, &data, &mid).unwrap();
            assert!(fm <= 0.5 * (fa + fb) + 1e-10);
        }
    }

    #[test]
    fn exact_denoised_points_recover_theta0() {
        let prob = fop_b();
        let theta0 = [0.7];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut us = Vec::new();
        let mut xbar = Vec::new();
        for _ in 0..200 {
            let u = vec![rng.gen_range(0.0..2.0)];
            xbar.push(prob.solve_forward(&u, &theta0).unwrap().point);
            us.push(u);
        }
        let ys = xbar.clone();
        let data = Dataset::new(us, ys).unwrap();
        let theta_box = ParamBox::new(vec![0.0], vec![2.0]).unwrap();
        let (theta_hat, loss, _, _) =
            minimize_suboptimality(&prob, &xbar, &data, &theta_box).unwrap();
        assert!(theta_box.contains(&theta_hat, 1e-12));
        assert_abs_diff_eq!(theta_hat[0], theta0[0], epsilon = 1e-4);
        assert!(loss.abs() < 1e-8);
    }

    #[test]
    fn stationarity_certificate_at_solution() {
        // At an interior minimizer the box-clipped subgradient must be small;
        // at a boundary minimizer it must point outward.
        let prob = fop_d(2);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut us = Vec::new();
        let mut xbar = Vec::new();
        for _ in 0..100 {
            let u: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..2.0)).collect();
            xbar.push(prob.solve_forward(&u, &[0.6, 1.1]).unwrap().point);
            us.push(u);
        }
        let ys = xbar.clone();
        let data = Dataset::new(us, ys).unwrap();
        let theta_box = ParamBox::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let (theta_hat, _, _, _) = minimize_suboptimality(&prob, &xbar, &data, &theta_box).unwrap();
        let g = suboptimality_subgradient(&prob, &xbar, &data, &theta_hat).unwrap();
        let mut residual = 0.0f64;
        for k in 0..2 {
            let at_lo = theta_hat[k] <= theta_box.lo()[k] + 1e-9;
            let at_hi = theta_hat[k] >= theta_box.hi()[k] - 1e-9;
            let r = if at_lo {
                g[k].min(0.0)
            } else if at_hi {
                g[k].max(0.0)
            } else {
                g[k]
            };
            residual += r * r;
        }
        assert!(residual.sqrt() <= 1e-3, "stationarity residual too large");
    }

    #[test]
    fn spa_requires_projection_for_log_simplex() {
        let prob = ProblemInstance::log_simplex(1).unwrap();
        let data = Dataset::new(vec![vec![1.0, 1.0]], vec![vec![0.5, 0.5]]).unwrap();
        let theta_box = ParamBox::new(vec![0.5], vec![2.0]).unwrap();
        let cfg = KernelConfig::new(1.0, 0.1).unwrap();
        assert!(spa_estimate(&prob, &data, &theta_box, &cfg, false).is_err());
        assert!(spa_estimate(&prob, &data, &theta_box, &cfg, true).is_ok());
    }
}
