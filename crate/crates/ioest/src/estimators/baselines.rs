//! The two relaxed-optimality heuristics used as comparison baselines.
//!
//! * VIA relaxes the variational inequality describing optimality of each
//!   observation: the slack `eps_i(theta)` is the smallest nonnegative value
//!   with `grad f(y_i)'(x - y_i) >= -eps_i` for all feasible `x`, and theta
//!   minimizes the mean squared slack.
//! * KKA relaxes the KKT conditions: per observation the residual vector
//!   stacks stationarity `grad f(y_i) + sum_j lambda_j grad g_j(y_i)` and
//!   complementary slackness `lambda_j g_j(y_i)`; the inner minimum over
//!   `lambda >= 0` has a closed form per coordinate for box feasible sets
//!   and a scalar dual bisection for the simplex.
//!
//! Both outer objectives are convex in theta (pointwise maxima/minima of
//! functions affine in theta, squared), so a grid scan (p <= 2) or cyclic
//! coordinate descent (p > 2) reaches the optimum.

use rayon::prelude::*;

use crate::error::Result;
use crate::estimators::descent::coordinate_descent;
use crate::estimators::{delta_net, Diagnostics, EstimateResult, Method};
use crate::forward::{Family, ParamBox, ProblemInstance};
use crate::risk::Dataset;

const OUTER_SWEEPS: usize = 50;
const LINE_TOL: f64 = 1e-6;

/// VIA slack `eps_i(theta) = max(0, max_{x in Phi} -grad f(y,u,theta)'(x-y))`.
pub fn via_slack(prob: &ProblemInstance, y: &[f64], u: &[f64], theta: &[f64]) -> Result<f64> {
    let grad = prob.grad_x(y, u, theta)?;
    let raw = match prob.family() {
        Family::LinearBox { lo, hi }
        | Family::SeparableQuadBox { lo, hi, .. } => (0..lo.len())
            .map(|k| (-grad[k] * (lo[k] - y[k])).max(-grad[k] * (hi[k] - y[k])))
            .sum::<f64>(),
        Family::ComfortQuad => {
            (-grad[0] * (70.0 - y[0])).max(-grad[0] * (76.0 - y[0]))
        }
        Family::LogSimplex { .. } => {
            // Linear in x over the simplex: the maximum sits at a vertex.
            let inner: f64 = grad.iter().zip(y).map(|(&g, &yk)| g * yk).sum();
            let min_grad = grad.iter().cloned().fold(f64::INFINITY, f64::min);
            inner - min_grad
        }
    };
    Ok(raw.max(0.0))
}

/// Mean squared VIA slack over the dataset.
pub fn via_objective(prob: &ProblemInstance, data: &Dataset, theta: &[f64]) -> Result<f64> {
    mean_over_obs(data, |u, y| {
        let s = via_slack(prob, y, u, theta)?;
        Ok(s * s)
    })
}

/// Inner KKA minimum `min_{lambda >= 0} ||residual(y, lambda, theta)||^2`.
pub fn kka_residual_sq(
    prob: &ProblemInstance,
    y: &[f64],
    u: &[f64],
    theta: &[f64],
) -> Result<f64> {
    let grad = prob.grad_x(y, u, theta)?;
    match prob.family() {
        Family::LinearBox { lo, hi }
        | Family::SeparableQuadBox { lo, hi, .. } => {
            Ok(kka_box_residual(&grad, y, lo, hi))
        }
        Family::ComfortQuad => Ok(kka_box_residual(&grad, y, &[70.0], &[76.0])),
        Family::LogSimplex { .. } => Ok(kka_simplex_residual(&grad, y)),
    }
}

/// For box constraints the KKT residual separates per coordinate:
/// `min(s^2 g^2/(1+g^2))` over the bound in the descent direction.
fn kka_box_residual(grad: &[f64], y: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut total = 0.0;
    for (k, (&s, &yk)) in grad.iter().zip(y).enumerate() {
        if s > 0.0 {
            let g = lo[k] - yk;
            total += s * s * g * g / (1.0 + g * g);
        } else if s < 0.0 {
            let g = yk - hi[k];
            total += s * s * g * g / (1.0 + g * g);
        }
    }
    total
}

/// Simplex constraints couple coordinates only through the net multiplier
/// `t = beta_plus - beta_minus` of the two sum rows; for fixed `t` the
/// nonnegativity multipliers have a closed form, so one convex scalar
/// bisection solves the inner problem.
fn kka_simplex_residual(grad: &[f64], y: &[f64]) -> f64 {
    let c = y.iter().sum::<f64>() - 1.0;
    let alpha = |g: f64, yk: f64, t: f64| -> f64 { ((g + t) / (1.0 + yk * yk)).max(0.0) };
    let value = |t: f64| -> f64 {
        let mut total = t * t * c * c;
        for (&g, &yk) in grad.iter().zip(y) {
            let a = alpha(g, yk, t);
            let r = g - a + t;
            total += r * r + a * a * yk * yk;
        }
        total
    };
    // Derivative of the (convex, C^1) value in t.
    let slope = |t: f64| -> f64 {
        let mut ds = 2.0 * t * c * c;
        for (&g, &yk) in grad.iter().zip(y) {
            ds += 2.0 * (g - alpha(g, yk, t) + t);
        }
        ds
    };

    let mut t_lo = -1.0;
    let mut t_hi = 1.0;
    for _ in 0..200 {
        if slope(t_lo) < 0.0 {
            break;
        }
        t_lo *= 2.0;
    }
    for _ in 0..200 {
        if slope(t_hi) > 0.0 {
            break;
        }
        t_hi *= 2.0;
    }
    for _ in 0..120 {
        let mid = 0.5 * (t_lo + t_hi);
        if slope(mid) > 0.0 {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    value(0.5 * (t_lo + t_hi))
}

/// Mean squared KKA residual over the dataset.
pub fn kka_objective(prob: &ProblemInstance, data: &Dataset, theta: &[f64]) -> Result<f64> {
    mean_over_obs(data, |u, y| kka_residual_sq(prob, y, u, theta))
}

fn mean_over_obs<F>(data: &Dataset, f: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    let n = data.n();
    let total = if n >= 512 {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (u, y) = data.obs(i);
                f(u, y)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>()
    } else {
        let mut acc = 0.0;
        for i in 0..n {
            let (u, y) = data.obs(i);
            acc += f(u, y)?;
        }
        acc
    };
    Ok(total / n as f64)
}

/// Shared outer search: the ENA-style grid for p <= 2 (head-to-head
/// fairness), cyclic coordinate descent for larger p.
fn minimize_over_theta<F>(
    objective: F,
    theta_box: &ParamBox,
    delta: f64,
) -> Result<(Vec<f64>, f64, Option<usize>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if theta_box.dim() <= 2 {
        let net = delta_net(theta_box, delta)?;
        let values: Vec<f64> = net
            .par_iter()
            .map(|theta| objective(theta))
            .collect::<Result<_>>()?;
        let mut best = 0;
        for i in 1..values.len() {
            if values[i] < values[best] {
                best = i;
            }
        }
        Ok((net[best].clone(), values[best], Some(net.len())))
    } else {
        let (theta, value, _) = coordinate_descent(
            objective,
            theta_box,
            theta_box.center(),
            OUTER_SWEEPS,
            LINE_TOL,
            1e-9,
        )?;
        Ok((theta, value, None))
    }
}

/// Variational-inequality baseline estimate.
pub fn via_estimate(
    prob: &ProblemInstance,
    data: &Dataset,
    theta_box: &ParamBox,
    delta: f64,
) -> Result<EstimateResult> {
    data.check_dims(prob)?;
    let (theta_hat, loss, grid_size) =
        minimize_over_theta(|theta| via_objective(prob, data, theta), theta_box, delta)?;
    Ok(EstimateResult {
        theta_hat,
        loss,
        method: Method::Via,
        diagnostics: Diagnostics {
            grid_size,
            converged: true,
            ..Diagnostics::default()
        },
    })
}

/// KKT-residual baseline estimate.
pub fn kka_estimate(
    prob: &ProblemInstance,
    data: &Dataset,
    theta_box: &ParamBox,
    delta: f64,
) -> Result<EstimateResult> {
    data.check_dims(prob)?;
    let (theta_hat, loss, grid_size) =
        minimize_over_theta(|theta| kka_objective(prob, data, theta), theta_box, delta)?;
    Ok(EstimateResult {
        theta_hat,
        loss,
        method: Method::Kka,
        diagnostics: Diagnostics {
            grid_size,
            converged: true,
            ..Diagnostics::default()
        },
    })
}
