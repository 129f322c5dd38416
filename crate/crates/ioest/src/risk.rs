//! Sample-average prediction risk `Q_n(theta; eps)` via the duality-based
//! reformulation: each observation is projected onto the set of
//! eps-solutions of the forward problem,
//!
//! `S(u, theta; eps) = { x : f(x,u,theta) <= V(u,theta) + eps, g(x,u) <= eps }`,
//!
//! and the risk is the mean squared projection distance. At `eps = 0` this
//! is the exact reformulation of the sample-average risk; for `eps > 0` it
//! is the regularized version whose feasible sets are nested in `eps`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{Family, ProblemInstance, SetKind, FEASIBILITY_TOL};

/// Residual tolerance when bisecting the active budget constraint.
const BUDGET_TOL: f64 = 1e-9;
/// Observation count above which per-observation work is parallelized.
const PAR_THRESHOLD: usize = 512;

/// Immutable collection of observations `(u_i, y_i)`.
#[derive(Debug, Clone)]
pub struct Dataset {
    us: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    m: usize,
    d: usize,
}

impl Dataset {
    pub fn new(us: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Result<Self> {
        if us.is_empty() || us.len() != ys.len() {
            return Err(Error::InvalidArgument(format!(
                "dataset needs n >= 1 paired observations (got {} inputs, {} decisions)",
                us.len(),
                ys.len()
            )));
        }
        let m = us[0].len();
        let d = ys[0].len();
        for i in 0..us.len() {
            if us[i].len() != m || ys[i].len() != d {
                return Err(Error::SchemaMismatch(format!(
                    "observation {i} has inconsistent dimensions"
                )));
            }
        }
        Ok(Self { us, ys, m, d })
    }

    pub fn n(&self) -> usize {
        self.us.len()
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn decision_dim(&self) -> usize {
        self.d
    }

    pub fn obs(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.us[i], &self.ys[i])
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.us
    }

    pub fn decisions(&self) -> &[Vec<f64>] {
        &self.ys
    }

    /// Check that observation dimensions match a problem's `(m, d)`.
    pub fn check_dims(&self, prob: &ProblemInstance) -> Result<()> {
        let dims = prob.dims();
        if self.m != dims.m {
            return Err(Error::DimensionMismatch {
                what: "dataset input dimension",
                expected: dims.m,
                got: self.m,
            });
        }
        if self.d != dims.d {
            return Err(Error::DimensionMismatch {
                what: "dataset decision dimension",
                expected: dims.d,
                got: self.d,
            });
        }
        Ok(())
    }
}

/// The evaluated risk plus the per-observation projections that attain it.
#[derive(Debug, Clone)]
pub struct RiskValue {
    /// `Q_n(theta; eps)`: mean squared projection distance.
    pub q: f64,
    /// `(x_i*, ||y_i - x_i*||^2)` per observation, in dataset order.
    pub per_obs: Vec<(Vec<f64>, f64)>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Is `x` an eps-solution of the forward problem at `(u, theta)`?
///
/// True iff `f(x) <= V + eps + tol` and `g(x,u) <= eps + tol` componentwise
/// with `tol = FEASIBILITY_TOL`.
pub fn eps_solution_set_membership(
    prob: &ProblemInstance,
    x: &[f64],
    u: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<bool> {
    if eps < 0.0 {
        return Err(Error::InvalidArgument(format!("negative eps: {eps}")));
    }
    let g = prob.constraints(x, u)?;
    if g.iter().any(|&gj| gj > eps + FEASIBILITY_TOL) {
        return Ok(false);
    }
    let value = prob.solve_forward(u, theta)?.value;
    let f = match prob.objective(x, u, theta) {
        Ok(f) => f,
        // Outside the objective's domain (LogSimplex logs) means not a member.
        Err(Error::Domain(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(f <= value + eps + FEASIBILITY_TOL)
}

/// Project `y` onto `S(u, theta; eps)`; returns the projection and its
/// squared distance.
pub fn project_to_eps_solutions(
    prob: &ProblemInstance,
    y: &[f64],
    u: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<(Vec<f64>, f64)> {
    if eps < 0.0 {
        return Err(Error::InvalidArgument(format!("negative eps: {eps}")));
    }
    let solution = prob.solve_forward(u, theta)?;
    if eps == 0.0 {
        let x = match &solution.set_kind {
            SetKind::Singleton => solution.point.clone(),
            SetKind::Interval { lo, hi } => y
                .iter()
                .enumerate()
                .map(|(k, &yk)| yk.clamp(lo[k], hi[k]))
                .collect(),
        };
        let dist = sq_dist(y, &x);
        return Ok((x, dist));
    }

    let x = match prob.family() {
        Family::LinearBox { lo, hi } => {
            project_linear_box(y, u, theta, lo, hi, solution.value, eps)
        }
        Family::SeparableQuadBox {
            a,
            c,
            shift,
            lo,
            hi,
        } => {
            if lo.len() == 1 {
                let b = c * theta[0] + u[0] + shift[0];
                vec![project_quad_interval(
                    y[0],
                    *a,
                    b,
                    0.0,
                    lo[0],
                    hi[0],
                    solution.value,
                    eps,
                )]
            } else {
                project_quad_budget(y, u, theta, *a, *c, shift, lo, hi, solution.value, eps)
            }
        }
        Family::ComfortQuad => {
            // f(x) = A x^2 + B x + C with A = theta_1 + 1.
            let lead = theta[0] + 1.0;
            let lin = -2.0 * (76.0 * theta[0] + theta[1] + u[0]);
            let constant = theta[0] * 76.0 * 76.0 + (theta[1] + u[0]) * (theta[1] + u[0]);
            vec![project_quad_interval(
                y[0],
                lead,
                -lin,
                constant,
                70.0,
                76.0,
                solution.value,
                eps,
            )]
        }
        Family::LogSimplex { p } => {
            project_log_simplex(y, u, theta, *p, solution.value, eps)?
        }
    };
    let dist = sq_dist(y, &x);
    Ok((x, dist))
}

/// `LinearBox`: project onto the eps-relaxed box intersected with the
/// halfspace `(theta+u)'x <= V + eps`; closed form for d = 1, a scalar dual
/// bisection otherwise.
fn project_linear_box(
    y: &[f64],
    u: &[f64],
    theta: &[f64],
    lo: &[f64],
    hi: &[f64],
    value: f64,
    eps: f64,
) -> Vec<f64> {
    let d = lo.len();
    let slopes: Vec<f64> = (0..d).map(|k| theta[k] + u[k]).collect();
    let rlo: Vec<f64> = lo.iter().map(|&l| l - eps).collect();
    let rhi: Vec<f64> = hi.iter().map(|&h| h + eps).collect();

    if d == 1 {
        let s = slopes[0];
        let (ilo, ihi) = if s > 0.0 {
            (rlo[0], rhi[0].min((value + eps) / s))
        } else if s < 0.0 {
            (rlo[0].max((value + eps) / s), rhi[0])
        } else {
            (rlo[0], rhi[0])
        };
        return vec![y[0].clamp(ilo, ihi)];
    }

    let clamp_shift = |mu: f64| -> Vec<f64> {
        (0..d)
            .map(|k| (y[k] - mu * slopes[k]).clamp(rlo[k], rhi[k]))
            .collect()
    };
    let cost = |x: &[f64]| -> f64 { x.iter().zip(&slopes).map(|(&xk, &s)| s * xk).sum() };

    let x0 = clamp_shift(0.0);
    if cost(&x0) <= value + eps {
        return x0;
    }
    // The halfspace is active: bisect the dual scalar so (theta+u)'x = V + eps.
    let mut mu_lo = 0.0;
    let mut mu_hi = 1.0;
    for _ in 0..200 {
        if cost(&clamp_shift(mu_hi)) <= value + eps {
            break;
        }
        mu_hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (mu_lo + mu_hi);
        let c = cost(&clamp_shift(mid));
        if (c - (value + eps)).abs() <= BUDGET_TOL {
            return clamp_shift(mid);
        }
        if c > value + eps {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }
    clamp_shift(mu_hi)
}

/// Scalar strictly convex quadratic `f(x) = a x^2 - b x + c0`: the
/// eps-solution set is the level-set interval intersected with the relaxed
/// box; projection is a clamp.
#[allow(clippy::too_many_arguments)]
fn project_quad_interval(
    y: f64,
    a: f64,
    b: f64,
    c0: f64,
    lo: f64,
    hi: f64,
    value: f64,
    eps: f64,
) -> f64 {
    let center = b / (2.0 * a);
    let f_min = c0 - b * b / (4.0 * a);
    let radius = ((value + eps - f_min).max(0.0) / a).sqrt();
    let ilo = (lo - eps).max(center - radius);
    let ihi = (hi + eps).min(center + radius);
    y.clamp(ilo, ihi)
}

/// Separable quadratic in d > 1: bisection on the Lagrange multiplier of the
/// budget constraint `sum_k phi_k(x_k) <= V + eps`; the inner projection is
/// a coordinatewise closed form.
#[allow(clippy::too_many_arguments)]
fn project_quad_budget(
    y: &[f64],
    u: &[f64],
    theta: &[f64],
    a: f64,
    c: f64,
    shift: &[f64],
    lo: &[f64],
    hi: &[f64],
    value: f64,
    eps: f64,
) -> Vec<f64> {
    let d = lo.len();
    let b: Vec<f64> = (0..d).map(|k| c * theta[k] + u[k] + shift[k]).collect();
    let point_at = |t: f64| -> Vec<f64> {
        (0..d)
            .map(|k| {
                let xk = (y[k] + 0.5 * t * b[k]) / (1.0 + t * a);
                xk.clamp(lo[k] - eps, hi[k] + eps)
            })
            .collect()
    };
    let budget = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&b)
            .map(|(&xk, &bk)| a * xk * xk - bk * xk)
            .sum::<f64>()
            - (value + eps)
    };

    let x0 = point_at(0.0);
    if budget(&x0) <= 0.0 {
        return x0;
    }
    let mut t_lo = 0.0;
    let mut t_hi = 1.0;
    for _ in 0..200 {
        if budget(&point_at(t_hi)) <= 0.0 {
            break;
        }
        t_hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        let r = budget(&point_at(mid));
        if r.abs() <= BUDGET_TOL {
            return point_at(mid);
        }
        if r > 0.0 {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    point_at(t_hi)
}

/// `LogSimplex` with eps > 0: nested scalar bisections. The outer multiplier
/// enforces the objective budget, the inner one keeps the coordinate sum in
/// `[1 - eps, 1 + eps]`; each coordinate subproblem has a closed-form root.
fn project_log_simplex(
    y: &[f64],
    u: &[f64],
    theta: &[f64],
    p: usize,
    value: f64,
    eps: f64,
) -> Result<Vec<f64>> {
    let d = p + 1;
    let weight = |k: usize| if k < p { theta[k] } else { 1.0 };

    // argmin over x_k >= -eps of (x-y)^2 - t*w*ln(x+u) + mu*x.
    let coord = |k: usize, t: f64, mu: f64| -> f64 {
        let (yk, uk, wk) = (y[k], u[k], weight(k));
        let root = if t == 0.0 {
            yk - 0.5 * mu
        } else {
            let b2 = 2.0 * uk - 2.0 * yk + mu;
            let c2 = mu * uk - 2.0 * yk * uk - t * wk;
            (-b2 + (b2 * b2 - 8.0 * c2).max(0.0).sqrt()) / 4.0
        };
        root.max(-eps)
    };

    let inner = |t: f64| -> Vec<f64> {
        let sum_at = |mu: f64| -> f64 { (0..d).map(|k| coord(k, t, mu)).sum() };
        let s0 = sum_at(0.0);
        let (target, mut mu_lo, mut mu_hi) = if s0 > 1.0 + eps {
            let mut hi = 1.0;
            for _ in 0..200 {
                if sum_at(hi) <= 1.0 + eps {
                    break;
                }
                hi *= 2.0;
            }
            (1.0 + eps, 0.0, hi)
        } else if s0 < 1.0 - eps {
            let mut lo = -1.0;
            for _ in 0..200 {
                if sum_at(lo) >= 1.0 - eps {
                    break;
                }
                lo *= 2.0;
            }
            (1.0 - eps, lo, 0.0)
        } else {
            return (0..d).map(|k| coord(k, t, 0.0)).collect();
        };
        let mut mu = 0.5 * (mu_lo + mu_hi);
        for _ in 0..200 {
            mu = 0.5 * (mu_lo + mu_hi);
            let s = sum_at(mu);
            if (s - target).abs() <= 1e-12 {
                break;
            }
            if s > target {
                mu_lo = mu;
            } else {
                mu_hi = mu;
            }
        }
        (0..d).map(|k| coord(k, t, mu)).collect()
    };

    let budget = |x: &[f64]| -> f64 {
        let mut f = 0.0;
        for k in 0..d {
            let arg = x[k] + u[k];
            if arg <= 0.0 {
                return f64::INFINITY;
            }
            f -= weight(k) * arg.ln();
        }
        f - (value + eps)
    };

    let x0 = inner(0.0);
    if budget(&x0) <= 0.0 {
        return Ok(x0);
    }
    let mut t_lo = 0.0;
    let mut t_hi = 1.0;
    let mut bracketed = false;
    for _ in 0..200 {
        if budget(&inner(t_hi)) <= 0.0 {
            bracketed = true;
            break;
        }
        t_hi *= 2.0;
    }
    if !bracketed {
        return Err(Error::BracketFailure(
            "LogSimplex eps-projection: budget multiplier bracket not found".into(),
        ));
    }
    let mut x = inner(t_hi);
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        let xm = inner(mid);
        let r = budget(&xm);
        if r.abs() <= BUDGET_TOL {
            return Ok(xm);
        }
        if r > 0.0 {
            t_lo = mid;
        } else {
            t_hi = mid;
            x = xm;
        }
    }
    Ok(x)
}

/// Lean per-observation squared projection distance (no point storage).
fn obs_sq_dist(
    prob: &ProblemInstance,
    y: &[f64],
    u: &[f64],
    theta: &[f64],
    eps: f64,
) -> Result<f64> {
    Ok(project_to_eps_solutions(prob, y, u, theta, eps)?.1)
}

/// `Q_n(theta; eps)` together with the attaining projections.
///
/// Deterministic for any worker count: the mean is reduced in dataset order.
pub fn risk_saa(
    prob: &ProblemInstance,
    data: &Dataset,
    theta: &[f64],
    eps: f64,
) -> Result<RiskValue> {
    data.check_dims(prob)?;
    let n = data.n();
    let per_obs: Vec<(Vec<f64>, f64)> = if n >= PAR_THRESHOLD {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (u, y) = data.obs(i);
                project_to_eps_solutions(prob, y, u, theta, eps)
            })
            .collect::<Result<_>>()?
    } else {
        (0..n)
            .map(|i| {
                let (u, y) = data.obs(i);
                project_to_eps_solutions(prob, y, u, theta, eps)
            })
            .collect::<Result<_>>()?
    };
    let q = per_obs.iter().map(|(_, d)| d).sum::<f64>() / n as f64;
    Ok(RiskValue { q, per_obs })
}

/// `Q_n(theta; eps)` without materializing the projections; used by the
/// enumeration estimator's inner loop.
pub(crate) fn risk_value(
    prob: &ProblemInstance,
    data: &Dataset,
    theta: &[f64],
    eps: f64,
) -> Result<f64> {
    data.check_dims(prob)?;
    let n = data.n();
    let total = if n >= PAR_THRESHOLD {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (u, y) = data.obs(i);
                obs_sq_dist(prob, y, u, theta, eps)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>()
    } else {
        let mut acc = 0.0;
        for i in 0..n {
            let (u, y) = data.obs(i);
            acc += obs_sq_dist(prob, y, u, theta, eps)?;
        }
        acc
    };
    Ok(total / n as f64)
}

/// Monte Carlo estimate of the population risk `Q(theta; eps)` on a held-out
/// test sample.
pub fn population_risk(
    prob: &ProblemInstance,
    theta: &[f64],
    eps: f64,
    test_data: &Dataset,
) -> Result<f64> {
    risk_value(prob, test_data, theta, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::ProblemInstance;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fop_a() -> ProblemInstance {
        ProblemInstance::linear_box(vec![-1.0], vec![1.0]).unwrap()
    }

    fn fop_b() -> ProblemInstance {
        ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0], vec![0.0], vec![1.0]).unwrap()
    }

    fn counterexample() -> ProblemInstance {
        ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0], vec![0.0], vec![10.0]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let a = fop_a();
        assert!(eps_solution_set_membership(&a, &[-1.0], &[0.5], &[1.0], 0.0).unwrap());
        assert!(eps_solution_set_membership(&a, &[-0.9], &[0.5], &[1.0], 0.15).unwrap());
        let b = fop_b();
        assert!(!eps_solution_set_membership(&b, &[0.80], &[1.0], &[0.5], 0.0).unwrap());
    }

    #[test]
    fn membership_matches_grid_scan() {
        // Derived oracle: scan the level set 1.5x <= -1.5 + 0.15 on a grid.
        let a = fop_a();
        for i in 0..=400 {
            let x = -1.2 + 2.4 * i as f64 / 400.0;
            let member = eps_solution_set_membership(&a, &[x], &[0.5], &[1.0], 0.15).unwrap();
            let expected = 1.5 * x <= -1.5 + 0.15 + 1e-9 && (-1.15..=1.15).contains(&x);
            assert_eq!(member, expected, "mismatch at x = {x}");
        }
    }

    #[test]
    fn membership_rejects_negative_eps() {
        let a = fop_a();
        assert!(eps_solution_set_membership(&a, &[0.0], &[0.5], &[1.0], -1e-9).is_err());
    }

    #[test]
    fn projection_examples() {
        let b = fop_b();
        let (x, dist) = project_to_eps_solutions(&b, &[0.3], &[1.0], &[0.5], 0.0).unwrap();
        assert_abs_diff_eq!(x[0], 0.75, epsilon = 0.0);
        assert_abs_diff_eq!(dist, 0.2025, epsilon = 1e-15);

        let a = fop_a();
        let (x, dist) = project_to_eps_solutions(&a, &[0.0], &[0.5], &[1.0], 0.15).unwrap();
        assert_abs_diff_eq!(x[0], -0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(dist, 0.81, epsilon = 1e-11);

        let (x, dist) = project_to_eps_solutions(&a, &[-2.0], &[0.5], &[1.0], 0.0).unwrap();
        assert_abs_diff_eq!(x[0], -1.0, epsilon = 0.0);
        assert_abs_diff_eq!(dist, 1.0, epsilon = 0.0);
    }

    #[test]
    fn projection_brute_force_oracle() {
        // 10^6-point grid on the relaxed box, tolerance 1e-5.
        let a = fop_a();
        let (u, theta, eps, y) = (vec![0.5], vec![1.0], 0.15, vec![0.0]);
        let (_, dist) = project_to_eps_solutions(&a, &y, &u, &theta, eps).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=1_000_000 {
            let x = -1.15 + 2.30 * i as f64 / 1_000_000.0;
            if eps_solution_set_membership(&a, &[x], &u, &theta, eps).unwrap() {
                best = best.min((x - y[0]) * (x - y[0]));
            }
        }
        assert_abs_diff_eq!(dist, best, epsilon = 1e-5);
    }

    #[test]
    fn projection_rejects_negative_eps() {
        let b = fop_b();
        assert!(project_to_eps_solutions(&b, &[0.0], &[1.0], &[0.5], -0.1).is_err());
    }

    #[test]
    fn risk_examples() {
        let b = fop_b();
        let data = Dataset::new(vec![vec![1.0]], vec![vec![0.3]]).unwrap();
        let risk = risk_saa(&b, &data, &[0.5], 0.0).unwrap();
        assert_abs_diff_eq!(risk.q, 0.2025, epsilon = 1e-15);

        // Noiseless data at theta0 has zero risk at theta0.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta0 = [0.5];
        let mut us = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            let u = vec![rng.gen_range(0.0..2.0)];
            let y = b.solve_forward(&u, &theta0).unwrap().point;
            us.push(u);
            ys.push(y);
        }
        let data = Dataset::new(us, ys).unwrap();
        let risk = risk_saa(&b, &data, &theta0, 0.0).unwrap();
        assert_abs_diff_eq!(risk.q, 0.0, epsilon = 1e-18);
    }

    #[test]
    fn risk_value_matches_risk_saa() {
        let b = fop_b();
        let data = Dataset::new(
            vec![vec![1.0], vec![0.3], vec![1.7]],
            vec![vec![0.3], vec![0.9], vec![0.2]],
        )
        .unwrap();
        for eps in [0.0, 0.05, 0.3] {
            let full = risk_saa(&b, &data, &[0.7], eps).unwrap();
            let lean = risk_value(&b, &data, &[0.7], eps).unwrap();
            assert_abs_diff_eq!(full.q, lean, epsilon = 0.0);
            let mean = full.per_obs.iter().map(|(_, d)| d).sum::<f64>() / data.n() as f64;
            assert_abs_diff_eq!(full.q, mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn eps_monotonicity_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let problems = vec![fop_a(), fop_b(), counterexample()];
        for prob in &problems {
            let mut us = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..40 {
                us.push(vec![rng.gen_range(0.0..2.0)]);
                ys.push(vec![rng.gen_range(-1.0..3.0)]);
            }
            let data = Dataset::new(us, ys).unwrap();
            for _ in 0..20 {
                let theta = [rng.gen_range(0.0..2.0)];
                let mut last = f64::INFINITY;
                for eps in [0.0, 1e-3, 1e-2, 1e-1, 0.5] {
                    let q = risk_value(prob, &data, &theta, eps).unwrap();
                    assert!(
                        q <= last + 1e-10,
                        "risk increased in eps for theta = {theta:?}"
                    );
                    last = q;
                }
            }
        }
    }

    #[test]
    fn eps_monotonicity_multidim() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let quad =
            ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0; 3], vec![0.0; 3], vec![1.0; 3])
                .unwrap();
        let simplex = ProblemInstance::log_simplex(2).unwrap();
        for prob in [&quad, &simplex] {
            let dims = prob.dims();
            let mut us = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..15 {
                us.push((0..dims.m).map(|_| rng.gen_range(0.8..2.0)).collect());
                ys.push((0..dims.d).map(|_| rng.gen_range(-0.5..1.5)).collect());
            }
            let data = Dataset::new(us, ys).unwrap();
            for _ in 0..8 {
                let theta: Vec<f64> = (0..dims.p).map(|_| rng.gen_range(0.6..1.9)).collect();
                let mut last = f64::INFINITY;
                for eps in [0.0, 1e-3, 1e-2, 1e-1] {
                    let q = risk_value(prob, &data, &theta, eps).unwrap();
                    assert!(q <= last + 1e-8, "eps-monotonicity failed for {prob:?}");
                    last = q;
                }
            }
        }
    }

    #[test]
    fn projections_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let problems = vec![
            fop_a(),
            fop_b(),
            ProblemInstance::log_simplex(2).unwrap(),
            ProblemInstance::comfort_quad().unwrap(),
        ];
        for prob in &problems {
            let dims = prob.dims();
            for _ in 0..60 {
                let (u, theta, y): (Vec<f64>, Vec<f64>, Vec<f64>) = match prob.family() {
                    Family::ComfortQuad => (
                        vec![rng.gen_range(55.0..95.0)],
                        vec![rng.gen_range(0.1..3.0), rng.gen_range(0.0..8.0)],
                        vec![rng.gen_range(65.0..80.0)],
                    ),
                    _ => (
                        (0..dims.m).map(|_| rng.gen_range(0.6..2.0)).collect(),
                        (0..dims.p).map(|_| rng.gen_range(0.6..2.0)).collect(),
                        (0..dims.d).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                    ),
                };
                for eps in [0.0, 1e-3, 0.1] {
                    let (x, _) = project_to_eps_solutions(prob, &y, &u, &theta, eps).unwrap();
                    assert!(
                        eps_solution_set_membership(prob, &x, &u, &theta, eps).unwrap(),
                        "projection not a member: {prob:?} eps={eps}"
                    );
                }
            }
        }
    }

    #[test]
    fn risk_grid_oracle_d1() {
        // risk_saa must match brute-force projection over a 10^5-point grid
        // spanning the eps-relaxed feasible range.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let problems = vec![(fop_a(), -1.0f64), (fop_b(), 0.0f64)];
        for _ in 0..20 {
            for (prob, box_lo) in &problems {
                let theta = [rng.gen_range(0.0..2.0)];
                let eps = if prob.is_strictly_convex() { 0.0 } else { 0.01 };
                let (grid_lo, grid_hi) = (box_lo - eps - 0.05, 1.0 + eps + 0.05);
                let mut us = Vec::new();
                let mut ys = Vec::new();
                for _ in 0..10 {
                    us.push(vec![rng.gen_range(-1.0..2.0)]);
                    ys.push(vec![rng.gen_range(-0.5..1.5)]);
                }
                let data = Dataset::new(us.clone(), ys.clone()).unwrap();
                let q = risk_value(prob, &data, &theta, eps).unwrap();
                let mut brute = 0.0;
                for i in 0..data.n() {
                    // The forward solution is always a member; grids alone
                    // can miss razor-thin level sets at clamped solutions.
                    let star = prob.solve_forward(&us[i], &theta).unwrap().point[0];
                    let mut best = (star - ys[i][0]) * (star - ys[i][0]);
                    for j in 0..=100_000 {
                        let x = grid_lo + (grid_hi - grid_lo) * j as f64 / 100_000.0;
                        if eps_solution_set_membership(prob, &[x], &us[i], &theta, eps).unwrap() {
                            best = best.min((x - ys[i][0]) * (x - ys[i][0]));
                        }
                    }
                    brute += best;
                }
                brute /= data.n() as f64;
                // Two-sided: the grid over-estimates by its resolution and
                // can under-estimate by the 1e-9 membership slack.
                assert_abs_diff_eq!(q, brute, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn strict_convexity_gives_continuity() {
        // |Q_n(theta + delta) - Q_n(theta)| -> 0 as delta -> 0.
        let b = fop_b();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut us = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..30 {
            us.push(vec![rng.gen_range(0.0..2.0)]);
            ys.push(vec![rng.gen_range(-1.0..2.0)]);
        }
        let data = Dataset::new(us, ys).unwrap();
        let theta = [0.83];
        let q0 = risk_value(&b, &data, &theta, 0.0).unwrap();
        let mut last_gap = f64::INFINITY;
        for exp in 2..=6 {
            let delta = 10f64.powi(-exp);
            let q = risk_value(&b, &data, &[theta[0] + delta], 0.0).unwrap();
            let gap = (q - q0).abs();
            assert!(gap <= last_gap + 1e-12, "risk gap not shrinking");
            last_gap = gap;
        }
        assert!(last_gap < 1e-4);
    }

    #[test]
    fn population_risk_counterexample_closed_form() {
        // The four-point joint law gives Q(10) = 1 exactly.
        let prob = counterexample();
        let test = Dataset::new(
            vec![vec![0.0], vec![0.0], vec![20.0], vec![20.0]],
            vec![vec![4.0], vec![6.0], vec![9.0], vec![11.0]],
        )
        .unwrap();
        let q = population_risk(&prob, &[10.0], 0.0, &test).unwrap();
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![1.0]; 2]).is_err());
    }
}
