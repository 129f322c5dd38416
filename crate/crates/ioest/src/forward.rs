//! Parametric forward problem families: objectives, constraints, exact
//! solvers, Lagrangian dual functions and feasible-set projections.
//!
//! Every family is a convex program `min f(x,u,theta) s.t. g(x,u) <= 0`
//! whose constraints do not depend on `theta`. Four families are supported:
//!
//! * [`Family::LinearBox`] — linear cost `(theta+u)'x` over a box,
//! * [`Family::SeparableQuadBox`] — `sum_k a*x_k^2 - (c*theta_k+u_k+s_k)*x_k`
//!   over a box,
//! * [`Family::LogSimplex`] — weighted negative logs over the standard
//!   simplex,
//! * [`Family::ComfortQuad`] — a scalar comfort/energy tradeoff quadratic
//!   over the setpoint interval `[70, 76]`.
//!
//! All operations are pure functions over immutable data.

use crate::error::{Error, Result};

/// Feasibility slack allowed when checking `g(x,u) <= 0`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Maximum duality gap for the exposed strong-duality witness.
pub const DUALITY_GAP_TOL: f64 = 1e-8;
/// Residual tolerance for scalar root finding (simplex solver).
pub const ROOT_TOL: f64 = 1e-10;

/// Problem dimensions: decision `d`, input `m`, parameter `p`, constraints `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub d: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
}

/// One of the supported forward families together with its fixed coefficients.
#[derive(Debug, Clone)]
pub enum Family {
    /// `min (theta+u)'x` over `[lo_k, hi_k]` per coordinate; `d = m = p`.
    LinearBox { lo: Vec<f64>, hi: Vec<f64> },
    /// `min sum_k a*x_k^2 - (c*theta_k + u_k + shift_k)*x_k` over a box.
    ///
    /// `a > 0` for strict convexity; `c` is 0 or 1 (0 freezes `theta` out of
    /// the objective, which turns the instance into a pure data generator).
    SeparableQuadBox {
        a: f64,
        c: f64,
        shift: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `min -sum_{k<=p} theta_k ln(x_k+u_k) - ln(x_{p+1}+u_{p+1})` over the
    /// standard simplex `{x >= 0, sum x = 1}`; `d = p + 1`.
    LogSimplex { p: usize },
    /// `min theta_1 (x-76)^2 + (x - theta_2 - u)^2` over `x in [70, 76]`.
    ComfortQuad,
}

/// A forward optimization problem: a family plus its fixed coefficients.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    family: Family,
}

/// Shape of the solution set returned by [`ProblemInstance::solve_forward`].
///
/// `Interval` only occurs for `LinearBox` when some cost coefficient
/// `theta_k + u_k` is exactly zero; downstream distance computations must
/// project onto the interval rather than using `point`.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Singleton,
    Interval { lo: Vec<f64>, hi: Vec<f64> },
}

/// A minimizer, the optimal value, and the shape of the solution set.
#[derive(Debug, Clone)]
pub struct SolutionResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub set_kind: SetKind,
}

/// Value of the Lagrangian dual function `h(lambda, u, theta)`.
///
/// Unbounded-below Lagrangians are reported with an explicit sentinel so no
/// caller ever does arithmetic on a fake large negative float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualValue {
    Finite(f64),
    NegInfinity,
}

impl DualValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, DualValue::Finite(_))
    }

    /// Finite value, or `None` for the sentinel.
    pub fn finite(&self) -> Option<f64> {
        match self {
            DualValue::Finite(v) => Some(*v),
            DualValue::NegInfinity => None,
        }
    }
}

/// The hyperrectangular parameter set `Theta` (closed, bounded, convex).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                what: "ParamBox bounds",
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("empty ParamBox".into()));
        }
        for k in 0..lo.len() {
            if lo[k].is_nan() || hi[k].is_nan() || lo[k] > hi[k] {
                return Err(Error::InvalidArgument(format!(
                    "ParamBox axis {k}: lo {} > hi {}",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&t, (&l, &h))| t >= l - tol && t <= h + tol)
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&t, (&l, &h))| t.clamp(l, h))
            .collect()
    }

    /// Euclidean diameter `||hi - lo||`.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| 0.5 * (l + h))
            .collect()
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

impl ProblemInstance {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::LinearBox { lo, hi } => {
                check_len("LinearBox bounds", lo.len(), hi.len())?;
                if lo.is_empty() {
                    return Err(Error::InvalidArgument("LinearBox: empty box".into()));
                }
                for k in 0..lo.len() {
                    if lo[k].is_nan() || hi[k].is_nan() || lo[k] >= hi[k] {
                        return Err(Error::InvalidArgument(format!(
                            "LinearBox axis {k}: lo must be < hi"
                        )));
                    }
                }
            }
            Family::SeparableQuadBox {
                a,
                c,
                shift,
                lo,
                hi,
            } => {
                if !a.is_finite() || *a <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "SeparableQuadBox: a must be positive".into(),
                    ));
                }
                if *c != 0.0 && *c != 1.0 {
                    return Err(Error::InvalidArgument(
                        "SeparableQuadBox: c must be 0 or 1".into(),
                    ));
                }
                check_len("SeparableQuadBox bounds", lo.len(), hi.len())?;
                check_len("SeparableQuadBox shift", lo.len(), shift.len())?;
                if lo.is_empty() {
                    return Err(Error::InvalidArgument("SeparableQuadBox: empty box".into()));
                }
                for k in 0..lo.len() {
                    if lo[k].is_nan() || hi[k].is_nan() || lo[k] >= hi[k] {
                        return Err(Error::InvalidArgument(format!(
                            "SeparableQuadBox axis {k}: lo must be < hi"
                        )));
                    }
                }
            }
            Family::LogSimplex { p } => {
                if *p == 0 {
                    return Err(Error::InvalidArgument("LogSimplex: p must be >= 1".into()));
                }
            }
            Family::ComfortQuad => {}
        }
        Ok(Self { family })
    }

    pub fn linear_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(Family::LinearBox { lo, hi })
    }

    pub fn separable_quad_box(
        a: f64,
        c: f64,
        shift: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Result<Self> {
        Self::new(Family::SeparableQuadBox {
            a,
            c,
            shift,
            lo,
            hi,
        })
    }

    pub fn log_simplex(p: usize) -> Result<Self> {
        Self::new(Family::LogSimplex { p })
    }

    pub fn comfort_quad() -> Result<Self> {
        Self::new(Family::ComfortQuad)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_strictly_convex(&self) -> bool {
        !matches!(self.family, Family::LinearBox { .. })
    }

    pub fn dims(&self) -> Dims {
        match &self.family {
            Family::LinearBox { lo, .. } => {
                let d = lo.len();
                Dims {
                    d,
                    m: d,
                    p: d,
                    q: 2 * d,
                }
            }
            Family::SeparableQuadBox { lo, .. } => {
                let d = lo.len();
                Dims {
                    d,
                    m: d,
                    p: d,
                    q: 2 * d,
                }
            }
            Family::LogSimplex { p } => {
                let d = p + 1;
                Dims {
                    d,
                    m: d,
                    p: *p,
                    q: d + 2,
                }
            }
            Family::ComfortQuad => Dims {
                d: 1,
                m: 1,
                p: 2,
                q: 2,
            },
        }
    }

    fn check_xut(&self, x: Option<&[f64]>, u: &[f64], theta: Option<&[f64]>) -> Result<()> {
        let dims = self.dims();
        if let Some(x) = x {
            check_len("decision vector x", dims.d, x.len())?;
        }
        check_len("input vector u", dims.m, u.len())?;
        if let Some(theta) = theta {
            check_len("parameter vector theta", dims.p, theta.len())?;
        }
        Ok(())
    }

    /// Objective `f(x, u, theta)`.
    ///
    /// For `LogSimplex` every log argument `x_k + u_k` must be positive.
    pub fn objective(&self, x: &[f64], u: &[f64], theta: &[f64]) -> Result<f64> {
        self.check_xut(Some(x), u, Some(theta))?;
        match &self.family {
            Family::LinearBox { .. } => Ok(x
                .iter()
                .zip(theta.iter().zip(u))
                .map(|(&xk, (&tk, &uk))| (tk + uk) * xk)
                .sum()),
            Family::SeparableQuadBox {
                a, c, shift, ..
            } => Ok(x
                .iter()
                .enumerate()
                .map(|(k, &xk)| a * xk * xk - (c * theta[k] + u[k] + shift[k]) * xk)
                .sum()),
            Family::LogSimplex { p } => {
                let mut total = 0.0;
                for k in 0..=*p {
                    let arg = x[k] + u[k];
                    if arg <= 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex objective: x_{k} + u_{k} = {arg} is not positive"
                        )));
                    }
                    let weight = if k < *p { theta[k] } else { 1.0 };
                    total -= weight * arg.ln();
                }
                Ok(total)
            }
            Family::ComfortQuad => {
                let xv = x[0];
                Ok(theta[0] * (xv - 76.0) * (xv - 76.0)
                    + (xv - theta[1] - u[0]) * (xv - theta[1] - u[0]))
            }
        }
    }

    /// Constraint values `g(x, u)`; nonpositive entries are feasible.
    ///
    /// Boxes emit `lo_k - x_k` for all k then `x_k - hi_k`; the simplex emits
    /// the `d` nonnegativity rows then `sum x - 1` and `1 - sum x`.
    pub fn constraints(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(Some(x), u, None)?;
        match &self.family {
            Family::LinearBox { lo, hi }
            | Family::SeparableQuadBox { lo, hi, .. } => {
                let mut g = Vec::with_capacity(2 * x.len());
                g.extend(x.iter().zip(lo).map(|(&xk, &l)| l - xk));
                g.extend(x.iter().zip(hi).map(|(&xk, &h)| xk - h));
                Ok(g)
            }
            Family::LogSimplex { .. } => {
                let mut g = Vec::with_capacity(x.len() + 2);
                g.extend(x.iter().map(|&xk| -xk));
                let s: f64 = x.iter().sum();
                g.push(s - 1.0);
                g.push(1.0 - s);
                Ok(g)
            }
            Family::ComfortQuad => Ok(vec![70.0 - x[0], x[0] - 76.0]),
        }
    }

    /// Gradient `∇_x f(x, u, theta)`.
    pub fn grad_x(&self, x: &[f64], u: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(Some(x), u, Some(theta))?;
        match &self.family {
            Family::LinearBox { .. } => {
                Ok(theta.iter().zip(u).map(|(&t, &uk)| t + uk).collect())
            }
            Family::SeparableQuadBox {
                a, c, shift, ..
            } => Ok(x
                .iter()
                .enumerate()
                .map(|(k, &xk)| 2.0 * a * xk - (c * theta[k] + u[k] + shift[k]))
                .collect()),
            Family::LogSimplex { p } => {
                let mut g = Vec::with_capacity(*p + 1);
                for k in 0..=*p {
                    let arg = x[k] + u[k];
                    if arg == 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex gradient: x_{k} + u_{k} is zero"
                        )));
                    }
                    let weight = if k < *p { theta[k] } else { 1.0 };
                    g.push(-weight / arg);
                }
                Ok(g)
            }
            Family::ComfortQuad => Ok(vec![
                2.0 * theta[0] * (x[0] - 76.0) + 2.0 * (x[0] - theta[1] - u[0]),
            ]),
        }
    }

    /// Gradient `∂f/∂theta` at a fixed decision `x` (f is affine in theta).
    pub fn grad_theta(&self, x: &[f64], u: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(Some(x), u, Some(theta))?;
        match &self.family {
            Family::LinearBox { .. } => Ok(x.to_vec()),
            Family::SeparableQuadBox { c, .. } => Ok(x.iter().map(|&xk| -c * xk).collect()),
            Family::LogSimplex { p } => {
                let mut g = Vec::with_capacity(*p);
                for k in 0..*p {
                    let arg = x[k] + u[k];
                    if arg <= 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex theta-gradient: x_{k} + u_{k} = {arg} is not positive"
                        )));
                    }
                    g.push(-arg.ln());
                }
                Ok(g)
            }
            Family::ComfortQuad => Ok(vec![
                (x[0] - 76.0) * (x[0] - 76.0),
                -2.0 * (x[0] - theta[1] - u[0]),
            ]),
        }
    }

    /// Gradient `∇_x g_j(x, u)` of a single constraint (constant in x for
    /// every supported family).
    pub fn constraint_gradient(&self, j: usize, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(Some(x), u, None)?;
        let Dims { d, q, .. } = self.dims();
        if j >= q {
            return Err(Error::InvalidArgument(format!(
                "constraint index {j} out of range (q = {q})"
            )));
        }
        let mut grad = vec![0.0; d];
        match &self.family {
            Family::LinearBox { .. }
            | Family::SeparableQuadBox { .. }
            | Family::ComfortQuad => {
                if j < d {
                    grad[j] = -1.0;
                } else {
                    grad[j - d] = 1.0;
                }
            }
            Family::LogSimplex { .. } => {
                if j < d {
                    grad[j] = -1.0;
                } else if j == d {
                    grad.iter_mut().for_each(|g| *g = 1.0);
                } else {
                    grad.iter_mut().for_each(|g| *g = -1.0);
                }
            }
        }
        Ok(grad)
    }

    /// Exact minimizer, optimal value and solution-set shape.
    pub fn solve_forward(&self, u: &[f64], theta: &[f64]) -> Result<SolutionResult> {
        self.check_xut(None, u, Some(theta))?;
        match &self.family {
            Family::LinearBox { lo, hi } => {
                let d = lo.len();
                let mut point = vec![0.0; d];
                let mut int_lo = vec![0.0; d];
                let mut int_hi = vec![0.0; d];
                let mut multivalued = false;
                for k in 0..d {
                    let slope = theta[k] + u[k];
                    if slope > 0.0 {
                        point[k] = lo[k];
                        int_lo[k] = lo[k];
                        int_hi[k] = lo[k];
                    } else if slope < 0.0 {
                        point[k] = hi[k];
                        int_lo[k] = hi[k];
                        int_hi[k] = hi[k];
                    } else {
                        multivalued = true;
                        point[k] = 0.5 * (lo[k] + hi[k]);
                        int_lo[k] = lo[k];
                        int_hi[k] = hi[k];
                    }
                }
                let value = self.objective(&point, u, theta)?;
                let set_kind = if multivalued {
                    SetKind::Interval {
                        lo: int_lo,
                        hi: int_hi,
                    }
                } else {
                    SetKind::Singleton
                };
                Ok(SolutionResult {
                    point,
                    value,
                    set_kind,
                })
            }
            Family::SeparableQuadBox {
                a,
                c,
                shift,
                lo,
                hi,
            } => {
                let point: Vec<f64> = (0..lo.len())
                    .map(|k| ((c * theta[k] + u[k] + shift[k]) / (2.0 * a)).clamp(lo[k], hi[k]))
                    .collect();
                let value = self.objective(&point, u, theta)?;
                Ok(SolutionResult {
                    point,
                    value,
                    set_kind: SetKind::Singleton,
                })
            }
            Family::LogSimplex { p } => {
                for (k, &tk) in theta.iter().enumerate() {
                    if tk <= 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex requires theta > 0 (theta_{k} = {tk})"
                        )));
                    }
                }
                for (k, &uk) in u.iter().enumerate() {
                    if uk <= 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex solver requires u > 0 (u_{k} = {uk})"
                        )));
                    }
                }
                let point = solve_log_simplex(*p, u, theta)?;
                let value = self.objective(&point, u, theta)?;
                Ok(SolutionResult {
                    point,
                    value,
                    set_kind: SetKind::Singleton,
                })
            }
            Family::ComfortQuad => {
                let x = ((76.0 * theta[0] + theta[1] + u[0]) / (theta[0] + 1.0)).clamp(70.0, 76.0);
                let point = vec![x];
                let value = self.objective(&point, u, theta)?;
                Ok(SolutionResult {
                    point,
                    value,
                    set_kind: SetKind::Singleton,
                })
            }
        }
    }

    /// Lagrangian dual function `h(lambda, u, theta) = inf_x L(x, lambda)`.
    ///
    /// Multipliers pair with the constraint rows emitted by
    /// [`ProblemInstance::constraints`].
    pub fn dual_function(&self, lambda: &[f64], u: &[f64], theta: &[f64]) -> Result<DualValue> {
        self.check_xut(None, u, Some(theta))?;
        let dims = self.dims();
        check_len("multiplier vector lambda", dims.q, lambda.len())?;
        for (j, &l) in lambda.iter().enumerate() {
            if l < 0.0 {
                return Err(Error::NegativeMultiplier { index: j, value: l });
            }
        }
        match &self.family {
            Family::LinearBox { lo, hi } => {
                let d = lo.len();
                let mut constant = 0.0;
                for k in 0..d {
                    let coef = (theta[k] + u[k]) - lambda[k] + lambda[d + k];
                    if coef != 0.0 {
                        return Ok(DualValue::NegInfinity);
                    }
                    constant += lambda[k] * lo[k] - lambda[d + k] * hi[k];
                }
                Ok(DualValue::Finite(constant))
            }
            Family::SeparableQuadBox {
                a,
                c,
                shift,
                lo,
                hi,
            } => {
                let d = lo.len();
                let mut total = 0.0;
                for k in 0..d {
                    let b = c * theta[k] + u[k] + shift[k];
                    // L restricted to x_k: a x^2 - (b + llo - lhi) x + llo*lo - lhi*hi
                    let lin = b + lambda[k] - lambda[d + k];
                    total += -(lin * lin) / (4.0 * a) + lambda[k] * lo[k] - lambda[d + k] * hi[k];
                }
                Ok(DualValue::Finite(total))
            }
            Family::LogSimplex { p } => {
                let d = *p + 1;
                let mu = lambda[d] - lambda[d + 1];
                let mut total = -mu;
                for k in 0..d {
                    let weight = if k < *p { theta[k] } else { 1.0 };
                    if weight <= 0.0 {
                        return Err(Error::Domain(format!(
                            "LogSimplex dual requires theta > 0 (theta_{k} = {weight})"
                        )));
                    }
                    let coef = mu - lambda[k];
                    if coef <= 0.0 {
                        // -w ln(x+u) + coef*x is unbounded below as x -> inf.
                        return Ok(DualValue::NegInfinity);
                    }
                    total += weight - weight * (weight / coef).ln() - coef * u[k];
                }
                Ok(DualValue::Finite(total))
            }
            Family::ComfortQuad => {
                let lead = theta[0] + 1.0;
                if lead <= 0.0 {
                    return Err(Error::Domain(
                        "ComfortQuad dual requires theta_1 > -1".into(),
                    ));
                }
                let lin = -2.0 * (76.0 * theta[0] + theta[1] + u[0]) - lambda[0] + lambda[1];
                let constant = theta[0] * 76.0 * 76.0
                    + (theta[1] + u[0]) * (theta[1] + u[0])
                    + 70.0 * lambda[0]
                    - 76.0 * lambda[1];
                Ok(DualValue::Finite(constant - lin * lin / (4.0 * lead)))
            }
        }
    }

    /// KKT multipliers of the exact forward solution: a witness `lambda*`
    /// with `f(x*) - h(lambda*) <= DUALITY_GAP_TOL`.
    pub fn dual_witness(&self, u: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(None, u, Some(theta))?;
        match &self.family {
            Family::LinearBox { lo, .. } => {
                let d = lo.len();
                let mut lambda = vec![0.0; 2 * d];
                for k in 0..d {
                    let slope = theta[k] + u[k];
                    if slope > 0.0 {
                        lambda[k] = slope;
                    } else if slope < 0.0 {
                        lambda[d + k] = -slope;
                    }
                }
                Ok(lambda)
            }
            Family::SeparableQuadBox {
                a,
                c,
                shift,
                lo,
                hi,
            } => {
                let d = lo.len();
                let mut lambda = vec![0.0; 2 * d];
                for k in 0..d {
                    let b = c * theta[k] + u[k] + shift[k];
                    let unconstrained = b / (2.0 * a);
                    if unconstrained < lo[k] {
                        lambda[k] = 2.0 * a * lo[k] - b;
                    } else if unconstrained > hi[k] {
                        lambda[d + k] = b - 2.0 * a * hi[k];
                    }
                }
                Ok(lambda)
            }
            Family::LogSimplex { p } => {
                let solution = self.solve_forward(u, theta)?;
                let d = *p + 1;
                let mut lambda = vec![0.0; d + 2];
                // nu recovered from any active coordinate; all agree by KKT.
                let mut nu = f64::NEG_INFINITY;
                for k in 0..d {
                    let weight = if k < *p { theta[k] } else { 1.0 };
                    nu = nu.max(weight / (solution.point[k] + u[k]));
                }
                for k in 0..d {
                    let weight = if k < *p { theta[k] } else { 1.0 };
                    if solution.point[k] <= 0.0 {
                        lambda[k] = (nu - weight / u[k]).max(0.0);
                    }
                }
                lambda[d] = nu;
                Ok(lambda)
            }
            Family::ComfortQuad => {
                let solution = self.solve_forward(u, theta)?;
                let x = solution.point[0];
                let slope = 2.0 * theta[0] * (x - 76.0) + 2.0 * (x - theta[1] - u[0]);
                let mut lambda = vec![0.0; 2];
                if x == 70.0 && slope > 0.0 {
                    lambda[0] = slope;
                } else if x == 76.0 && slope < 0.0 {
                    lambda[1] = -slope;
                }
                Ok(lambda)
            }
        }
    }

    /// Euclidean projection of `z` onto the feasible set `Phi(u)`.
    pub fn project_feasible(&self, z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_xut(Some(z), u, None)?;
        match &self.family {
            Family::LinearBox { lo, hi }
            | Family::SeparableQuadBox { lo, hi, .. } => Ok(z
                .iter()
                .enumerate()
                .map(|(k, &zk)| zk.clamp(lo[k], hi[k]))
                .collect()),
            Family::LogSimplex { .. } => Ok(project_simplex(z)),
            Family::ComfortQuad => Ok(vec![z[0].clamp(70.0, 76.0)]),
        }
    }
}

/// Solve the simplex-constrained KKT system `x_k = max(0, w_k/nu - u_k)`
/// by monotone bisection on `nu`, to `ROOT_TOL` on the simplex residual.
fn solve_log_simplex(p: usize, u: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let d = p + 1;
    let weight = |k: usize| if k < p { theta[k] } else { 1.0 };
    let sum_w: f64 = (0..d).map(weight).sum();
    let sum_u: f64 = u.iter().sum();
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);

    let residual = |nu: f64| -> f64 {
        (0..d)
            .map(|k| (weight(k) / nu - u[k]).max(0.0))
            .sum::<f64>()
            - 1.0
    };

    // residual is nonincreasing in nu; these endpoints straddle the root
    // for u > 0, expanded on failure as a safety net.
    let mut lo = sum_w / (1.0 + sum_u);
    let mut hi = sum_w / min_u;
    let mut expansions = 0;
    while residual(lo) < 0.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::BracketFailure(
                "LogSimplex: could not bracket nu from below".into(),
            ));
        }
    }
    while residual(hi) > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::BracketFailure(
                "LogSimplex: could not bracket nu from above".into(),
            ));
        }
    }

    let mut nu = 0.5 * (lo + hi);
    for _ in 0..200 {
        nu = 0.5 * (lo + hi);
        let r = residual(nu);
        if r.abs() <= ROOT_TOL {
            break;
        }
        if r > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
    }
    let r = residual(nu);
    if r.abs() > ROOT_TOL {
        return Err(Error::BracketFailure(format!(
            "LogSimplex bisection stalled at residual {r}"
        )));
    }
    Ok((0..d).map(|k| (weight(k) / nu - u[k]).max(0.0)).collect())
}

/// Exact Euclidean projection onto the standard simplex `{x >= 0, sum x = 1}`
/// (sort-based pivot).
pub fn project_simplex(z: &[f64]) -> Vec<f64> {
    let d = z.len();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-NaN"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (j as f64 + 1.0);
        if j + 1 == d || sorted[j + 1] <= candidate {
            tau = candidate;
            break;
        }
    }
    z.iter().map(|&v| (v - tau).max(0.0)).collect()
}
