//! Parameter estimators.
//!
//! Two statistically consistent methods and the two heuristics they are
//! benchmarked against:
//!
//! * [`ena_estimate`] — enumeration over a delta-net of the parameter box,
//!   scoring each candidate with the regularized sample-average risk;
//! * [`spa_estimate`] — semiparametric: kernel-denoise the observations with
//!   the L2NW estimator, then minimize the convex suboptimality loss;
//! * [`kka_estimate`] — relaxed KKT-residual heuristic;
//! * [`via_estimate`] — relaxed variational-inequality heuristic.

mod baselines;
mod descent;
mod ena;
mod kernel;
mod net;
mod spa;

pub use baselines::{kka_estimate, kka_objective, kka_residual_sq, via_estimate, via_objective, via_slack};
pub use ena::ena_estimate;
pub use kernel::{
    cross_validate, default_gamma_grid, default_sigma_scales, epanechnikov, l2nw_denoise,
    u_diameter, KernelConfig, KernelKind, DEFAULT_K_FOLDS,
};
pub use net::delta_net;
pub use spa::{minimize_suboptimality, spa_estimate, suboptimality_loss, suboptimality_subgradient};

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ena,
    Spa,
    Kka,
    Via,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ena => "ENA",
            Method::Spa => "SPA",
            Method::Kka => "KKA",
            Method::Via => "VIA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ENA" => Some(Method::Ena),
            "SPA" => Some(Method::Spa),
            "KKA" => Some(Method::Kka),
            "VIA" => Some(Method::Via),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Method-specific run details attached to an estimate.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Number of net points scanned (grid methods).
    pub grid_size: Option<usize>,
    /// Cross-validated or supplied kernel `(gamma, sigma)`.
    pub kernel: Option<(f64, f64)>,
    /// Iterations used by the iterative solver.
    pub iterations: Option<usize>,
    /// False when an iterative method returned its best iterate without
    /// meeting the stopping rule.
    pub converged: bool,
}

/// An estimated parameter, the loss it attains, and how it was obtained.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub theta_hat: Vec<f64>,
    /// Method-specific objective at `theta_hat` (risk for ENA, suboptimality
    /// loss for SPA, mean squared residual for KKA/VIA).
    pub loss: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}
