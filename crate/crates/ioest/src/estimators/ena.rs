//! Enumeration estimator: score every delta-net point with the regularized
//! sample-average risk and keep the argmin.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{delta_net, Diagnostics, EstimateResult, Method};
use crate::forward::{ParamBox, ProblemInstance};
use crate::risk::{risk_value, Dataset};

/// Minimize `Q_n(theta; eps)` over the delta-net of `theta_box`.
///
/// `eps = 0` is allowed (and typical) for strictly convex families;
/// families that are not strictly convex require `eps > 0` to keep the
/// scored risk continuous. Ties resolve to the lexicographically smallest
/// net point.
pub fn ena_estimate(
    prob: &ProblemInstance,
    data: &Dataset,
    theta_box: &ParamBox,
    delta: f64,
    eps: f64,
) -> Result<EstimateResult> {
    if eps < 0.0 {
        return Err(Error::InvalidArgument(format!("negative eps: {eps}")));
    }
    if !prob.is_strictly_convex() && eps == 0.0 {
        return Err(Error::InvalidArgument(
            "eps must be positive when the forward objective is not strictly convex".into(),
        ));
    }
    if theta_box.dim() != prob.dims().p {
        return Err(Error::DimensionMismatch {
            what: "theta_box dimension",
            expected: prob.dims().p,
            got: theta_box.dim(),
        });
    }
    data.check_dims(prob)?;

    let net = delta_net(theta_box, delta)?;
    let losses: Vec<f64> = net
        .par_iter()
        .map(|theta| risk_value(prob, data, theta, eps))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for i in 1..losses.len() {
        if losses[i] < losses[best] {
            best = i;
        }
    }
    Ok(EstimateResult {
        theta_hat: net[best].clone(),
        loss: losses[best],
        method: Method::Ena,
        diagnostics: Diagnostics {
            grid_size: Some(net.len()),
            converged: true,
            ..Diagnostics::default()
        },
    })
}
