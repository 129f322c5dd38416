//! Axis-aligned delta-nets of the parameter box.

use crate::error::{Error, Result};
use crate::forward::ParamBox;

/// Refuse nets beyond this many points.
const MAX_NET_SIZE: u128 = 100_000_000;

/// Uniform grid covering `theta_box` so that every point of the box is
/// within Euclidean distance `delta` of the net.
///
/// Each axis uses spacing at most `delta / sqrt(p)` and includes both
/// endpoints; points are emitted in lexicographic order (first axis most
/// significant), which downstream argmin scans rely on for deterministic
/// tie-breaking.
pub fn delta_net(theta_box: &ParamBox, delta: f64) -> Result<Vec<Vec<f64>>> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive (got {delta})"
        )));
    }
    let p = theta_box.dim();
    let sqrt_p = (p as f64).sqrt();
    let mut steps = Vec::with_capacity(p);
    let mut total: u128 = 1;
    for k in 0..p {
        let span = theta_box.hi()[k] - theta_box.lo()[k];
        // Small backoff so counts like 2/0.01 -> 200 are not bumped by
        // floating-point noise.
        let count = if span == 0.0 {
            1
        } else {
            (sqrt_p * span / delta - 1e-9).ceil().max(0.0) as u128 + 1
        };
        steps.push(count as usize);
        total = total.saturating_mul(count);
        if total > MAX_NET_SIZE {
            return Err(Error::NetTooLarge {
                size: total,
                limit: MAX_NET_SIZE,
            });
        }
    }

    let mut net = Vec::with_capacity(total as usize);
    let mut index = vec![0usize; p];
    loop {
        let point: Vec<f64> = (0..p)
            .map(|k| {
                let (lo, hi) = (theta_box.lo()[k], theta_box.hi()[k]);
                if steps[k] == 1 {
                    lo
                } else if index[k] == steps[k] - 1 {
                    hi
                } else {
                    lo + (hi - lo) * index[k] as f64 / (steps[k] - 1) as f64
                }
            })
            .collect();
        net.push(point);
        // Advance the mixed-radix counter, last axis fastest.
        let mut axis = p;
        loop {
            if axis == 0 {
                return Ok(net);
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < steps[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_interval_half_delta() {
        let net = delta_net(&ParamBox::new(vec![0.0], vec![1.0]).unwrap(), 0.5).unwrap();
        assert_eq!(net, vec![vec![0.0], vec![0.5], vec![1.0]]);
    }

    #[test]
    fn hundredth_spacing_grid_has_201_points() {
        let net = delta_net(&ParamBox::new(vec![0.0], vec![2.0]).unwrap(), 0.01).unwrap();
        assert_eq!(net.len(), 201);
        assert_eq!(net[0], vec![0.0]);
        assert_eq!(net[200], vec![2.0]);
    }

    #[test]
    fn two_dim_cover() {
        let theta_box = ParamBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let net = delta_net(&theta_box, 1.0).unwrap();
        assert_eq!(net.len(), 9); // 3 x 3: per-axis spacing <= 1/sqrt(2)

        // Derived check: sampled max-min cover distance stays within delta.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let theta = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let best = net
                .iter()
                .map(|t| {
                    (t[0] - theta[0]).powi(2) + (t[1] - theta[1]).powi(2)
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert!(best <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn lexicographic_order() {
        let theta_box = ParamBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let net = delta_net(&theta_box, 1.0).unwrap();
        for pair in net.windows(2) {
            assert!(pair[0] < pair[1], "net not lexicographically sorted");
        }
    }

    #[test]
    fn oversized_net_is_refused() {
        let theta_box = ParamBox::new(vec![0.0; 6], vec![1.0; 6]).unwrap();
        assert!(matches!(
            delta_net(&theta_box, 1e-3),
            Err(Error::NetTooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_axis_gets_single_point() {
        let theta_box = ParamBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let net = delta_net(&theta_box, 0.5).unwrap();
        assert!(net.iter().all(|t| t[1] == 1.0));
    }
}
