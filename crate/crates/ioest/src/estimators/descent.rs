//! Deterministic scalar and coordinate minimization used by the outer
//! theta-searches (SPA polish, KKA/VIA for p > 2).

use crate::error::Result;
use crate::forward::ParamBox;

/// Golden-section search for a unimodal function on `[lo, hi]`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    Ok((x, fx))
}

/// Cyclic coordinate descent over the box with golden-section line searches.
///
/// Returns the final point, its value and the number of sweeps used. Stops
/// early once a full sweep moves no coordinate by more than `move_tol`.
pub fn coordinate_descent<F>(
    f: F,
    theta_box: &ParamBox,
    start: Vec<f64>,
    max_sweeps: usize,
    line_tol: f64,
    move_tol: f64,
) -> Result<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let p = theta_box.dim();
    let mut theta = start;
    let mut value = f(&theta)?;
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        sweeps += 1;
        let mut max_move = 0.0f64;
        for k in 0..p {
            let (lo, hi) = (theta_box.lo()[k], theta_box.hi()[k]);
            if lo == hi {
                continue;
            }
            let line = |t: f64| -> Result<f64> {
                let mut candidate = theta.clone();
                candidate[k] = t;
                f(&candidate)
            };
            let (xk, fk) = golden_section(line, lo, hi, line_tol)?;
            if fk < value {
                max_move = max_move.max((xk - theta[k]).abs());
                theta[k] = xk;
                value = fk;
            }
        }
        if max_move < move_tol {
            break;
        }
    }
    Ok((theta, value, sweeps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, fx) = golden_section(|t| Ok((t - 1.3) * (t - 1.3)), -5.0, 5.0, 1e-9).unwrap();
        assert_abs_diff_eq!(x, 1.3, epsilon = 1e-7);
        assert!(fx < 1e-13);
    }

    #[test]
    fn coordinate_descent_on_separable_quadratic() {
        let theta_box = ParamBox::new(vec![0.0; 3], vec![2.0; 3]).unwrap();
        let target = [0.3, 1.7, 0.9];
        let f = |t: &[f64]| -> Result<f64> {
            Ok(t.iter()
                .zip(&target)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum())
        };
        let (theta, value, _) =
            coordinate_descent(f, &theta_box, theta_box.center(), 50, 1e-8, 1e-10).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(theta[k], target[k], epsilon = 1e-6);
        }
        assert!(value < 1e-11);
    }

    #[test]
    fn coordinate_descent_respects_bounds() {
        let theta_box = ParamBox::new(vec![0.0], vec![1.0]).unwrap();
        let f = |t: &[f64]| -> Result<f64> { Ok((t[0] - 3.0) * (t[0] - 3.0)) };
        let (theta, _, _) =
            coordinate_descent(f, &theta_box, vec![0.5], 20, 1e-8, 1e-10).unwrap();
        assert_abs_diff_eq!(theta[0], 1.0, epsilon = 1e-6);
    }
}
