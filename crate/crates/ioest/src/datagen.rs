//! Seeded synthetic scenarios.
//!
//! Each scenario fixes a data-generating process (an input law, a generating
//! map, a noise law) together with the model family and parameter box used
//! when estimating from its data. Generation is deterministic given the
//! seed: one ChaCha stream per dataset, drawing per observation first the
//! input coordinates then the noise coordinates, so datasets of different
//! sizes from the same seed share a common prefix.

use crate::error::{Error, Result};
use crate::forward::{ParamBox, ProblemInstance};
use crate::risk::Dataset;
use crate::rng::StreamRng;

/// A registered synthetic scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scenario {
    /// Linear cost over `[-1, 1]`, `u ~ U[-1, 1]`, `theta0 = 1`.
    FopA,
    /// Scalar quadratic over `[0, 1]`, `u ~ U[0, 2]`, `theta0 = 1/2`.
    FopB,
    /// Misspecification generator `(3/2)x^2 - (1+u)x` over `[0, 1]`,
    /// `u ~ U[0, 5]`; estimated with the FOP-B model.
    FopC,
    /// p-dimensional quadratic over `[0, 1]^p`, `u ~ U[0, 2]^p`,
    /// `theta0 = (1/2, ..., 1/2)`.
    FopD { p: usize },
    /// Weighted-log simplex model, `u ~ U[1, 2]^(p+1)`, `theta0 = 1`.
    FopE { p: usize },
    /// Misspecification generator `(3/2)x'x - (1+u)'x` over `[0, 1]^10`,
    /// `u ~ U[0, 5]^10`; estimated with the FOP-D(10) model.
    FopF,
    /// Statistical generator `y = clamp(sqrt(u), 0, 1) + w` componentwise,
    /// `u ~ U[0, 5]^p`; estimated with FOP-B (p = 1) or FOP-D(p).
    Sqr { p: usize },
    /// The inconsistency counterexample: quadratic over `[0, 10]`,
    /// `u in {0, 20}` and `w in {-1, +1}` equiprobable, `theta0 = 10`.
    Counterexample,
    /// Synthetic stand-in for the thermostat-setpoint data: the comfort
    /// model with `u ~ U[55, 95]` degrees F, `theta0 = (1, 4)`, noise
    /// sd 1.1. Labeled synthetic everywhere.
    SdhLike,
}

impl Scenario {
    /// Parse a scenario name; `p` applies to the parameterized families
    /// (FOP-D, FOP-E, SQR) and defaults to the table settings (10).
    pub fn parse(name: &str, p: Option<usize>) -> Result<Self> {
        let canonical = name.trim().to_ascii_uppercase();
        let scenario = match canonical.as_str() {
            "FOP-A" => Scenario::FopA,
            "FOP-B" => Scenario::FopB,
            "FOP-C" => Scenario::FopC,
            "FOP-D" => Scenario::FopD { p: p.unwrap_or(10) },
            "FOP-E" => Scenario::FopE { p: p.unwrap_or(10) },
            "FOP-F" => Scenario::FopF,
            "SQR" | "SQR-1" | "SQR-P" | "SQR-M" => Scenario::Sqr {
                p: p.unwrap_or(if canonical == "SQR-1" { 1 } else { 10 }),
            },
            "CE" => Scenario::Counterexample,
            "SDH-LIKE" => Scenario::SdhLike,
            _ => return Err(Error::UnknownScenario(name.to_string())),
        };
        if let Scenario::FopD { p } | Scenario::FopE { p } | Scenario::Sqr { p } = scenario {
            if p == 0 {
                return Err(Error::InvalidArgument("scenario requires p >= 1".into()));
            }
        }
        Ok(scenario)
    }

    pub fn name(&self) -> String {
        match self {
            Scenario::FopA => "FOP-A".into(),
            Scenario::FopB => "FOP-B".into(),
            Scenario::FopC => "FOP-C".into(),
            Scenario::FopD { p } => format!("FOP-D({p})"),
            Scenario::FopE { p } => format!("FOP-E({p})"),
            Scenario::FopF => "FOP-F".into(),
            Scenario::Sqr { p } => format!("SQR({p})"),
            Scenario::Counterexample => "CE".into(),
            Scenario::SdhLike => "SDH-LIKE".into(),
        }
    }

    /// The model whose parameters are estimated from this scenario's data.
    /// For the misspecified scenarios this differs from the generator.
    pub fn model(&self) -> ProblemInstance {
        match self {
            Scenario::FopA => ProblemInstance::linear_box(vec![-1.0], vec![1.0]),
            Scenario::FopB | Scenario::FopC | Scenario::Sqr { p: 1 } => {
                ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0], vec![0.0], vec![1.0])
            }
            Scenario::FopD { p } => ProblemInstance::separable_quad_box(
                1.0,
                1.0,
                vec![0.0; *p],
                vec![0.0; *p],
                vec![1.0; *p],
            ),
            Scenario::FopE { p } => ProblemInstance::log_simplex(*p),
            Scenario::FopF => ProblemInstance::separable_quad_box(
                1.0,
                1.0,
                vec![0.0; 10],
                vec![0.0; 10],
                vec![1.0; 10],
            ),
            Scenario::Sqr { p } => ProblemInstance::separable_quad_box(
                1.0,
                1.0,
                vec![0.0; *p],
                vec![0.0; *p],
                vec![1.0; *p],
            ),
            Scenario::Counterexample => {
                ProblemInstance::separable_quad_box(1.0, 1.0, vec![0.0], vec![0.0], vec![10.0])
            }
            Scenario::SdhLike => ProblemInstance::comfort_quad(),
        }
        .expect("registry models are valid")
    }

    /// The generating forward problem, when the generator is an
    /// optimization model (`None` for the SQR statistical generator).
    fn generator(&self) -> Option<ProblemInstance> {
        match self {
            Scenario::FopC => Some(
                ProblemInstance::separable_quad_box(1.5, 0.0, vec![1.0], vec![0.0], vec![1.0])
                    .expect("valid"),
            ),
            Scenario::FopF => Some(
                ProblemInstance::separable_quad_box(
                    1.5,
                    0.0,
                    vec![1.0; 10],
                    vec![0.0; 10],
                    vec![1.0; 10],
                )
                .expect("valid"),
            ),
            Scenario::Sqr { .. } => None,
            _ => Some(self.model()),
        }
    }

    /// True generating parameter, when the scenario has one.
    pub fn theta0(&self) -> Option<Vec<f64>> {
        match self {
            Scenario::FopA => Some(vec![1.0]),
            Scenario::FopB => Some(vec![0.5]),
            Scenario::FopD { p } => Some(vec![0.5; *p]),
            Scenario::FopE { p } => Some(vec![1.0; *p]),
            Scenario::Counterexample => Some(vec![10.0]),
            Scenario::SdhLike => Some(vec![1.0, 4.0]),
            Scenario::FopC | Scenario::FopF | Scenario::Sqr { .. } => None,
        }
    }

    /// Parameter box used for estimation.
    pub fn theta_box(&self) -> ParamBox {
        match self {
            Scenario::FopA => ParamBox::new(vec![-1.0], vec![1.0]),
            Scenario::FopB | Scenario::FopC | Scenario::Sqr { p: 1 } => {
                ParamBox::new(vec![0.0], vec![2.0])
            }
            Scenario::FopD { p } => ParamBox::new(vec![0.0; *p], vec![2.0; *p]),
            Scenario::FopE { p } => ParamBox::new(vec![0.5; *p], vec![2.0; *p]),
            Scenario::FopF => ParamBox::new(vec![0.0; 10], vec![2.0; 10]),
            Scenario::Sqr { p } => ParamBox::new(vec![0.0; *p], vec![2.0; *p]),
            Scenario::Counterexample => ParamBox::new(vec![0.0], vec![10.0]),
            Scenario::SdhLike => ParamBox::new(vec![0.0, 0.0], vec![3.0, 8.0]),
        }
        .expect("registry boxes are valid")
    }

    /// Standard deviation of one noise coordinate.
    pub fn noise_sd(&self) -> f64 {
        match self {
            Scenario::SdhLike => 1.1,
            _ => 1.0,
        }
    }

    /// `E(w'w)` for the scenario's noise vector.
    pub fn noise_second_moment(&self) -> f64 {
        let d = self.decision_dim();
        d as f64 * self.noise_sd() * self.noise_sd()
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Scenario::Sqr { p } => *p,
            _ => self.model().dims().m,
        }
    }

    pub fn decision_dim(&self) -> usize {
        match self {
            Scenario::Sqr { p } => *p,
            _ => self.model().dims().d,
        }
    }

    fn draw_input(&self, rng: &mut StreamRng) -> Vec<f64> {
        let m = self.input_dim();
        match self {
            Scenario::FopA => vec![rng.uniform(-1.0, 1.0)],
            Scenario::FopB => vec![rng.uniform(0.0, 2.0)],
            Scenario::FopC => vec![rng.uniform(0.0, 5.0)],
            Scenario::FopD { .. } => (0..m).map(|_| rng.uniform(0.0, 2.0)).collect(),
            Scenario::FopE { .. } => (0..m).map(|_| rng.uniform(1.0, 2.0)).collect(),
            Scenario::FopF | Scenario::Sqr { .. } => {
                (0..m).map(|_| rng.uniform(0.0, 5.0)).collect()
            }
            Scenario::Counterexample => vec![if rng.coin() { 20.0 } else { 0.0 }],
            Scenario::SdhLike => vec![rng.uniform(55.0, 95.0)],
        }
    }

    fn noiseless_decision(&self, u: &[f64], theta0: &[f64]) -> Result<Vec<f64>> {
        match self {
            Scenario::Sqr { .. } => Ok(u
                .iter()
                .map(|&uk| uk.max(0.0).sqrt().clamp(0.0, 1.0))
                .collect()),
            _ => {
                let generator = self.generator().expect("optimization generator");
                // Generators with the parameter frozen out (FOP-C, FOP-F)
                // still take a theta argument; feed zeros.
                let zeros;
                let theta = if theta0.is_empty() {
                    zeros = vec![0.0; generator.dims().p];
                    &zeros
                } else {
                    theta0
                };
                Ok(generator.solve_forward(u, theta)?.point)
            }
        }
    }

    fn draw_noise(&self, rng: &mut StreamRng) -> Vec<f64> {
        let d = self.decision_dim();
        match self {
            Scenario::Counterexample => vec![if rng.coin() { 1.0 } else { -1.0 }],
            _ => (0..d)
                .map(|_| self.noise_sd() * rng.standard_normal())
                .collect(),
        }
    }
}

/// Generate `n` observations with the scenario's own `theta0`.
pub fn generate(scenario: &Scenario, n: usize, seed: u64) -> Result<Dataset> {
    generate_with(scenario, None, n, seed, false)
}

/// Generation with an overridden `theta0` and/or the zero-noise debug switch.
///
/// `theta0` must be `None` for scenarios whose generator has no parameter
/// (FOP-C, FOP-F, SQR).
pub fn generate_with(
    scenario: &Scenario,
    theta0: Option<&[f64]>,
    n: usize,
    seed: u64,
    zero_noise: bool,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("need n >= 1 observations".into()));
    }
    let default_theta0 = scenario.theta0();
    let theta0: &[f64] = match (theta0, &default_theta0) {
        (Some(t), _) if default_theta0.is_some() => t,
        (Some(_), _) => {
            return Err(Error::InvalidArgument(format!(
                "scenario {} has a fixed generator without theta0",
                scenario.name()
            )))
        }
        (None, Some(t)) => t,
        (None, None) => &[],
    };

    let mut rng = StreamRng::new(seed);
    let mut us = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u = scenario.draw_input(&mut rng);
        let xi = scenario.noiseless_decision(&u, theta0)?;
        let w = scenario.draw_noise(&mut rng);
        let y: Vec<f64> = if zero_noise {
            xi
        } else {
            xi.iter().zip(&w).map(|(&a, &b)| a + b).collect()
        };
        us.push(u);
        ys.push(y);
    }
    Dataset::new(us, ys)
}

/// The appendix identifiability fixtures, as one-sided quadratic boxes.
///
/// * fixture I: unconstrained scalar quadratic (identifiable),
/// * fixture II: same with the binding constraint `x <= 1` and no input
///   (not identifiable: every `theta in [1, 2]` yields `y = 1`),
/// * fixture III: constraint `x <= 1` plus an input with `P(u <= -1) > 0`
///   (identifiable again).
///
/// The one-sided feasible sets are modeled with a large finite lower bound;
/// solutions never approach it for the fixtures' parameter ranges.
pub fn identifiability_fixtures() -> Vec<(ProblemInstance, bool)> {
    let big = 1.0e3;
    let one_sided = |hi: f64| {
        ProblemInstance::separable_quad_box(0.5, 1.0, vec![0.0], vec![-big], vec![hi])
            .expect("valid fixture")
    };
    vec![
        (one_sided(big), true),
        (one_sided(1.0), false),
        (one_sided(1.0), true),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ena_estimate;
    use crate::forward::ParamBox;
    use crate::risk::risk_saa;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generation_is_bit_identical() {
        let scenario = Scenario::FopB;
        let a = generate(&scenario, 50, 7).unwrap();
        let b = generate(&scenario, 50, 7).unwrap();
        for i in 0..50 {
            assert_eq!(a.obs(i).0[0].to_bits(), b.obs(i).0[0].to_bits());
            assert_eq!(a.obs(i).1[0].to_bits(), b.obs(i).1[0].to_bits());
        }
    }

    #[test]
    fn prefixes_agree_across_sizes() {
        let scenario = Scenario::FopD { p: 3 };
        let small = generate(&scenario, 10, 3).unwrap();
        let large = generate(&scenario, 40, 3).unwrap();
        for i in 0..10 {
            assert_eq!(small.obs(i).0, large.obs(i).0);
            assert_eq!(small.obs(i).1, large.obs(i).1);
        }
    }

    #[test]
    fn distinct_seeds_differ() {
        let scenario = Scenario::FopA;
        let a = generate(&scenario, 200, 1).unwrap();
        let b = generate(&scenario, 200, 2).unwrap();
        let mean = |d: &Dataset| d.inputs().iter().map(|u| u[0]).sum::<f64>() / d.n() as f64;
        assert!((mean(&a) - mean(&b)).abs() > 1e-6);
    }

    #[test]
    fn counterexample_empirical_frequencies() {
        let scenario = Scenario::Counterexample;
        let n = 100_000;
        let data = generate(&scenario, n, 17).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..n {
            let (u, y) = data.obs(i);
            let pair = (u[0], y[0]);
            let idx = match pair {
                (0.0, 4.0) => 0,
                (0.0, 6.0) => 1,
                (20.0, 9.0) => 2,
                (20.0, 11.0) => 3,
                other => panic!("unexpected pair {other:?}"),
            };
            counts[idx] += 1;
        }
        // Binomial(n, 1/4): 3 sigma is about 0.0041 at n = 1e5.
        let three_sigma = 3.0 * (0.25 * 0.75 / n as f64).sqrt();
        for &count in &counts {
            let freq = count as f64 / n as f64;
            assert!((freq - 0.25).abs() <= three_sigma, "freq {freq}");
        }
    }

    #[test]
    fn zero_noise_fop_b_gives_clamped_solutions() {
        let scenario = Scenario::FopB;
        let data = generate_with(&scenario, None, 100, 5, true).unwrap();
        for i in 0..data.n() {
            let (u, y) = data.obs(i);
            let expected = ((0.5 + u[0]) / 2.0).clamp(0.0, 1.0);
            assert_abs_diff_eq!(y[0], expected, epsilon = 0.0);
        }
    }

    #[test]
    fn sqr_closed_form() {
        let scenario = Scenario::Sqr { p: 1 };
        // The generating map itself, at the documented point.
        let xi = scenario.noiseless_decision(&[0.25], &[]).unwrap();
        assert_abs_diff_eq!(xi[0], 0.5, epsilon = 0.0);
        // And through generation with the zero-noise switch.
        let data = generate_with(&scenario, None, 50, 11, true).unwrap();
        for i in 0..data.n() {
            let (u, y) = data.obs(i);
            assert_abs_diff_eq!(y[0], u[0].sqrt().clamp(0.0, 1.0), epsilon = 0.0);
        }
    }

    #[test]
    fn noise_is_centered_for_ic_scenarios() {
        for scenario in [Scenario::FopB, Scenario::FopD { p: 2 }] {
            let n = 100_000;
            let data = generate(&scenario, n, 23).unwrap();
            let generator = scenario.generator().unwrap();
            let theta0 = scenario.theta0().unwrap();
            let d = scenario.decision_dim();
            let mut sums = vec![0.0; d];
            for i in 0..n {
                let (u, y) = data.obs(i);
                let xi = generator.solve_forward(u, &theta0).unwrap().point;
                for k in 0..d {
                    sums[k] += y[k] - xi[k];
                }
            }
            let bound = 4.0 / (n as f64).sqrt();
            for s in sums {
                assert!((s / n as f64).abs() <= bound);
            }
        }
    }

    #[test]
    fn theta0_override_rules() {
        assert!(generate_with(&Scenario::FopB, Some(&[1.2]), 5, 1, true).is_ok());
        assert!(generate_with(&Scenario::Sqr { p: 1 }, Some(&[1.2]), 5, 1, true).is_err());
        assert!(matches!(
            Scenario::parse("nope", None),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn fixture_flatness_and_identifiability() {
        let fixtures = identifiability_fixtures();
        assert_eq!(fixtures.len(), 3);
        assert!(fixtures[0].1 && !fixtures[1].1 && fixtures[2].1);

        // Fixture II: noiseless data pinned at the bound makes the risk flat
        // on [1, 2] — the parameter is not identified there.
        let (fixture_two, _) = &fixtures[1];
        let us = vec![vec![0.0]; 20];
        let ys = vec![vec![1.0]; 20];
        let data = Dataset::new(us, ys).unwrap();
        let q1 = risk_saa(fixture_two, &data, &[1.0], 0.0).unwrap().q;
        let q15 = risk_saa(fixture_two, &data, &[1.5], 0.0).unwrap().q;
        let q2 = risk_saa(fixture_two, &data, &[2.0], 0.0).unwrap().q;
        assert_abs_diff_eq!(q1, q15, epsilon = 1e-12);
        assert_abs_diff_eq!(q1, q2, epsilon = 1e-12);
        assert_abs_diff_eq!(q1, 0.0, epsilon = 1e-12);

        // Fixture I: the same data identifies theta = y exactly.
        let (fixture_one, _) = &fixtures[0];
        let theta_box = ParamBox::new(vec![0.0], vec![2.0]).unwrap();
        let est = ena_estimate(fixture_one, &data, &theta_box, 0.01, 0.0).unwrap();
        assert_abs_diff_eq!(est.theta_hat[0], 1.0, epsilon = 1e-9);

        // Fixture III: u = -1 reveals theta through y = theta - 1.
        let (fixture_three, _) = &fixtures[2];
        let theta = [1.4];
        let sol = fixture_three.solve_forward(&[-1.0], &theta).unwrap();
        assert_abs_diff_eq!(sol.point[0], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn registry_settings_match_documented_laws() {
        // Support checks for the input laws.
        let checks: Vec<(Scenario, f64, f64)> = vec![
            (Scenario::FopA, -1.0, 1.0),
            (Scenario::FopB, 0.0, 2.0),
            (Scenario::FopC, 0.0, 5.0),
            (Scenario::SdhLike, 55.0, 95.0),
        ];
        for (scenario, lo, hi) in checks {
            let data = generate(&scenario, 2000, 31).unwrap();
            for i in 0..data.n() {
                let u = data.obs(i).0[0];
                assert!(u >= lo && u <= hi, "{} out of support", scenario.name());
            }
        }
        assert_eq!(Scenario::FopE { p: 10 }.model().dims().d, 11);
        assert_eq!(Scenario::parse("SQR-1", None).unwrap(), Scenario::Sqr { p: 1 });
        assert_eq!(Scenario::parse("sqr-m", None).unwrap(), Scenario::Sqr { p: 10 });
    }
}
