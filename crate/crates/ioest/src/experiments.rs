//! Replicated experiment harness: error tables over (method, n) grids,
//! scatter outputs, and a paired bootstrap hypothesis test.
//!
//! Every replication derives its own stream seed from the master seed, the
//! scenario name and the replication index, so reports are identical for
//! any parallel schedule.

use rayon::prelude::*;

use crate::datagen::{generate_with, Scenario};
use crate::error::{Error, Result};
use crate::estimators::{
    cross_validate, default_gamma_grid, default_sigma_scales, ena_estimate, kka_estimate,
    spa_estimate, via_estimate, EstimateResult, KernelConfig, Method, DEFAULT_K_FOLDS,
};
use crate::forward::{Family, ProblemInstance};
use crate::risk::population_risk;
use crate::rng::{stream_seed, StreamRng};

/// Which per-replication metric the report aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// `||theta_hat - theta0||`.
    EstimationError,
    /// Monte Carlo `Q(theta_hat)` on a fresh test sample.
    PredictionError,
    /// Prediction error minus `E(w'w)`.
    NormalizedPredictionError,
}

impl MetricKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "estimation_error" => Some(MetricKind::EstimationError),
            "prediction_error" => Some(MetricKind::PredictionError),
            "normalized_prediction_error" => Some(MetricKind::NormalizedPredictionError),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::EstimationError => "estimation_error",
            MetricKind::PredictionError => "prediction_error",
            MetricKind::NormalizedPredictionError => "normalized_prediction_error",
        }
    }
}

/// Per-method knobs shared across an experiment.
#[derive(Debug, Clone)]
pub struct MethodParams {
    /// Net spacing for ENA and the p <= 2 baselines.
    pub delta: f64,
    /// Risk regularization for ENA. Families that are not strictly convex
    /// need eps > 0; a nonpositive value falls back to 1e-3 there.
    pub eps: f64,
    /// Fixed kernel bandwidth; `None` selects by cross-validation.
    pub gamma: Option<f64>,
    /// Fixed kernel ridge; `None` selects by cross-validation.
    pub sigma: Option<f64>,
    /// Project denoised points onto the feasible set before the SPA fit;
    /// `None` means only where required (LogSimplex).
    pub project: Option<bool>,
    pub k_folds: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            delta: 0.01,
            eps: 0.0,
            gamma: None,
            sigma: None,
            project: None,
            k_folds: DEFAULT_K_FOLDS,
        }
    }
}

/// A full experiment: scenario, estimator set, sample sizes, replications.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub params: MethodParams,
    pub metric: MetricKind,
    /// Held-out sample size for prediction-error metrics.
    pub test_n: usize,
    /// Draw theta0 uniformly from the parameter box per replication
    /// (scatter experiments) instead of using the scenario's fixed value.
    pub randomize_theta0: bool,
    /// Debug switch: generate noiseless data.
    pub zero_noise: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("methods must be nonempty".into()));
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "n_list must be nonempty and strictly increasing".into(),
            ));
        }
        let has_theta0 = self.scenario.theta0().is_some() || self.randomize_theta0;
        if self.metric == MetricKind::EstimationError && !has_theta0 {
            return Err(Error::InvalidArgument(format!(
                "scenario {} has no theta0; estimation error is undefined",
                self.scenario.name()
            )));
        }
        if self.randomize_theta0 && self.scenario.theta0().is_none() {
            return Err(Error::InvalidArgument(format!(
                "scenario {} has a fixed generator; cannot randomize theta0",
                self.scenario.name()
            )));
        }
        Ok(())
    }
}

/// One replication's outcome.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub method: Method,
    pub n: usize,
    pub rep: usize,
    pub theta0: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub value: f64,
}

/// Aggregated experiment output.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub scenario_name: String,
    pub metric: MetricKind,
    pub methods: Vec<Method>,
    pub n_list: Vec<usize>,
    /// `mean_table[i][j]`: mean metric of method i at n_list[j].
    pub mean_table: Vec<Vec<f64>>,
    pub raw: Vec<RawRecord>,
    /// Replications whose estimator returned an error (excluded from means).
    pub failures: usize,
}

impl ExperimentReport {
    pub fn mean(&self, method: Method, n: usize) -> Option<f64> {
        let i = self.methods.iter().position(|&m| m == method)?;
        let j = self.n_list.iter().position(|&v| v == n)?;
        Some(self.mean_table[i][j])
    }
}

/// `||theta_hat - theta0||`.
pub fn estimation_error(theta_hat: &[f64], theta0: &[f64]) -> Result<f64> {
    if theta_hat.len() != theta0.len() {
        return Err(Error::DimensionMismatch {
            what: "estimation error operands",
            expected: theta0.len(),
            got: theta_hat.len(),
        });
    }
    Ok(theta_hat
        .iter()
        .zip(theta0)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Monte Carlo prediction error `Q(theta_hat)` on a fresh test sample drawn
/// from the scenario at its own theta0.
pub fn prediction_error(
    prob: &ProblemInstance,
    theta_hat: &[f64],
    scenario: &Scenario,
    test_n: usize,
    seed: u64,
) -> Result<f64> {
    prediction_error_at(prob, theta_hat, scenario, None, test_n, seed)
}

fn prediction_error_at(
    prob: &ProblemInstance,
    theta_hat: &[f64],
    scenario: &Scenario,
    theta0: Option<&[f64]>,
    test_n: usize,
    seed: u64,
) -> Result<f64> {
    let test = generate_with(scenario, theta0, test_n, seed, false)?;
    population_risk(prob, theta_hat, 0.0, &test)
}

/// Prediction error normalized by the irreducible noise `E(w'w)`.
pub fn normalized_prediction_error(
    prob: &ProblemInstance,
    theta_hat: &[f64],
    scenario: &Scenario,
    test_n: usize,
    seed: u64,
) -> Result<f64> {
    if test_n < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "normalized prediction error needs test_n >= 10000 (got {test_n})"
        )));
    }
    Ok(prediction_error(prob, theta_hat, scenario, test_n, seed)?
        - scenario.noise_second_moment())
}

/// Run one estimator on one dataset with the experiment's parameters.
pub fn estimate_with_method(
    method: Method,
    scenario: &Scenario,
    data: &crate::risk::Dataset,
    params: &MethodParams,
) -> Result<EstimateResult> {
    let model = scenario.model();
    let theta_box = scenario.theta_box();
    match method {
        Method::Ena => {
            let eps = if model.is_strictly_convex() {
                params.eps
            } else {
                // Positive regularization is required off strict convexity.
                if params.eps > 0.0 {
                    params.eps
                } else {
                    1e-3
                }
            };
            ena_estimate(&model, data, &theta_box, params.delta, eps)
        }
        Method::Spa => {
            let cfg = match (params.gamma, params.sigma) {
                (Some(g), Some(s)) => KernelConfig::new(g, s)?,
                _ => cross_validate(
                    data,
                    &default_gamma_grid(data),
                    &default_sigma_scales(),
                    params.k_folds.min(data.n()).max(2),
                )?,
            };
            let project = params
                .project
                .unwrap_or(matches!(model.family(), Family::LogSimplex { .. }));
            spa_estimate(&model, data, &theta_box, &cfg, project)
        }
        Method::Kka => kka_estimate(&model, data, &theta_box, params.delta),
        Method::Via => via_estimate(&model, data, &theta_box, params.delta),
    }
}

/// Execute the replication grid and aggregate the mean table.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let scenario = &spec.scenario;
    let model = scenario.model();
    let scenario_name = scenario.name();

    struct CellOutcome {
        records: Vec<RawRecord>,
        failures: usize,
    }

    let mut mean_table = vec![vec![f64::NAN; spec.n_list.len()]; spec.methods.len()];
    let mut raw = Vec::new();
    let mut failures = 0usize;

    for (mi, &method) in spec.methods.iter().enumerate() {
        for (nj, &n) in spec.n_list.iter().enumerate() {
            let outcomes: Vec<Result<RawRecord>> = (0..spec.reps)
                .into_par_iter()
                .map(|rep| {
                    let data_seed = stream_seed(spec.master_seed, &scenario_name, rep as u64);
                    let theta0 = if spec.randomize_theta0 {
                        let seed =
                            stream_seed(spec.master_seed, &format!("{scenario_name}::theta0"), rep as u64);
                        let mut rng = StreamRng::new(seed);
                        let theta_box = scenario.theta_box();
                        Some(
                            (0..theta_box.dim())
                                .map(|k| rng.uniform(theta_box.lo()[k], theta_box.hi()[k]))
                                .collect::<Vec<f64>>(),
                        )
                    } else {
                        None
                    };
                    let data = generate_with(
                        scenario,
                        theta0.as_deref(),
                        n,
                        data_seed,
                        spec.zero_noise,
                    )?;
                    let estimate = estimate_with_method(method, scenario, &data, &spec.params)?;
                    let effective_theta0 = theta0
                        .or_else(|| scenario.theta0())
                        .unwrap_or_default();
                    let value = match spec.metric {
                        MetricKind::EstimationError => {
                            estimation_error(&estimate.theta_hat, &effective_theta0)?
                        }
                        MetricKind::PredictionError | MetricKind::NormalizedPredictionError => {
                            let test_seed = stream_seed(
                                spec.master_seed,
                                &format!("{scenario_name}::test"),
                                rep as u64,
                            );
                            let theta0_for_test: Option<&[f64]> = if spec.randomize_theta0 {
                                Some(&effective_theta0)
                            } else {
                                None
                            };
                            let q = prediction_error_at(
                                &model,
                                &estimate.theta_hat,
                                scenario,
                                theta0_for_test,
                                spec.test_n,
                                test_seed,
                            )?;
                            if spec.metric == MetricKind::PredictionError {
                                q
                            } else {
                                q - scenario.noise_second_moment()
                            }
                        }
                    };
                    Ok(RawRecord {
                        method,
                        n,
                        rep,
                        theta0: effective_theta0,
                        theta_hat: estimate.theta_hat,
                        value,
                    })
                })
                .collect();

            let mut cell = CellOutcome {
                records: Vec::with_capacity(spec.reps),
                failures: 0,
            };
            for outcome in outcomes {
                match outcome {
                    Ok(record) => cell.records.push(record),
                    Err(_) => cell.failures += 1,
                }
            }
            if !cell.records.is_empty() {
                mean_table[mi][nj] = cell.records.iter().map(|r| r.value).sum::<f64>()
                    / cell.records.len() as f64;
            }
            failures += cell.failures;
            raw.extend(cell.records);
        }
    }

    Ok(ExperimentReport {
        scenario_name,
        metric: spec.metric,
        methods: spec.methods.clone(),
        n_list: spec.n_list.clone(),
        mean_table,
        raw,
        failures,
    })
}

/// Paired-difference bootstrap test of equal means.
///
/// Replication indices are resampled with replacement; the p-value is the
/// add-one-corrected fraction of resampled mean differences falling on the
/// other side of zero from the observed mean difference (all-zero
/// differences conventionally give p = 1).
pub fn bootstrap_test(
    errors_a: &[f64],
    errors_b: &[f64],
    n_boot: usize,
    seed: u64,
) -> Result<f64> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::DimensionMismatch {
            what: "paired error lists",
            expected: errors_a.len(),
            got: errors_b.len(),
        });
    }
    if errors_a.is_empty() {
        return Err(Error::InvalidArgument("empty error lists".into()));
    }
    if n_boot < 1000 {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be >= 1000 (got {n_boot})"
        )));
    }
    let diffs: Vec<f64> = errors_a.iter().zip(errors_b).map(|(&a, &b)| a - b).collect();
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(1.0);
    }
    let n = diffs.len();
    let observed = diffs.iter().sum::<f64>() / n as f64;
    let sign = if observed >= 0.0 { 1.0 } else { -1.0 };
    let mut rng = StreamRng::new(seed);
    let mut crossings = 0usize;
    for _ in 0..n_boot {
        let mut total = 0.0;
        for _ in 0..n {
            total += diffs[rng.index(n)];
        }
        if sign * total <= 0.0 {
            crossings += 1;
        }
    }
    Ok((crossings as f64 + 1.0) / (n_boot as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn estimation_error_examples() {
        assert_abs_diff_eq!(estimation_error(&[1.0], &[1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(estimation_error(&[0.5], &[1.0]).unwrap(), 0.5);
        let theta0 = vec![1.0; 10];
        let theta_hat: Vec<f64> = theta0.iter().map(|&v| v + 0.1).collect();
        assert_abs_diff_eq!(
            estimation_error(&theta_hat, &theta0).unwrap(),
            0.1 * 10f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(estimation_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn normalized_error_zero_on_counterexample_truth() {
        // Every atom of the counterexample law is at distance exactly 1 from
        // the solution set at theta = 10, so Q(10) - var(w) = 0 identically.
        let scenario = Scenario::Counterexample;
        let model = scenario.model();
        let value =
            normalized_prediction_error(&model, &[10.0], &scenario, 20_000, 99).unwrap();
        assert_abs_diff_eq!(value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn normalized_error_near_zero_at_theta0() {
        let scenario = Scenario::FopB;
        let model = scenario.model();
        let value =
            normalized_prediction_error(&model, &[0.5], &scenario, 100_000, 5).unwrap();
        // Mean of w^2 - 1 over 1e5 draws: tolerance covers 5 sigma.
        assert!(value.abs() < 0.03, "normalized error {value}");
        assert!(normalized_prediction_error(&model, &[0.5], &scenario, 100, 5).is_err());
    }

    #[test]
    fn misspecified_gap_matches_quadrature_oracle() {
        // Noiseless prediction risk of theta = 0 under FOP-B data equals
        // the closed-form integral E[(clamp(u/2) - clamp((u+1/2)/2))^2].
        let scenario = Scenario::FopB;
        let model = scenario.model();
        let test = generate_with(&scenario, None, 200_000, 41, true).unwrap();
        let risk = population_risk(&model, &[0.0], 0.0, &test).unwrap();

        // Simpson quadrature of the squared gap over u in [0, 2].
        let gap = |u: f64| {
            let a = (u / 2.0).clamp(0.0, 1.0);
            let b = ((u + 0.5) / 2.0).clamp(0.0, 1.0);
            (a - b) * (a - b)
        };
        let segments = 10_000;
        let h = 2.0 / segments as f64;
        let mut integral = gap(0.0) + gap(2.0);
        for i in 1..segments {
            let u = i as f64 * h;
            integral += if i % 2 == 1 { 4.0 } else { 2.0 } * gap(u);
        }
        integral *= h / 3.0 / 2.0; // divide by the support length for the mean
        assert_abs_diff_eq!(risk, integral, epsilon = 1e-3);
        assert!(risk > 0.04);
    }

    #[test]
    fn bootstrap_conventions() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(bootstrap_test(&a, &a, 2000, 1).unwrap(), 1.0);

        let b: Vec<f64> = a.iter().map(|v| v - 10.0).collect();
        let p = bootstrap_test(&a, &b, 2000, 1).unwrap();
        assert_abs_diff_eq!(p, 1.0 / 2001.0, epsilon = 1e-15);

        assert!(bootstrap_test(&a, &b[..3], 2000, 1).is_err());
        assert!(bootstrap_test(&a, &b, 10, 1).is_err());

        let p = bootstrap_test(&a, &a.iter().map(|v| v + 0.001).collect::<Vec<_>>(), 1000, 3)
            .unwrap();
        assert!((1.0 / 1001.0..=1.0).contains(&p));
    }

    #[test]
    fn noiseless_experiment_has_zero_error_column() {
        let spec = ExperimentSpec {
            scenario: Scenario::FopB,
            methods: vec![Method::Ena],
            n_list: vec![20],
            reps: 1,
            master_seed: 11,
            params: MethodParams::default(),
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: false,
            zero_noise: true,
        };
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.failures, 0);
        assert_abs_diff_eq!(report.mean(Method::Ena, 20).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reruns_are_identical() {
        let spec = ExperimentSpec {
            scenario: Scenario::FopA,
            methods: vec![Method::Ena, Method::Via],
            n_list: vec![10, 30],
            reps: 3,
            master_seed: 5,
            params: MethodParams {
                delta: 0.05,
                eps: 1e-3,
                ..MethodParams::default()
            },
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: false,
            zero_noise: false,
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.mean_table, b.mean_table);
        for (ra, rb) in a.raw.iter().zip(&b.raw) {
            assert_eq!(ra.value.to_bits(), rb.value.to_bits());
            assert_eq!(ra.theta_hat, rb.theta_hat);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec {
            scenario: Scenario::FopC,
            methods: vec![Method::Ena],
            n_list: vec![10, 10],
            reps: 1,
            master_seed: 0,
            params: MethodParams::default(),
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: false,
            zero_noise: false,
        };
        assert!(spec.validate().is_err()); // non-increasing n_list
        spec.n_list = vec![10, 30];
        assert!(spec.validate().is_err()); // estimation error without theta0
        spec.metric = MetricKind::NormalizedPredictionError;
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn ena_error_decreases_with_n_on_fop_b() {
        let spec = ExperimentSpec {
            scenario: Scenario::FopB,
            methods: vec![Method::Ena],
            n_list: vec![10, 100, 1000],
            reps: 20,
            master_seed: 31,
            params: MethodParams::default(),
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: false,
            zero_noise: false,
        };
        let report = run_experiment(&spec).unwrap();
        let means: Vec<f64> = spec
            .n_list
            .iter()
            .map(|&n| report.mean(Method::Ena, n).unwrap())
            .collect();
        assert!(
            means[0] > means[1] && means[1] > means[2],
            "errors not decreasing: {means:?}"
        );
    }

    #[test]
    fn spa_tracks_random_theta0_on_scalar_log_simplex() {
        // Scatter-style check: with p = 1 and randomized theta0, the
        // semiparametric estimates stay near the diagonal.
        let spec = ExperimentSpec {
            scenario: Scenario::FopE { p: 1 },
            methods: vec![Method::Spa],
            n_list: vec![1000],
            reps: 3,
            master_seed: 33,
            params: MethodParams::default(),
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: true,
            zero_noise: false,
        };
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.failures, 0);
        for record in &report.raw {
            assert!(
                (record.theta_hat[0] - record.theta0[0]).abs() < 0.35,
                "off the diagonal: {record:?}"
            );
        }
    }

    #[test]
    fn randomized_theta0_scatter_records() {
        let spec = ExperimentSpec {
            scenario: Scenario::FopB,
            methods: vec![Method::Ena],
            n_list: vec![50],
            reps: 4,
            master_seed: 9,
            params: MethodParams {
                delta: 0.02,
                ..MethodParams::default()
            },
            metric: MetricKind::EstimationError,
            test_n: 10_000,
            randomize_theta0: true,
            zero_noise: true,
        };
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.raw.len(), 4);
        // Noiseless data: the estimate tracks the drawn theta0 to net width.
        for record in &report.raw {
            assert!(record.theta0[0] >= 0.0 && record.theta0[0] <= 2.0);
            assert!(
                (record.theta_hat[0] - record.theta0[0]).abs() <= 0.02,
                "scatter point off the diagonal: {record:?}"
            );
        }
        // Distinct reps draw distinct theta0.
        assert!(report.raw[0].theta0 != report.raw[1].theta0);
    }
}
