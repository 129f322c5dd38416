//! Flat key = value run configuration for the command-line `run` command.
//!
//! Lines are `key = value`; `#` starts a comment; unknown keys are rejected
//! so typos cannot silently change an experiment.

use std::collections::BTreeMap;

use crate::datagen::Scenario;
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::experiments::{ExperimentSpec, MethodParams, MetricKind};

/// Parsed run configuration: an experiment spec plus output options.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub out_dir: String,
    pub workers: usize,
}

/// Every key the config format accepts.
const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "p",
    "methods",
    "n_list",
    "reps",
    "master_seed",
    "metric",
    "delta",
    "eps",
    "gamma",
    "sigma",
    "project",
    "k_folds",
    "test_n",
    "randomize_theta0",
    "zero_noise",
    "out_dir",
    "workers",
];

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

/// Parse the config text into a validated [`RunConfig`].
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
        }
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }

    let get = |key: &str| entries.get(key).map(String::as_str);
    let scenario_name = get("scenario")
        .ok_or_else(|| Error::Config("missing required key `scenario`".into()))?;
    let p = get("p").map(|v| parse_num::<usize>("p", v)).transpose()?;
    let scenario = Scenario::parse(scenario_name, p)?;

    let methods_raw = get("methods")
        .ok_or_else(|| Error::Config("missing required key `methods`".into()))?;
    let mut methods = Vec::new();
    for token in methods_raw.split(',') {
        let method = Method::parse(token)
            .ok_or_else(|| Error::Config(format!("methods: unknown method `{token}`")))?;
        if !methods.contains(&method) {
            methods.push(method);
        }
    }

    let n_list_raw =
        get("n_list").ok_or_else(|| Error::Config("missing required key `n_list`".into()))?;
    let mut n_list = Vec::new();
    for token in n_list_raw.split(',') {
        n_list.push(parse_num::<usize>("n_list", token.trim())?);
    }

    let metric = match get("metric") {
        Some(v) => MetricKind::parse(v)
            .ok_or_else(|| Error::Config(format!("metric: unknown metric `{v}`")))?,
        None => MetricKind::EstimationError,
    };

    let params = MethodParams {
        delta: get("delta").map(|v| parse_num("delta", v)).transpose()?.unwrap_or(0.01),
        eps: get("eps").map(|v| parse_num("eps", v)).transpose()?.unwrap_or(0.0),
        gamma: get("gamma").map(|v| parse_num("gamma", v)).transpose()?,
        sigma: get("sigma").map(|v| parse_num("sigma", v)).transpose()?,
        project: match get("project") {
            None => None,
            Some("auto") => None,
            Some(v) => Some(parse_bool("project", v)?),
        },
        k_folds: get("k_folds")
            .map(|v| parse_num("k_folds", v))
            .transpose()?
            .unwrap_or(crate::estimators::DEFAULT_K_FOLDS),
    };

    let spec = ExperimentSpec {
        scenario,
        methods,
        n_list,
        reps: get("reps").map(|v| parse_num("reps", v)).transpose()?.unwrap_or(20),
        master_seed: get("master_seed")
            .map(|v| parse_num("master_seed", v))
            .transpose()?
            .unwrap_or(0),
        params,
        metric,
        test_n: get("test_n")
            .map(|v| parse_num("test_n", v))
            .transpose()?
            .unwrap_or(10_000),
        randomize_theta0: get("randomize_theta0")
            .map(|v| parse_bool("randomize_theta0", v))
            .transpose()?
            .unwrap_or(false),
        zero_noise: get("zero_noise")
            .map(|v| parse_bool("zero_noise", v))
            .transpose()?
            .unwrap_or(false),
    };
    spec.validate()?;

    Ok(RunConfig {
        spec,
        out_dir: get("out_dir").unwrap_or("out").to_string(),
        workers: get("workers")
            .map(|v| parse_num("workers", v))
            .transpose()?
            .unwrap_or(0),
    })
}
