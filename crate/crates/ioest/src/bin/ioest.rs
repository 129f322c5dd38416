//! Command-line front end: dataset generation, single estimations on CSV
//! data, replicated experiment runs from a config file, and the
//! identifiability demo.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (unknown scenario,
//! config parse error, CSV schema mismatch), 3 estimator or replication
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ioest::config::{parse_run_config, RunConfig};
use ioest::csvio::{format_f64, read_dataset, write_dataset};
use ioest::datagen::{generate_with, identifiability_fixtures, Scenario};
use ioest::error::Error;
use ioest::estimators::Method;
use ioest::experiments::{estimate_with_method, run_experiment, ExperimentReport, MethodParams};
use ioest::risk::risk_saa;

#[derive(Parser)]
#[command(name = "ioest", version, about = "Inverse optimization with noisy data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario dataset as CSV.
    Gen {
        /// Scenario name: FOP-A..FOP-F, SQR, CE, SDH-LIKE.
        #[arg(long)]
        scenario: String,
        /// Dimension for the parameterized scenarios (FOP-D, FOP-E, SQR).
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Generate noiseless decisions (debug).
        #[arg(long)]
        zero_noise: bool,
        /// Override the generating parameter (comma separated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        theta0: Option<Vec<f64>>,
    },
    /// Estimate parameters from a CSV dataset.
    Estimate {
        /// ENA, SPA, KKA or VIA.
        #[arg(long)]
        method: String,
        /// Scenario naming the model family and parameter box to fit.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        p: Option<usize>,
        /// Input CSV (schema u_1..u_m,y_1..y_d).
        #[arg(long)]
        data: PathBuf,
        /// Net spacing for ENA and the p <= 2 baselines.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Risk regularization for ENA.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Kernel bandwidth for SPA (omit for cross-validation).
        #[arg(long)]
        gamma: Option<f64>,
        /// Kernel ridge for SPA (omit for cross-validation).
        #[arg(long)]
        sigma: Option<f64>,
        /// Force cross-validated kernel selection.
        #[arg(long)]
        cv: bool,
        /// Project denoised points onto the feasible set (SPA).
        #[arg(long)]
        project: bool,
        /// Optional single-row result CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a replicated experiment from a flat key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Emit the identifiability fixtures demo (risk profiles over theta).
    Fixtures {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 1,
        Error::SchemaMismatch(_)
        | Error::Config(_)
        | Error::UnknownScenario(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. } => 2,
        _ => 3,
    }
}

fn init_workers(workers: usize) {
    if workers > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen {
            scenario,
            p,
            n,
            seed,
            out,
            zero_noise,
            theta0,
        } => cmd_gen(&scenario, p, n, seed, &out, zero_noise, theta0.as_deref()),
        Command::Estimate {
            method,
            scenario,
            p,
            data,
            delta,
            eps,
            gamma,
            sigma,
            cv,
            project,
            out,
            workers,
        } => {
            init_workers(workers.unwrap_or(0));
            cmd_estimate(
                &method,
                &scenario,
                p,
                &data,
                delta,
                eps,
                gamma,
                sigma,
                cv,
                project,
                out.as_deref(),
            )
        }
        Command::Run {
            config,
            out,
            workers,
        } => cmd_run(&config, out.as_deref(), workers),
        Command::Fixtures { out } => cmd_fixtures(&out),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn cmd_gen(
    scenario_name: &str,
    p: Option<usize>,
    n: usize,
    seed: u64,
    out: &Path,
    zero_noise: bool,
    theta0: Option<&[f64]>,
) -> Result<ExitCode, Error> {
    let scenario = Scenario::parse(scenario_name, p)?;
    let data = generate_with(&scenario, theta0, n, seed, zero_noise)?;
    write_dataset(&data, out)?;
    println!(
        "wrote {} observations of {} to {}",
        data.n(),
        scenario.name(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    method_name: &str,
    scenario_name: &str,
    p: Option<usize>,
    data_path: &Path,
    delta: f64,
    eps: f64,
    gamma: Option<f64>,
    sigma: Option<f64>,
    cv: bool,
    project: bool,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let method = Method::parse(method_name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{method_name}`")))?;
    let scenario = Scenario::parse(scenario_name, p)?;
    let data = read_dataset(data_path)?;
    data.check_dims(&scenario.model())
        .map_err(|e| Error::SchemaMismatch(e.to_string()))?;

    let params = MethodParams {
        delta,
        eps,
        gamma: if cv { None } else { gamma },
        sigma: if cv { None } else { sigma },
        project: project.then_some(true),
        ..MethodParams::default()
    };
    let estimate = estimate_with_method(method, &scenario, &data, &params)?;

    let rendered: Vec<String> = estimate.theta_hat.iter().map(|v| format!("{v:.6}")).collect();
    println!("method: {}", estimate.method);
    println!("theta_hat: {}", rendered.join(" "));
    println!("loss: {:.6e}", estimate.loss);
    let d = &estimate.diagnostics;
    let mut notes = Vec::new();
    if let Some(g) = d.grid_size {
        notes.push(format!("grid_size={g}"));
    }
    if let Some((gamma, sigma)) = d.kernel {
        notes.push(format!("gamma={gamma:.6}"));
        notes.push(format!("sigma={sigma:.6e}"));
    }
    if let Some(it) = d.iterations {
        notes.push(format!("iterations={it}"));
    }
    notes.push(format!("converged={}", d.converged));
    println!("diagnostics: {}", notes.join(" "));

    if let Some(path) = out {
        let mut content = String::new();
        let p_dim = estimate.theta_hat.len();
        let header: Vec<String> = (1..=p_dim)
            .map(|k| format!("theta_{k}"))
            .chain(["loss".to_string()])
            .collect();
        content.push_str(&header.join(","));
        content.push('\n');
        let row: Vec<String> = estimate
            .theta_hat
            .iter()
            .chain([&estimate.loss])
            .map(|&v| format_f64(v))
            .collect();
        content.push_str(&row.join(","));
        content.push('\n');
        std::fs::write(path, content)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(
    config_path: &Path,
    out_override: Option<&Path>,
    workers_override: Option<usize>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    let RunConfig {
        mut spec,
        out_dir,
        workers,
    } = parse_run_config(&text)?;
    if let Ok(seed) = std::env::var("IOEST_SEED") {
        spec.master_seed = seed
            .parse()
            .map_err(|_| Error::Config(format!("IOEST_SEED: cannot parse `{seed}`")))?;
    }
    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(out_dir));
    // Validate all outputs before any computation.
    std::fs::create_dir_all(&out_dir)?;
    init_workers(workers_override.unwrap_or(workers));

    let report = run_experiment(&spec)?;
    write_report(&report, &out_dir)?;

    println!(
        "scenario {} ({}), {} methods x {} sizes x {} reps",
        report.scenario_name,
        report.metric.name(),
        report.methods.len(),
        report.n_list.len(),
        spec.reps
    );
    let header: Vec<String> = report.n_list.iter().map(|n| format!("n={n}")).collect();
    println!("{:>8} {}", "method", header.join(" "));
    for (i, method) in report.methods.iter().enumerate() {
        let cells: Vec<String> = report.mean_table[i]
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect();
        println!("{:>8} {}", method.name(), cells.join(" "));
    }
    println!("outputs in {}", out_dir.display());

    if report.failures > 0 {
        eprintln!("{} replication(s) failed", report.failures);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

/// Write table.csv, raw.csv and one scatter CSV per method.
fn write_report(report: &ExperimentReport, out_dir: &Path) -> Result<(), Error> {
    let mut table = String::new();
    table.push_str("method");
    for n in &report.n_list {
        table.push_str(&format!(",{n}"));
    }
    table.push('\n');
    for (i, method) in report.methods.iter().enumerate() {
        table.push_str(method.name());
        for value in &report.mean_table[i] {
            table.push(',');
            table.push_str(&format_f64(*value));
        }
        table.push('\n');
    }
    std::fs::write(out_dir.join("table.csv"), table)?;

    let p = report.raw.first().map(|r| r.theta_hat.len()).unwrap_or(0);
    let mut raw = String::new();
    raw.push_str("method,n,rep,metric");
    for k in 1..=p {
        raw.push_str(&format!(",theta0_{k}"));
    }
    for k in 1..=p {
        raw.push_str(&format!(",theta_hat_{k}"));
    }
    raw.push('\n');
    for record in &report.raw {
        raw.push_str(&format!(
            "{},{},{},{}",
            record.method.name(),
            record.n,
            record.rep,
            format_f64(record.value)
        ));
        for v in record.theta0.iter().chain(&record.theta_hat) {
            raw.push(',');
            raw.push_str(&format_f64(*v));
        }
        raw.push('\n');
    }
    std::fs::write(out_dir.join("raw.csv"), raw)?;

    // Scatter of (theta0, theta_hat) pairs at the largest sample size.
    let n_max = *report.n_list.last().expect("validated nonempty");
    for method in &report.methods {
        let mut scatter = String::new();
        for k in 1..=p {
            if k > 1 {
                scatter.push(',');
            }
            scatter.push_str(&format!("theta0_{k}"));
        }
        for k in 1..=p {
            scatter.push_str(&format!(",theta_hat_{k}"));
        }
        scatter.push('\n');
        for record in report
            .raw
            .iter()
            .filter(|r| r.method == *method && r.n == n_max)
        {
            let row: Vec<String> = record
                .theta0
                .iter()
                .chain(&record.theta_hat)
                .map(|&v| format_f64(v))
                .collect();
            scatter.push_str(&row.join(","));
            scatter.push('\n');
        }
        std::fs::write(
            out_dir.join(format!("scatter_{}.csv", method.name())),
            scatter,
        )?;
    }
    Ok(())
}

/// Risk profiles over a theta grid for the three identifiability fixtures:
/// the first and third identify the parameter, the second is flat on [1, 2].
fn cmd_fixtures(out_dir: &Path) -> Result<ExitCode, Error> {
    std::fs::create_dir_all(out_dir)?;
    let fixtures = identifiability_fixtures();
    let names = ["one", "two", "three"];
    for (idx, (prob, identifiable)) in fixtures.iter().enumerate() {
        // Noiseless observations: fixture three gets the revealing input
        // u = -1, the others have no input effect.
        let theta_gen = 1.5;
        let u = if idx == 2 { -1.0 } else { 0.0 };
        let y = prob.solve_forward(&[u], &[theta_gen]).unwrap().point;
        let data = ioest::risk::Dataset::new(vec![vec![u]; 16], vec![y; 16])?;

        let mut csv = String::from("theta,q\n");
        for i in 0..=100 {
            let theta = 2.0 * i as f64 / 100.0;
            let q = risk_saa(prob, &data, &[theta], 0.0)?.q;
            csv.push_str(&format!("{},{}\n", format_f64(theta), format_f64(q)));
        }
        let path = out_dir.join(format!("fixture_{}_risk.csv", names[idx]));
        std::fs::write(&path, csv)?;
        println!(
            "fixture {}: identifiable = {}, risk profile at {}",
            names[idx],
            identifiable,
            path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}
