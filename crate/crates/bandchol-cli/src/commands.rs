use std::path::{Path, PathBuf};
use std::time::Instant;

use bandchol::matcore::{save_data, save_square, MatrixFormat};
use bandchol::simlab::{
    apply_transform, gen_model, plot_csv, plot_data, replicate_rng, run_experiment, sample_gaussian, FitContext,
    RiskReport, Truth,
};
use bandchol::{adaptive::LepskiReport, SymMatrix};
use serde::Serialize;

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, CliResult};

/// What a successful command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Lines for standard output.
    pub messages: Vec<String>,
    /// Lines for standard error.
    pub warnings: Vec<String>,
}

fn write_text(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn prepare_out(cfg: &RunConfig) -> CliResult<PathBuf> {
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    Ok(out)
}

fn matrix_path(out: &Path, cfg: &RunConfig, stem: &str) -> PathBuf {
    let format = if cfg.binary == Some(true) { MatrixFormat::Binary } else { MatrixFormat::Text };
    out.join(format!("{stem}.{}", format.extension()))
}

fn save(out: &mut Outcome, path: PathBuf, m: &SymMatrix) -> CliResult<()> {
    save_square(&path, m).map_err(|e| map_write(&path, e))?;
    out.files.push(path);
    Ok(())
}

fn map_write(path: &Path, e: bandchol::Error) -> CliError {
    match e {
        bandchol::Error::Io(io) => CliError::io(path, io),
        e => e.into(),
    }
}

/// Writes the effective configuration next to the outputs.
fn echo_config(out_dir: &Path, cfg: &RunConfig, outcome: &mut Outcome) -> CliResult<()> {
    let path = out_dir.join("config.toml");
    write_text(&path, &cfg.to_toml())?;
    outcome.files.push(path);
    Ok(())
}

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| match cfg.command.expect("validated") {
        CommandKind::Generate => generate(cfg),
        CommandKind::Estimate => estimate(cfg),
        CommandKind::Simulate => simulate(cfg),
        CommandKind::Report => report(cfg),
    })
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    model: &'a bandchol::simlab::ModelSpec,
    seed: u64,
    n: usize,
    transform: &'static str,
    spectral_bound: f64,
    lambda_min: f64,
    lambda_max: f64,
}

/// Model factors, precision and covariance matrices, and one data draw.
pub fn generate(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.model.as_ref().expect("validated");
    let (n, seed) = (cfg.n.expect("validated"), cfg.seed.expect("validated"));
    let transform = cfg.transform.unwrap_or_default();
    let mut rng = replicate_rng(seed, 0, 0);
    let model = gen_model(spec, &mut rng)?;
    let z = apply_transform(&sample_gaussian(&model, n, &mut rng)?, transform);
    let truth = Truth::new(model)?;
    let sigma = truth.omega.inverse_spd()?;
    let eig = bandchol::matcore::eigenvalues(truth.omega.as_mat())?;

    let out_dir = prepare_out(cfg)?;
    let mut out = Outcome::default();
    save(&mut out, matrix_path(&out_dir, cfg, "A"), &SymMatrix::general(truth.model.a().to_owned())?)?;
    save(&mut out, matrix_path(&out_dir, cfg, "D"), &SymMatrix::from_diagonal(truth.model.d()))?;
    save(&mut out, matrix_path(&out_dir, cfg, "omega"), &truth.omega)?;
    save(&mut out, matrix_path(&out_dir, cfg, "sigma"), &sigma)?;
    let data_path = matrix_path(&out_dir, cfg, "data");
    save_data(&data_path, &z).map_err(|e| map_write(&data_path, e))?;
    out.files.push(data_path);

    let summary = ModelSummary {
        model: spec,
        seed,
        n,
        transform: transform.name(),
        spectral_bound: truth.bound,
        lambda_min: eig[0],
        lambda_max: eig[eig.len() - 1],
    };
    let path = out_dir.join("model.json");
    write_text(&path, &(serde_json::to_string_pretty(&summary).expect("serialises") + "\n"))?;
    out.files.push(path);
    echo_config(&out_dir, cfg, &mut out)?;
    out.messages.push(format!(
        "spectral bound of omega: {} (eigenvalues in [{}, {}]); eta must be at least this",
        truth.bound,
        eig[0],
        eig[eig.len() - 1]
    ));
    Ok(out)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    method: &'static str,
    label: String,
    n: usize,
    p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<usize>,
    parameters: &'a bandchol::simlab::EstimatorSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    lepski: Option<&'a LepskiReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

/// Fits one estimator to a data file.
pub fn estimate(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.estimator.as_ref().expect("validated");
    let input = cfg.input.as_ref().expect("validated");
    let z = bandchol::matcore::load_data(input)
        .map_err(|e| CliError::Config(format!("cannot read data {}: {e}", input.display())))?;
    let start = Instant::now();
    let fit = spec.fit(&z, FitContext::default())?;
    let elapsed = start.elapsed().as_secs_f64();

    let out_dir = prepare_out(cfg)?;
    let mut out = Outcome::default();
    save(&mut out, matrix_path(&out_dir, cfg, "estimate"), &fit.estimate)?;
    let sidecar = Sidecar {
        method: spec.method.name(),
        label: spec.label(),
        n: z.n(),
        p: z.p(),
        k: fit.k,
        k0: fit.k0,
        k1: fit.k1,
        parameters: spec,
        lepski: fit.lepski.as_ref(),
        wall_time_seconds: (cfg.record_time == Some(true)).then_some(elapsed),
    };
    let path = out_dir.join("estimate.json");
    write_text(&path, &(serde_json::to_string_pretty(&sidecar).expect("serialises") + "\n"))?;
    out.files.push(path);
    echo_config(&out_dir, cfg, &mut out)?;
    match (fit.k, &fit.lepski) {
        (_, Some(r)) => out.messages.push(format!("selected k = {:?}", r.selection)),
        (Some(k), None) => out.messages.push(format!("bandwidth k = {k}")),
        (None, None) => {}
    }
    Ok(out)
}

/// Runs an experiment grid and writes the CSV and JSON reports.
pub fn simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let exp = cfg.experiment()?;
    let report = run_experiment(&exp)?;
    let out_dir = prepare_out(cfg)?;
    let mut out = Outcome::default();
    let csv = out_dir.join("report.csv");
    write_text(&csv, &report.to_csv())?;
    out.files.push(csv);
    let json = out_dir.join("report.json");
    write_text(&json, &(report.to_json() + "\n"))?;
    out.files.push(json);
    echo_config(&out_dir, cfg, &mut out)?;
    let failed: Vec<_> = report.failures().collect();
    for c in &failed {
        out.warnings.push(format!(
            "cell {} ({}, n = {}) failed: {}",
            c.cell,
            c.estimator,
            c.n,
            c.failure.as_deref().unwrap_or("")
        ));
    }
    if report.all_failed() {
        return Err(CliError::AllCellsFailed {
            count: report.cells.len(),
            first: out.warnings.first().cloned().unwrap_or_default(),
        });
    }
    out.messages.push(format!("{} cells, {} failed", report.cells.len(), failed.len()));
    Ok(out)
}

/// Plot data from one or more RiskReport JSON files.
pub fn report(cfg: &RunConfig) -> CliResult<Outcome> {
    let mut reports = Vec::new();
    for path in cfg.reports.as_ref().expect("validated") {
        let s = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read report {}: {e}", path.display())))?;
        reports.push(RiskReport::from_json(&s).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?);
    }
    let rows = plot_data(&reports);
    let out_dir = prepare_out(cfg)?;
    let mut out = Outcome::default();
    let path = out_dir.join("plot_data.csv");
    write_text(&path, &plot_csv(&rows))?;
    out.files.push(path);
    echo_config(&out_dir, cfg, &mut out)?;
    out.messages.push(format!("{} plot rows", rows.len()));
    Ok(out)
}
