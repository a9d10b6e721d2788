use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::estimator::{EstimatorSpec, FitContext, Method};
use super::loss::{losses, LossKind};
use super::models::{gen_model, ModelSpec, Truth};
use super::sampler::{apply_transform, replicate_rng, sample_gaussian, TransformSpec, RNG_NAME};
use crate::rankcov::rescale_to_diagonal;
use crate::{Error, Result};

fn default_losses() -> Vec<LossKind> {
    vec![LossKind::Op, LossKind::OpSq]
}

fn default_inflation() -> f64 {
    1.05
}

/// A grid of (estimator, n) cells evaluated over seeded replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub estimators: Vec<EstimatorSpec>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_losses")]
    pub losses: Vec<LossKind>,
    #[serde(default)]
    pub transform: TransformSpec,
    /// Estimators without an explicit `eta` use this multiple of the
    /// generating model's spectral bound.
    #[serde(default = "default_inflation")]
    pub eta_inflation: f64,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, estimators: Vec<EstimatorSpec>, n_grid: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            model,
            estimators,
            n_grid,
            reps,
            seed,
            losses: default_losses(),
            transform: TransformSpec::default(),
            eta_inflation: default_inflation(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() || self.n_grid.is_empty() || self.losses.is_empty() {
            return Err(Error::InvalidParameter("estimators, n_grid and losses must be non-empty".into()));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter("every n in n_grid must be at least 2".into()));
        }
        if !(self.eta_inflation >= 1.0) {
            return Err(Error::InvalidParameter("eta_inflation must be at least 1".into()));
        }
        if self.reps > u32::MAX as usize || self.cell_count() > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many cells or replicates".into()));
        }
        let ctx = FitContext { alpha: Some(self.model.alpha), eta: Some(2.0) };
        for e in &self.estimators {
            e.validate(ctx)?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.estimators.len() * self.n_grid.len()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl LossSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { values, mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: usize,
    pub model: ModelSpec,
    pub transform: TransformSpec,
    pub estimator: String,
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
    /// Keyed by loss name; empty when the cell failed.
    pub losses: BTreeMap<String, LossSummary>,
    /// Bandwidth used in each replicate, when the method has one.
    pub bandwidths: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl CellReport {
    pub fn mean(&self, kind: LossKind) -> Option<f64> {
        self.losses.get(kind.name()).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub rng: String,
    pub version: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub provenance: Provenance,
    pub cells: Vec<CellReport>,
}

struct RepOutcome {
    losses: Vec<f64>,
    k: Option<usize>,
}

fn run_replicate(cfg: &ExperimentConfig, fixed: Option<&Truth>, spec: &EstimatorSpec, n: usize, cell: usize, rep: usize) -> Result<RepOutcome> {
    let mut rng = replicate_rng(cfg.seed, cell as u32, rep as u32);
    let drawn;
    let truth = match fixed {
        Some(t) => t,
        None => {
            drawn = Truth::new(gen_model(&cfg.model, &mut rng)?)?;
            &drawn
        }
    };
    let z = sample_gaussian(&truth.model, n, &mut rng)?;
    let z = apply_transform(&z, cfg.transform);
    let ctx = FitContext { alpha: Some(cfg.model.alpha), eta: Some(truth.eta(cfg.eta_inflation)) };
    let fit = spec.fit(&z, ctx)?;
    let est = if spec.method == Method::RankCrop && spec.rescale.unwrap_or(true) {
        rescale_to_diagonal(&fit.estimate, &truth.omega.diagonal())?
    } else {
        fit.estimate
    };
    Ok(RepOutcome { losses: losses(&est, &truth.omega, &cfg.losses)?, k: fit.k })
}

/// Runs every (estimator, n) cell over `reps` replicates.
///
/// Cell `c = estimator_index · |n_grid| + n_index`; replicate `r` of cell `c`
/// draws its model permutation (if any) and its data from stream
/// `(c << 32) | r` of the master seed. Replicates run in parallel and are
/// reassembled in order, so the report does not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    crate::sequential_kernels();
    let fixed = if cfg.model.is_random() {
        None
    } else {
        Some(Truth::new(gen_model(&cfg.model, &mut replicate_rng(cfg.seed, 0, 0))?)?)
    };
    let nn = cfg.n_grid.len();
    let tasks: Vec<(usize, usize)> = (0..cfg.cell_count()).flat_map(|c| (0..cfg.reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<RepOutcome>> = tasks
        .par_iter()
        .map(|&(c, r)| run_replicate(cfg, fixed.as_ref(), &cfg.estimators[c / nn], cfg.n_grid[c % nn], c, r))
        .collect();
    let mut cells = Vec::with_capacity(cfg.cell_count());
    for (c, chunk) in outcomes.chunks(cfg.reps).enumerate() {
        let spec = &cfg.estimators[c / nn];
        let mut report = CellReport {
            cell: c,
            model: cfg.model.clone(),
            transform: cfg.transform,
            estimator: spec.label(),
            method: spec.method,
            n: cfg.n_grid[c % nn],
            p: cfg.model.p,
            reps: cfg.reps,
            seed: cfg.seed,
            losses: BTreeMap::new(),
            bandwidths: Vec::new(),
            failure: None,
        };
        match chunk.iter().position(|o| o.is_err()) {
            Some(i) => {
                let e = chunk[i].as_ref().err().expect("error");
                report.failure = Some(format!("replicate {i}: {e}"));
            }
            None => {
                let ok: Vec<&RepOutcome> = chunk.iter().map(|o| o.as_ref().ok().expect("ok")).collect();
                for (li, kind) in cfg.losses.iter().enumerate() {
                    let values = ok.iter().map(|o| o.losses[li]).collect();
                    report.losses.insert(kind.name().to_string(), LossSummary::from_values(values));
                }
                report.bandwidths = ok.iter().map(|o| o.k).collect();
            }
        }
        cells.push(report);
    }
    Ok(RiskReport {
        provenance: Provenance {
            config_sha256: cfg.hash(),
            seed: cfg.seed,
            rng: RNG_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
        },
        cells,
    })
}

impl RiskReport {
    pub fn all_failed(&self) -> bool {
        self.cells.iter().all(|c| c.failure.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| c.failure.is_some())
    }

    pub fn find(&self, estimator: &str, n: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.estimator == estimator && c.n == n)
    }

    /// One row per cell with mean and standard deviation of every loss.
    pub fn to_csv(&self) -> String {
        let kinds = &self.provenance.config.losses;
        let mut out = String::from("model,level,alpha,p,n,transform,estimator,reps");
        for k in kinds {
            out.push_str(&format!(",{0}_mean,{0}_sd", k.name()));
        }
        out.push_str(",failure\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}",
                c.model.family.name(),
                c.model.level.map(|l| l.to_string()).unwrap_or_default(),
                c.model.alpha,
                c.p,
                c.n,
                c.transform.name(),
                c.estimator,
                c.reps
            ));
            for k in kinds {
                match c.losses.get(k.name()) {
                    Some(s) => out.push_str(&format!(",{},{}", s.mean, s.sd)),
                    None => out.push_str(",,"),
                }
            }
            let failure = c.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!(",{failure}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}
