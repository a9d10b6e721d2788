//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use bandchol::simlab::{EstimatorSpec, ExperimentConfig, LossKind, Method, ModelSpec, TransformSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Generate,
    Estimate,
    Simulate,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Generate => "generate",
            CommandKind::Estimate => "estimate",
            CommandKind::Simulate => "simulate",
            CommandKind::Report => "report",
        }
    }
}

/// Everything a run needs. Plain values come first so the TOML echo keeps
/// tables at the end.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Write matrices in the binary format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary: Option<bool>,
    /// Record wall time in the estimate sidecar (makes it non-reproducible).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_time: Option<bool>,
    /// generate: sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
    /// estimate: data file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<Vec<LossKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_inflation: Option<f64>,
    /// report: RiskReport JSON files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reports: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<EstimatorSpec>>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub binary: bool,
    pub record_time: bool,
    pub method: Option<Method>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub cl: Option<f64>,
    pub c: Option<f64>,
    pub rank: Option<bandchol::rankcov::RankMethod>,
    pub family: Option<bandchol::simlab::ModelFamily>,
    pub p: Option<usize>,
    pub level: Option<u32>,
    pub n: Option<usize>,
    pub n_grid: Vec<usize>,
    pub reps: Option<usize>,
    pub transform: Option<TransformSpec>,
    pub input: Vec<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> CliResult<Self> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&s)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("bandchol-out"))
    }

    /// Applies flag overrides for `command`. Flags that make no sense for the
    /// command are rejected.
    pub fn resolve(mut self, command: CommandKind, mut o: Overrides) -> CliResult<Self> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config file is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        self.command = Some(command);
        over(&mut self.seed, o.seed);
        over(&mut self.threads, o.threads);
        over(&mut self.out, o.out.take());
        if o.binary {
            self.binary = Some(true);
        }
        if o.record_time {
            self.record_time = Some(true);
        }
        let reject = |what: &str| Err(CliError::Config(format!("{what} does not apply to `{}`", command.name())));
        let model_flags = o.family.is_some() || o.p.is_some() || o.level.is_some();
        let est_flags = o.method.is_some()
            || o.k.is_some()
            || o.eta.is_some()
            || o.cl.is_some()
            || o.c.is_some()
            || o.rank.is_some();
        match command {
            CommandKind::Generate => {
                if est_flags || !o.n_grid.is_empty() || o.reps.is_some() || !o.input.is_empty() {
                    return reject("estimator, grid and input flags");
                }
                self.apply_model(&o)?;
                over(&mut self.n, o.n);
                over(&mut self.transform, o.transform);
            }
            CommandKind::Estimate => {
                if model_flags || o.n.is_some() || !o.n_grid.is_empty() || o.reps.is_some() || o.transform.is_some() {
                    return reject("model and grid flags");
                }
                if o.input.len() > 1 {
                    return reject("more than one --input");
                }
                over(&mut self.input, o.input.pop());
                if let Some(m) = o.method {
                    match &mut self.estimator {
                        Some(e) => e.method = m,
                        None => self.estimator = Some(EstimatorSpec::new(m)),
                    }
                }
                if let Some(e) = &mut self.estimator {
                    apply_estimator(e, &o, true);
                } else if est_flags || o.alpha.is_some() {
                    return Err(CliError::Config("estimate needs --method or an [estimator] table".into()));
                }
            }
            CommandKind::Simulate => {
                if o.method.is_some() || o.n.is_some() || !o.input.is_empty() {
                    return reject("--method, --n and --input");
                }
                self.apply_model(&o)?;
                if !o.n_grid.is_empty() {
                    self.n_grid = Some(o.n_grid.clone());
                }
                over(&mut self.reps, o.reps);
                over(&mut self.transform, o.transform);
                if let Some(list) = &mut self.estimators {
                    for e in list {
                        apply_estimator(e, &o, false);
                    }
                }
            }
            CommandKind::Report => {
                if model_flags || est_flags || o.alpha.is_some() || o.n.is_some() || !o.n_grid.is_empty() {
                    return reject("model, estimator and grid flags");
                }
                if !o.input.is_empty() {
                    self.reports = Some(std::mem::take(&mut o.input));
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn apply_model(&mut self, o: &Overrides) -> CliResult<()> {
        if self.model.is_none() {
            if let (Some(family), Some(p)) = (o.family, o.p) {
                self.model = Some(ModelSpec::new(family, p, 1.0));
            } else if o.family.is_some() || o.p.is_some() {
                return Err(CliError::Config("--family and --p must be given together without a [model] table".into()));
            }
        }
        if let Some(m) = &mut self.model {
            set(&mut m.family, o.family);
            set(&mut m.p, o.p);
            set(&mut m.alpha, o.alpha);
            if o.level.is_some() {
                m.level = o.level;
            }
        } else if o.alpha.is_some() || o.level.is_some() {
            return Err(CliError::Config("--alpha/--level need a model".into()));
        }
        Ok(())
    }

    /// Checks that everything `command` needs is present and consistent.
    pub fn validate(&self) -> CliResult<()> {
        let missing = |what: &str| Err(CliError::Config(format!("`{}` needs {what}", self.command.map_or("run", |c| c.name()))));
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        match self.command {
            Some(CommandKind::Generate) => {
                let Some(model) = &self.model else { return missing("a model") };
                model.validate()?;
                match self.n {
                    None => return missing("n"),
                    Some(0) => return Err(CliError::Config("n must be at least 1".into())),
                    _ => {}
                }
                if self.seed.is_none() {
                    return missing("a seed");
                }
            }
            Some(CommandKind::Estimate) => {
                if self.input.is_none() {
                    return missing("an input data file");
                }
                let Some(e) = &self.estimator else { return missing("an estimator") };
                e.validate(Default::default())?;
            }
            Some(CommandKind::Simulate) => {
                self.experiment()?.validate()?;
            }
            Some(CommandKind::Report) => {
                if self.reports.as_ref().is_none_or(|r| r.is_empty()) {
                    return missing("at least one report JSON");
                }
            }
            None => return Err(CliError::Config("no command".into())),
        }
        Ok(())
    }

    pub fn experiment(&self) -> CliResult<ExperimentConfig> {
        let need = |what: &str| CliError::Config(format!("`simulate` needs {what}"));
        let model = self.model.clone().ok_or_else(|| need("a model"))?;
        let estimators = self.estimators.clone().ok_or_else(|| need("estimators"))?;
        let n_grid = self.n_grid.clone().ok_or_else(|| need("n_grid"))?;
        let reps = self.reps.ok_or_else(|| need("reps"))?;
        let seed = self.seed.ok_or_else(|| need("a seed"))?;
        let mut cfg = ExperimentConfig::new(model, estimators, n_grid, reps, seed);
        if let Some(l) = &self.losses {
            cfg.losses = l.clone();
        }
        set(&mut cfg.transform, self.transform);
        set(&mut cfg.eta_inflation, self.eta_inflation);
        Ok(cfg)
    }
}

fn over<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_estimator(e: &mut EstimatorSpec, o: &Overrides, with_alpha: bool) {
    if o.k.is_some() {
        e.k = o.k;
    }
    if with_alpha && o.alpha.is_some() {
        e.alpha = o.alpha;
    }
    if o.eta.is_some() {
        e.eta = o.eta;
    }
    if o.cl.is_some() {
        e.cl = o.cl;
    }
    if o.c.is_some() {
        e.c = o.c;
    }
    if o.rank.is_some() {
        e.rank = o.rank;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bandchol::simlab::ModelFamily;

    const SIM: &str = r#"
command = "simulate"
seed = 42
n_grid = [500, 1000]
reps = 3

[model]
family = "q_decay"
p = 50
alpha = 1.0

[[estimators]]
method = "crop"
rule = "q"

[[estimators]]
method = "banding"
"#;

    #[test]
    fn round_trip() {
        let c = RunConfig::from_toml(SIM).unwrap();
        let again = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.experiment().unwrap().cell_count(), 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sed = 1\n").is_err());
        assert!(RunConfig::from_toml("[model]\nfamily = \"q_decay\"\np = 5\nbeta = 1\n").is_err());
    }

    #[test]
    fn overrides() {
        let c = RunConfig::from_toml(SIM).unwrap();
        let o = Overrides { seed: Some(7), eta: Some(3.0), alpha: Some(2.0), ..Default::default() };
        let r = c.resolve(CommandKind::Simulate, o).unwrap();
        assert_eq!(r.seed, Some(7));
        assert_eq!(r.model.as_ref().unwrap().alpha, 2.0);
        assert!(r.estimators.unwrap().iter().all(|e| e.eta == Some(3.0)));
    }

    #[test]
    fn command_mismatch() {
        let c = RunConfig::from_toml(SIM).unwrap();
        assert!(c.resolve(CommandKind::Generate, Overrides::default()).is_err());
    }

    #[test]
    fn estimate_without_eta_is_a_config_error() {
        let o = Overrides { method: Some(Method::Crop), k: Some(3), input: vec!["x.txt".into()], ..Default::default() };
        let err = RunConfig::default().resolve(CommandKind::Estimate, o).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("eta"));
    }

    #[test]
    fn generate_from_flags() {
        let o = Overrides {
            family: Some(ModelFamily::QDecay),
            p: Some(10),
            n: Some(20),
            seed: Some(7),
            ..Default::default()
        };
        let r = RunConfig::default().resolve(CommandKind::Generate, o).unwrap();
        assert_eq!(r.model.unwrap().p, 10);
        let o = Overrides { family: Some(ModelFamily::QDecay), n: Some(20), seed: Some(7), ..Default::default() };
        assert!(RunConfig::default().resolve(CommandKind::Generate, o).is_err());
    }
}
