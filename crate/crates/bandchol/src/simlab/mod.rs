//! Simulation models, samplers, losses and the replication engine.

mod estimator;
mod experiment;
mod loss;
mod models;
mod report;
mod sampler;

pub use estimator::{BandwidthRule, EstimatorSpec, Fit, FitContext, Method};
pub use experiment::{run_experiment, CellReport, ExperimentConfig, LossSummary, Provenance, RiskReport};
pub use loss::{loss, losses, LossKind};
pub use models::{gen_model, misspecified_rows, ModelFamily, ModelSpec, Truth};
pub use report::{pearson, plot_csv, plot_data, rate_logp, rate_p, rate_q, PlotRow};
pub use sampler::{apply_transform, replicate_rng, sample_gaussian, stream_id, TransformSpec, RNG_NAME};
