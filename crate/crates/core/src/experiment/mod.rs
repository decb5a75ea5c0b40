//! Datasets, training runs, encoding comparisons and sensitivity sweeps.

mod dataset;
mod run;
mod sweep;

use thiserror::Error;

pub use dataset::{build_dataset, Dataset, NORMALIZER_HEADROOM};
pub use run::{
    mae, run_comparison, run_single, Architecture, Evaluation, InputEncoding, Profile, RunResult, SegmentMae,
    BIT_SEGMENTS,
};
pub use sweep::{
    compare_activations, count_increases, execute_all, plan_activation_pair, plan_comparison, plan_cycle_sweep,
    plan_noise_sweep, plan_size_sweep, plan_split_sweep, sweep_cycles, sweep_noise, sweep_size, sweep_split, RunPlan,
    RunRecord,
};

use crate::encoding::EncodingError;
use crate::nn::NnError;
use crate::signals::SignalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{0} partition is empty")]
    EmptyPartition(&'static str),
    #[error("no residuals to average")]
    EmptyResiduals,
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Network(#[from] NnError),
}

impl ExperimentError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, ExperimentError::Network(NnError::Diverged { .. } | NnError::NonFinite(_)))
    }
}
