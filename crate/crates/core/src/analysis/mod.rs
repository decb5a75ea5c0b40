//! Hidden-layer activation analysis: capture, PCA projection, DBSCAN
//! clustering, and per-cluster bit-signature and phase reports.

mod dbscan;
mod pca;
mod signature;
mod trace;

use alloc::vec::Vec;

pub use dbscan::{cluster_count, cluster_dbscan, default_eps, kth_neighbor_distances, quantile, NOISE};
pub use pca::{project_pca, Projection};
pub use signature::{
    bit_signature, mutual_information, permutation_null, signature_scan, trend_slope, BitScore, ClusterReport,
    ClusterSummary, SignatureShare, PHASE_BINS,
};
pub use trace::{capture_activations, phase_of, trace_dataset, ActivationTrace, TraceMetadata};

use crate::encoding::EncodingError;
use crate::nn::{Matrix, NnError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no clusters found; every sample is noise")]
    NoClusters,
    #[error("need at least 2 clusters, found {found}")]
    TooFewClusters { found: usize },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Network(#[from] NnError),
}

/// Knobs for one layer's projection and clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AnalysisOptions {
    /// Target PCA dimension.
    pub components: usize,
    /// Fixed neighborhood radius; `None` picks it from the data.
    pub eps: Option<f64>,
    pub min_samples: usize,
    /// Neighbor rank and quantile used when `eps` is picked from the data.
    pub eps_neighbor: usize,
    pub eps_quantile: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { components: 10, eps: None, min_samples: 20, eps_neighbor: 4, eps_quantile: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerAnalysis {
    pub projection: Projection,
    pub eps: f64,
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    pub n_noise: usize,
}

/// Projects one activation matrix and clusters the projection.
pub fn analyze_layer(activations: &Matrix, options: &AnalysisOptions) -> Result<LayerAnalysis, AnalysisError> {
    let projection = project_pca(activations, options.components)?;
    let eps = match options.eps {
        Some(e) => e,
        None => default_eps(&projection.coords, options.eps_neighbor, options.eps_quantile)?,
    };
    // Collapsed projections give a zero radius; fall back to the smallest positive float.
    let eps = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
    let labels = cluster_dbscan(&projection.coords, eps, options.min_samples)?;
    let n_clusters = cluster_count(&labels);
    let n_noise = labels.iter().filter(|&&l| l == NOISE).count();
    Ok(LayerAnalysis { projection, eps, labels, n_clusters, n_noise })
}
