use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::encoding::{self, Normalizer};
use crate::signals::{eval_signal, SignalSpec};

/// Relative headroom of the normalizing divisor over `x_max`, so the largest
/// possible sample still maps strictly below 1.
pub const NORMALIZER_HEADROOM: f64 = 1.0 / 1_048_576.0;

/// Samples of one signal, normalized and split at `split_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub signal: SignalSpec,
    pub x_raw: Vec<f64>,
    pub x_norm: Vec<f64>,
    /// `f(x_raw)` plus noise; what the network trains on.
    pub targets: Vec<f64>,
    /// Noiseless `f(x_raw)`; what test predictions are scored against.
    pub clean_targets: Vec<f64>,
    pub normalizer: Normalizer,
    pub split_p: f64,
    /// Indices with `x_norm <= split_p`, ascending.
    pub train_idx: Vec<usize>,
    /// Indices with `x_norm > split_p`, ascending.
    pub test_idx: Vec<usize>,
}

/// Draws `n_points` i.i.d. `U(0, x_max)` inputs and builds the dataset.
///
/// The generator seeded with `seed` first draws every `x`, then the noise.
pub fn build_dataset(
    spec: &SignalSpec,
    n_points: usize,
    x_max: f64,
    split_p: f64,
    seed: u64,
) -> Result<Dataset, ExperimentError> {
    if n_points < 2 {
        return Err(ExperimentError::InvalidParameter("n_points must be at least 2"));
    }
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(ExperimentError::InvalidParameter("x_max must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_raw: Vec<f64> = (0..n_points).map(|_| rng.random_range(0.0..x_max)).collect();
    Dataset::from_raw(spec, x_raw, x_max, split_p, &mut rng)
}

impl Dataset {
    /// Builds a dataset from given raw inputs, normalizing by
    /// `z = x_max (1 + 2^-20)`. Noise, if any, is drawn from `rng`.
    pub fn from_raw<R: Rng + ?Sized>(
        spec: &SignalSpec,
        x_raw: Vec<f64>,
        x_max: f64,
        split_p: f64,
        rng: &mut R,
    ) -> Result<Self, ExperimentError> {
        spec.validate()?;
        if !(split_p > 0.0 && split_p < 1.0) {
            return Err(ExperimentError::InvalidParameter("split_p must lie in (0, 1)"));
        }
        let z = x_max * (1.0 + NORMALIZER_HEADROOM);
        let (x_norm, normalizer) = encoding::normalize(&x_raw, z)?;
        let clean_targets = x_raw.iter().map(|&x| spec.eval_clean(x)).collect::<Result<Vec<_>, _>>()?;
        let targets = x_raw.iter().map(|&x| eval_signal(spec, x, rng)).collect::<Result<Vec<_>, _>>()?;
        let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..x_norm.len()).partition(|&i| x_norm[i] <= split_p);
        if train_idx.is_empty() {
            return Err(ExperimentError::EmptyPartition("train"));
        }
        if test_idx.is_empty() {
            return Err(ExperimentError::EmptyPartition("test"));
        }
        Ok(Self { signal: spec.clone(), x_raw, x_norm, targets, clean_targets, normalizer, split_p, train_idx, test_idx })
    }

    pub fn len(&self) -> usize {
        self.x_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_raw.is_empty()
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_idx.len() as f64 / self.len() as f64
    }

    pub fn train_max(&self) -> f64 {
        self.train_idx.iter().map(|&i| self.x_norm[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn test_min(&self) -> f64 {
        self.test_idx.iter().map(|&i| self.x_norm[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn test_max(&self) -> f64 {
        self.test_idx.iter().map(|&i| self.x_norm[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn domain_report(&self) -> encoding::DomainReport {
        encoding::check_train_domain(self.train_max(), self.test_min(), self.test_max())
    }
}
