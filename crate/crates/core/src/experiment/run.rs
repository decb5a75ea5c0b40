use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::dataset::Dataset;
use super::ExperimentError;
use crate::encoding::{encode_ffe_into, encode_nb2e_into, DEFAULT_BITS};
use crate::nn::{init_model, train, Activation, Matrix, MlpModel, TrainConfig};

/// How normalized inputs are presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InputEncoding {
    Nb2e { bits: usize },
    Ffe { freqs: usize },
    /// The normalized value itself as a single input.
    Continuous,
}

impl InputEncoding {
    pub const NB2E: InputEncoding = InputEncoding::Nb2e { bits: DEFAULT_BITS };
    pub const FFE: InputEncoding = InputEncoding::Ffe { freqs: DEFAULT_BITS };

    /// The three encodings with matched frequency content.
    pub fn standard_set(n_bits: usize) -> [InputEncoding; 3] {
        [InputEncoding::Nb2e { bits: n_bits }, InputEncoding::Ffe { freqs: n_bits }, InputEncoding::Continuous]
    }

    pub fn width(&self) -> usize {
        match *self {
            InputEncoding::Nb2e { bits } => bits,
            InputEncoding::Ffe { freqs } => 2 * freqs,
            InputEncoding::Continuous => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InputEncoding::Nb2e { .. } => "nb2e",
            InputEncoding::Ffe { .. } => "ffe",
            InputEncoding::Continuous => "continuous",
        }
    }

    /// One row per value of `x_norm`.
    pub fn encode_all(&self, x_norm: &[f64]) -> Result<Matrix, ExperimentError> {
        let width = self.width();
        let mut out = Matrix::zeros(x_norm.len(), width);
        for (r, &x) in x_norm.iter().enumerate() {
            let row = out.row_mut(r);
            match self {
                InputEncoding::Nb2e { .. } => encode_nb2e_into(x, row)?,
                InputEncoding::Ffe { .. } => encode_ffe_into(x, row)?,
                InputEncoding::Continuous => {
                    if !(0.0..1.0).contains(&x) {
                        return Err(crate::encoding::EncodingError::OutOfDomain(x).into());
                    }
                    row[0] = x;
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for InputEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hidden stack shared by every encoding in a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Architecture {
    pub hidden_layers: usize,
    pub width: usize,
    pub activation: Activation,
    pub l2_factor: f64,
    pub init_seed: u64,
}

impl Architecture {
    pub fn layer_sizes(&self, input_width: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers + 2);
        sizes.push(input_width);
        sizes.extend(core::iter::repeat_n(self.width, self.hidden_layers));
        sizes.push(1);
        sizes
    }
}

/// Compute budget presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Profile {
    /// 3 x 256 hidden units, 1500 epochs.
    Desk,
    /// 5 x 512 hidden units, 4000 epochs.
    Full,
}

impl Profile {
    pub fn architecture(self, activation: Activation) -> Architecture {
        let (hidden_layers, width) = match self {
            Profile::Desk => (3, 256),
            Profile::Full => (5, 512),
        };
        Architecture { hidden_layers, width, activation, l2_factor: 1e-4, init_seed: 0 }
    }

    pub fn epochs(self) -> usize {
        match self {
            Profile::Desk => 1500,
            Profile::Full => 4000,
        }
    }

    pub fn train_config(self) -> TrainConfig {
        TrainConfig { epochs: self.epochs(), ..TrainConfig::default() }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        }
    }
}

/// Predictions and residuals on one side of the split.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Dataset indices, in the same order as the other arrays.
    pub indices: Vec<usize>,
    pub predictions: Vec<f64>,
    pub residuals: Vec<f64>,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub label: String,
    pub encoding: InputEncoding,
    pub architecture: Architecture,
    pub train_config: TrainConfig,
    /// Residuals against the (possibly noisy) training targets.
    pub train: Evaluation,
    /// Residuals against the noiseless signal.
    pub test: Evaluation,
    pub loss_history: Vec<f64>,
    pub model: MlpModel,
    pub wall_time_secs: Option<f64>,
}

/// Test MAE restricted to `lo <= x' < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMae {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mae: Option<f64>,
}

/// Intervals between the switching points of the first three bits.
pub const BIT_SEGMENTS: [(f64, f64); 3] = [(0.5, 1.0), (0.25, 0.5), (0.125, 0.25)];

impl RunResult {
    /// MAE of test residuals whose `x'` lies in `[lo, hi)`.
    pub fn test_segment(&self, dataset: &Dataset, lo: f64, hi: f64) -> SegmentMae {
        let picked: Vec<f64> = self
            .test
            .indices
            .iter()
            .zip(&self.test.residuals)
            .filter(|(&i, _)| dataset.x_norm[i] >= lo && dataset.x_norm[i] < hi)
            .map(|(_, &r)| r)
            .collect();
        SegmentMae { lo, hi, count: picked.len(), mae: mae(&picked).ok() }
    }

    pub fn bit_segments(&self, dataset: &Dataset) -> Vec<SegmentMae> {
        BIT_SEGMENTS.iter().map(|&(lo, hi)| self.test_segment(dataset, lo, hi)).collect()
    }
}

pub fn mae(residuals: &[f64]) -> Result<f64, ExperimentError> {
    if residuals.is_empty() {
        return Err(ExperimentError::EmptyResiduals);
    }
    Ok(residuals.iter().map(|r| libm::fabs(*r)).sum::<f64>() / residuals.len() as f64)
}

fn evaluate(predictions: &[f64], indices: &[usize], truth: &[f64]) -> Result<Evaluation, ExperimentError> {
    let residuals: Vec<f64> = predictions.iter().zip(indices).map(|(p, &i)| p - truth[i]).collect();
    let mae = mae(&residuals)?;
    Ok(Evaluation { indices: indices.to_vec(), predictions: predictions.to_vec(), residuals, mae })
}

const PREDICT_CHUNK: usize = 2048;

/// Trains one fresh model on the training partition and scores both sides.
pub fn run_single(
    dataset: &Dataset,
    encoding: InputEncoding,
    architecture: &Architecture,
    train_config: &TrainConfig,
) -> Result<RunResult, ExperimentError> {
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let inputs = encoding.encode_all(&dataset.x_norm)?;
    let sizes = architecture.layer_sizes(encoding.width());
    let mut model = init_model(&sizes, architecture.activation, architecture.l2_factor, architecture.init_seed)?;
    let train_x = inputs.select_rows(&dataset.train_idx);
    let train_y: Vec<f64> = dataset.train_idx.iter().map(|&i| dataset.targets[i]).collect();
    let report = train(&mut model, &train_x, &train_y, train_config)?;

    let train_pred = model.predict(&train_x, PREDICT_CHUNK)?;
    let test_pred = model.predict(&inputs.select_rows(&dataset.test_idx), PREDICT_CHUNK)?;
    let train = evaluate(&train_pred, &dataset.train_idx, &dataset.targets)?;
    let test = evaluate(&test_pred, &dataset.test_idx, &dataset.clean_targets)?;

    #[cfg(feature = "std")]
    let wall_time_secs = Some(started.elapsed().as_secs_f64());
    #[cfg(not(feature = "std"))]
    let wall_time_secs = None;

    Ok(RunResult {
        label: String::from(encoding.name()),
        encoding,
        architecture: *architecture,
        train_config: *train_config,
        train,
        test,
        loss_history: report.epoch_losses,
        model,
        wall_time_secs,
    })
}

/// One identically configured run per encoding; a failed run does not stop
/// the others.
pub fn run_comparison(
    dataset: &Dataset,
    encodings: &[InputEncoding],
    architecture: &Architecture,
    train_config: &TrainConfig,
) -> Vec<Result<RunResult, ExperimentError>> {
    encodings.iter().map(|&e| run_single(dataset, e, architecture, train_config)).collect()
}
