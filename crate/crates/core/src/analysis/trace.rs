use alloc::vec::Vec;

use super::AnalysisError;
use crate::encoding::{encode_nb2e, BitVector};
use crate::experiment::{Dataset, InputEncoding};
use crate::nn::{Matrix, MlpModel};

const TRACE_CHUNK: usize = 2048;

/// Per-sample metadata carried alongside the activations.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetadata {
    pub x_raw: Vec<f64>,
    pub x_norm: Vec<f64>,
    /// Periods against which phases are computed.
    pub periods: Vec<f64>,
    pub n_bits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// Post-activation output of every hidden layer, `[n_samples x width]`.
    pub layers: Vec<Matrix>,
    pub x_raw: Vec<f64>,
    pub x_norm: Vec<f64>,
    pub bits: Vec<BitVector>,
    pub periods: Vec<f64>,
    /// `phases[p][i]` is the phase of sample `i` against `periods[p]`.
    pub phases: Vec<Vec<f64>>,
}

impl ActivationTrace {
    pub fn n_samples(&self) -> usize {
        self.x_raw.len()
    }

    pub fn n_bits(&self) -> usize {
        self.bits.first().map_or(0, BitVector::n_bits)
    }

    /// Value of bit `position` (1-based) for sample `i`.
    pub fn bit(&self, i: usize, position: usize) -> u8 {
        self.bits[i].bits()[position - 1]
    }
}

/// `frac(x_raw / period)`, always in `[0, 1)`.
pub fn phase_of(x_raw: f64, period: f64) -> Result<f64, AnalysisError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(AnalysisError::InvalidParameter("period must be positive"));
    }
    let t = x_raw / period;
    let f = t - libm::floor(t);
    Ok(if f >= 1.0 { 0.0 } else { f })
}

/// Runs `inputs` through `model` and keeps every hidden layer's output.
pub fn capture_activations(model: &MlpModel, inputs: &Matrix, meta: TraceMetadata) -> Result<ActivationTrace, AnalysisError> {
    let n = inputs.rows();
    for len in [meta.x_raw.len(), meta.x_norm.len()] {
        if len != n {
            return Err(AnalysisError::ShapeMismatch { expected: n, got: len });
        }
    }
    let sizes = model.layer_sizes();
    let mut layers: Vec<Matrix> = sizes[1..sizes.len() - 1].iter().map(|&w| Matrix::zeros(n, w)).collect();
    let mut start = 0;
    while start < n {
        let end = (start + TRACE_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let (_, outputs) = model.forward_traced(&inputs.select_rows(&idx))?;
        for (dst, src) in layers.iter_mut().zip(&outputs.hidden) {
            let w = src.cols();
            dst.as_mut_slice()[start * w..end * w].copy_from_slice(src.as_slice());
        }
        start = end;
    }
    let bits = meta.x_norm.iter().map(|&x| encode_nb2e(x, meta.n_bits)).collect::<Result<Vec<_>, _>>()?;
    let phases = meta
        .periods
        .iter()
        .map(|&p| meta.x_raw.iter().map(|&x| phase_of(x, p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ActivationTrace { layers, x_raw: meta.x_raw, x_norm: meta.x_norm, bits, periods: meta.periods, phases })
}

/// Traces every sample of `dataset` (train and test) through `model`.
pub fn trace_dataset(model: &MlpModel, dataset: &Dataset, encoding: InputEncoding, n_bits: usize) -> Result<ActivationTrace, AnalysisError> {
    let inputs = encoding.encode_all(&dataset.x_norm).map_err(|_| AnalysisError::InvalidParameter("inputs could not be encoded"))?;
    let meta = TraceMetadata {
        x_raw: dataset.x_raw.clone(),
        x_norm: dataset.x_norm.clone(),
        periods: dataset.signal.periods(),
        n_bits,
    };
    capture_activations(model, &inputs, meta)
}
