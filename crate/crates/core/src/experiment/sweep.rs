//! Sensitivity sweeps expressed as lists of independent run plans.
//!
//! Planning is separate from execution so callers can run the plans on as
//! many workers as they like; every plan owns its seeds and builds a fresh
//! dataset and model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::dataset::{build_dataset, Dataset};
use super::run::{run_single, Architecture, InputEncoding, RunResult};
use super::ExperimentError;
use crate::nn::{Activation, TrainConfig};
use crate::signals::SignalSpec;

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunPlan {
    pub label: String,
    pub signal: SignalSpec,
    pub n_points: usize,
    pub x_max: f64,
    pub split_p: f64,
    pub data_seed: u64,
    pub encoding: InputEncoding,
    pub architecture: Architecture,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub plan: RunPlan,
    pub dataset: Dataset,
    pub result: RunResult,
}

impl RunPlan {
    pub fn build_dataset(&self) -> Result<Dataset, ExperimentError> {
        build_dataset(&self.signal, self.n_points, self.x_max, self.split_p, self.data_seed)
    }

    pub fn execute(&self) -> Result<RunRecord, ExperimentError> {
        let dataset = self.build_dataset()?;
        let mut result = run_single(&dataset, self.encoding, &self.architecture, &self.train)?;
        result.label = self.label.clone();
        Ok(RunRecord { plan: self.clone(), dataset, result })
    }

    fn variant(&self, label: String) -> RunPlan {
        RunPlan { label, ..self.clone() }
    }
}

/// One plan per encoding, everything else shared.
pub fn plan_comparison(base: &RunPlan, encodings: &[InputEncoding]) -> Vec<RunPlan> {
    encodings
        .iter()
        .map(|&encoding| RunPlan { encoding, ..base.variant(String::from(encoding.name())) })
        .collect()
}

/// Split-point sweep holding the training span and the expected number of
/// training points fixed: for split `p`, `x_max = base.x_max · base.p / p`
/// and `n_points = round(base.n_points · base.p / p)`.
pub fn plan_split_sweep(base: &RunPlan, p_values: &[f64]) -> Result<Vec<RunPlan>, ExperimentError> {
    p_values
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(ExperimentError::InvalidParameter("split points must lie in (0, 1)"));
            }
            let scale = base.split_p / p;
            Ok(RunPlan {
                split_p: p,
                x_max: base.x_max * scale,
                n_points: libm::round(base.n_points as f64 * scale) as usize,
                ..base.variant(format!("p={p}"))
            })
        })
        .collect()
}

/// Cycle-count sweep: `x_max = cycles · fundamental period`, point count and
/// split fixed.
pub fn plan_cycle_sweep(base: &RunPlan, cycle_counts: &[u32]) -> Result<Vec<RunPlan>, ExperimentError> {
    let period = base.signal.fundamental_period();
    cycle_counts
        .iter()
        .map(|&c| {
            if c == 0 {
                return Err(ExperimentError::InvalidParameter("cycle counts must be positive"));
            }
            Ok(RunPlan { x_max: f64::from(c) * period, ..base.variant(format!("cycles={c}")) })
        })
        .collect()
}

pub fn plan_size_sweep(base: &RunPlan, sizes: &[usize]) -> Result<Vec<RunPlan>, ExperimentError> {
    sizes
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(ExperimentError::InvalidParameter("dataset sizes must be at least 2"));
            }
            Ok(RunPlan { n_points: n, ..base.variant(format!("n={n}")) })
        })
        .collect()
}

/// Noise sweep; the same data seed is kept so only the noise scale changes.
pub fn plan_noise_sweep(base: &RunPlan, sigmas: &[f64]) -> Result<Vec<RunPlan>, ExperimentError> {
    sigmas
        .iter()
        .map(|&s| {
            if !(s.is_finite() && s >= 0.0) {
                return Err(ExperimentError::InvalidParameter("noise sigmas must be nonnegative"));
            }
            let mut plan = base.variant(format!("sigma={s}"));
            plan.signal.noise_sigma = s;
            Ok(plan)
        })
        .collect()
}

/// ELU and sine hidden activations, nothing else changed.
pub fn plan_activation_pair(base: &RunPlan) -> [RunPlan; 2] {
    [Activation::Elu, Activation::Sine].map(|activation| {
        let mut plan = base.variant(format!("activation={}", activation.name()));
        plan.architecture.activation = activation;
        plan
    })
}

pub fn execute_all(plans: &[RunPlan]) -> Vec<Result<RunRecord, ExperimentError>> {
    plans.iter().map(RunPlan::execute).collect()
}

pub fn sweep_split(base: &RunPlan, p_values: &[f64]) -> Result<Vec<Result<RunRecord, ExperimentError>>, ExperimentError> {
    Ok(execute_all(&plan_split_sweep(base, p_values)?))
}

pub fn sweep_cycles(base: &RunPlan, counts: &[u32]) -> Result<Vec<Result<RunRecord, ExperimentError>>, ExperimentError> {
    Ok(execute_all(&plan_cycle_sweep(base, counts)?))
}

pub fn sweep_size(base: &RunPlan, sizes: &[usize]) -> Result<Vec<Result<RunRecord, ExperimentError>>, ExperimentError> {
    Ok(execute_all(&plan_size_sweep(base, sizes)?))
}

pub fn sweep_noise(base: &RunPlan, sigmas: &[f64]) -> Result<Vec<Result<RunRecord, ExperimentError>>, ExperimentError> {
    Ok(execute_all(&plan_noise_sweep(base, sigmas)?))
}

pub fn compare_activations(base: &RunPlan) -> [Result<RunRecord, ExperimentError>; 2] {
    plan_activation_pair(base).map(|p| p.execute())
}

/// Number of adjacent pairs where `values` increases; zero for a
/// non-increasing sequence.
pub fn count_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Profile;
    use crate::signals::SignalKind;
    use core::f64::consts::TAU;

    fn base() -> RunPlan {
        RunPlan {
            label: String::from("base"),
            signal: SignalSpec::new(SignalKind::Sine),
            n_points: 10_000,
            x_max: 100.0,
            split_p: 0.7,
            data_seed: 1,
            encoding: InputEncoding::NB2E,
            architecture: Profile::Desk.architecture(Activation::Elu),
            train: Profile::Desk.train_config(),
        }
    }

    #[test]
    fn split_sweep_keeps_training_span() {
        let ps = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let plans = plan_split_sweep(&base(), &ps).unwrap();
        assert_eq!(plans.len(), 7);
        for (plan, &p) in plans.iter().zip(&ps) {
            assert!((plan.x_max * p - 70.0).abs() < 1e-9);
            assert!((plan.n_points as f64 * p - 7000.0).abs() <= 1.0);
        }
        assert_eq!(plans[6].x_max, 100.0);
        assert!(plan_split_sweep(&base(), &[1.2]).is_err());
    }

    #[test]
    fn cycle_sweep_scales_domain() {
        let plans = plan_cycle_sweep(&base(), &[1, 7]).unwrap();
        assert!((plans[0].x_max - TAU).abs() < 1e-12);
        assert!((plans[1].x_max - 7.0 * TAU).abs() < 1e-12);
        assert!(plans.iter().all(|p| p.n_points == 10_000 && p.split_p == 0.7));
        assert!(plan_cycle_sweep(&base(), &[0]).is_err());
    }

    #[test]
    fn noise_and_size_sweeps() {
        let plans = plan_noise_sweep(&base(), &[0.0, 0.25, 2.0]).unwrap();
        assert_eq!(plans[2].signal.noise_sigma, 2.0);
        assert!(plans.iter().all(|p| p.data_seed == 1));
        assert!(plan_noise_sweep(&base(), &[-0.1]).is_err());
        let plans = plan_size_sweep(&base(), &[250, 500]).unwrap();
        assert_eq!(plans[0].n_points, 250);
        assert!(plan_size_sweep(&base(), &[1]).is_err());
    }

    #[test]
    fn activation_pair_differs_only_in_activation() {
        let [elu, sine] = plan_activation_pair(&base());
        assert_eq!(elu.architecture.activation, Activation::Elu);
        assert_eq!(sine.architecture.activation, Activation::Sine);
        let mut same = sine.clone();
        same.architecture.activation = Activation::Elu;
        same.label = elu.label.clone();
        assert_eq!(same, elu);
    }

    #[test]
    fn comparison_varies_only_encoding() {
        let plans = plan_comparison(&base(), &InputEncoding::standard_set(48));
        assert_eq!(plans.iter().map(|p| p.label.as_str()).collect::<Vec<_>>(), ["nb2e", "ffe", "continuous"]);
        assert!(plans.iter().all(|p| p.architecture == base().architecture && p.train == base().train));
    }

    #[test]
    fn increase_counting() {
        assert_eq!(count_increases(&[5.0, 4.0, 4.0, 1.0]), 0);
        assert_eq!(count_increases(&[5.0, 6.0, 4.0, 4.5]), 2);
    }
}
