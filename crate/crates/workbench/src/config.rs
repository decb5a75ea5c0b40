//! TOML run specification.
//!
//! ```toml
//! experiment = "compare"      # compare | sweep-split | sweep-cycles | sweep-size
//!                             # | sweep-noise | compare-activations | analyze
//! profile = "desk"            # desk | full; supplies unset model/train sizes
//! out_dir = "out/sine"
//!
//! [signal]
//! kind = "sine"               # sine | composite_sine | saw_triangle | composite_mixed | custom_sum
//! noise_sigma = 0.0
//!
//! [dataset]
//! n_points = 10000
//! x_max = 100.0
//! split_p = 0.7
//! seed = 1
//!
//! [model]                     # hidden_layers / width default to the profile
//! activation = "elu"          # elu | sine
//! l2_factor = 1e-4
//! n_bits = 48
//! init_seed = 0
//!
//! [train]                     # every key optional; defaults from the profile
//! epochs = 1500
//! batch_size = 1000
//!
//! [sweep]
//! encodings = ["nb2e", "ffe", "continuous"]
//! p_values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
//!
//! [analysis]
//! components = 10
//! min_samples = 20
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use nb2e_core::experiment::{
    plan_activation_pair, plan_comparison, plan_cycle_sweep, plan_noise_sweep, plan_size_sweep, plan_split_sweep,
    Architecture, InputEncoding, Profile, RunPlan,
};
use nb2e_core::nn::{Activation, TrainConfig};
use nb2e_core::signals::SignalSpec;
use serde::{Deserialize, Serialize};

/// A validation failure tied to the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Compare,
    SweepSplit,
    SweepCycles,
    SweepSize,
    SweepNoise,
    CompareActivations,
    Analyze,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Compare => "compare",
            ExperimentKind::SweepSplit => "sweep-split",
            ExperimentKind::SweepCycles => "sweep-cycles",
            ExperimentKind::SweepSize => "sweep-size",
            ExperimentKind::SweepNoise => "sweep-noise",
            ExperimentKind::CompareActivations => "compare-activations",
            ExperimentKind::Analyze => "analyze",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingName {
    Nb2e,
    Ffe,
    Continuous,
}

impl EncodingName {
    pub fn with_bits(self, n_bits: usize) -> InputEncoding {
        match self {
            EncodingName::Nb2e => InputEncoding::Nb2e { bits: n_bits },
            EncodingName::Ffe => InputEncoding::Ffe { freqs: n_bits },
            EncodingName::Continuous => InputEncoding::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub n_points: usize,
    pub x_max: f64,
    pub split_p: f64,
    pub seed: u64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self { n_points: 10_000, x_max: 100.0, split_p: 0.7, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    pub activation: Activation,
    pub l2_factor: f64,
    pub n_bits: usize,
    pub init_seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { hidden_layers: None, width: None, activation: Activation::Elu, l2_factor: 1e-4, n_bits: 48, init_seed: 0 }
    }
}

/// Training overrides; unset keys come from the profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_mult: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub encodings: Vec<EncodingName>,
    pub p_values: Vec<f64>,
    pub cycles: Vec<u32>,
    pub sizes: Vec<usize>,
    pub sigmas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            encodings: vec![EncodingName::Nb2e, EncodingName::Ffe, EncodingName::Continuous],
            p_values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            cycles: (1..=7).collect(),
            sizes: (1..=8).map(|k| 250 * k).collect(),
            sigmas: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub components: usize,
    pub min_samples: usize,
    /// Fixed DBSCAN radius; unset picks it per layer from the data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Bit positions tabulated per cluster; unset takes the top of the scan
    /// (three bits for a single period, two otherwise).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<usize>>,
    pub n_permutations: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { components: 10, min_samples: 20, eps: None, bits: None, n_permutations: 200 }
    }
}

fn default_profile() -> Profile {
    Profile::Desk
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub experiment: ExperimentKind,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub signal: SignalSpec,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub out_dir: Option<PathBuf>,
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be a positive number, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be a nonnegative number, got {v}")))
    }
}

fn unit_open(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must lie in (0, 1), got {v}")))
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError::new(field, "must not be empty"))
    } else {
        Ok(())
    }
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = message
                .split('`')
                .nth(1)
                .filter(|_| message.contains("field"))
                .map_or_else(|| String::from("config"), String::from);
            ConfigError::new(field, message.trim().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run specs always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io { path: path.to_path_buf(), source })?;
        Ok(Self::from_toml(&text)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.dataset.seed = seed;
            self.model.init_seed = seed;
            self.train.seed = Some(seed);
        }
        if let Some(profile) = o.profile {
            self.profile = profile;
        }
        if let Some(out) = &o.out_dir {
            self.out_dir.clone_from(out);
        }
    }

    pub fn architecture(&self) -> Architecture {
        let base = self.profile.architecture(self.model.activation);
        Architecture {
            hidden_layers: self.model.hidden_layers.unwrap_or(base.hidden_layers),
            width: self.model.width.unwrap_or(base.width),
            activation: self.model.activation,
            l2_factor: self.model.l2_factor,
            init_seed: self.model.init_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = self.profile.train_config();
        let t = &self.train;
        TrainConfig {
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            epochs: t.epochs.unwrap_or(d.epochs),
            lr_max: t.lr_max.unwrap_or(d.lr_max),
            lr_min: t.lr_min.unwrap_or(d.lr_min),
            restart_epochs: t.restart_epochs.unwrap_or(d.restart_epochs),
            restart_mult: t.restart_mult.unwrap_or(d.restart_mult),
            beta1: t.beta1.unwrap_or(d.beta1),
            beta2: t.beta2.unwrap_or(d.beta2),
            eps: t.eps.unwrap_or(d.eps),
            weight_decay: t.weight_decay.unwrap_or(d.weight_decay),
            seed: t.seed.unwrap_or(d.seed),
        }
    }

    pub fn nb2e(&self) -> InputEncoding {
        InputEncoding::Nb2e { bits: self.model.n_bits }
    }

    /// The single NB2E run every experiment varies.
    pub fn base_plan(&self) -> RunPlan {
        RunPlan {
            label: String::from("nb2e"),
            signal: self.signal.clone(),
            n_points: self.dataset.n_points,
            x_max: self.dataset.x_max,
            split_p: self.dataset.split_p,
            data_seed: self.dataset.seed,
            encoding: self.nb2e(),
            architecture: self.architecture(),
            train: self.train_config(),
        }
    }

    /// Every run the experiment needs, in output order.
    pub fn plans(&self) -> Result<Vec<RunPlan>, ConfigError> {
        let base = self.base_plan();
        let bad = |field: &'static str| move |e: nb2e_core::experiment::ExperimentError| ConfigError::new(field, e.to_string());
        Ok(match self.experiment {
            ExperimentKind::Compare => {
                let encodings: Vec<InputEncoding> =
                    self.sweep.encodings.iter().map(|e| e.with_bits(self.model.n_bits)).collect();
                plan_comparison(&base, &encodings)
            }
            ExperimentKind::SweepSplit => plan_split_sweep(&base, &self.sweep.p_values).map_err(bad("sweep.p_values"))?,
            ExperimentKind::SweepCycles => plan_cycle_sweep(&base, &self.sweep.cycles).map_err(bad("sweep.cycles"))?,
            ExperimentKind::SweepSize => plan_size_sweep(&base, &self.sweep.sizes).map_err(bad("sweep.sizes"))?,
            ExperimentKind::SweepNoise => plan_noise_sweep(&base, &self.sweep.sigmas).map_err(bad("sweep.sigmas"))?,
            ExperimentKind::CompareActivations => plan_activation_pair(&base).to_vec(),
            ExperimentKind::Analyze => vec![base],
        })
    }

    /// Checks every value against the preconditions of the code that will
    /// consume it, before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.signal.validate().map_err(|e| ConfigError::new("signal", e.to_string()))?;
        let d = &self.dataset;
        if d.n_points < 2 {
            return Err(ConfigError::new("dataset.n_points", format!("must be at least 2, got {}", d.n_points)));
        }
        positive("dataset.x_max", d.x_max)?;
        unit_open("dataset.split_p", d.split_p)?;

        let m = &self.model;
        if m.hidden_layers == Some(0) {
            return Err(ConfigError::new("model.hidden_layers", "must be at least 1"));
        }
        if m.width == Some(0) {
            return Err(ConfigError::new("model.width", "must be at least 1"));
        }
        if m.activation == Activation::Linear {
            return Err(ConfigError::new("model.activation", "hidden layers must use elu or sine"));
        }
        nonnegative("model.l2_factor", m.l2_factor)?;
        if !(1..=nb2e_core::encoding::MAX_BITS).contains(&m.n_bits) {
            return Err(ConfigError::new("model.n_bits", format!("must lie in 1..=64, got {}", m.n_bits)));
        }

        let t = self.train_config();
        if t.batch_size == 0 {
            return Err(ConfigError::new("train.batch_size", "must be at least 1"));
        }
        if t.restart_epochs == 0 {
            return Err(ConfigError::new("train.restart_epochs", "must be at least 1"));
        }
        positive("train.lr_max", t.lr_max)?;
        positive("train.lr_min", t.lr_min)?;
        if t.lr_min > t.lr_max {
            return Err(ConfigError::new("train.lr_min", "must not exceed train.lr_max"));
        }
        if !(t.restart_mult >= 1.0 && t.restart_mult.is_finite()) {
            return Err(ConfigError::new("train.restart_mult", "must be at least 1"));
        }
        for (field, v) in [("train.beta1", t.beta1), ("train.beta2", t.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(ConfigError::new(field, format!("must lie in [0, 1), got {v}")));
            }
        }
        positive("train.eps", t.eps)?;
        nonnegative("train.weight_decay", t.weight_decay)?;
        t.validate().map_err(|e| ConfigError::new("train", e.to_string()))?;

        let s = &self.sweep;
        match self.experiment {
            ExperimentKind::Compare => nonempty("sweep.encodings", &s.encodings)?,
            ExperimentKind::SweepSplit => {
                nonempty("sweep.p_values", &s.p_values)?;
                s.p_values.iter().try_for_each(|&p| unit_open("sweep.p_values", p))?;
            }
            ExperimentKind::SweepCycles => {
                nonempty("sweep.cycles", &s.cycles)?;
                if s.cycles.contains(&0) {
                    return Err(ConfigError::new("sweep.cycles", "cycle counts must be positive"));
                }
            }
            ExperimentKind::SweepSize => {
                nonempty("sweep.sizes", &s.sizes)?;
                if s.sizes.iter().any(|&n| n < 2) {
                    return Err(ConfigError::new("sweep.sizes", "sizes must be at least 2"));
                }
            }
            ExperimentKind::SweepNoise => {
                nonempty("sweep.sigmas", &s.sigmas)?;
                s.sigmas.iter().try_for_each(|&v| nonnegative("sweep.sigmas", v))?;
            }
            ExperimentKind::CompareActivations | ExperimentKind::Analyze => {}
        }

        let a = &self.analysis;
        if a.components == 0 {
            return Err(ConfigError::new("analysis.components", "must be at least 1"));
        }
        if self.experiment == ExperimentKind::Analyze && a.components > self.architecture().width {
            return Err(ConfigError::new("analysis.components", "must not exceed the hidden-layer width"));
        }
        if a.min_samples == 0 {
            return Err(ConfigError::new("analysis.min_samples", "must be at least 1"));
        }
        if let Some(eps) = a.eps {
            positive("analysis.eps", eps)?;
        }
        if let Some(bits) = &a.bits {
            nonempty("analysis.bits", bits)?;
            if bits.iter().any(|&b| b == 0 || b > m.n_bits) {
                return Err(ConfigError::new("analysis.bits", "positions must lie in 1..=model.n_bits"));
            }
        }
        if a.n_permutations == 0 {
            return Err(ConfigError::new("analysis.n_permutations", "must be at least 1"));
        }
        Ok(())
    }
}
