//! The pipeline configuration file.
//!
//! A single TOML document with one section per concern. Every field has a
//! default, so an empty document is a complete configuration; unknown keys
//! are hard errors naming the offending key, so typos cannot silently fall
//! back to defaults.

use crate::error::{Error, Result};
use crate::nnet::ModelConfig;
use crate::overfit::BootstrapConfig;
use crate::sample::SampleConfig;
use crate::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Scalar precision the models run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

impl Dtype {
    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            other => Err(Error::Config(format!("unknown dtype `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub max_positions: usize,
    pub dtype: Dtype,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            max_positions: 256,
            dtype: Dtype::F32,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub mask_rate: f64,
    pub eval_period: usize,
    pub grace: usize,
    pub weight_decay: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            max_epochs: d.max_epochs,
            mask_rate: d.mask_rate,
            eval_period: d.eval_period,
            grace: d.grace,
            weight_decay: d.weight_decay,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub rho: f64,
    pub alpha: f64,
    pub rounds: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        BootstrapSection {
            rho: d.rho,
            alpha: d.alpha,
            rounds: d.rounds,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub temperature: f64,
    pub retry_factor: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        let d = SampleConfig::default();
        SampleSection {
            temperature: d.temperature,
            retry_factor: d.retry_factor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Columns dropped right after reading (identifiers, free text).
    pub ignore_columns: Vec<String>,
    /// Cell value treated as missing during schema inference.
    pub missing_marker: String,
    /// Most fraction digits a numeric column may keep.
    pub precision_cap: usize,
    /// Characters per numeric chunk token.
    pub partition_size: usize,
    /// Token budget for one child sequence.
    pub output_max_length: usize,
    /// Most child rows kept per parent.
    pub max_children: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            ignore_columns: Vec::new(),
            missing_marker: String::new(),
            precision_cap: 6,
            partition_size: 1,
            output_max_length: 128,
            max_children: 50,
        }
    }
}

/// Everything configurable, resolved against defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub model: ModelSection,
    pub train: TrainSection,
    pub bootstrap: BootstrapSection,
    pub sample: SampleSection,
    pub data: DataSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.sample_config().validate_public()?;
        if self.data.partition_size == 0 {
            return Err(Error::Config("partition_size must be at least 1".into()));
        }
        if self.data.output_max_length < 2 {
            return Err(Error::Config("output_max_length must be at least 2".into()));
        }
        if self.data.max_children == 0 {
            return Err(Error::Config("max_children must be at least 1".into()));
        }
        if self.model.d_model == 0
            || self.model.n_heads == 0
            || self.model.n_layers == 0
            || self.model.max_positions == 0
        {
            return Err(Error::Config("model dimensions must all be at least 1".into()));
        }
        if self.model.d_model % self.model.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} must be divisible by n_heads {}",
                self.model.d_model, self.model.n_heads
            )));
        }
        if !(self.bootstrap.rho > 0.0 && self.bootstrap.rho < 0.5) {
            return Err(Error::Config(format!(
                "rho {} must be inside (0, 0.5)",
                self.bootstrap.rho
            )));
        }
        if !(0.0..=1.0).contains(&self.bootstrap.alpha) {
            return Err(Error::Config(format!(
                "alpha {} must be inside [0, 1]",
                self.bootstrap.alpha
            )));
        }
        if self.bootstrap.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }

    /// Model hyperparameters bound to a fitted vocabulary.
    pub fn model_config(&self, vocab_size: usize, cross_attention: bool) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.model.d_model,
            n_layers: self.model.n_layers,
            n_heads: self.model.n_heads,
            max_positions: self.model.max_positions,
            cross_attention,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            max_epochs: self.train.max_epochs,
            mask_rate: self.train.mask_rate,
            eval_period: self.train.eval_period,
            grace: self.train.grace,
            weight_decay: self.train.weight_decay,
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            rho: self.bootstrap.rho,
            alpha: self.bootstrap.alpha,
            rounds: self.bootstrap.rounds,
        }
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            temperature: self.sample.temperature,
            retry_factor: self.sample.retry_factor,
        }
    }
}

impl SampleConfig {
    /// Public validation hook for configuration loading.
    pub fn validate_public(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature {} must be a positive finite number",
                self.temperature
            )));
        }
        if self.retry_factor == 0 {
            return Err(Error::Config("retry_factor must be at least 1".into()));
        }
        Ok(())
    }
}
