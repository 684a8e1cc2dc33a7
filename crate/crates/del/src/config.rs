//! Flat TOML run configuration.
//!
//! Every key is optional and defaults to the desk-scale setting. Unknown
//! keys are rejected. [`RunConfig::to_toml`] writes a file that parses back
//! to the same configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use del_core::dgm::{BetaSchedule, ModelDims, OptimizerKind, TrainConfig};
use del_core::engine::{DelConfig, SubsetRule};
use del_core::evo::{CrossoverKind, EvoConfig};
use del_core::rng::{stream, Purpose};
use del_core::toy::{self, Corpus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Crossover {
    Linear,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Ranked,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Toy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub domain: Domain,
    /// Share of the enumerated corpus held out from training.
    pub held_out_fraction: f64,

    pub population: usize,
    pub generations: usize,
    pub initial_epochs: usize,
    pub finetune_epochs: usize,
    pub subset: Subset,
    pub use_property_head: bool,
    pub finetune: bool,

    pub alpha: f64,
    pub alpha_annealed: f64,
    /// Initial-training KL schedule; its length is `initial_epochs`.
    pub beta_amplitude: f64,
    pub beta_speed: f64,
    pub beta_lower: f64,
    pub beta_upper: f64,
    pub beta_annealed: f64,

    pub p_select: f64,
    pub p_mutate: f64,
    pub crossover: Crossover,
    pub line_extension: f64,

    pub embed: usize,
    pub latent: usize,

    pub optimizer: Optimizer,
    pub momentum: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub initial_lr_step: usize,
    pub finetune_lr_step: usize,
    pub clip_norm: f64,

    /// Checkpoint for `baseline`; empty means the last generation of `out`.
    pub baseline_model: PathBuf,
    pub sobol_init: usize,
    pub sobol_batches: usize,
    pub sobol_batch: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DelConfig::desk();
        let t = TrainConfig::initial();
        Self {
            seed: 0,
            out: PathBuf::from("del-run"),
            domain: Domain::Toy,
            held_out_fraction: 0.1,
            population: d.population,
            generations: d.generations,
            initial_epochs: d.initial_epochs,
            finetune_epochs: d.finetune_epochs,
            subset: Subset::Ranked,
            use_property_head: true,
            finetune: true,
            alpha: d.alpha,
            alpha_annealed: d.alpha_annealed,
            beta_amplitude: 0.1,
            beta_speed: 1.0,
            beta_lower: 0.1,
            beta_upper: 0.1,
            beta_annealed: d.beta_annealed,
            p_select: d.evo.p_select,
            p_mutate: d.evo.p_mutate,
            crossover: Crossover::Linear,
            line_extension: d.evo.line_extension,
            embed: d.dims.embed,
            latent: d.dims.latent,
            optimizer: Optimizer::Sgd,
            momentum: 0.9,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            lr_decay: t.lr_decay,
            initial_lr_step: t.lr_step,
            finetune_lr_step: TrainConfig::fine_tune().lr_step,
            clip_norm: t.clip_norm,
            baseline_model: PathBuf::new(),
            sobol_init: 1000,
            sobol_batches: 30,
            sobol_batch: 8,
        }
    }
}

/// A configuration problem, tied to the offending key when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "config key `{k}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn unknown_field(message: &str) -> Option<String> {
    let rest = message.split("unknown field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

/// Key of the `key = value` line that contains byte `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    let key = key.trim().trim_matches('"');
    (!key.is_empty()).then(|| key.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = unknown_field(&message).or_else(|| e.span().and_then(|r| key_at(text, r.start)));
            ConfigError { key, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml_str(&text).map_err(|e| ConfigError {
            message: format!("{}: {}", path.display(), e.message),
            ..e
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// Key-level checks; everything the core would reject is caught here
    /// first so the message can name the key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: usize| {
            if v == 0 {
                Err(ConfigError::key(key, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::key(key, format!("must be a finite non-negative number, got {v}")))
            }
        };
        if self.population < 2 {
            return Err(ConfigError::key("population", "must be at least 2"));
        }
        positive("generations", self.generations)?;
        positive("initial_epochs", self.initial_epochs)?;
        positive("embed", self.embed)?;
        positive("latent", self.latent)?;
        positive("batch_size", self.batch_size)?;
        positive("initial_lr_step", self.initial_lr_step)?;
        positive("finetune_lr_step", self.finetune_lr_step)?;
        if self.crossover == Crossover::Discrete && self.latent < 2 {
            return Err(ConfigError::key("latent", "discrete crossover needs at least 2 latent coordinates"));
        }
        if !(0.0..1.0).contains(&self.held_out_fraction) {
            return Err(ConfigError::key("held_out_fraction", "must lie in [0, 1)"));
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("alpha_annealed", self.alpha_annealed),
            ("beta_lower", self.beta_lower),
            ("beta_upper", self.beta_upper),
            ("beta_annealed", self.beta_annealed),
            ("learning_rate", self.learning_rate),
            ("lr_decay", self.lr_decay),
            ("momentum", self.momentum),
            ("clip_norm", self.clip_norm),
            ("line_extension", self.line_extension),
        ] {
            non_negative(key, v)?;
        }
        for (key, v) in [("beta_amplitude", self.beta_amplitude), ("beta_speed", self.beta_speed)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::key(key, format!("must be positive, got {v}")));
            }
        }
        if self.beta_lower > self.beta_upper {
            return Err(ConfigError::key("beta_lower", "must not exceed beta_upper"));
        }
        if !(self.p_select > 0.5 && self.p_select <= 1.0) {
            return Err(ConfigError::key("p_select", "must lie in (0.5, 1]"));
        }
        if !(0.0..1.0).contains(&self.p_mutate) {
            return Err(ConfigError::key("p_mutate", "must lie in [0, 1)"));
        }
        if self.sobol_batches > 0 && self.sobol_batch == 0 {
            return Err(ConfigError::key("sobol_batch", "must be at least 1 when sobol_batches > 0"));
        }
        if self.sobol_init + self.sobol_batches * self.sobol_batch == 0 {
            return Err(ConfigError::key("sobol_init", "the baseline needs at least one evaluation"));
        }
        Ok(())
    }

    fn training(&self, lr_step: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lr_step,
            lr_decay: self.lr_decay,
            clip_norm: self.clip_norm,
            optimizer: match self.optimizer {
                Optimizer::Sgd => OptimizerKind::Momentum { momentum: self.momentum },
                Optimizer::Adam => OptimizerKind::Adam {
                    beta1: 0.9,
                    beta2: 0.999,
                    eps: 1e-8,
                },
            },
        }
    }

    pub fn del_config(&self) -> Result<DelConfig, ConfigError> {
        self.validate()?;
        let beta = BetaSchedule::new(
            self.beta_amplitude,
            self.beta_speed,
            self.beta_lower,
            self.beta_upper,
            self.initial_epochs,
        )
        .map_err(|e| ConfigError::key("beta_amplitude", e.to_string()))?;
        let cfg = DelConfig {
            population: self.population,
            generations: self.generations,
            initial_epochs: self.initial_epochs,
            finetune_epochs: self.finetune_epochs,
            alpha: self.alpha,
            alpha_annealed: self.alpha_annealed,
            beta,
            beta_annealed: self.beta_annealed,
            evo: EvoConfig {
                p_select: self.p_select,
                p_mutate: self.p_mutate,
                crossover: match self.crossover {
                    Crossover::Linear => CrossoverKind::Linear,
                    Crossover::Discrete => CrossoverKind::Discrete,
                },
                line_extension: self.line_extension,
            },
            use_property_head: self.use_property_head,
            finetune: self.finetune,
            subset: match self.subset {
                Subset::Ranked => SubsetRule::Ranked,
                Subset::Random => SubsetRule::Random,
            },
            dims: ModelDims {
                embed: self.embed,
                latent: self.latent,
                ..ModelDims::desk()
            },
            initial_training: self.training(self.initial_lr_step),
            finetune_training: self.training(self.finetune_lr_step),
            seed: self.seed,
        };
        cfg.validate().map_err(|e| ConfigError {
            key: None,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// All valid toy sequences of length 2-3, split by the run seed.
    pub fn corpus(&self) -> Corpus {
        match self.domain {
            Domain::Toy => Corpus::split(
                toy::enumerate_valid(2, 3),
                self.held_out_fraction,
                &mut stream(self.seed, Purpose::Corpus, 0),
            ),
        }
    }

    /// Sets the initial KL weight to a constant.
    pub fn set_constant_beta(&mut self, beta: f64) {
        self.beta_amplitude = beta;
        self.beta_lower = beta;
        self.beta_upper = beta;
    }

    pub fn baseline_checkpoint(&self) -> PathBuf {
        if self.baseline_model.as_os_str().is_empty() {
            self.out.join(format!("gen_{}", self.generations)).join("model.bin")
        } else {
            self.baseline_model.clone()
        }
    }
}
