//! Run settings: trainer hyperparameters plus input-pipeline knobs, read
//! from `key = value` files and overridable one key at a time.

use std::fs;
use std::path::{Path, PathBuf};

use cnm_core::model::DropoutMode;
use cnm_core::trainer::{OptimizerKind, TrainerConfig};

use crate::checkpoint::{field_name, mixture_name, parse_field, parse_mixture};
use crate::error::{require_path, CliError, Result};

pub const DEFAULT_DIM: usize = 50;
pub const DEFAULT_MAX_LEN: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub trainer: TrainerConfig,
    /// Embedding dimension.
    pub dim: usize,
    /// Tokens kept per sentence.
    pub max_len: usize,
    /// GloVe-format text file for amplitude initialisation.
    pub embeddings: Option<PathBuf>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::default(),
            dim: DEFAULT_DIM,
            max_len: DEFAULT_MAX_LEN,
            embeddings: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "learning_rate",
    "l2_lambda",
    "batch_size",
    "k",
    "margin",
    "dropout_rate",
    "dropout_mode",
    "window_sizes",
    "epochs",
    "seed",
    "optimizer",
    "mixture",
    "field",
    "dim",
    "max_len",
    "embeddings",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunSettings {
    /// Sets one key; the error message is meant to be wrapped by the caller.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        let t = &mut self.trainer;
        match key {
            "learning_rate" => t.learning_rate = num(key, value)?,
            "l2_lambda" => t.l2_lambda = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "k" => t.k = num(key, value)?,
            "margin" => t.margin = num(key, value)?,
            "dropout_rate" => t.dropout_rate = num(key, value)?,
            "dropout_mode" => {
                t.dropout_mode = match value {
                    "drop" => DropoutMode::DropProbability,
                    "keep" => DropoutMode::KeepProbability,
                    _ => return Err(format!("dropout_mode must be drop or keep, got {value:?}")),
                }
            }
            "window_sizes" => {
                t.window_sizes = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "epochs" => t.epochs = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "optimizer" => {
                t.optimizer = match value {
                    "sgd" => OptimizerKind::Sgd,
                    "adam" => OptimizerKind::Adam,
                    _ => return Err(format!("optimizer must be sgd or adam, got {value:?}")),
                }
            }
            "mixture" => {
                t.mixture = parse_mixture(value).ok_or_else(|| format!("mixture must be local or global, got {value:?}"))?
            }
            "field" => t.field = parse_field(value).ok_or_else(|| format!("field must be complex or real, got {value:?}"))?,
            "dim" => self.dim = num(key, value)?,
            "max_len" => self.max_len = num(key, value)?,
            "embeddings" => self.embeddings = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown setting {key:?}")),
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of the current settings.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(origin, i + 1, "expected key = value"))?;
            self.set(key.trim(), value).map_err(|m| CliError::parse(origin, i + 1, m))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        require_path(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut s = Self::default();
        s.apply_text(&text, path)?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CliError::Config("dim must be positive".into()));
        }
        if self.max_len == 0 {
            return Err(CliError::Config("max_len must be positive".into()));
        }
        self.trainer.validate()?;
        Ok(())
    }

    /// Settings file that [`RunSettings::apply_text`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let windows: Vec<String> = t.window_sizes.iter().map(|w| w.to_string()).collect();
        let mut s = format!(
            "learning_rate = {:?}\nl2_lambda = {:?}\nbatch_size = {}\nk = {}\nmargin = {:?}\n\
             dropout_rate = {:?}\ndropout_mode = {}\nwindow_sizes = {}\nepochs = {}\nseed = {}\n\
             optimizer = {}\nmixture = {}\nfield = {}\ndim = {}\nmax_len = {}\n",
            t.learning_rate,
            t.l2_lambda,
            t.batch_size,
            t.k,
            t.margin,
            t.dropout_rate,
            match t.dropout_mode {
                DropoutMode::DropProbability => "drop",
                DropoutMode::KeepProbability => "keep",
            },
            windows.join(","),
            t.epochs,
            t.seed,
            match t.optimizer {
                OptimizerKind::Sgd => "sgd",
                OptimizerKind::Adam => "adam",
            },
            mixture_name(t.mixture),
            field_name(t.field),
            self.dim,
            self.max_len,
        );
        if let Some(p) = &self.embeddings {
            s.push_str(&format!("embeddings = {}\n", p.display()));
        }
        s
    }
}
