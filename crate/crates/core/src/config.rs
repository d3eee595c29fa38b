//! Model and training configuration with file loading (TOML or JSON).
//!
//! Defaults: 300-d word embeddings, 512-d content features (GRU), 768-d
//! style features (4-layer, 8-head transformer), max length 15, teacher
//! forcing 1.0, lambda_1 = lambda_2 = 0.1, tau = 0.5, Adam at 1e-4.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Word embedding dimension (shared by encoders and decoder input).
    pub embed_dim: usize,
    /// Content feature dimension (GRU hidden size).
    pub content_dim: usize,
    /// Style feature dimension (transformer width).
    pub style_dim: usize,
    pub style_layers: usize,
    pub style_heads: usize,
    /// Transformer feed-forward inner dimension; 0 means 4 * style_dim.
    pub style_ff_dim: usize,
    /// Maximum sentence length in tokens; longer inputs are trimmed.
    pub max_len: usize,
    /// Optional projection of [content; style] down to this decoder hidden
    /// size; absent means the decoder state is the raw concatenation.
    pub decoder_dim: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 300,
            content_dim: 512,
            style_dim: 768,
            style_layers: 4,
            style_heads: 8,
            style_ff_dim: 0,
            max_len: 15,
            decoder_dim: None,
        }
    }
}

impl ModelConfig {
    pub fn style_ff_dim(&self) -> usize {
        if self.style_ff_dim == 0 {
            4 * self.style_dim
        } else {
            self.style_ff_dim
        }
    }

    pub fn decoder_hidden_dim(&self) -> usize {
        self.decoder_dim
            .unwrap_or(self.content_dim + self.style_dim)
    }

    /// A small configuration for tests and toy runs.
    pub fn tiny() -> Self {
        Self {
            embed_dim: 16,
            content_dim: 12,
            style_dim: 8,
            style_layers: 1,
            style_heads: 2,
            style_ff_dim: 16,
            max_len: 15,
            decoder_dim: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.style_dim % self.style_heads != 0 {
            return Err(Error::Config(format!(
                "style_dim {} must be divisible by style_heads {}",
                self.style_dim, self.style_heads
            )));
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("content_dim", self.content_dim),
            ("style_dim", self.style_dim),
            ("style_layers", self.style_layers),
            ("style_heads", self.style_heads),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda_content: f64,
    pub lambda_style: f64,
    pub temperature: f64,
    pub teacher_forcing_rate: f64,
    /// L2-normalize features inside the contrastive losses.
    pub normalize_features: bool,
    pub seed: u64,
    /// Tokens below this frequency are dropped from the vocabulary.
    pub min_freq: usize,
    /// Fraction of the training data held out for per-epoch validation when
    /// no explicit validation set is given.
    pub val_fraction: f64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            batch_size: 32,
            epochs: 30,
            learning_rate: 1e-4,
            lambda_content: 0.1,
            lambda_style: 0.1,
            temperature: 0.5,
            teacher_forcing_rate: 1.0,
            normalize_features: true,
            seed: 17,
            min_freq: 1,
            val_fraction: 0.1,
            grad_clip: 5.0,
        }
    }
}

/// The four ablation variants, selected purely by zeroing loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Full,
    NoCcl,
    NoScl,
    NoBoth,
}

impl Ablation {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        match self {
            Ablation::Full => {}
            Ablation::NoCcl => cfg.lambda_content = 0.0,
            Ablation::NoScl => cfg.lambda_style = 0.0,
            Ablation::NoBoth => {
                cfg.lambda_content = 0.0;
                cfg.lambda_style = 0.0;
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoCcl => "no-ccl",
            Ablation::NoScl => "no-scl",
            Ablation::NoBoth => "no-both",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ablation::Full),
            "no-ccl" => Ok(Ablation::NoCcl),
            "no-scl" => Ok(Ablation::NoScl),
            "no-both" => Ok(Ablation::NoBoth),
            other => Err(Error::Config(format!(
                "unknown ablation \"{other}\" (expected full|no-ccl|no-scl|no-both)"
            ))),
        }
    }
}

impl TrainConfig {
    /// Loads TOML (default) or JSON by extension. Missing keys fall back to
    /// the defaults above.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: TrainConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be >= 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing_rate) {
            return Err(Error::Config("teacher_forcing_rate must be in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must be in [0, 1)".into()));
        }
        if self.lambda_content < 0.0 || self.lambda_style < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_match_reference_settings() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.model.max_len, 15);
        assert_eq!(cfg.model.embed_dim, 300);
        assert_eq!(cfg.model.content_dim, 512);
        assert_eq!(cfg.model.style_dim, 768);
        assert_eq!(cfg.teacher_forcing_rate, 1.0);
        assert_eq!(cfg.lambda_content, 0.1);
        assert_eq!(cfg.lambda_style, 0.1);
        assert_eq!(cfg.temperature, 0.5);
        assert_eq!(cfg.learning_rate, 1e-4);
        assert_eq!(cfg.model.decoder_hidden_dim(), 1280);
    }

    #[test]
    fn toml_missing_keys_use_defaults() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(f, "batch_size = 8\nepochs = 2\n[model]\nembed_dim = 32").unwrap();
        let cfg = TrainConfig::load(f.path()).unwrap();
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.model.embed_dim, 32);
        assert_eq!(cfg.model.content_dim, 512);
        assert_eq!(cfg.temperature, 0.5);
    }

    #[test]
    fn ablation_zeroes_weights() {
        let mut cfg = TrainConfig::default();
        Ablation::NoBoth.apply(&mut cfg);
        assert_eq!(cfg.lambda_content, 0.0);
        assert_eq!(cfg.lambda_style, 0.0);
        let mut cfg = TrainConfig::default();
        Ablation::NoCcl.apply(&mut cfg);
        assert_eq!(cfg.lambda_content, 0.0);
        assert_eq!(cfg.lambda_style, 0.1);
    }

    #[test]
    fn invalid_head_split_rejected() {
        let mut cfg = TrainConfig::default();
        cfg.model.style_dim = 10;
        cfg.model.style_heads = 4;
        assert!(cfg.validate().is_err());
    }
}
