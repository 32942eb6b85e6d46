//! Run configuration: built-in defaults, an optional JSON file, then
//! command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::decode::DEFAULT_MAX_LEN;
use crate::error::{Error, Result};
use crate::repr::{ReprConfig, ReprMode};
use crate::seq2seq::ModelConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: ReprMode,
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_embed_dim: usize,
    pub char_lstm_hidden: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
    pub attention_dim: usize,
    pub train_word_embeddings: bool,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub clip_norm: f64,
    pub eval_every: usize,
    pub seed: u64,
    pub beam: usize,
    pub beam_widths: Vec<usize>,
    pub max_len: usize,
    pub length_alpha: f64,
    pub train_src: Option<PathBuf>,
    pub train_tgt: Option<PathBuf>,
    pub dev_src: Option<PathBuf>,
    pub dev_tgt: Option<PathBuf>,
    pub test_src: Option<PathBuf>,
    pub test_tgt: Option<PathBuf>,
    pub src_embeddings: Option<PathBuf>,
    pub tgt_embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::new(ReprMode::Word);
        let train = TrainConfig::default();
        Self {
            mode: model.repr.mode,
            word_dim: model.repr.word_dim,
            char_dim: model.repr.char_dim,
            char_embed_dim: model.repr.char_embed_dim,
            char_lstm_hidden: model.repr.char_lstm_hidden,
            encoder_hidden: model.encoder_hidden,
            decoder_hidden: model.decoder_hidden,
            attention_dim: model.attention_dim,
            train_word_embeddings: model.train_word_embeddings,
            lr: train.lr,
            epochs: train.max_epochs,
            batch: train.batch_size,
            clip_norm: train.clip_norm,
            eval_every: train.eval_every,
            seed: train.seed,
            beam: 5,
            beam_widths: (1..=10).collect(),
            max_len: DEFAULT_MAX_LEN,
            length_alpha: 0.0,
            train_src: None,
            train_tgt: None,
            dev_src: None,
            dev_tgt: None,
            test_src: None,
            test_tgt: None,
            src_embeddings: None,
            tgt_embeddings: None,
            checkpoint: None,
            log: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then `file` if given, then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        overrides.apply(&mut cfg);
        Ok(cfg)
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            repr: ReprConfig {
                mode: self.mode,
                word_dim: self.word_dim,
                char_dim: self.char_dim,
                char_embed_dim: self.char_embed_dim,
                char_lstm_hidden: self.char_lstm_hidden,
            },
            encoder_hidden: self.encoder_hidden,
            decoder_hidden: self.decoder_hidden,
            attention_dim: self.attention_dim,
            train_word_embeddings: self.train_word_embeddings,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch,
            clip_norm: self.clip_norm,
            eval_every: self.eval_every,
            seed: self.seed,
            max_decode_len: self.max_len,
            smooth_dev_bleu: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config().validate()?;
        self.train_config().validate()?;
        if self.beam == 0 || self.beam_widths.contains(&0) {
            return Err(Error::Config("beam widths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Command-line flags that override the corresponding config fields.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    #[arg(long)]
    pub mode: Option<ReprMode>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub word_dim: Option<usize>,
    #[arg(long)]
    pub char_dim: Option<usize>,
    #[arg(long)]
    pub encoder_hidden: Option<usize>,
    #[arg(long)]
    pub decoder_hidden: Option<usize>,
    #[arg(long)]
    pub attention_dim: Option<usize>,
    #[arg(long)]
    pub train_src: Option<PathBuf>,
    #[arg(long)]
    pub train_tgt: Option<PathBuf>,
    #[arg(long)]
    pub dev_src: Option<PathBuf>,
    #[arg(long)]
    pub dev_tgt: Option<PathBuf>,
    #[arg(long)]
    pub src_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub tgt_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub log: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        fn set_path(dst: &mut Option<PathBuf>, src: &Option<PathBuf>) {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        set(&mut cfg.mode, &self.mode);
        set(&mut cfg.lr, &self.lr);
        set(&mut cfg.epochs, &self.epochs);
        set(&mut cfg.batch, &self.batch);
        set(&mut cfg.eval_every, &self.eval_every);
        set(&mut cfg.seed, &self.seed);
        set(&mut cfg.beam, &self.beam);
        set(&mut cfg.max_len, &self.max_len);
        set(&mut cfg.word_dim, &self.word_dim);
        set(&mut cfg.char_dim, &self.char_dim);
        set(&mut cfg.encoder_hidden, &self.encoder_hidden);
        set(&mut cfg.decoder_hidden, &self.decoder_hidden);
        set(&mut cfg.attention_dim, &self.attention_dim);
        set_path(&mut cfg.train_src, &self.train_src);
        set_path(&mut cfg.train_tgt, &self.train_tgt);
        set_path(&mut cfg.dev_src, &self.dev_src);
        set_path(&mut cfg.dev_tgt, &self.dev_tgt);
        set_path(&mut cfg.src_embeddings, &self.src_embeddings);
        set_path(&mut cfg.tgt_embeddings, &self.tgt_embeddings);
        set_path(&mut cfg.checkpoint, &self.checkpoint);
        set_path(&mut cfg.log, &self.log);
    }
}
