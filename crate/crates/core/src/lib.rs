pub mod autodiff;
pub mod bleu;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod decode;
pub mod error;
pub mod gradcheck;
pub mod nn;
pub mod params;
pub mod repr;
pub mod seq2seq;
pub mod sweep;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use autodiff::{Tape, Var};
pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result, TensorError};
pub use params::{Gradients, ParamId, ParamStore};
pub use repr::{ReprConfig, ReprMode};
pub use seq2seq::{ModelConfig, Seq2Seq};
pub use tensor::Tensor;
