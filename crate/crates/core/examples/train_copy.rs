//! Train a reduced-size model on the synthetic copy task and save it.
//!
//! ```text
//! cargo run --release --example train_copy -- wordchar_combine_avg /tmp/copy.ckpt
//! ```

use std::ops::ControlFlow;
use std::path::PathBuf;

use wordchar_nmt::repr::ReprConfig;
use wordchar_nmt::synthetic::{copy_corpus, SyntheticSpec};
use wordchar_nmt::train::{train_with, TrainConfig};
use wordchar_nmt::{ModelConfig, ReprMode, Seq2Seq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mode: ReprMode = args.next().as_deref().unwrap_or("wordchar_combine_avg").parse()?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "copy.ckpt".into()));

    let config = ModelConfig {
        repr: ReprConfig {
            mode,
            word_dim: 32,
            char_dim: 32,
            char_embed_dim: 16,
            char_lstm_hidden: 16,
        },
        encoder_hidden: 64,
        decoder_hidden: 128,
        attention_dim: 64,
        train_word_embeddings: true,
    };
    let corpus = copy_corpus(SyntheticSpec::default());
    let model = Seq2Seq::for_corpus(config, &corpus, 0)?;
    println!("{mode}: {} parameters", model.params.num_scalars());

    let cfg = TrainConfig {
        max_epochs: 60,
        lr: 0.003,
        ..TrainConfig::default()
    };
    let (ck, report) = train_with(model, &corpus, &corpus, &cfg, |r| {
        println!("{}", serde_json::to_string(r).unwrap());
        if r.dev_bleu.is_some_and(|b| b >= 99.0) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    ck.save(&out)?;
    println!(
        "best epoch {} with dev BLEU {:.2}; saved {}",
        report.best_epoch,
        ck.dev_bleu.unwrap_or(0.0),
        out.display()
    );
    Ok(())
}
