//! The full protocol at reduced size: train all six modes on 1000 copy-task
//! pairs, scan beam widths 1 to 10 on 40 held-out pairs, and print the
//! summary table.

use wordchar_nmt::data::ParallelCorpus;
use wordchar_nmt::repr::ReprConfig;
use wordchar_nmt::sweep::{sweep_checkpoint, SweepReport};
use wordchar_nmt::synthetic::{copy_corpus, SyntheticSpec};
use wordchar_nmt::train::{train, TrainConfig};
use wordchar_nmt::{ModelConfig, ReprMode, Seq2Seq};

fn main() -> wordchar_nmt::Result<()> {
    let mut corpus = copy_corpus(SyntheticSpec {
        pairs: 1040,
        ..SyntheticSpec::default()
    });
    let held_out = ParallelCorpus {
        pairs: corpus.pairs.split_off(1000),
    };
    let cfg = TrainConfig {
        max_epochs: 8,
        lr: 0.005,
        eval_every: 2,
        ..TrainConfig::default()
    };
    let widths: Vec<usize> = (1..=10).collect();
    let mut report = SweepReport::default();
    for mode in ReprMode::ALL {
        let config = ModelConfig {
            repr: ReprConfig {
                mode,
                word_dim: 16,
                char_dim: 32,
                char_embed_dim: 16,
                char_lstm_hidden: 16,
            },
            encoder_hidden: 32,
            decoder_hidden: 64,
            attention_dim: 32,
            train_word_embeddings: true,
        };
        let model = Seq2Seq::for_corpus(config, &corpus, 0)?;
        let (ck, _) = train(model, &corpus, &held_out, &cfg)?;
        let row = sweep_checkpoint(&ck, &held_out, &widths, 20)?;
        eprintln!("{mode}: {:?}", row.scores.iter().map(|s| (s.width, (s.bleu * 100.0).round() / 100.0)).collect::<Vec<_>>());
        report.rows.push(row);
    }
    print!("{report}");
    Ok(())
}
