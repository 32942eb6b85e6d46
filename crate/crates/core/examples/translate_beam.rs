//! Greedy decoding versus beam search on a briefly trained reversal model.

use wordchar_nmt::decode::{beam_search, greedy_decode, BeamConfig};
use wordchar_nmt::repr::ReprConfig;
use wordchar_nmt::synthetic::{reversal_corpus, SyntheticSpec};
use wordchar_nmt::train::{train, TrainConfig};
use wordchar_nmt::{ModelConfig, ReprMode, Seq2Seq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut repr = ReprConfig::new(ReprMode::WordCharCnn);
    repr.word_dim = 24;
    repr.char_dim = 24;
    let config = ModelConfig {
        repr,
        encoder_hidden: 48,
        decoder_hidden: 96,
        attention_dim: 48,
        train_word_embeddings: true,
    };
    let corpus = reversal_corpus(SyntheticSpec::default());
    let model = Seq2Seq::for_corpus(config, &corpus, 0)?;
    let cfg = TrainConfig {
        max_epochs: 20,
        lr: 0.003,
        ..TrainConfig::default()
    };
    let (ck, _) = train(model, &corpus, &corpus, &cfg)?;
    let model = ck.model;

    for pair in corpus.pairs.iter().take(4) {
        let src = model.prepare_source(&pair.source);
        println!("source  {}", pair.source.join(" "));
        println!("target  {}", pair.target.join(" "));
        let mut session = model.session(&src)?;
        let g = greedy_decode(&mut session, 20)?;
        println!("greedy  {}", model.tgt_vocab.decode(&g).join(" "));
        for width in [1, 3, 10] {
            let hyps = beam_search(&mut session, &BeamConfig { width, max_len: 20, length_alpha: 0.0 })?;
            let best = &hyps[0];
            println!("beam {width:<2} {}  (log p = {:.3})", model.tgt_vocab.decode(&best.tokens).join(" "), best.logprob);
        }
        println!();
    }
    Ok(())
}
