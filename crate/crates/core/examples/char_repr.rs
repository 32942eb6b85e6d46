//! Input vectors for known and unknown words under each representation mode.
//!
//! Unknown words share the `<unk>` word embedding but still get a
//! spelling-specific character half.

use wordchar_nmt::data::Vocabulary;
use wordchar_nmt::repr::CharVocab;
use wordchar_nmt::{ModelConfig, ReprMode, Seq2Seq, Tape};

fn main() -> wordchar_nmt::Result<()> {
    let words: Vec<String> = ["rumah", "makan", "besar"].iter().map(|s| s.to_string()).collect();
    let vocab = Vocabulary::build([&words], 1);
    let chars = CharVocab::build(words.iter().map(String::as_str));
    let probe: Vec<String> = ["rumah", "rumahnya", "x"].iter().map(|s| s.to_string()).collect();

    for mode in ReprMode::ALL {
        let model = Seq2Seq::new(ModelConfig::new(mode), vocab.clone(), vocab.clone(), chars.clone(), 0)?;
        let mut tape = Tape::new(&model.params);
        let prepared = model.prepare_source(&probe);
        print!("{:<22}", mode.name());
        for (w, p) in probe.iter().zip(&prepared) {
            let v = model.word_vector(&mut tape, p)?;
            let t = tape.value(v);
            let known = if p.word == wordchar_nmt::data::UNK { "unk" } else { "known" };
            print!("  {w}({known}): dim {} |v| {:.3}", t.numel(), t.data().iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        println!();
    }
    Ok(())
}
