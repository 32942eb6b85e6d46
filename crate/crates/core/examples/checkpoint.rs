//! Save a model, inspect the checkpoint header, and load it back.

use wordchar_nmt::checkpoint::read_header;
use wordchar_nmt::data::ParallelCorpus;
use wordchar_nmt::{Checkpoint, ModelConfig, ReprMode, Seq2Seq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (corpus, _) = ParallelCorpus::from_lines([("saya makan nasi", "i eat rice"), ("dia minum teh", "she drinks tea")], 50);
    let model = Seq2Seq::for_corpus(ModelConfig::new(ReprMode::CombineMul), &corpus, 3)?;
    let ck = Checkpoint {
        model,
        epoch: 0,
        dev_bleu: None,
    };
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.ckpt");
    ck.save(&path)?;

    let header = read_header(&path)?;
    println!(
        "mode {} input_dim {} epoch {} ({} bytes)",
        header.mode,
        header.input_dim,
        header.epoch,
        std::fs::metadata(&path)?.len()
    );
    let back = Checkpoint::load(&path)?;
    println!("round trip identical: {}", back == ck);

    let bytes = std::fs::read(&path)?;
    std::fs::write(&path, &bytes[..bytes.len() / 2])?;
    println!("truncated: {}", Checkpoint::load(&path).unwrap_err());
    Ok(())
}
