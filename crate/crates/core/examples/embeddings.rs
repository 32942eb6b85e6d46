//! Parse word vectors in GloVe text format and build an embedding matrix.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordchar_nmt::data::{embedding_matrix, EmbeddingFile, Vocabulary};

fn main() -> wordchar_nmt::Result<()> {
    let text = "rumah 0.1 0.2 0.3 0.4\nmakan -0.5 0.0 0.5 1.0\nlangit 1 1 1 1\n";
    let words: Vec<String> = ["rumah", "makan", "besar"].iter().map(|s| s.to_string()).collect();
    let vocab = Vocabulary::build([&words], 1);

    let file = EmbeddingFile::parse(text, Path::new("inline.txt"), 4, |w| vocab.get(w).is_some())?;
    println!("kept {} of 3 vectors", file.vectors.len());
    let m = embedding_matrix(&vocab, Some(&file), 4, &mut ChaCha8Rng::seed_from_u64(0))?;
    for (id, tok) in vocab.tokens().iter().enumerate() {
        println!("{id:>2} {tok:<8} {:?}", m.row(id));
    }

    match EmbeddingFile::parse("rumah 0.1 0.2\n", Path::new("bad.txt"), 4, |_| true) {
        Err(e) => println!("malformed file: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
