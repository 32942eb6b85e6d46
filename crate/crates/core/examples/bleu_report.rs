//! Corpus BLEU on a few hand-made sentence pairs, as text and JSON.

use wordchar_nmt::bleu::{corpus_bleu, modified_precision, BleuOptions};
use wordchar_nmt::data::tokenize;

fn main() -> wordchar_nmt::Result<()> {
    let refs = ["The cat is on the mat.", "There is a cat on the mat.", "I don't like rain."];
    let cands = ["the cat is on the mat .", "a cat is on the mat", "i do n't like the rain ."];
    let refs: Vec<Vec<String>> = refs.iter().map(|s| tokenize(s)).collect();
    let cands: Vec<Vec<String>> = cands.iter().map(|s| tokenize(s)).collect();

    for n in 1..=4 {
        let (m, t) = modified_precision(&cands, &refs, n)?;
        println!("{n}-gram precision {m}/{t}");
    }
    let report = corpus_bleu(&cands, &refs, BleuOptions::default())?;
    println!("{report}");
    println!("{}", report.to_json());

    let (m, t) = modified_precision(&[tokenize("the the the the the the the")], &[tokenize("the cat is on the mat")], 1)?;
    println!("degenerate candidate: unigram precision {m}/{t}");
    Ok(())
}
