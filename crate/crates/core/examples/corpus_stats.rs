//! Tokenization and corpus statistics.

use wordchar_nmt::data::{corpus_stats, tokenize, ParallelCorpus};
use wordchar_nmt::synthetic::{copy_corpus, SyntheticSpec};

fn main() -> wordchar_nmt::Result<()> {
    let lines = [
        ("Harga minyak naik 2,5 persen.", "Oil prices rose 2.5 percent."),
        ("Dia tidak datang (lagi)!", "He didn't come (again)!"),
        ("Presiden bertemu menteri hari ini.", "The president met the minister today."),
    ];
    for (s, t) in &lines {
        println!("{:?}\n  -> {:?}", tokenize(s), tokenize(t));
    }
    let (corpus, dropped) = ParallelCorpus::from_lines(lines, 50);
    println!("\n{} pairs kept, {dropped} dropped\n", corpus.len());
    print!("{}", corpus_stats(&corpus)?);

    println!("\nsynthetic copy corpus:");
    print!("{}", corpus_stats(&copy_corpus(SyntheticSpec::default()))?);
    Ok(())
}
