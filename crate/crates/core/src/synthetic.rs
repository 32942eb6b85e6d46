//! Small generated parallel corpora for smoke tests and demos.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{ParallelCorpus, SentencePair};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Target equals source.
    Copy,
    /// Target is the source in reverse word order.
    Reverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub pairs: usize,
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            pairs: 50,
            vocab: 30,
            min_len: 3,
            max_len: 7,
            seed: 0,
        }
    }
}

/// `n` distinct lowercase words of 2 to 6 letters.
pub fn random_words(n: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(2..=6);
        let w: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Random sentences over a random vocabulary, paired according to `task`.
/// The same spec yields the same source side for every task.
pub fn corpus(task: Task, spec: SyntheticSpec) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = random_words(spec.vocab, &mut rng);
    let pairs = (0..spec.pairs)
        .map(|_| {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let source: Vec<String> = (0..len).map(|_| words[rng.random_range(0..words.len())].clone()).collect();
            let mut target = source.clone();
            if task == Task::Reverse {
                target.reverse();
            }
            SentencePair { source, target }
        })
        .collect();
    ParallelCorpus { pairs }
}

pub fn copy_corpus(spec: SyntheticSpec) -> ParallelCorpus {
    corpus(Task::Copy, spec)
}

pub fn reversal_corpus(spec: SyntheticSpec) -> ParallelCorpus {
    corpus(Task::Reverse, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let spec = SyntheticSpec::default();
        let c = copy_corpus(spec);
        let r = reversal_corpus(spec);
        assert_eq!(c.len(), 50);
        for (a, b) in c.pairs.iter().zip(&r.pairs) {
            assert_eq!(a.source, a.target);
            assert_eq!(a.source, b.source);
            let mut rev = b.target.clone();
            rev.reverse();
            assert_eq!(rev, b.source);
            assert!((3..=7).contains(&a.source.len()));
        }
        let vocab: BTreeSet<&String> = c.sources().flatten().collect();
        assert!(vocab.len() <= 30 && vocab.len() > 20);
        assert_eq!(copy_corpus(spec), c);
    }
}
