//! Beam-width scans over trained checkpoints and the summary table.

use std::fmt;

use serde::Serialize;

use crate::bleu::{corpus_bleu, BleuOptions, BleuReport};
use crate::checkpoint::Checkpoint;
use crate::data::ParallelCorpus;
use crate::decode::BeamConfig;
use crate::error::{Error, Result};
use crate::seq2seq::Seq2Seq;

/// Translates every source of `corpus` and scores against its targets.
pub fn evaluate(model: &Seq2Seq, corpus: &ParallelCorpus, beam: &BeamConfig) -> Result<BleuReport> {
    let hyps = corpus
        .sources()
        .map(|s| model.translate(s, beam))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let refs: Vec<Vec<String>> = corpus.targets().cloned().collect();
    corpus_bleu(&hyps, &refs, BleuOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthScore {
    pub width: usize,
    pub bleu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub best_bleu: f64,
    pub best_width: usize,
    pub epoch: usize,
    pub scores: Vec<WidthScore>,
}

impl SweepRow {
    /// Picks the highest score, preferring the narrower beam on ties.
    pub fn from_scores(model: impl Into<String>, epoch: usize, scores: Vec<WidthScore>) -> Result<Self> {
        let best = scores
            .iter()
            .copied()
            .reduce(|a, b| if b.bleu > a.bleu || (b.bleu == a.bleu && b.width < a.width) { b } else { a })
            .ok_or_else(|| Error::invalid("no beam widths to sweep"))?;
        Ok(Self {
            model: model.into(),
            best_bleu: best.bleu,
            best_width: best.width,
            epoch,
            scores,
        })
    }
}

/// Scores one checkpoint at each beam width.
pub fn sweep_checkpoint(ck: &Checkpoint, corpus: &ParallelCorpus, widths: &[usize], max_len: usize) -> Result<SweepRow> {
    let scores = widths
        .iter()
        .map(|&width| {
            let beam = BeamConfig {
                width,
                max_len,
                length_alpha: 0.0,
            };
            Ok(WidthScore {
                width,
                bleu: evaluate(&ck.model, corpus, &beam)?.bleu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepRow::from_scores(ck.model.mode().label(), ck.epoch, scores)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model | best BLEU | decoding | epoch")?;
        for r in &self.rows {
            writeln!(f, "{} | {:.2} | beam({}) | {}", r.model, r.best_bleu, r.best_width, r.epoch)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[(usize, f64)]) -> Vec<WidthScore> {
        v.iter().map(|&(width, bleu)| WidthScore { width, bleu }).collect()
    }

    #[test]
    fn table_formatting_fixture() {
        let report = SweepReport {
            rows: vec![
                SweepRow::from_scores("word (baseline)", 40, scores(&[(1, 29.5), (4, 30.83), (6, 30.1)])).unwrap(),
                SweepRow::from_scores("wordchar_combine_mul", 80, scores(&[(3, 42.48), (5, 42.48)])).unwrap(),
            ],
        };
        assert_eq!(
            report.to_string(),
            "model | best BLEU | decoding | epoch\n\
             word (baseline) | 30.83 | beam(4) | 40\n\
             wordchar_combine_mul | 42.48 | beam(3) | 80\n"
        );
    }

    #[test]
    fn best_width_prefers_narrow_on_ties() {
        let r = SweepRow::from_scores("m", 1, scores(&[(5, 10.0), (2, 10.0), (7, 9.0)])).unwrap();
        assert_eq!(r.best_width, 2);
        assert!(SweepRow::from_scores("m", 1, Vec::new()).is_err());
    }
}
