//! Corpus-level BLEU with a single reference per candidate.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Clipped n-gram matches and total candidate n-grams, summed over the corpus.
pub fn modified_precision<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], n: usize) -> Result<(usize, usize)> {
    if n < 1 {
        return Err(Error::invalid("n-gram order must be at least 1"));
    }
    check_lengths(candidates.len(), references.len())?;
    let mut matches = 0;
    let mut total = 0;
    for (cand, refr) in candidates.iter().zip(references) {
        let (m, t) = sentence_counts(cand, refr, n);
        matches += m;
        total += t;
    }
    Ok((matches, total))
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

fn sentence_counts<S: AsRef<str>>(cand: &[S], refr: &[S], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(refr, n);
    let total = c.values().sum();
    let matches = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
    (matches, total)
}

fn check_lengths(c: usize, r: usize) -> Result<()> {
    if c != r {
        return Err(Error::invalid(format!("{c} candidates but {r} references")));
    }
    if c == 0 {
        return Err(Error::invalid("BLEU needs at least one sentence"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuOptions {
    /// Add one to numerator and denominator for orders 2 and up.
    pub smooth: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub bleu: f64,
    /// Orders with no candidate n-grams at all report 0.
    pub precisions: [f64; MAX_ORDER],
    pub bp: f64,
    pub cand_len: usize,
    pub ref_len: usize,
    pub smoothed: bool,
    /// Set when an unsmoothed order had no matches, forcing the score to 0.
    #[serde(skip)]
    pub zero_precision: bool,
}

impl BleuReport {
    /// Score rounded to two decimals.
    pub fn rounded(&self) -> f64 {
        (self.bleu * 100.0).round() / 100.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl fmt::Display for BleuReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BLEU = {:.2}, ", self.bleu)?;
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
        write!(
            f,
            "{} (BP = {:.3}, ratio = {:.3}, hyp_len = {}, ref_len = {})",
            p.join("/"),
            self.bp,
            self.cand_len as f64 / self.ref_len.max(1) as f64,
            self.cand_len,
            self.ref_len
        )
    }
}

/// Geometric mean of clipped precisions for orders 1..=4 times the brevity
/// penalty, on a 0-100 scale.
///
/// Orders for which the corpus contains no candidate n-grams at all (every
/// candidate shorter than n) are left out of the mean.
pub fn corpus_bleu<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>], options: BleuOptions) -> Result<BleuReport> {
    check_lengths(candidates.len(), references.len())?;
    let cand_len: usize = candidates.iter().map(Vec::len).sum();
    let ref_len: usize = references.iter().map(Vec::len).sum();

    let mut precisions = [0.0; MAX_ORDER];
    let mut log_sum = 0.0;
    let mut orders = 0;
    let mut zero = false;
    for n in 1..=MAX_ORDER {
        let (mut m, mut t) = modified_precision(candidates, references, n)?;
        if t == 0 {
            continue;
        }
        if options.smooth && n >= 2 {
            m += 1;
            t += 1;
        }
        let p = m as f64 / t as f64;
        precisions[n - 1] = p;
        orders += 1;
        if m == 0 {
            zero = true;
        } else {
            log_sum += p.ln();
        }
    }

    let bp = if cand_len == 0 {
        0.0
    } else if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    let bleu = if zero || orders == 0 {
        0.0
    } else {
        100.0 * bp * (log_sum / orders as f64).exp()
    };
    Ok(BleuReport {
        bleu,
        precisions,
        bp,
        cand_len,
        ref_len,
        smoothed: options.smooth,
        zero_precision: zero,
    })
}
