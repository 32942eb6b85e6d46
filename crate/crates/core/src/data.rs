//! Tokenization, vocabularies, parallel corpora, embedding files and
//! corpus statistics.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default bound on sentence length; longer pairs are dropped on load.
pub const MAX_SENTENCE_LEN: usize = 50;

const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']'];
const NEGATION_CLITIC: &str = "n't";

/// Lowercases and splits a line into tokens.
///
/// Whitespace separates words; each of `.,!?;:"()[]` becomes its own token,
/// except `.` and `,` between two digits (`3.5`, `1,000`); a trailing `n't`
/// is split off its stem, so `wasn't` gives `was`, `n't`.
pub fn tokenize(line: &str) -> Vec<String> {
    let lower = line.to_lowercase();
    let mut out = Vec::new();
    for chunk in lower.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let numeric_sep = (c == '.' || c == ',')
                && i > 0
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if PUNCTUATION.contains(&c) && !numeric_sep {
                flush_word(&mut word, &mut out);
                out.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        flush_word(&mut word, &mut out);
    }
    out
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    if word.len() > NEGATION_CLITIC.len() && word.ends_with(NEGATION_CLITIC) {
        let stem = &word[..word.len() - NEGATION_CLITIC.len()];
        out.push(stem.to_string());
        out.push(NEGATION_CLITIC.to_string());
    } else {
        out.push(word.clone());
    }
    word.clear();
}

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Token ↔ id bijection with the four reserved entries at ids 0..3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    freqs: Vec<usize>,
}

impl Vocabulary {
    /// Tokens with frequency ≥ `min_freq`, most frequent first, ties
    /// broken lexicographically.
    pub fn build<'a, I, S>(sentences: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let sentences: Vec<&S> = sentences.into_iter().collect();
        for s in &sentences {
            for t in s.as_ref() {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut entries: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_freq && !RESERVED.contains(t))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut freqs = vec![0; RESERVED.len()];
        for (t, c) in entries {
            tokens.push(t.to_string());
            freqs.push(c);
        }
        Self::assemble(tokens, freqs)
    }

    /// Rebuilds a vocabulary from tokens listed in id order.
    pub fn from_tokens(tokens: Vec<String>, freqs: Option<Vec<usize>>) -> Result<Self> {
        if tokens.len() < RESERVED.len()
            || tokens.iter().zip(RESERVED).any(|(t, r)| t != r)
        {
            return Err(Error::invalid("vocabulary must start with <pad> <s> </s> <unk>"));
        }
        let unique: HashSet<&String> = tokens.iter().collect();
        if unique.len() != tokens.len() {
            return Err(Error::invalid("vocabulary contains duplicate tokens"));
        }
        let freqs = freqs.unwrap_or_else(|| vec![0; tokens.len()]);
        if freqs.len() != tokens.len() {
            return Err(Error::invalid("vocabulary frequency list has the wrong length"));
        }
        Ok(Self::assemble(tokens, freqs))
    }

    fn assemble(tokens: Vec<String>, freqs: Vec<usize>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            index,
            freqs,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or [`UNK`] when absent.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn freqs(&self) -> &[usize] {
        &self.freqs
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.tokens[i].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    /// Tokenizes line pairs, dropping pairs with an empty side or a side
    /// longer than `max_len`. Returns the corpus and the number dropped.
    pub fn from_lines<'a, I>(lines: I, max_len: usize) -> (Self, usize)
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Self::from_tokenized(lines.into_iter().map(|(s, t)| SentencePair {
            source: tokenize(s),
            target: tokenize(t),
        }), max_len)
    }

    pub fn from_tokenized<I>(pairs: I, max_len: usize) -> (Self, usize)
    where
        I: IntoIterator<Item = SentencePair>,
    {
        let mut dropped = 0;
        let mut kept = Vec::new();
        for p in pairs {
            let ok = |s: &[String]| !s.is_empty() && s.len() <= max_len;
            if ok(&p.source) && ok(&p.target) {
                kept.push(p);
            } else {
                dropped += 1;
            }
        }
        (Self { pairs: kept }, dropped)
    }

    /// Two files with one sentence per line, paired by line number.
    pub fn load_parallel(source: &Path, target: &Path, max_len: usize) -> Result<(Self, usize)> {
        let src = read_text(source)?;
        let tgt = read_text(target)?;
        let src_lines: Vec<&str> = src.lines().collect();
        let tgt_lines: Vec<&str> = tgt.lines().collect();
        if src_lines.len() != tgt_lines.len() {
            return Err(Error::invalid(format!(
                "{} has {} lines but {} has {}",
                source.display(),
                src_lines.len(),
                target.display(),
                tgt_lines.len()
            )));
        }
        Ok(Self::from_lines(src_lines.into_iter().zip(tgt_lines), max_len))
    }

    /// One file of `source<TAB>target` lines.
    pub fn load_tsv(path: &Path, max_len: usize) -> Result<(Self, usize)> {
        let text = read_text(path)?;
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (s, t) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected source<TAB>target".into(),
            })?;
            lines.push((s, t));
        }
        Ok(Self::from_lines(lines, max_len))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Vec<String>> {
        self.pairs.iter().map(|p| &p.source)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Vec<String>> {
        self.pairs.iter().map(|p| &p.target)
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("invalid UTF-8: {e}"),
    })
}

/// Vectors read from a GloVe-style text file (`token v1 … vd` per line).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingFile {
    /// Parses every line, keeping only tokens accepted by `keep`. Any
    /// malformed line fails the whole load.
    pub fn parse(text: &str, path: &Path, dim: usize, keep: impl Fn(&str) -> bool) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let token = fields.next().ok_or_else(|| parse_err("missing token".into()))?;
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(format!("non-numeric value {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim {
                return Err(parse_err(format!(
                    "expected {dim} values, found {}",
                    values.len()
                )));
            }
            if keep(token) {
                vectors.insert(token.to_string(), values);
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn load(path: &Path, dim: usize, keep: impl Fn(&str) -> bool) -> Result<Self> {
        let text = read_text(path)?;
        Self::parse(&text, path, dim, keep)
    }
}

/// Range of the uniform initialization for words missing from the file.
pub const EMBEDDING_INIT_RANGE: f64 = 0.1;

/// Embedding matrix for `vocab`: rows found in `file` are copied, all
/// others (including reserved tokens) drawn uniformly from ±0.1.
pub fn embedding_matrix<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    file: Option<&EmbeddingFile>,
    dim: usize,
    rng: &mut R,
) -> Result<Tensor> {
    let mut m = Tensor::uniform_with(&[vocab.len(), dim], rng, EMBEDDING_INIT_RANGE)?;
    if let Some(file) = file {
        if file.dim != dim {
            return Err(Error::invalid(format!(
                "embedding file has {} dimensions, model expects {dim}",
                file.dim
            )));
        }
        for (id, tok) in vocab.tokens().iter().enumerate() {
            if let Some(v) = file.vectors.get(tok) {
                m.data_mut()[id * dim..(id + 1) * dim].copy_from_slice(v);
            }
        }
    }
    Ok(m)
}

/// Reads `path` and builds the embedding matrix for `vocab`.
pub fn load_embeddings<R: Rng + ?Sized>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut R,
) -> Result<Tensor> {
    let file = EmbeddingFile::load(path, dim, |t| vocab.get(t).is_some())?;
    embedding_matrix(vocab, Some(&file), dim, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub unique_words: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub mean_len: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub source: SideStats,
    pub target: SideStats,
}

fn side_stats<'a>(sentences: impl Iterator<Item = &'a Vec<String>>) -> SideStats {
    let mut unique = HashSet::new();
    let (mut min, mut max, mut total, mut n) = (usize::MAX, 0, 0, 0);
    for s in sentences {
        unique.extend(s.iter().map(String::as_str));
        min = min.min(s.len());
        max = max.max(s.len());
        total += s.len();
        n += 1;
    }
    SideStats {
        unique_words: unique.len(),
        min_len: min,
        max_len: max,
        mean_len: (total as f64 / n as f64 * 100.0).round() / 100.0,
    }
}

pub fn corpus_stats(corpus: &ParallelCorpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::invalid("corpus is empty"));
    }
    Ok(CorpusStats {
        sentences: corpus.len(),
        source: side_stats(corpus.sources()),
        target: side_stats(corpus.targets()),
    })
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: [(&str, String, String); 4] = [
            (
                "Unique words",
                self.source.unique_words.to_string(),
                self.target.unique_words.to_string(),
            ),
            (
                "Minimum of sentence length",
                self.source.min_len.to_string(),
                self.target.min_len.to_string(),
            ),
            (
                "Maximum of sentence length",
                self.source.max_len.to_string(),
                self.target.max_len.to_string(),
            ),
            (
                "Average of sentence length",
                format!("{:.2}", self.source.mean_len),
                format!("{:.2}", self.target.mean_len),
            ),
        ];
        writeln!(f, "{:<28}  {:>10}  {:>10}", "Statistic", "Source", "Target")?;
        for (name, s, t) in rows {
            writeln!(f, "{name:<28}  {s:>10}  {t:>10}")?;
        }
        Ok(())
    }
}
