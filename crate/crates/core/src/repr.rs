//! Per-word input vectors for the six input-representation modes.
//!
//! Mode `word` uses the word embedding alone. Every other mode appends a
//! character-derived vector built by a character bi-LSTM, a character CNN,
//! or an elementwise combination (sum, mean or product) of the two. The
//! character path runs for every source word, in vocabulary or not.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, TensorError};
use crate::nn::{BiLstmParams, ConvFilterBank, EmbeddingTable, CONV_WINDOWS};
use crate::params::ParamStore;
use crate::tensor::Tensor;

type TResult<T> = std::result::Result<T, TensorError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReprMode {
    Word,
    WordCharBiLstm,
    WordCharCnn,
    CombineAdd,
    CombineAvg,
    CombineMul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Avg,
    Mul,
}

impl ReprMode {
    pub const ALL: [ReprMode; 6] = [
        ReprMode::Word,
        ReprMode::WordCharBiLstm,
        ReprMode::WordCharCnn,
        ReprMode::CombineAdd,
        ReprMode::CombineAvg,
        ReprMode::CombineMul,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReprMode::Word => "word",
            ReprMode::WordCharBiLstm => "wordchar_bilstm",
            ReprMode::WordCharCnn => "wordchar_cnn",
            ReprMode::CombineAdd => "wordchar_combine_add",
            ReprMode::CombineAvg => "wordchar_combine_avg",
            ReprMode::CombineMul => "wordchar_combine_mul",
        }
    }

    /// Row label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ReprMode::Word => "word (baseline)",
            other => other.name(),
        }
    }

    pub fn uses_chars(self) -> bool {
        self != ReprMode::Word
    }

    pub fn uses_bilstm(self) -> bool {
        !matches!(self, ReprMode::Word | ReprMode::WordCharCnn)
    }

    pub fn uses_cnn(self) -> bool {
        !matches!(self, ReprMode::Word | ReprMode::WordCharBiLstm)
    }

    pub fn combine_op(self) -> Option<CombineOp> {
        match self {
            ReprMode::CombineAdd => Some(CombineOp::Add),
            ReprMode::CombineAvg => Some(CombineOp::Avg),
            ReprMode::CombineMul => Some(CombineOp::Mul),
            _ => None,
        }
    }
}

impl fmt::Display for ReprMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReprMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let short = s.strip_prefix("wordchar_").unwrap_or(s);
        Ok(match short {
            "word" => ReprMode::Word,
            "bilstm" => ReprMode::WordCharBiLstm,
            "cnn" => ReprMode::WordCharCnn,
            "combine_add" => ReprMode::CombineAdd,
            "combine_avg" => ReprMode::CombineAvg,
            "combine_mul" => ReprMode::CombineMul,
            _ => return Err(Error::invalid(format!("unknown representation mode {s:?}"))),
        })
    }
}

impl TryFrom<String> for ReprMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ReprMode> for String {
    fn from(m: ReprMode) -> String {
        m.name().to_string()
    }
}

/// Dimension settings for the input layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReprConfig {
    pub mode: ReprMode,
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_embed_dim: usize,
    pub char_lstm_hidden: usize,
}

impl ReprConfig {
    pub fn new(mode: ReprMode) -> Self {
        Self {
            mode,
            word_dim: 100,
            char_dim: 100,
            char_embed_dim: 30,
            char_lstm_hidden: 50,
        }
    }

    /// Length of the vectors fed to the encoder.
    pub fn input_dim(&self) -> usize {
        if self.mode.uses_chars() {
            self.word_dim + self.char_dim
        } else {
            self.word_dim
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.word_dim == 0 || self.char_dim == 0 || self.char_embed_dim == 0 {
            return Err(Error::Config("representation dimensions must be positive".into()));
        }
        if self.mode.uses_bilstm() && 2 * self.char_lstm_hidden != self.char_dim {
            return Err(Error::Config(format!(
                "char bi-LSTM output 2×{} does not match char_dim {}",
                self.char_lstm_hidden, self.char_dim
            )));
        }
        if self.mode.uses_cnn() && self.char_dim < CONV_WINDOWS.len() {
            return Err(Error::Config("char_dim too small to split across three windows".into()));
        }
        Ok(())
    }
}

pub const CPAD: usize = 0;
pub const CUNK: usize = 1;

/// Character ↔ id map with `<cpad>` at 0 and `<cunk>` at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    /// Every character of `words`, in code-point order after the two
    /// reserved ids.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<char> = words.into_iter().flat_map(str::chars).collect();
        Self::from_chars(set.into_iter().collect())
    }

    /// `chars` lists the non-reserved characters in id order starting at 2.
    pub fn from_chars(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + 2)).collect();
        Self { chars, index }
    }

    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(CUNK)
    }

    pub fn encode(&self, word: &str) -> Vec<usize> {
        word.chars().map(|c| self.id(c)).collect()
    }
}

/// Parameters of the character path for one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CharEncoders {
    pub mode: ReprMode,
    pub embed: EmbeddingTable,
    pub bilstm: Option<BiLstmParams>,
    pub cnn: Option<ConvFilterBank>,
}

impl CharEncoders {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        config: &ReprConfig,
        char_vocab_size: usize,
        rng: &mut R,
    ) -> TResult<Self> {
        let table = Tensor::uniform_with(
            &[char_vocab_size, config.char_embed_dim],
            rng,
            crate::nn::INIT_RANGE,
        )?;
        let embed = EmbeddingTable::new(store, "char.embed", table, true)?;
        let bilstm = if config.mode.uses_bilstm() {
            Some(BiLstmParams::init(
                store,
                "char.bilstm",
                config.char_embed_dim,
                config.char_lstm_hidden,
                rng,
            )?)
        } else {
            None
        };
        let cnn = if config.mode.uses_cnn() {
            Some(ConvFilterBank::init(
                store,
                "char.cnn",
                config.char_embed_dim,
                config.char_dim,
                rng,
            )?)
        } else {
            None
        };
        Ok(Self {
            mode: config.mode,
            embed,
            bilstm,
            cnn,
        })
    }

    fn embed_chars(&self, tape: &mut Tape, chars: &[usize]) -> TResult<Vec<Var>> {
        if chars.is_empty() {
            return Err(TensorError::Empty { op: "char_repr" });
        }
        chars.iter().map(|&c| self.embed.lookup(tape, c)).collect()
    }

    /// `[h→_n; h←_1]` of the character bi-LSTM.
    pub fn char_repr_bilstm(&self, tape: &mut Tape, chars: &[usize]) -> TResult<Var> {
        let lstm = self
            .bilstm
            .as_ref()
            .ok_or(TensorError::Empty { op: "char_repr_bilstm" })?;
        let embeds = self.embed_chars(tape, chars)?;
        let out = lstm.run(tape, &embeds)?;
        tape.concat(&[out.final_forward, out.final_backward])
    }

    /// 1-max pooled CNN features. Words shorter than the widest window are
    /// right-padded with `<cpad>`.
    pub fn char_repr_cnn(&self, tape: &mut Tape, chars: &[usize]) -> TResult<Var> {
        let cnn = self.cnn.as_ref().ok_or(TensorError::Empty { op: "char_repr_cnn" })?;
        let padded = pad_chars(chars);
        let embeds = self.embed_chars(tape, &padded)?;
        cnn.pooled(tape, &embeds)
    }

    /// The character vector for this encoder's mode.
    pub fn char_vector(&self, tape: &mut Tape, chars: &[usize]) -> TResult<Var> {
        match (self.mode.combine_op(), self.mode) {
            (Some(op), _) => {
                let v_lstm = self.char_repr_bilstm(tape, chars)?;
                let v_cnn = self.char_repr_cnn(tape, chars)?;
                combine(tape, v_lstm, v_cnn, op)
            }
            (None, ReprMode::WordCharBiLstm) => self.char_repr_bilstm(tape, chars),
            (None, ReprMode::WordCharCnn) => self.char_repr_cnn(tape, chars),
            (None, _) => Err(TensorError::Empty { op: "char_vector" }),
        }
    }
}

/// Right-pads a non-empty character sequence to at least the widest window.
pub fn pad_chars(chars: &[usize]) -> Vec<usize> {
    let widest = CONV_WINDOWS[CONV_WINDOWS.len() - 1];
    if chars.is_empty() {
        return Vec::new();
    }
    let mut padded = chars.to_vec();
    padded.resize(chars.len().max(widest), CPAD);
    padded
}

/// Merges the bi-LSTM and CNN character vectors.
pub fn combine(tape: &mut Tape, v_lstm: Var, v_cnn: Var, op: CombineOp) -> TResult<Var> {
    match op {
        CombineOp::Add => tape.add(v_lstm, v_cnn),
        CombineOp::Avg => {
            let sum = tape.add(v_lstm, v_cnn)?;
            tape.scale(sum, 0.5)
        }
        CombineOp::Mul => tape.mul(v_lstm, v_cnn),
    }
}

/// A source token ready for the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceWord {
    pub word: usize,
    pub chars: Vec<usize>,
}

/// Word embedding, concatenated with the character vector when `chars` is
/// present.
pub fn word_input_vector(
    tape: &mut Tape,
    words: &EmbeddingTable,
    chars: Option<&CharEncoders>,
    token: &SourceWord,
) -> TResult<Var> {
    let w = words.lookup(tape, token.word)?;
    match chars {
        None => Ok(w),
        Some(enc) => {
            let c = enc.char_vector(tape, &token.chars)?;
            tape.concat(&[w, c])
        }
    }
}
