//! Attention encoder–decoder.
//!
//! A bi-LSTM reads the per-word input vectors; its per-position states are
//! the annotations. The decoder is a unidirectional LSTM whose hidden state
//! starts as `[h→_n; h←_1]` of the encoder and whose input at each step is
//! the previous target embedding concatenated with the attention context
//! computed from the state before the step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{log_softmax_slice, Tape, Var};
use crate::data::{self, Vocabulary, BOS, EOS};
use crate::decode::{beam_search, BeamConfig, StepModel};
use crate::error::{Error, Result, TensorError};
use crate::nn::{AttentionKeys, AttentionParams, BiLstmParams, EmbeddingTable, Linear, LstmParams};
use crate::params::ParamStore;
use crate::repr::{word_input_vector, CharEncoders, CharVocab, ReprConfig, ReprMode, SourceWord};
use crate::tensor::Tensor;

type TResult<T> = std::result::Result<T, TensorError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub repr: ReprConfig,
    /// Per direction.
    pub encoder_hidden: usize,
    /// Must equal `2 * encoder_hidden`.
    pub decoder_hidden: usize,
    pub attention_dim: usize,
    pub train_word_embeddings: bool,
}

impl ModelConfig {
    /// 100-dim words, 100-dim characters, 256 per encoder direction, 512
    /// in the decoder, 256-dim attention.
    pub fn new(mode: ReprMode) -> Self {
        Self {
            repr: ReprConfig::new(mode),
            encoder_hidden: 256,
            decoder_hidden: 512,
            attention_dim: 256,
            train_word_embeddings: true,
        }
    }

    /// A small instance for gradient checks and tests.
    pub fn tiny(mode: ReprMode) -> Self {
        Self {
            repr: ReprConfig {
                mode,
                word_dim: 6,
                char_dim: 6,
                char_embed_dim: 3,
                char_lstm_hidden: 3,
            },
            encoder_hidden: 4,
            decoder_hidden: 8,
            attention_dim: 5,
            train_word_embeddings: true,
        }
    }

    pub fn mode(&self) -> ReprMode {
        self.repr.mode
    }

    pub fn input_dim(&self) -> usize {
        self.repr.input_dim()
    }

    pub fn annotation_dim(&self) -> usize {
        2 * self.encoder_hidden
    }

    pub fn validate(&self) -> Result<()> {
        self.repr.validate()?;
        if self.encoder_hidden == 0 || self.attention_dim == 0 {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        if self.decoder_hidden != 2 * self.encoder_hidden {
            return Err(Error::Config(format!(
                "decoder_hidden {} must be twice encoder_hidden {}",
                self.decoder_hidden, self.encoder_hidden
            )));
        }
        Ok(())
    }
}

/// Parameter handles of one model, in initialization order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelLayout {
    pub src_embed: EmbeddingTable,
    pub tgt_embed: EmbeddingTable,
    pub chars: Option<CharEncoders>,
    pub encoder: BiLstmParams,
    pub decoder: LstmParams,
    pub attention: AttentionParams,
    pub output: Linear,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    pub annotations: Vec<Var>,
    pub final_forward: Var,
    pub final_backward: Var,
    pub keys: AttentionKeys,
}

#[derive(Clone, Copy, Debug)]
pub struct DecoderVars {
    pub h: Var,
    pub c: Var,
}

/// Decoder state held outside a tape, for search.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState {
    pub h: Tensor,
    pub c: Tensor,
}

/// A trained or freshly initialized translation model with its vocabularies.
#[derive(Clone, Debug, PartialEq)]
pub struct Seq2Seq {
    pub config: ModelConfig,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub char_vocab: CharVocab,
    pub params: ParamStore,
    pub layout: ModelLayout,
}

impl Seq2Seq {
    /// Random initialization from `seed`: word embeddings uniform in ±0.1,
    /// other weights uniform in ±0.08, forget-gate biases 1.
    pub fn new(
        config: ModelConfig,
        src_vocab: Vocabulary,
        tgt_vocab: Vocabulary,
        char_vocab: CharVocab,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let word_dim = config.repr.word_dim;
        let trainable = config.train_word_embeddings;
        let src = data::embedding_matrix(&src_vocab, None, word_dim, &mut rng)?;
        let src_embed = EmbeddingTable::new(&mut store, "src.embed", src, trainable)?;
        let tgt = data::embedding_matrix(&tgt_vocab, None, word_dim, &mut rng)?;
        let tgt_embed = EmbeddingTable::new(&mut store, "tgt.embed", tgt, trainable)?;
        let chars = if config.mode().uses_chars() {
            Some(CharEncoders::init(&mut store, &config.repr, char_vocab.len(), &mut rng)?)
        } else {
            None
        };
        let encoder = BiLstmParams::init(
            &mut store,
            "encoder",
            config.input_dim(),
            config.encoder_hidden,
            &mut rng,
        )?;
        let decoder = LstmParams::init(
            &mut store,
            "decoder",
            word_dim + config.annotation_dim(),
            config.decoder_hidden,
            &mut rng,
        )?;
        let attention = AttentionParams::init(
            &mut store,
            "attention",
            config.attention_dim,
            config.decoder_hidden,
            config.annotation_dim(),
            &mut rng,
        )?;
        let output = Linear::init(
            &mut store,
            "output",
            config.decoder_hidden,
            tgt_vocab.len(),
            &mut rng,
        )?;
        Ok(Self {
            config,
            src_vocab,
            tgt_vocab,
            char_vocab,
            params: store,
            layout: ModelLayout {
                src_embed,
                tgt_embed,
                chars,
                encoder,
                decoder,
                attention,
                output,
            },
        })
    }

    /// Builds vocabularies from a corpus (source characters come from the
    /// source vocabulary) and initializes a model.
    pub fn for_corpus(config: ModelConfig, corpus: &data::ParallelCorpus, seed: u64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid("corpus is empty"));
        }
        let src_vocab = Vocabulary::build(corpus.sources(), 1);
        let tgt_vocab = Vocabulary::build(corpus.targets(), 1);
        let char_vocab = CharVocab::build(
            src_vocab.tokens()[data::RESERVED.len()..].iter().map(String::as_str),
        );
        Self::new(config, src_vocab, tgt_vocab, char_vocab, seed)
    }

    /// Replaces the source (or target) word embedding matrix, e.g. with
    /// pre-trained vectors.
    pub fn set_embeddings(&mut self, target_side: bool, matrix: Tensor) -> Result<()> {
        let table = if target_side {
            &self.layout.tgt_embed
        } else {
            &self.layout.src_embed
        };
        let slot = self.params.get_mut(table.matrix);
        if slot.shape() != matrix.shape() {
            return Err(Error::invalid(format!(
                "embedding shape {:?} does not match {:?}",
                matrix.shape(),
                slot.shape()
            )));
        }
        *slot = matrix;
        Ok(())
    }

    pub fn mode(&self) -> ReprMode {
        self.config.mode()
    }

    pub fn prepare_source(&self, tokens: &[String]) -> Vec<SourceWord> {
        tokens
            .iter()
            .map(|t| SourceWord {
                word: self.src_vocab.id(t),
                chars: self.char_vocab.encode(t),
            })
            .collect()
    }

    pub fn target_ids(&self, tokens: &[String]) -> Vec<usize> {
        self.tgt_vocab.encode(tokens)
    }

    pub fn word_vector(&self, tape: &mut Tape, token: &SourceWord) -> TResult<Var> {
        word_input_vector(tape, &self.layout.src_embed, self.layout.chars.as_ref(), token)
    }

    pub fn encode(&self, tape: &mut Tape, src: &[SourceWord]) -> TResult<EncoderOutput> {
        if src.is_empty() {
            return Err(TensorError::Empty { op: "encode" });
        }
        let inputs = src
            .iter()
            .map(|w| self.word_vector(tape, w))
            .collect::<TResult<Vec<_>>>()?;
        let out = self.layout.encoder.run(tape, &inputs)?;
        let keys = self.layout.attention.keys(tape, &out.states)?;
        Ok(EncoderOutput {
            annotations: out.states,
            final_forward: out.final_forward,
            final_backward: out.final_backward,
            keys,
        })
    }

    pub fn decoder_init(&self, tape: &mut Tape, enc: &EncoderOutput) -> TResult<DecoderVars> {
        let h = tape.concat(&[enc.final_forward, enc.final_backward])?;
        let c = tape.constant(Tensor::zeros(&[self.config.decoder_hidden])?)?;
        Ok(DecoderVars { h, c })
    }

    /// One decoder step from `state` after emitting `prev`; returns logits
    /// over the target vocabulary and the next state.
    pub fn decode_step(
        &self,
        tape: &mut Tape,
        state: DecoderVars,
        prev: usize,
        enc: &EncoderOutput,
    ) -> TResult<(Var, DecoderVars)> {
        let l = &self.layout;
        let (context, _) = l.attention.context(tape, &enc.keys, state.h)?;
        let emb = l.tgt_embed.lookup(tape, prev)?;
        let input = tape.concat(&[emb, context])?;
        let (h, c) = l.decoder.step(tape, input, state.h, state.c)?;
        let logits = l.output.forward(tape, h)?;
        Ok((logits, DecoderVars { h, c }))
    }

    /// Teacher-forced mean cross-entropy over `tgt` followed by `</s>`,
    /// with `<s>` as the first decoder input.
    pub fn sentence_loss(&self, tape: &mut Tape, src: &[SourceWord], tgt: &[usize]) -> TResult<Var> {
        if tgt.is_empty() {
            return Err(TensorError::Empty { op: "sentence_loss" });
        }
        let enc = self.encode(tape, src)?;
        let mut state = self.decoder_init(tape, &enc)?;
        let mut prev = BOS;
        let mut terms = Vec::with_capacity(tgt.len() + 1);
        for &gold in tgt.iter().chain(std::iter::once(&EOS)) {
            let (logits, next) = self.decode_step(tape, state, prev, &enc)?;
            terms.push(tape.cross_entropy(logits, gold)?);
            state = next;
            prev = gold;
        }
        let total = tape.add_all(&terms)?;
        tape.scale(total, 1.0 / terms.len() as f64)
    }

    /// Beam-search translation of one tokenized sentence. An empty source
    /// yields an empty translation.
    pub fn translate(&self, tokens: &[String], beam: &BeamConfig) -> TResult<Vec<String>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let src = self.prepare_source(tokens);
        let mut session = self.session(&src)?;
        let best = beam_search(&mut session, beam)?;
        Ok(best.first().map(|h| self.tgt_vocab.decode(&h.tokens)).unwrap_or_default())
    }

    /// Starts incremental decoding of one source sentence.
    pub fn session(&self, src: &[SourceWord]) -> TResult<DecodeSession<'_>> {
        let mut tape = Tape::new(&self.params);
        let enc = self.encode(&mut tape, src)?;
        let init = self.decoder_init(&mut tape, &enc)?;
        let initial = DecoderState {
            h: tape.value(init.h).clone(),
            c: tape.value(init.c).clone(),
        };
        let mark = tape.len();
        Ok(DecodeSession {
            model: self,
            tape,
            enc,
            initial,
            mark,
        })
    }
}

/// Encoded source plus a scratch tape that is rewound after every step.
pub struct DecodeSession<'m> {
    model: &'m Seq2Seq,
    tape: Tape<'m>,
    enc: EncoderOutput,
    initial: DecoderState,
    mark: usize,
}

impl DecodeSession<'_> {
    /// Raw logits and next state.
    pub fn logits(&mut self, state: &DecoderState, prev: usize) -> TResult<(Vec<f64>, DecoderState)> {
        let tape = &mut self.tape;
        let h = tape.constant(state.h.clone())?;
        let c = tape.constant(state.c.clone())?;
        let (logits, next) = self.model.decode_step(tape, DecoderVars { h, c }, prev, &self.enc)?;
        let out = (
            tape.value(logits).data().to_vec(),
            DecoderState {
                h: tape.value(next.h).clone(),
                c: tape.value(next.c).clone(),
            },
        );
        tape.rewind(self.mark);
        Ok(out)
    }
}

impl StepModel for DecodeSession<'_> {
    type State = DecoderState;

    fn vocab_size(&self) -> usize {
        self.model.tgt_vocab.len()
    }

    fn initial_state(&mut self) -> TResult<DecoderState> {
        Ok(self.initial.clone())
    }

    fn step(&mut self, state: &DecoderState, prev: usize) -> TResult<(Vec<f64>, DecoderState)> {
        let (logits, next) = self.logits(state, prev)?;
        Ok((log_softmax_slice(&logits), next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ParallelCorpus;
    use crate::params::Gradients;

    fn corpus() -> ParallelCorpus {
        ParallelCorpus::from_lines(
            [
                ("the cat sat", "kucing itu duduk"),
                ("a dog ran", "anjing lari"),
                ("the dog sat", "anjing itu duduk"),
            ],
            50,
        )
        .0
    }

    fn tiny(mode: ReprMode, seed: u64) -> Seq2Seq {
        Seq2Seq::for_corpus(ModelConfig::tiny(mode), &corpus(), seed).unwrap()
    }

    fn words(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn paper_dims_validate() {
        for m in ReprMode::ALL {
            ModelConfig::new(m).validate().unwrap();
        }
        let mut bad = ModelConfig::new(ReprMode::Word);
        bad.decoder_hidden = 256;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn encode_gives_one_annotation_per_token() {
        let m = tiny(ReprMode::CombineMul, 1);
        let mut tape = Tape::new(&m.params);
        let src = m.prepare_source(&words("the cat sat"));
        let enc = m.encode(&mut tape, &src).unwrap();
        assert_eq!(enc.annotations.len(), 3);
        for a in &enc.annotations {
            assert_eq!(tape.value(*a).numel(), 8);
        }
        let one = m.prepare_source(&words("dog"));
        assert_eq!(m.encode(&mut tape, &one).unwrap().annotations.len(), 1);
        assert!(m.encode(&mut tape, &[]).is_err());
    }

    #[test]
    fn repeated_token_gets_position_specific_annotations() {
        let m = tiny(ReprMode::Word, 2);
        let mut tape = Tape::new(&m.params);
        let src = m.prepare_source(&words("the cat the dog"));
        let enc = m.encode(&mut tape, &src).unwrap();
        assert_ne!(
            tape.value(enc.annotations[0]).data(),
            tape.value(enc.annotations[2]).data()
        );
    }

    #[test]
    fn decoder_init_copies_final_states() {
        let m = tiny(ReprMode::WordCharCnn, 3);
        let mut tape = Tape::new(&m.params);
        let src = m.prepare_source(&words("a dog ran"));
        let enc = m.encode(&mut tape, &src).unwrap();
        let st = m.decoder_init(&mut tape, &enc).unwrap();
        let h = tape.value(st.h).data();
        assert_eq!(h.len(), 8);
        assert_eq!(&h[..4], tape.value(enc.final_forward).data());
        assert_eq!(&h[4..], tape.value(enc.final_backward).data());
        assert!(tape.value(st.c).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_model_is_uniform() {
        let mut m = tiny(ReprMode::WordCharBiLstm, 4);
        for id in m.params.ids().collect::<Vec<_>>() {
            m.params.get_mut(id).data_mut().fill(0.0);
        }
        let mut tape = Tape::new(&m.params);
        let src = m.prepare_source(&words("the cat"));
        let enc = m.encode(&mut tape, &src).unwrap();
        let st = m.decoder_init(&mut tape, &enc).unwrap();
        assert!(tape.value(st.h).data().iter().all(|v| *v == 0.0));
        let (logits, _) = m.decode_step(&mut tape, st, BOS, &enc).unwrap();
        let l = tape.value(logits).data();
        assert_eq!(l.len(), m.tgt_vocab.len());
        assert!(l.iter().all(|v| *v == l[0]));
        let tgt = m.target_ids(&words("kucing itu"));
        let loss = m.sentence_loss(&mut tape, &src, &tgt).unwrap();
        let v = m.tgt_vocab.len() as f64;
        assert!((tape.value(loss).data()[0] - v.ln()).abs() < 1e-12);
    }

    #[test]
    fn different_previous_tokens_change_logits() {
        let m = tiny(ReprMode::CombineAdd, 5);
        let mut tape = Tape::new(&m.params);
        let src = m.prepare_source(&words("the dog sat"));
        let enc = m.encode(&mut tape, &src).unwrap();
        let st = m.decoder_init(&mut tape, &enc).unwrap();
        let (a, _) = m.decode_step(&mut tape, st, 4, &enc).unwrap();
        let (b, _) = m.decode_step(&mut tape, st, 5, &enc).unwrap();
        assert_ne!(tape.value(a).data(), tape.value(b).data());
        assert!(m.decode_step(&mut tape, st, 99, &enc).is_err());
    }

    #[test]
    fn loss_is_mean_of_step_log_probs() {
        let m = tiny(ReprMode::CombineAvg, 6);
        let src = m.prepare_source(&words("the cat sat"));
        let tgt = m.target_ids(&words("kucing itu duduk"));
        let mut tape = Tape::new(&m.params);
        let loss = m.sentence_loss(&mut tape, &src, &tgt).unwrap();
        let loss = tape.value(loss).data()[0];
        assert!(loss >= 0.0);

        let mut s = m.session(&src).unwrap();
        let mut state = s.initial_state().unwrap();
        let mut prev = BOS;
        let mut prob = 1.0;
        for &gold in tgt.iter().chain([EOS].iter()) {
            let (lp, next) = s.step(&state, prev).unwrap();
            prob *= lp[gold].exp();
            state = next;
            prev = gold;
        }
        let n = (tgt.len() + 1) as f64;
        assert!(((-loss * n).exp() - prob).abs() < 1e-9);
        assert!(m.sentence_loss(&mut tape, &src, &[]).is_err());
    }

    #[test]
    fn session_is_deterministic() {
        let m = tiny(ReprMode::WordCharCnn, 7);
        let src = m.prepare_source(&words("a dog"));
        let run = || {
            let mut s = m.session(&src).unwrap();
            let st = s.initial_state().unwrap();
            s.step(&st, BOS).unwrap().0
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn oov_words_keep_spelling_specific_char_half() {
        let m = tiny(ReprMode::WordCharBiLstm, 8);
        let mut tape = Tape::new(&m.params);
        let a = m.prepare_source(&words("zebra"));
        let b = m.prepare_source(&words("yak"));
        assert_eq!(a[0].word, data::UNK);
        let va = m.word_vector(&mut tape, &a[0]).unwrap();
        let vb = m.word_vector(&mut tape, &b[0]).unwrap();
        let (va, vb) = (tape.value(va).data(), tape.value(vb).data());
        assert_eq!(va.len(), 12);
        assert_eq!(&va[..6], &vb[..6]);
        assert_ne!(&va[6..], &vb[6..]);
    }

    #[test]
    fn frozen_word_embeddings_get_no_gradient() {
        let mut cfg = ModelConfig::tiny(ReprMode::Word);
        cfg.train_word_embeddings = false;
        let m = Seq2Seq::for_corpus(cfg, &corpus(), 9).unwrap();
        let src = m.prepare_source(&words("the cat"));
        let tgt = m.target_ids(&words("itu"));
        let mut tape = Tape::new(&m.params);
        let loss = m.sentence_loss(&mut tape, &src, &tgt).unwrap();
        let mut g = Gradients::zeros_like(&m.params);
        tape.backward(loss, &mut g).unwrap();
        assert!(g.get(m.layout.src_embed.matrix).iter().all(|v| *v == 0.0));
        assert!(g.get(m.layout.decoder.w).iter().any(|v| *v != 0.0));
    }
}
