//! Binary model checkpoints.
//!
//! Layout: 8 magic bytes, a little-endian `u64` header length, a JSON
//! header, then every tensor's values as little-endian `f64` in header
//! order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::repr::CharVocab;
use crate::seq2seq::{ModelConfig, Seq2Seq};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"WCNMTCK\x01";
pub const FORMAT_VERSION: u32 = 1;

/// A model together with the epoch it was taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Seq2Seq,
    pub epoch: usize,
    pub dev_bleu: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabHeader {
    tokens: Vec<String>,
    freqs: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format_version: u32,
    pub mode: String,
    pub input_dim: usize,
    pub config: ModelConfig,
    src_vocab: VocabHeader,
    tgt_vocab: VocabHeader,
    char_vocab: Vec<char>,
    pub epoch: usize,
    pub dev_bleu: Option<f64>,
    tensors: Vec<TensorHeader>,
}

fn corrupt(section: &str, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        section: section.to_string(),
        message: message.into(),
    }
}

fn vocab_header(v: &Vocabulary) -> VocabHeader {
    VocabHeader {
        tokens: v.tokens().to_vec(),
        freqs: v.freqs().to_vec(),
    }
}

impl Checkpoint {
    pub fn header(&self) -> Header {
        let m = &self.model;
        Header {
            format_version: FORMAT_VERSION,
            mode: m.mode().name().to_string(),
            input_dim: m.config.input_dim(),
            config: m.config.clone(),
            src_vocab: vocab_header(&m.src_vocab),
            tgt_vocab: vocab_header(&m.tgt_vocab),
            char_vocab: m.char_vocab.chars().to_vec(),
            epoch: self.epoch,
            dev_bleu: self.dev_bleu,
            tensors: m
                .params
                .iter()
                .map(|(_, name, t)| TensorHeader {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + 8 * self.model.params.num_scalars());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, _, t) in self.model.params.iter() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, body) = split_header(bytes)?;
        let src_vocab = Vocabulary::from_tokens(header.src_vocab.tokens, Some(header.src_vocab.freqs))
            .map_err(|e| corrupt("src_vocab", e.to_string()))?;
        let tgt_vocab = Vocabulary::from_tokens(header.tgt_vocab.tokens, Some(header.tgt_vocab.freqs))
            .map_err(|e| corrupt("tgt_vocab", e.to_string()))?;
        let char_vocab = CharVocab::from_chars(header.char_vocab);
        if header.config.mode().name() != header.mode {
            return Err(corrupt("mode", format!("{} disagrees with config", header.mode)));
        }
        let mut model = Seq2Seq::new(header.config, src_vocab, tgt_vocab, char_vocab, 0)
            .map_err(|e| corrupt("config", e.to_string()))?;

        let ids: Vec<_> = model.params.ids().collect();
        if ids.len() != header.tensors.len() {
            return Err(corrupt(
                "tensors",
                format!("expected {} tensors, header lists {}", ids.len(), header.tensors.len()),
            ));
        }
        let mut offset = 0;
        for (id, th) in ids.into_iter().zip(&header.tensors) {
            let name = model.params.name(id);
            if name != th.name || model.params.get(id).shape() != th.shape.as_slice() {
                return Err(corrupt(
                    "tensors",
                    format!("{} {:?} where {} {:?} was expected", th.name, th.shape, name, model.params.get(id).shape()),
                ));
            }
            let n: usize = th.shape.iter().product();
            let end = offset + 8 * n;
            let chunk = body
                .get(offset..end)
                .ok_or_else(|| corrupt("data", format!("truncated inside tensor {}", th.name)))?;
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            *model.params.get_mut(id) = Tensor::new(&th.shape, values).map_err(|e| corrupt("data", e.to_string()))?;
            offset = end;
        }
        if offset != body.len() {
            return Err(corrupt("data", format!("{} trailing bytes", body.len() - offset)));
        }
        Ok(Self {
            model,
            epoch: header.epoch,
            dev_bleu: header.dev_bleu,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Reads only the header of a checkpoint.
pub fn read_header(path: &Path) -> Result<Header> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(split_header(&bytes)?.0)
}

fn split_header(bytes: &[u8]) -> Result<(Header, &[u8])> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(corrupt("magic", "not a checkpoint file"));
    }
    let len_bytes: [u8; 8] = bytes
        .get(8..16)
        .ok_or_else(|| corrupt("header_length", "file ends before header length"))?
        .try_into()
        .expect("8 bytes");
    let len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| corrupt("header_length", "too large"))?;
    let raw = bytes
        .get(16..16usize.saturating_add(len))
        .ok_or_else(|| corrupt("header", "file ends inside header"))?;
    let header: Header = serde_json::from_slice(raw).map_err(|e| corrupt("header", e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(corrupt("header", format!("unsupported format version {}", header.format_version)));
    }
    Ok((header, &bytes[16 + len..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ParallelCorpus;
    use crate::repr::ReprMode;

    fn checkpoint(mode: ReprMode) -> Checkpoint {
        let c = ParallelCorpus::from_lines([("saya makan nasi", "i eat rice")], 50).0;
        Checkpoint {
            model: Seq2Seq::for_corpus(ModelConfig::tiny(mode), &c, 9).unwrap(),
            epoch: 7,
            dev_bleu: Some(41.5),
        }
    }

    fn section(e: Error) -> String {
        match e {
            Error::Checkpoint { section, .. } => section,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for mode in ReprMode::ALL {
            let ck = checkpoint(mode);
            let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
            assert_eq!(back, ck);
            for ((_, _, a), (_, _, b)) in ck.model.params.iter().zip(back.model.params.iter()) {
                let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(a), bits(b));
            }
        }
    }

    #[test]
    fn header_records_mode_and_input_dim() {
        let h = checkpoint(ReprMode::CombineMul).header();
        assert_eq!(h.mode, "wordchar_combine_mul");
        assert_eq!(h.input_dim, 12);
    }

    #[test]
    fn truncation_is_reported() {
        let bytes = checkpoint(ReprMode::WordCharCnn).to_bytes();
        assert_eq!(section(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err()), "data");
        assert_eq!(section(Checkpoint::from_bytes(&bytes[..40]).unwrap_err()), "header");
        assert_eq!(section(Checkpoint::from_bytes(&bytes[..12]).unwrap_err()), "header_length");
        assert_eq!(section(Checkpoint::from_bytes(b"nope").unwrap_err()), "magic");
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(section(Checkpoint::from_bytes(&extra).unwrap_err()), "data");
    }

    #[test]
    fn corrupt_header_names_section() {
        let mut bytes = checkpoint(ReprMode::Word).to_bytes();
        bytes[17] = b'#';
        assert_eq!(section(Checkpoint::from_bytes(&bytes).unwrap_err()), "header");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ck = checkpoint(ReprMode::WordCharBiLstm);
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        assert_eq!(read_header(&path).unwrap().epoch, 7);
    }
}
