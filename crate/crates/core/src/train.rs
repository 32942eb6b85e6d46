//! Adam optimization, the epoch loop and best-model retention.

use std::ops::ControlFlow;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::bleu::{corpus_bleu, BleuOptions};
use crate::checkpoint::Checkpoint;
use crate::data::ParallelCorpus;
use crate::decode::{greedy_decode, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::params::{Gradients, ParamStore};
use crate::seq2seq::Seq2Seq;

/// Adam with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub const DEFAULT_LR: f64 = 0.001;

    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let zeros = || params.iter().map(|(_, _, t)| vec![0.0; t.numel()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update and clears `grads`. A non-finite gradient aborts
    /// before any parameter changes.
    pub fn step(&mut self, params: &mut ParamStore, grads: &mut Gradients) -> Result<()> {
        if let Some(id) = grads.first_non_finite() {
            return Err(Error::NonFiniteGradient {
                param: params.name(id).to_string(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 / (1.0 - self.beta1.powi(t));
        let c2 = 1.0 / (1.0 - self.beta2.powi(t));
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for id in params.ids().collect::<Vec<_>>() {
            let g = grads.get_mut(id);
            let p = params.get_mut(id).data_mut();
            let m = &mut self.m[id.index()];
            let v = &mut self.v[id.index()];
            for (((p, g), m), v) in p.iter_mut().zip(g.iter_mut()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * *g;
                *v = b2 * *v + (1.0 - b2) * *g * *g;
                *p -= lr * (*m * c1) / ((*v * c2).sqrt() + eps);
                *g = 0.0;
            }
        }
        Ok(())
    }
}

/// Rescales `grads` so their global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub eval_every: usize,
    pub seed: u64,
    pub max_decode_len: usize,
    pub smooth_dev_bleu: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            lr: Adam::DEFAULT_LR,
            batch_size: 1,
            clip_norm: 5.0,
            eval_every: 5,
            seed: 0,
            max_decode_len: DEFAULT_MAX_LEN,
            smooth_dev_bleu: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config("batch_size and eval_every must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("lr and clip_norm must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dev_bleu: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn best_bleu(&self) -> Option<f64> {
        self.epochs.iter().find(|r| r.epoch == self.best_epoch)?.dev_bleu
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|r| r.loss).collect()
    }

    /// Line-oriented JSON, one record per epoch.
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Greedy-decodes every dev source and scores the corpus.
pub fn dev_bleu(model: &Seq2Seq, dev: &ParallelCorpus, max_len: usize, smooth: bool) -> Result<f64> {
    let mut hyps = Vec::with_capacity(dev.len());
    for pair in &dev.pairs {
        let src = model.prepare_source(&pair.source);
        let mut session = model.session(&src)?;
        let ids = greedy_decode(&mut session, max_len)?;
        hyps.push(model.tgt_vocab.decode(&ids));
    }
    let refs: Vec<Vec<String>> = dev.targets().cloned().collect();
    Ok(corpus_bleu(&hyps, &refs, BleuOptions { smooth })?.bleu)
}

/// One gradient of the mean loss over `pairs`, accumulated into `grads`.
/// Returns the summed sentence losses.
fn accumulate(model: &Seq2Seq, corpus: &ParallelCorpus, batch: &[usize], grads: &mut Gradients) -> Result<f64> {
    let mut total = 0.0;
    for &i in batch {
        let pair = &corpus.pairs[i];
        let src = model.prepare_source(&pair.source);
        let tgt = model.target_ids(&pair.target);
        let mut tape = Tape::new(&model.params);
        let loss = model.sentence_loss(&mut tape, &src, &tgt)?;
        total += tape.value(loss).data()[0];
        tape.backward(loss, grads)?;
    }
    if batch.len() > 1 {
        grads.scale(1.0 / batch.len() as f64);
    }
    Ok(total)
}

/// The training order for `epoch`, a permutation fixed by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

pub fn train(model: Seq2Seq, corpus: &ParallelCorpus, dev: &ParallelCorpus, config: &TrainConfig) -> Result<(Checkpoint, TrainReport)> {
    train_with(model, corpus, dev, config, |_| ControlFlow::Continue(()))
}

/// Trains for up to `max_epochs`, evaluating dev BLEU every `eval_every`
/// epochs and after the last one, and returns the checkpoint with the best
/// dev BLEU (earliest on ties; the last epoch when nothing was evaluated).
///
/// `observer` sees each epoch's record and may stop training early.
pub fn train_with<F>(
    mut model: Seq2Seq,
    corpus: &ParallelCorpus,
    dev: &ParallelCorpus,
    config: &TrainConfig,
    mut observer: F,
) -> Result<(Checkpoint, TrainReport)>
where
    F: FnMut(&EpochRecord) -> ControlFlow<()>,
{
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let mut opt = Adam::new(&model.params, config.lr);
    let mut grads = Gradients::zeros_like(&model.params);
    let mut report = TrainReport::default();
    let mut best: Option<(f64, usize, ParamStore)> = None;

    for epoch in 1..=config.max_epochs {
        let start = Instant::now();
        let order = epoch_order(corpus.len(), config.seed, epoch);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            loss_sum += accumulate(&model, corpus, batch, &mut grads)?;
            clip_global_norm(&mut grads, config.clip_norm);
            opt.step(&mut model.params, &mut grads)?;
        }
        let evaluate = !dev.is_empty() && (epoch % config.eval_every == 0 || epoch == config.max_epochs);
        let bleu = if evaluate {
            Some(dev_bleu(&model, dev, config.max_decode_len, config.smooth_dev_bleu)?)
        } else {
            None
        };
        if let Some(b) = bleu {
            if best.as_ref().is_none_or(|(bb, _, _)| b > *bb) {
                best = Some((b, epoch, model.params.clone()));
            }
        }
        let record = EpochRecord {
            epoch,
            loss: loss_sum / corpus.len() as f64,
            dev_bleu: bleu,
            seconds: start.elapsed().as_secs_f64(),
        };
        let flow = observer(&record);
        report.epochs.push(record);
        if flow.is_break() {
            break;
        }
    }

    let last = report.epochs.last().map_or(0, |r| r.epoch);
    let (epoch, dev_bleu) = match best {
        Some((b, e, params)) => {
            model.params = params;
            (e, Some(b))
        }
        None => (last, None),
    };
    report.best_epoch = epoch;
    Ok((Checkpoint { model, epoch, dev_bleu }, report))
}
