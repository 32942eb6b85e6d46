//! Central finite-difference checks of tape gradients.

use crate::autodiff::{Tape, Var};
use crate::data::ParallelCorpus;
use crate::error::{Result as CrateResult, TensorError};
use crate::params::{Gradients, ParamStore};
use crate::repr::ReprMode;
use crate::seq2seq::{ModelConfig, Seq2Seq};

pub const SUITE_EPS: f64 = 1e-5;
pub const SUITE_TOLERANCE: f64 = 1e-4;

/// Worst disagreement observed for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupError {
    pub name: String,
    pub numel: usize,
    /// `max |analytic - numeric| / max(1, |analytic|)` over the tensor.
    pub max_rel_error: f64,
}

/// Compares reverse-mode gradients of `loss_fn` with central differences
/// of step `eps`, for every scalar of every parameter in `params`.
pub fn check_gradients<F>(
    params: &ParamStore,
    eps: f64,
    loss_fn: F,
) -> Result<Vec<GroupError>, TensorError>
where
    F: Fn(&mut Tape) -> Result<Var, TensorError>,
{
    let mut analytic = Gradients::zeros_like(params);
    {
        let mut tape = Tape::new(params);
        let loss = loss_fn(&mut tape)?;
        tape.backward(loss, &mut analytic)?;
    }

    let eval = |store: &ParamStore| -> Result<f64, TensorError> {
        let mut tape = Tape::new(store);
        let loss = loss_fn(&mut tape)?;
        Ok(tape.value(loss).data()[0])
    };

    let mut probe = params.clone();
    let mut report = Vec::with_capacity(params.len());
    for id in params.ids() {
        let n = params.get(id).numel();
        let mut worst = 0.0f64;
        for k in 0..n {
            let orig = probe.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = orig + eps;
            let plus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig - eps;
            let minus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.get(id)[k];
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
        report.push(GroupError {
            name: params.name(id).to_string(),
            numel: n,
            max_rel_error: worst,
        });
    }
    Ok(report)
}

/// Result of checking a whole tiny model.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub mode: ReprMode,
    pub groups: Vec<GroupError>,
}

impl SuiteReport {
    pub fn worst(&self) -> Option<&GroupError> {
        self.groups.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }

    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.max_rel_error < SUITE_TOLERANCE)
    }
}

/// Checks every parameter of a tiny translation model in `mode` on a fixed
/// two-sentence batch that includes a one-letter word and an unknown word.
pub fn model_suite(mode: ReprMode, seed: u64) -> CrateResult<SuiteReport> {
    let corpus = ParallelCorpus::from_lines([("saya makan nasi", "i eat rice"), ("a ibu", "mother")], 50).0;
    let model = Seq2Seq::for_corpus(ModelConfig::tiny(mode), &corpus, seed)?;
    let batch: Vec<_> = [("saya makan a", "i eat"), ("nasi goreng", "rice mother")]
        .into_iter()
        .map(|(s, t)| {
            let src: Vec<String> = s.split(' ').map(String::from).collect();
            let tgt: Vec<String> = t.split(' ').map(String::from).collect();
            (model.prepare_source(&src), model.target_ids(&tgt))
        })
        .collect();
    let groups = check_gradients(&model.params, SUITE_EPS, |tape| {
        let losses = batch
            .iter()
            .map(|(s, t)| model.sentence_loss(tape, s, t))
            .collect::<Result<Vec<_>, _>>()?;
        tape.add_all(&losses)
    })?;
    Ok(SuiteReport { mode, groups })
}
