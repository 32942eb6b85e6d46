//! Greedy decoding and width-k beam search.

use std::cmp::Ordering;

use crate::data::{BOS, EOS};
use crate::error::TensorError;

type TResult<T> = std::result::Result<T, TensorError>;

/// Default bound on generated length.
pub const DEFAULT_MAX_LEN: usize = 50;
pub const MAX_BEAM_WIDTH_TESTED: usize = 10;

/// Anything that can score the next target token given a decoder state.
pub trait StepModel {
    type State: Clone;

    fn vocab_size(&self) -> usize;

    fn initial_state(&mut self) -> TResult<Self::State>;

    /// Log-probabilities over the target vocabulary after `prev`, and the
    /// following state.
    fn step(&mut self, state: &Self::State, prev: usize) -> TResult<(Vec<f64>, Self::State)>;
}

/// Repeatedly emits the most probable token (lowest id on ties) until
/// `</s>` or `max_len` tokens. The result excludes `<s>` and `</s>`.
pub fn greedy_decode<M: StepModel>(model: &mut M, max_len: usize) -> TResult<Vec<usize>> {
    let mut state = model.initial_state()?;
    let mut prev = BOS;
    let mut out = Vec::new();
    for _ in 0..max_len {
        let (logp, next) = model.step(&state, prev)?;
        let best = argmax(&logp);
        if best == EOS {
            break;
        }
        out.push(best);
        state = next;
        prev = best;
    }
    Ok(out)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis<S> {
    /// Emitted ids, ending with `</s>` when finished.
    pub tokens: Vec<usize>,
    pub logprob: f64,
    pub state: S,
    pub finished: bool,
}

impl<S> Hypothesis<S> {
    /// Tokens without the closing `</s>`.
    pub fn output(&self) -> &[usize] {
        match self.tokens.last() {
            Some(&EOS) if self.finished => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }
}

/// Higher score first, then shorter, then lexicographically smaller ids.
fn rank<S>(a: &Hypothesis<S>, b: &Hypothesis<S>, score: impl Fn(&Hypothesis<S>) -> f64) -> Ordering {
    score(b)
        .total_cmp(&score(a))
        .then(a.tokens.len().cmp(&b.tokens.len()))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamConfig {
    pub width: usize,
    pub max_len: usize,
    /// Completed hypotheses are ranked by `logprob / len^alpha`; 0 ranks by
    /// raw log-probability.
    pub length_alpha: f64,
}

impl BeamConfig {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            max_len: DEFAULT_MAX_LEN,
            length_alpha: 0.0,
        }
    }
}

/// A finished translation candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub tokens: Vec<usize>,
    pub logprob: f64,
}

/// Beam search over the full vocabulary.
///
/// Each step expands every live hypothesis by every token and keeps the
/// best `width` expansions. Expansions ending in `</s>` move to the pool
/// of completed hypotheses. Search stops once the pool holds `width`
/// entries whose worst log-probability is at least the best live one, when
/// nothing is live, or after `max_len` steps; hypotheses still live at that
/// point join the pool unfinished. Returns up to `width` results, best first.
pub fn beam_search<M: StepModel>(model: &mut M, config: &BeamConfig) -> TResult<Vec<Scored>> {
    let k = config.width;
    if k < 1 {
        return Err(TensorError::Index {
            op: "beam_search",
            index: 0,
            bound: 1,
        });
    }
    let alpha = config.length_alpha;
    let final_score = move |h: &Hypothesis<M::State>| {
        if alpha == 0.0 {
            h.logprob
        } else {
            h.logprob / (h.tokens.len().max(1) as f64).powf(alpha)
        }
    };

    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        logprob: 0.0,
        state: model.initial_state()?,
        finished: false,
    }];
    let mut pool: Vec<Hypothesis<M::State>> = Vec::new();

    for _ in 0..config.max_len {
        let mut candidates = Vec::with_capacity(live.len() * model.vocab_size());
        for hyp in &live {
            let prev = hyp.tokens.last().copied().unwrap_or(BOS);
            let (logp, next) = model.step(&hyp.state, prev)?;
            for (tok, lp) in logp.iter().enumerate() {
                let mut tokens = hyp.tokens.clone();
                tokens.push(tok);
                candidates.push(Hypothesis {
                    tokens,
                    logprob: hyp.logprob + lp,
                    state: next.clone(),
                    finished: tok == EOS,
                });
            }
        }
        candidates.sort_by(|a, b| rank(a, b, |h| h.logprob));
        candidates.truncate(k);
        live.clear();
        for c in candidates {
            if c.finished {
                pool.push(c);
            } else {
                live.push(c);
            }
        }
        pool.sort_by(|a, b| rank(a, b, final_score));
        pool.truncate(k);

        let best_live = live.first().map(|h| h.logprob);
        match best_live {
            None => break,
            Some(best) if alpha == 0.0 && pool.len() == k => {
                if pool[k - 1].logprob >= best {
                    break;
                }
            }
            _ => {}
        }
    }
    pool.append(&mut live);
    pool.sort_by(|a, b| rank(a, b, final_score));
    pool.truncate(k);
    Ok(pool
        .into_iter()
        .map(|h| Scored {
            tokens: h.output().to_vec(),
            logprob: h.logprob,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Next-token log-probabilities depend on the previous token and the
    /// number of steps taken.
    struct TableModel {
        table: Vec<Vec<Vec<f64>>>,
    }

    impl TableModel {
        fn random(vocab: usize, depth: usize, seed: u64) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = (0..depth)
                .map(|_| {
                    (0..vocab)
                        .map(|_| {
                            let logits: Vec<f64> = (0..vocab).map(|_| rng.random_range(-2.0..2.0)).collect();
                            crate::autodiff::log_softmax_slice(&logits)
                        })
                        .collect()
                })
                .collect();
            Self { table }
        }
    }

    impl StepModel for TableModel {
        type State = usize;

        fn vocab_size(&self) -> usize {
            self.table[0].len()
        }

        fn initial_state(&mut self) -> TResult<usize> {
            Ok(0)
        }

        fn step(&mut self, t: &usize, prev: usize) -> TResult<(Vec<f64>, usize)> {
            let depth = (*t).min(self.table.len() - 1);
            Ok((self.table[depth][prev].clone(), t + 1))
        }
    }

    fn brute_force(model: &mut TableModel, max_len: usize) -> f64 {
        fn go(m: &mut TableModel, t: usize, prev: usize, lp: f64, max_len: usize, best: &mut f64) {
            if t == max_len {
                *best = best.max(lp);
                return;
            }
            let (logp, _) = m.step(&t, prev).unwrap();
            for (tok, l) in logp.iter().enumerate() {
                if tok == EOS {
                    *best = best.max(lp + l);
                } else {
                    go(m, t + 1, tok, lp + l, max_len, best);
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        go(model, 0, BOS, 0.0, max_len, &mut best);
        best
    }

    #[test]
    fn always_eos_gives_empty_output() {
        let mut m = TableModel {
            table: vec![vec![vec![-5.0, -5.0, -0.01, -5.0]; 4]],
        };
        assert!(greedy_decode(&mut m, 10).unwrap().is_empty());
        let beam = beam_search(&mut m, &BeamConfig::new(3)).unwrap();
        assert!(beam[0].tokens.is_empty());
    }

    #[test]
    fn greedy_respects_max_len() {
        let mut m = TableModel {
            table: vec![vec![vec![-5.0, -5.0, -5.0, -0.01]; 4]],
        };
        assert_eq!(greedy_decode(&mut m, 3).unwrap(), vec![3, 3, 3]);
    }

    #[test]
    fn width_zero_is_rejected() {
        let mut m = TableModel::random(4, 3, 0);
        assert!(beam_search(&mut m, &BeamConfig::new(0)).is_err());
    }

    #[test]
    fn width_one_equals_greedy() {
        for seed in 0..100 {
            let mut m = TableModel::random(6, 5, seed);
            let g = greedy_decode(&mut m, 6).unwrap();
            let b = beam_search(
                &mut m,
                &BeamConfig {
                    width: 1,
                    max_len: 6,
                    length_alpha: 0.0,
                },
            )
            .unwrap();
            assert_eq!(b[0].tokens, g, "seed {seed}");
        }
    }

    #[test]
    fn wide_beam_matches_enumeration() {
        for seed in 0..40 {
            let mut m = TableModel::random(4, 3, 100 + seed);
            let best = brute_force(&mut m, 3);
            let b = beam_search(
                &mut m,
                &BeamConfig {
                    width: 64,
                    max_len: 3,
                    length_alpha: 0.0,
                },
            )
            .unwrap();
            assert_eq!(b[0].logprob, best);
        }
    }

    #[test]
    fn results_sorted_and_width_monotone() {
        for seed in 0..30 {
            let mut m = TableModel::random(5, 4, 200 + seed);
            let mut prev_best = f64::NEG_INFINITY;
            for k in 1..=10 {
                let cfg = BeamConfig {
                    width: k,
                    max_len: 4,
                    length_alpha: 0.0,
                };
                let b = beam_search(&mut m, &cfg).unwrap();
                assert!(b.len() <= k);
                for w in b.windows(2) {
                    assert!(w[0].logprob >= w[1].logprob);
                }
                assert!(b[0].logprob >= prev_best - 1e-12, "seed {seed} k {k}");
                prev_best = b[0].logprob;
            }
        }
    }

    #[test]
    fn length_normalization_ranks_by_normalized_score() {
        let mut m = TableModel::random(5, 4, 7);
        let cfg = BeamConfig {
            width: 5,
            max_len: 4,
            length_alpha: 1.0,
        };
        let b = beam_search(&mut m, &cfg).unwrap();
        assert!(!b.is_empty());
        assert!(b.iter().all(|s| s.logprob <= 0.0));
        // Finished hypotheses count their </s> in the length.
        let norm = |s: &Scored| {
            let len = if s.tokens.len() < 4 { s.tokens.len() + 1 } else { s.tokens.len() };
            s.logprob / len as f64
        };
        for w in b.windows(2) {
            assert!(norm(&w[0]) >= norm(&w[1]));
        }
    }
}
