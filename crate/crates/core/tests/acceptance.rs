//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.
//!
//! `ACCEPTANCE_ONLY=1,3,5` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wordchar_nmt::autodiff::log_softmax_slice;
use wordchar_nmt::bleu::{corpus_bleu, modified_precision, BleuOptions};
use wordchar_nmt::data::{ParallelCorpus, SentencePair, Vocabulary, EOS};
use wordchar_nmt::decode::{beam_search, greedy_decode, BeamConfig, StepModel};
use wordchar_nmt::gradcheck::{model_suite, SUITE_TOLERANCE};
use wordchar_nmt::repr::{combine, CharVocab, CombineOp, SourceWord};
use wordchar_nmt::synthetic::{copy_corpus, reversal_corpus, SyntheticSpec};
use wordchar_nmt::train::{train_with, TrainConfig, TrainReport};
use wordchar_nmt::{Checkpoint, ModelConfig, ReprMode, Seq2Seq, Tape, Tensor, TensorError};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {t:.1?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- 1

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut groups = 0;
    for mode in ReprMode::ALL {
        let report = model_suite(mode, 0).map_err(|e| format!("{mode}: {e}"))?;
        let w = report.worst().ok_or_else(|| format!("{mode}: no parameters"))?;
        ensure(report.passed(), || format!("{mode}: {} has relative error {:.3e}", w.name, w.max_rel_error))?;
        worst = worst.max(w.max_rel_error);
        groups += report.groups.len();
    }
    within(start, Duration::from_secs(120), "gradient suite")?;
    Ok(format!(
        "{groups} parameter tensors over 6 modes, worst {worst:.2e} < {SUITE_TOLERANCE:e}"
    ))
}

// ---------------------------------------------------------------- 2

/// Log-probabilities indexed by step and previous token.
struct Table {
    rows: Vec<Vec<Vec<f64>>>,
}

impl Table {
    fn random(vocab: usize, depth: usize, rng: &mut ChaCha8Rng) -> Self {
        let rows = (0..depth)
            .map(|_| {
                (0..vocab)
                    .map(|_| {
                        let z: Vec<f64> = (0..vocab).map(|_| rng.random_range(-3.0..3.0)).collect();
                        log_softmax_slice(&z)
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

impl StepModel for Table {
    type State = usize;
    fn vocab_size(&self) -> usize {
        self.rows[0].len()
    }
    fn initial_state(&mut self) -> Result<usize, TensorError> {
        Ok(0)
    }
    fn step(&mut self, t: &usize, prev: usize) -> Result<(Vec<f64>, usize), TensorError> {
        Ok((self.rows[(*t).min(self.rows.len() - 1)][prev].clone(), t + 1))
    }
}

/// Best complete output over every sequence that either ends in `</s>` within
/// `max_len` steps or runs the full `max_len` steps without it.
fn enumerate_best<M: StepModel>(model: &mut M, max_len: usize) -> (Vec<usize>, f64) {
    fn go<M: StepModel>(m: &mut M, s: &M::State, prefix: &mut Vec<usize>, lp: f64, max_len: usize, best: &mut (Vec<usize>, f64)) {
        let prev = prefix.last().copied().unwrap_or(wordchar_nmt::data::BOS);
        let (logp, next) = m.step(s, prev).unwrap();
        for (tok, l) in logp.iter().enumerate() {
            let total = lp + l;
            if tok == EOS || prefix.len() + 1 == max_len {
                let mut out = prefix.clone();
                if tok != EOS {
                    out.push(tok);
                }
                if total > best.1 {
                    *best = (out, total);
                }
            } else {
                prefix.push(tok);
                go(m, &next, prefix, total, max_len, best);
                prefix.pop();
            }
        }
    }
    let init = model.initial_state().unwrap();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    go(model, &init, &mut Vec::new(), 0.0, max_len, &mut best);
    best
}

/// A tiny random translation model whose target vocabulary has `4 + extra`
/// entries, with one fixed source sentence.
fn tiny_seq2seq(extra: usize, seed: u64) -> (Seq2Seq, Vec<SourceWord>) {
    let tgt: Vec<String> = (0..extra).map(|i| format!("t{i}")).collect();
    let src: Vec<String> = ["ab", "c", "dd"].iter().map(|s| s.to_string()).collect();
    let corpus = ParallelCorpus::from_tokenized([SentencePair { source: src.clone(), target: tgt }], 50).0;
    let mode = ReprMode::ALL[seed as usize % 6];
    let model = Seq2Seq::for_corpus(ModelConfig::tiny(mode), &corpus, seed).unwrap();
    let prepared = model.prepare_source(&src);
    (model, prepared)
}

fn compare_with_enumeration<M: StepModel>(model: &mut M, max_len: usize, label: &str) -> Result<(), String> {
    let width = model.vocab_size().pow(max_len as u32);
    let beam = beam_search(model, &BeamConfig { width, max_len, length_alpha: 0.0 }).map_err(|e| e.to_string())?;
    let (tokens, logprob) = enumerate_best(model, max_len);
    ensure(beam[0].tokens == tokens && (beam[0].logprob - logprob).abs() <= 1e-9, || {
        format!("{label}: beam {:?} {} vs enumeration {tokens:?} {logprob}", beam[0].tokens, beam[0].logprob)
    })
}

fn beam_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut models = 0;
    for i in 0..40 {
        let vocab = rng.random_range(3..=5);
        let max_len = rng.random_range(1..=4);
        let mut t = Table::random(vocab, max_len, &mut rng);
        compare_with_enumeration(&mut t, max_len, &format!("table model {i} (V={vocab}, max_len={max_len})"))?;
        models += 1;
    }
    for seed in 0..20 {
        let (model, src) = tiny_seq2seq(1, seed);
        let max_len = 1 + (seed as usize % 4);
        let mut session = model.session(&src).map_err(|e| e.to_string())?;
        compare_with_enumeration(&mut session, max_len, &format!("seq2seq model seed {seed} ({})", model.mode()))?;
        models += 1;
    }

    let mut greedy_cases = 0;
    for i in 0..100 {
        let max_len = rng.random_range(1..=8);
        let (g, b) = if i % 2 == 0 {
            let vocab = rng.random_range(3..=6);
            let mut t = Table::random(vocab, max_len, &mut rng);
            let g = greedy_decode(&mut t, max_len).unwrap();
            (g, beam_search(&mut t, &BeamConfig { width: 1, max_len, length_alpha: 0.0 }).unwrap())
        } else {
            let (model, src) = tiny_seq2seq(rng.random_range(1..=4), 1000 + i);
            let mut s = model.session(&src).unwrap();
            let g = greedy_decode(&mut s, max_len).unwrap();
            (g, beam_search(&mut s, &BeamConfig { width: 1, max_len, length_alpha: 0.0 }).unwrap())
        };
        ensure(b[0].tokens == g, || format!("case {i}: width-1 {:?} vs greedy {g:?}", b[0].tokens))?;
        greedy_cases += 1;
    }
    within(start, Duration::from_secs(60), "beam oracle")?;
    Ok(format!("{models} models match enumeration, width 1 = greedy on {greedy_cases} cases"))
}

// ---------------------------------------------------------------- 3

/// Straightforward BLEU: quadratic n-gram counting, no hashing.
fn reference_bleu(cands: &[Vec<String>], refs: &[Vec<String>]) -> f64 {
    let count = |s: &[String], g: &[String]| s.windows(g.len()).filter(|w| *w == g).count();
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=4 {
        let (mut m, mut t) = (0usize, 0usize);
        for (c, r) in cands.iter().zip(refs) {
            if c.len() < n {
                continue;
            }
            for i in 0..=c.len() - n {
                let g = &c[i..i + n];
                t += 1;
                let first = (0..i).all(|j| &c[j..j + n] != g);
                if first {
                    m += count(c, g).min(count(r, g));
                }
            }
        }
        if t == 0 {
            continue;
        }
        if m == 0 {
            return 0.0;
        }
        log_sum += (m as f64 / t as f64).ln();
        orders += 1;
    }
    let c: usize = cands.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * (log_sum / orders as f64).exp()
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn bleu_oracle() -> Outcome {
    let start = Instant::now();
    let opts = BleuOptions::default();
    let ident: Vec<Vec<String>> = ["the cat sat on the mat", "a b c d e f", "saya suka makan nasi goreng"]
        .iter()
        .map(|s| words(s))
        .collect();
    let r = corpus_bleu(&ident, &ident, opts).map_err(|e| e.to_string())?;
    ensure(r.bleu == 100.0, || format!("identity scored {}", r.bleu))?;

    let (m, t) = modified_precision(&[words("the the the the the the the")], &[words("the cat is on the mat")], 1).map_err(|e| e.to_string())?;
    ensure(m * 7 == 2 * t && t == 7, || format!("clipped precision {m}/{t}"))?;

    let bp = (1.0f64 - 4.0 / 3.0).exp();
    let r = corpus_bleu(&[words("a b c")], &[words("a b c d")], opts).map_err(|e| e.to_string())?;
    ensure((r.bp - bp).abs() < 1e-9 && (r.bleu / 100.0 - bp).abs() < 1e-9, || {
        format!("BP fixture gave bp {} bleu {}", r.bp, r.bleu)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let lex = ["a", "b", "c", "d", "e", "f"];
    let sent = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let n = rng.random_range(4..=12);
        (0..n).map(|_| lex[rng.random_range(0..lex.len())].to_string()).collect()
    };
    let mut nonzero = 0;
    for k in 0..20 {
        let n = rng.random_range(1..=6);
        let refs: Vec<Vec<String>> = (0..n).map(|_| sent(&mut rng)).collect();
        let cands: Vec<Vec<String>> = refs
            .iter()
            .map(|r| {
                let mut c = r.clone();
                for w in c.iter_mut() {
                    if rng.random_bool(0.2) {
                        *w = lex[rng.random_range(0..lex.len())].to_string();
                    }
                }
                c.truncate(rng.random_range(c.len() - 2..=c.len()));
                c
            })
            .collect();
        let got = corpus_bleu(&cands, &refs, opts).map_err(|e| e.to_string())?.bleu;
        let want = reference_bleu(&cands, &refs);
        ensure((got - want).abs() < 1e-9, || format!("random corpus {k}: {got} vs {want}"))?;
        if want > 0.0 {
            nonzero += 1;
        }
    }
    within(start, Duration::from_secs(10), "BLEU oracle")?;
    Ok(format!(
        "identity 100.00, p1 = 2/7, BP = {bp:.6}, 20 random corpora agree ({nonzero} nonzero)"
    ))
}

// ---------------------------------------------------------------- 4

struct OverfitRun {
    epoch: usize,
    bleu: f64,
    elapsed: Duration,
    checkpoint: Checkpoint,
}

fn overfit(mode: ReprMode, corpus: &ParallelCorpus) -> Result<OverfitRun, String> {
    let start = Instant::now();
    let model = Seq2Seq::for_corpus(ModelConfig::new(mode), corpus, 0).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        max_epochs: 100,
        lr: 0.001,
        batch_size: 1,
        seed: 0,
        ..TrainConfig::default()
    };
    let (ck, report) = train_with(model, corpus, corpus, &cfg, |r| match r.dev_bleu {
        Some(b) if b >= 99.0 => ControlFlow::Break(()),
        _ => ControlFlow::Continue(()),
    })
    .map_err(|e| e.to_string())?;
    Ok(OverfitRun {
        epoch: report.best_epoch,
        bleu: report.best_bleu().unwrap_or(0.0),
        elapsed: start.elapsed(),
        checkpoint: ck,
    })
}

fn end_to_end(copy_checkpoints: &mut Vec<PathBuf>, dir: &Path) -> Outcome {
    let spec = SyntheticSpec::default();
    let tasks = [("copy", copy_corpus(spec)), ("reversal", reversal_corpus(spec))];
    let mut failures = Vec::new();
    for mode in ReprMode::ALL {
        let start = Instant::now();
        for (task, corpus) in &tasks {
            match overfit(mode, corpus) {
                Ok(run) => {
                    let ok = run.bleu >= 99.0;
                    println!(
                        "    {:<22} {task:<8} dev BLEU {:6.2} at epoch {:3} ({:.0?}){}",
                        mode.name(),
                        run.bleu,
                        run.epoch,
                        run.elapsed,
                        if ok { "" } else { "  <- below 99" }
                    );
                    if !ok {
                        failures.push(format!("{mode} {task} reached only {:.2}", run.bleu));
                    }
                    if *task == "copy" {
                        let p = dir.join(format!("{}.ckpt", mode.name()));
                        run.checkpoint.save(&p).map_err(|e| e.to_string())?;
                        copy_checkpoints.push(p);
                    }
                }
                Err(e) => failures.push(format!("{mode} {task}: {e}")),
            }
        }
        if start.elapsed() > Duration::from_secs(15 * 60) {
            failures.push(format!("{mode} took {:.0?}", start.elapsed()));
        }
    }
    if failures.is_empty() {
        Ok("all 6 modes reach dev BLEU >= 99 on copy and reversal within 100 epochs".into())
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------- 5

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(1..=15);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.9) {
                rng.random_range('a'..='z')
            } else {
                ['é', 'ü', '-', '\'', 'ñ', '9'][rng.random_range(0..6)]
            }
        })
        .collect()
}

fn dimension_contract() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let known: Vec<String> = (0..50).map(|_| random_word(&mut rng)).collect();
    let src_vocab = Vocabulary::build([&known], 1);
    let tgt_vocab = Vocabulary::build([&known[..5]], 1);
    let char_vocab = CharVocab::build(known.iter().map(String::as_str));
    let mut dims = BTreeMap::new();
    for mode in ReprMode::ALL {
        let model = Seq2Seq::new(ModelConfig::new(mode), src_vocab.clone(), tgt_vocab.clone(), char_vocab.clone(), 1)
            .map_err(|e| e.to_string())?;
        let expected = if mode == ReprMode::Word { 100 } else { 200 };
        let mut tape = Tape::new(&model.params);
        for i in 0..1000 {
            let w = if i % 4 == 0 { known[i % known.len()].clone() } else { random_word(&mut rng) };
            let mark = tape.len();
            let sw = &model.prepare_source(std::slice::from_ref(&w))[0];
            let v = model.word_vector(&mut tape, sw).map_err(|e| format!("{mode} {w:?}: {e}"))?;
            let shape = tape.value(v).shape().to_vec();
            ensure(shape == [expected], || format!("{mode}: word {w:?} gave shape {shape:?}"))?;
            tape.rewind(mark);
        }
        dims.insert(mode.name(), expected);
    }
    within(start, Duration::from_secs(5), "dimension contract")?;
    Ok(format!("1000 words per mode: {dims:?}"))
}

// ---------------------------------------------------------------- 6

fn combination_algebra() -> Outcome {
    let start = Instant::now();
    let store = wordchar_nmt::ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    for i in 0..1000 {
        let mut tape = Tape::new(&store);
        let n = 100;
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let a_data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let b_data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = tape.constant(Tensor::vector(a_data).unwrap()).unwrap();
        let b = tape.constant(Tensor::vector(b_data).unwrap()).unwrap();
        let zero = tape.constant(Tensor::zeros(&[n]).unwrap()).unwrap();
        let ones = tape.constant(Tensor::filled(&[n], 1.0).unwrap()).unwrap();
        let av = bits(tape.value(a));
        let add0 = combine(&mut tape, a, zero, CombineOp::Add).unwrap();
        let avg_aa = combine(&mut tape, a, a, CombineOp::Avg).unwrap();
        let mul1 = combine(&mut tape, a, ones, CombineOp::Mul).unwrap();
        for (v, what) in [(add0, "a + 0 != a"), (avg_aa, "avg(a, a) != a"), (mul1, "a * 1 != a")] {
            ensure(bits(tape.value(v)) == av, || format!("pair {i}: {what}"))?;
        }
        for op in [CombineOp::Add, CombineOp::Avg, CombineOp::Mul] {
            let ab = combine(&mut tape, a, b, op).unwrap();
            let ba = combine(&mut tape, b, a, op).unwrap();
            ensure(bits(tape.value(ab)) == bits(tape.value(ba)), || format!("pair {i}: {op:?} not commutative"))?;
        }
    }
    within(start, Duration::from_secs(5), "combination algebra")?;
    Ok("add-zero, avg-idempotence, mul-ones and commutativity exact on 1000 pairs".into())
}

// ---------------------------------------------------------------- 7

fn determinism() -> Outcome {
    let corpus = copy_corpus(SyntheticSpec::default());
    let cfg = TrainConfig {
        max_epochs: 3,
        eval_every: 2,
        ..TrainConfig::default()
    };
    let run = || -> Result<(TrainReport, Vec<u8>), String> {
        let model = Seq2Seq::for_corpus(ModelConfig::new(ReprMode::CombineMul), &corpus, 0).map_err(|e| e.to_string())?;
        let (ck, rep) = train_with(model, &corpus, &corpus, &cfg, |_| ControlFlow::Continue(())).map_err(|e| e.to_string())?;
        Ok((rep, ck.to_bytes()))
    };
    let (ra, ca) = run()?;
    let (rb, cb) = run()?;
    let key = |r: &TrainReport| {
        r.epochs
            .iter()
            .map(|e| (e.epoch, e.loss.to_bits(), e.dev_bleu.map(f64::to_bits)))
            .collect::<Vec<_>>()
    };
    ensure(key(&ra) == key(&rb), || format!("loss logs differ: {:?} vs {:?}", ra.losses(), rb.losses()))?;
    ensure(ca == cb, || "checkpoints differ".into())?;
    Ok(format!(
        "{} epochs, identical losses {:?} and {}-byte checkpoints",
        ra.epochs.len(),
        ra.losses(),
        ca.len()
    ))
}

// ---------------------------------------------------------------- 8

fn sweep_report(checkpoints: &[PathBuf], dir: &Path) -> Outcome {
    ensure(checkpoints.len() == 6, || format!("needs the six copy-task checkpoints, have {}", checkpoints.len()))?;
    let corpus = copy_corpus(SyntheticSpec::default());
    let join = |side: Vec<&Vec<String>>| side.iter().map(|s| s.join(" ") + "\n").collect::<String>();
    let src = dir.join("copy.src");
    let tgt = dir.join("copy.tgt");
    std::fs::write(&src, join(corpus.sources().collect())).map_err(|e| e.to_string())?;
    std::fs::write(&tgt, join(corpus.targets().collect())).map_err(|e| e.to_string())?;
    let json = dir.join("sweep.json");

    let out = Command::new(env!("CARGO_BIN_EXE_wcnmt"))
        .arg("sweep")
        .arg("--checkpoints")
        .args(checkpoints)
        .arg("--src")
        .arg(&src)
        .arg("--tgt")
        .arg(&tgt)
        .arg("--widths")
        .arg("1,2,3,4,5,6,7,8,9,10")
        .arg("--json")
        .arg(&json)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    ensure(out.status.success(), || format!("sweep exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)))?;
    for line in stdout.lines() {
        println!("    {line}");
    }
    let lines: Vec<&str> = stdout.lines().collect();
    ensure(lines.len() == 7, || format!("expected header + 6 rows, got {} lines", lines.len()))?;
    ensure(lines[0] == "model | best BLEU | decoding | epoch", || format!("header {:?}", lines[0]))?;
    for (line, mode) in lines[1..].iter().zip(ReprMode::ALL) {
        let cells: Vec<&str> = line.split(" | ").collect();
        ensure(cells.len() == 4 && cells[0] == mode.label(), || format!("row {line:?}"))?;
        ensure(cells[1].parse::<f64>().is_ok() && cells[1].split('.').nth(1).map(str::len) == Some(2), || format!("score cell {line:?}"))?;
        let width: usize = cells[2]
            .strip_prefix("beam(")
            .and_then(|s| s.strip_suffix(')'))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("width cell {line:?}"))?;
        ensure((1..=10).contains(&width), || format!("width {width}"))?;
        ensure(cells[3].parse::<usize>().is_ok(), || format!("epoch cell {line:?}"))?;
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let rows = report["rows"].as_array().ok_or("json rows")?;
    ensure(rows.iter().all(|r| r["scores"].as_array().map(Vec::len) == Some(10)), || "each row scores 10 widths".into())?;
    Ok("6 modes x widths 1..10 summarized as (model, best BLEU, width, epoch)".into())
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|v| v.contains(&n));
    let dir = tempfile::tempdir().expect("temp dir");
    let mut copy_checkpoints = Vec::new();

    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            println!("[SKIP] {n}. {name}");
            return;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(msg) => println!("[PASS] {n}. {name}: {msg} ({t:.1?})"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {n}. {name}: {msg} ({t:.1?})");
            }
        }
    };

    report(1, "gradient suite", &mut gradient_suite);
    report(2, "beam oracle", &mut beam_oracle);
    report(3, "BLEU oracle", &mut bleu_oracle);
    report(4, "end-to-end overfit", &mut || end_to_end(&mut copy_checkpoints, dir.path()));
    report(5, "dimension contract", &mut dimension_contract);
    report(6, "combination algebra", &mut combination_algebra);
    report(7, "determinism", &mut determinism);
    report(8, "sweep report", &mut || sweep_report(&copy_checkpoints, dir.path()));

    if failed == 0 {
        println!("acceptance: all selected criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
