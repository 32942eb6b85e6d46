//! The `wcnmt` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bleu::{corpus_bleu, BleuOptions};
use crate::checkpoint::Checkpoint;
use crate::config::{Overrides, RunConfig};
use crate::data::{corpus_stats, load_embeddings, tokenize, ParallelCorpus, MAX_SENTENCE_LEN};
use crate::decode::BeamConfig;
use crate::gradcheck::{model_suite, SUITE_TOLERANCE};
use crate::repr::ReprMode;
use crate::seq2seq::Seq2Seq;
use crate::sweep::{sweep_checkpoint, SweepReport};
use crate::synthetic::{self, SyntheticSpec, Task};
use crate::train::train_with;

#[derive(Parser, Debug)]
#[command(name = "wcnmt", version, about = "Word and character level attention NMT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SyntheticTask {
    Copy,
    Reverse,
}

impl From<SyntheticTask> for Task {
    fn from(t: SyntheticTask) -> Task {
        match t {
            SyntheticTask::Copy => Task::Copy,
            SyntheticTask::Reverse => Task::Reverse,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model and write a checkpoint plus a JSON-lines log.
    Train {
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Train on a generated corpus instead of files; it doubles as the dev set.
        #[arg(long, value_enum)]
        synthetic: Option<SyntheticTask>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Translate one sentence per line.
    Translate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        beam: usize,
        #[arg(long, default_value_t = crate::decode::DEFAULT_MAX_LEN)]
        max_len: usize,
        /// Length normalization exponent; 0 ranks by raw log-probability.
        #[arg(long, default_value_t = 0.0)]
        length_alpha: f64,
    },
    /// Corpus BLEU of a candidates file against a references file.
    Evaluate {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Add-one smoothing for orders 2 to 4.
        #[arg(long)]
        smooth: bool,
    },
    /// Finite-difference check of every parameter of a tiny model.
    Gradcheck {
        #[arg(long, default_value = "word")]
        mode: ReprMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sentence and vocabulary statistics of a parallel corpus.
    Stats {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Score checkpoints at several beam widths and report each one's best.
    Sweep {
        #[arg(long, num_args = 1.., required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
        widths: Vec<usize>,
        #[arg(long, default_value_t = crate::decode::DEFAULT_MAX_LEN)]
        max_len: usize,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            synthetic,
            overrides,
        } => {
            let cfg = RunConfig::resolve(config.as_deref(), &overrides)?;
            cmd_train(&cfg, synthetic.map(Task::from))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Translate {
            checkpoint,
            input,
            output,
            beam,
            max_len,
            length_alpha,
        } => {
            let cfg = BeamConfig {
                width: beam,
                max_len,
                length_alpha,
            };
            let text = cmd_translate(&checkpoint, &input, &cfg)?;
            match output {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            candidates,
            references,
            smooth,
        } => {
            let cands = read_tokenized(&candidates)?;
            let refs = read_tokenized(&references)?;
            if cands.len() != refs.len() {
                bail!(
                    "{} has {} lines but {} has {}",
                    candidates.display(),
                    cands.len(),
                    references.display(),
                    refs.len()
                );
            }
            let report = corpus_bleu(&cands, &refs, BleuOptions { smooth })?;
            println!("{}", report.to_json());
            println!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { mode, seed } => {
            let report = model_suite(mode, seed)?;
            for g in &report.groups {
                let verdict = if g.max_rel_error < SUITE_TOLERANCE { "ok" } else { "FAIL" };
                println!("{:<28} {:>6} {:.3e} {verdict}", g.name, g.numel, g.max_rel_error);
            }
            if report.passed() {
                println!("{mode}: all {} parameter groups within {SUITE_TOLERANCE:e}", report.groups.len());
                Ok(ExitCode::SUCCESS)
            } else {
                let worst = report.worst().expect("failing report has groups");
                eprintln!("{mode}: gradient check failed, worst tensor {} ({:.3e})", worst.name, worst.max_rel_error);
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Stats { src, tgt, json } => {
            let (corpus, _) = ParallelCorpus::load_parallel(&src, &tgt, usize::MAX)?;
            let stats = corpus_stats(&corpus)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{stats}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            checkpoints,
            src,
            tgt,
            widths,
            max_len,
            json,
        } => {
            let (corpus, _) = ParallelCorpus::load_parallel(&src, &tgt, usize::MAX)?;
            let report = cmd_sweep(&checkpoints, &corpus, &widths, max_len)?;
            print!("{report}");
            if let Some(p) = json {
                fs::write(&p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_tokenized(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(tokenize).collect())
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> anyhow::Result<&'a Path> {
    p.as_deref().with_context(|| format!("missing {what} (flag or config key)"))
}

/// Trains per `cfg` and writes the checkpoint and log it names.
pub fn cmd_train(cfg: &RunConfig, synthetic: Option<Task>) -> anyhow::Result<Checkpoint> {
    cfg.validate()?;
    let (train, dev) = match synthetic {
        Some(task) => {
            let c = synthetic::corpus(task, SyntheticSpec { seed: cfg.seed, ..SyntheticSpec::default() });
            (c.clone(), c)
        }
        None => {
            let src = required(&cfg.train_src, "train_src")?;
            let tgt = required(&cfg.train_tgt, "train_tgt")?;
            let (train, dropped) = ParallelCorpus::load_parallel(src, tgt, MAX_SENTENCE_LEN)?;
            if dropped > 0 {
                eprintln!("dropped {dropped} pairs longer than {MAX_SENTENCE_LEN} tokens");
            }
            let dev = match (&cfg.dev_src, &cfg.dev_tgt) {
                (Some(s), Some(t)) => ParallelCorpus::load_parallel(s, t, MAX_SENTENCE_LEN)?.0,
                (None, None) => ParallelCorpus::default(),
                _ => bail!("dev_src and dev_tgt must be given together"),
            };
            (train, dev)
        }
    };

    let mut model = Seq2Seq::for_corpus(cfg.model_config(), &train, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (target_side, path) in [(false, &cfg.src_embeddings), (true, &cfg.tgt_embeddings)] {
        if let Some(p) = path {
            let vocab = if target_side { &model.tgt_vocab } else { &model.src_vocab };
            let m = load_embeddings(p, vocab, cfg.word_dim, &mut rng)?;
            model.set_embeddings(target_side, m)?;
        }
    }

    let mut log: Box<dyn Write> = match &cfg.log {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stderr()),
    };
    let mut log_err = None;
    let (ck, report) = train_with(model, &train, &dev, &cfg.train_config(), |r| {
        let line = serde_json::to_string(r).expect("record serializes");
        if let Err(e) = writeln!(log, "{line}") {
            log_err.get_or_insert(e);
        }
        std::ops::ControlFlow::Continue(())
    })?;
    if let Some(e) = log_err {
        return Err(e).context("writing training log");
    }
    let out = cfg.checkpoint.clone().unwrap_or_else(|| PathBuf::from("model.ckpt"));
    ck.save(&out)?;
    eprintln!(
        "saved {} (mode {}, epoch {}, dev BLEU {})",
        out.display(),
        ck.model.mode(),
        report.best_epoch,
        ck.dev_bleu.map_or("n/a".to_string(), |b| format!("{b:.2}"))
    );
    Ok(ck)
}

/// One translated line per input line.
pub fn cmd_translate(checkpoint: &Path, input: &Path, beam: &BeamConfig) -> anyhow::Result<String> {
    if beam.width == 0 {
        bail!("--beam must be at least 1");
    }
    let ck = Checkpoint::load(checkpoint)?;
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut out = String::new();
    for line in text.lines() {
        let words = ck.model.translate(&tokenize(line), beam)?;
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_sweep(checkpoints: &[PathBuf], corpus: &ParallelCorpus, widths: &[usize], max_len: usize) -> anyhow::Result<SweepReport> {
    if widths.contains(&0) {
        bail!("beam widths must be at least 1");
    }
    let mut report = SweepReport::default();
    for p in checkpoints {
        let ck = Checkpoint::load(p)?;
        report.rows.push(sweep_checkpoint(&ck, corpus, widths, max_len)?);
    }
    Ok(report)
}
