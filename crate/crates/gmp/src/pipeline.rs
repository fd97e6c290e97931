//! The file-backed workflow behind the CLI subcommands.
//!
//! `data_dir` holds `train.jsonl` (the labeled pool), `test.jsonl` and one
//! `seed_<s>/{train,dev}.jsonl` pair per sampling seed. `out_dir` receives
//! `runs/seed<s>_run<r>/{model.ckpt,log.tsv,metrics.json}`, `summary.json`
//! and, for sweeps, `sweep.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gmp_core::config::{ModelConfig, Vocab};
use gmp_core::data::{
    generate_synthetic_corpus, sample_train_dev, stratum_histogram, StoredCaptions, StoredFeatures,
    SyntheticCorpusConfig,
};
use gmp_core::model::{EncodedInstance, GmpModel};
use gmp_core::train::{EpochStats, Setup, Trainer};
use gmp_core::types::{Instance, StratumSignature};

use crate::checkpoint::Checkpoint;
use crate::error::{CliError, CliResult};
use crate::jsonl::{load_jsonl, write_jsonl};
use crate::report::{render_table, summarize, sweep_csv, RunMetrics, Summary, SweepRow};
use crate::runconfig::RunConfig;

pub fn pool_path(cfg: &RunConfig) -> PathBuf {
    cfg.data_dir.join("train.jsonl")
}

pub fn test_path(cfg: &RunConfig) -> PathBuf {
    cfg.data_dir.join("test.jsonl")
}

pub fn split_dir(cfg: &RunConfig, seed: u64) -> PathBuf {
    cfg.data_dir.join(format!("seed_{seed}"))
}

pub fn run_dir(out: &Path, seed: u64, run: usize) -> PathBuf {
    out.join("runs").join(format!("seed{seed}_run{run}"))
}

/// Corpus config for the held-out test file: same generator, another seed.
pub fn test_corpus_config(cfg: &RunConfig) -> SyntheticCorpusConfig {
    SyntheticCorpusConfig {
        n_instances: cfg.n_test,
        seed: cfg.corpus.seed.wrapping_add(0x7E57),
        id_prefix: format!("{}-test", cfg.corpus.id_prefix),
        ..cfg.corpus.clone()
    }
}

/// Writes the labeled pool and the test set. Returns their sizes.
pub fn gencorpus(cfg: &RunConfig) -> CliResult<(usize, usize)> {
    cfg.corpus.validate()?;
    let pool = generate_synthetic_corpus(&cfg.corpus)?;
    let test = generate_synthetic_corpus(&test_corpus_config(cfg))?;
    write_jsonl(&pool_path(cfg), &pool)?;
    write_jsonl(&test_path(cfg), &test)?;
    Ok((pool.len(), test.len()))
}

/// Table of per-stratum counts, one row per split.
pub fn stratum_table(rows: &[(String, [usize; 7])]) -> String {
    let mut s = format!("{:<14}", "split");
    for sig in StratumSignature::ALL {
        let _ = write!(s, " {:>17}", sig.to_string());
    }
    s.push_str("    total\n");
    for (name, hist) in rows {
        let _ = write!(s, "{name:<14}");
        for c in hist {
            let _ = write!(s, " {c:>17}");
        }
        let _ = writeln!(s, " {:>8}", hist.iter().sum::<usize>());
    }
    s
}

/// Draws a train and a dev split per seed from the pool and writes them.
/// Returns the stratum report, which is also saved as `sample_report.txt`.
pub fn sample(cfg: &RunConfig) -> CliResult<String> {
    let pool = load_jsonl(&pool_path(cfg))?;
    let mut rows = vec![("pool".to_string(), stratum_histogram(&pool))];
    for &seed in &cfg.seeds {
        let (train, dev, _) = sample_train_dev(&pool, &cfg.quota(seed))?;
        let dir = split_dir(cfg, seed);
        write_jsonl(&dir.join("train.jsonl"), &train)?;
        write_jsonl(&dir.join("dev.jsonl"), &dev)?;
        rows.push((format!("seed {seed} train"), stratum_histogram(&train)));
        rows.push((format!("seed {seed} dev"), stratum_histogram(&dev)));
    }
    let report = stratum_table(&rows);
    let path = cfg.data_dir.join("sample_report.txt");
    std::fs::write(&path, &report).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

/// Vocabulary over the token text (never the labels) of the given files.
pub fn vocab_from(sets: &[&[Instance]]) -> Vocab {
    Vocab::build(sets.iter().flat_map(|set| {
        set.iter()
            .flat_map(|i| i.text_tokens.iter().chain(i.caption_tokens.iter().flatten()).map(String::as_str))
    }))
}

pub fn encode_all(model: &GmpModel, data: &[Instance]) -> CliResult<Vec<EncodedInstance>> {
    data.iter()
        .map(|i| model.encode_instance(i, &StoredFeatures, &StoredCaptions).map_err(CliError::from))
        .collect()
}

/// Distinct, reproducible initialization seed per (sampling seed, run).
pub fn model_seed(base: u64, seed: u64, run: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(seed.wrapping_mul(7919)).wrapping_add(run as u64)
}

/// Everything one training run needs besides the config.
pub struct RunData<'a> {
    pub vocab: &'a Vocab,
    pub train: &'a [Instance],
    pub dev: &'a [Instance],
    pub test: &'a [Instance],
}

pub struct RunResult {
    pub checkpoint: Checkpoint,
    pub test: RunMetrics,
    pub log: String,
    pub best_epoch: usize,
}

fn log_line(s: &EpochStats, elapsed: f64) -> String {
    let dev = |f: fn(&gmp_core::metrics::MetricsReport) -> Option<f64>| {
        s.dev.as_ref().and_then(f).map_or("-".to_string(), |v| format!("{v:.4}"))
    };
    format!(
        "{}\t{:.5}\t{:.5}\t{:.5}\t{}\t{}\t{:.1}\n",
        s.epoch,
        s.loss,
        s.generation,
        s.count,
        dev(|r| Some(r.headline())),
        dev(|r| r.count_accuracy),
        elapsed
    )
}

/// Trains one model, keeps the best dev epoch and scores the test split.
pub fn train_one(
    cfg: &RunConfig,
    model_cfg: ModelConfig,
    data: &RunData<'_>,
    seed: u64,
    run: usize,
) -> CliResult<RunResult> {
    let setup = Setup::new(cfg.task, cfg.ablations)?;
    let mut model = GmpModel::new(model_cfg, data.vocab.clone())?;
    let train = encode_all(&model, data.train)?;
    let dev = encode_all(&model, data.dev)?;
    let test = encode_all(&model, data.test)?;
    let mut trainer = Trainer::new(&model, setup);
    let start = Instant::now();
    let budget = cfg.time_budget_secs as f64;
    let mut log = String::from("epoch\tloss\tgeneration\tcount\tdev_score\tdev_count_acc\tseconds\n");
    let outcome = trainer.fit(&mut model, &train, &dev, |s| {
        let elapsed = start.elapsed().as_secs_f64();
        log.push_str(&log_line(s, elapsed));
        budget <= 0.0 || elapsed < budget
    })?;
    let (report, _) = model.evaluate(&test, &setup)?;
    let metrics = RunMetrics::new(cfg.task, seed, run, "test", &report);
    let meta = BTreeMap::from([
        ("seed".to_string(), seed.to_string()),
        ("run".to_string(), run.to_string()),
        ("best_epoch".to_string(), outcome.best_epoch.to_string()),
    ]);
    let checkpoint = Checkpoint { task: cfg.task, ablations: cfg.ablations, model, meta };
    Ok(RunResult { checkpoint, test: metrics, log, best_epoch: outcome.best_epoch })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// Outcome of the `train` subcommand.
pub struct TrainReport {
    pub runs: Vec<RunMetrics>,
    pub summary: Summary,
    pub table: String,
}

fn load_split(cfg: &RunConfig, seed: u64, name: &str) -> CliResult<Vec<Instance>> {
    let path = split_dir(cfg, seed).join(name);
    if !path.exists() {
        return Err(CliError::Data(format!("{} is missing; run `gmp sample` first", path.display())));
    }
    load_jsonl(&path)
}

/// Seeds x runs (x sweep values), writing every artifact under `out_dir`.
pub fn train(cfg: &RunConfig) -> CliResult<TrainReport> {
    cfg.validate()?;
    let pool = load_jsonl(&pool_path(cfg))?;
    let test = load_jsonl(&test_path(cfg))?;
    let vocab = vocab_from(&[&pool, &test]);
    let splits = cfg
        .seeds
        .iter()
        .map(|&s| Ok((s, load_split(cfg, s, "train.jsonl")?, load_split(cfg, s, "dev.jsonl")?)))
        .collect::<CliResult<Vec<_>>>()?;

    let values: Vec<Option<f64>> = match &cfg.sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut all = Vec::new();
    let mut sweep_rows = Vec::new();
    for value in values {
        let base = match (&cfg.sweep, value) {
            (Some(s), Some(v)) => s.apply(&cfg.model, v),
            _ => cfg.model.clone(),
        };
        let out = match (&cfg.sweep, value) {
            (Some(s), Some(v)) => cfg.out_dir.join(format!("{}_{v}", s.param.as_str())),
            _ => cfg.out_dir.clone(),
        };
        for (seed, train, dev) in &splits {
            for run in 0..cfg.runs_per_seed {
                let model_cfg = ModelConfig { seed: model_seed(base.seed, *seed, run), ..base.clone() };
                let data = RunData { vocab: &vocab, train, dev, test: &test };
                let r = train_one(cfg, model_cfg, &data, *seed, run)?;
                let dir = run_dir(&out, *seed, run);
                r.checkpoint.save(&dir.join("model.ckpt"))?;
                write_text(&dir.join("log.tsv"), &r.log)?;
                write_text(&dir.join("metrics.json"), &to_json(&r.test))?;
                if let Some(v) = value {
                    sweep_rows.push(SweepRow { value: v, metrics: r.test.clone() });
                }
                all.push(r.test);
            }
        }
    }
    let summary = summarize(&all).ok_or_else(|| CliError::Training("no runs completed".into()))?;
    write_text(&cfg.out_dir.join("summary.json"), &to_json(&summary))?;
    if let Some(s) = &cfg.sweep {
        write_text(&cfg.out_dir.join("sweep.csv"), &sweep_csv(s.param.as_str(), &sweep_rows))?;
    }
    let table = render_table(&all, &summary);
    Ok(TrainReport { runs: all, summary, table })
}

/// Scores a saved checkpoint on a JSONL file.
pub fn eval(checkpoint: &Path, data: &Path) -> CliResult<RunMetrics> {
    let ck = Checkpoint::load(checkpoint)?;
    let setup = Setup::new(ck.task, ck.ablations)?;
    let instances = load_jsonl(data)?;
    let encoded = encode_all(&ck.model, &instances)?;
    let (report, _) = ck.model.evaluate(&encoded, &setup)?;
    let num = |k: &str| ck.meta.get(k).and_then(|v| v.parse().ok()).unwrap_or(0);
    let split = data.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    Ok(RunMetrics::new(ck.task, num("seed"), num("run") as usize, split, &report))
}

pub fn metrics_json(m: &RunMetrics) -> String {
    to_json(m)
}
