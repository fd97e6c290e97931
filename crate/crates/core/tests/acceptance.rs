//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). By default it always exits 0
//! after printing its report; set `GMP_ACCEPTANCE_STRICT=1` to exit 1 when
//! any criterion fails. `GMP_ACCEPTANCE_ONLY=2,5` runs a subset.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use gmp_core::codec::{decode_targets, encode_targets};
use gmp_core::config::{Ablations, ModelConfig, Vocab};
use gmp_core::data::{
    generate_synthetic_corpus, sample_train_dev, stratum_histogram, CueOracle, FewShotQuota, StoredCaptions,
    StoredFeatures, SyntheticCorpusConfig,
};
use gmp_core::generation::default_max_steps;
use gmp_core::metrics::{jmasa_metrics, masc_metrics, mate_metrics};
use gmp_core::model::{groups, EncodedInstance, GmpModel};
use gmp_core::nn::gradcheck::gradcheck;
use gmp_core::nn::Tape;
use gmp_core::prompt::{base_len, prompted_len};
use gmp_core::train::{Setup, Trainer};
use gmp_core::types::{AspectSpan, Instance, Sentiment, SplitTag, Task, Triplet, TripletSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned thresholds.
const CODEC_CASES: usize = 10_000;
const CODEC_TIME: Duration = Duration::from_secs(5);
const GRAD_TOL: f64 = 1e-4;
const GRAD_EPS: f64 = 1e-5;
const GRAD_TIME: Duration = Duration::from_secs(30);
const SHAPE_CASES: usize = 1_000;
const FUZZ_STATES: usize = 1_000;
const METRIC_SETS: usize = 500;
const METRIC_TOL: f64 = 1e-12;
const TWITTER15: [usize; 7] = [32, 64, 16, 16, 8, 2, 0];
const LEARN_JMASA_F1: f64 = 0.80;
const LEARN_MASC_ACC: f64 = 0.90;
const LEARN_EPOCHS: usize = 70;
const LEARN_TIME: Duration = Duration::from_secs(15 * 60);
const ABLATION_RUNS: usize = 9;
const LINEARITY_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_sequence(rng: &mut ChaCha8Rng, task: Task) -> (TripletSequence, usize) {
    let l_t = rng.random_range(5..=64);
    let n = rng.random_range(1..=5);
    let items = (0..n)
        .map(|_| {
            let b = rng.random_range(1..=l_t);
            let e = rng.random_range(b..=l_t.min(b + 3));
            Triplet {
                span: AspectSpan::new(b, e),
                sentiment: task.has_sentiment().then(|| Sentiment::ALL[rng.random_range(0..3)]),
            }
        })
        .collect();
    (TripletSequence::new(task, items), l_t)
}

fn codec_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut bad = 0;
    for i in 0..CODEC_CASES {
        let task = [Task::Jmasa, Task::Mate, Task::Masc][i % 3];
        let (seq, l_t) = random_sequence(&mut rng, task);
        let ok = encode_targets(&seq, l_t)
            .and_then(|idx| decode_targets(&idx, l_t, task))
            .is_ok_and(|back| back == seq);
        bad += usize::from(!ok);
    }
    let took = start.elapsed();
    outcome(
        bad == 0 && took < CODEC_TIME,
        format!("{CODEC_CASES} sequences, {bad} mismatches, {:.2}s (limit {}s)", took.as_secs_f64(), CODEC_TIME.as_secs()),
    )
}

fn tiny_vocab() -> Vocab {
    Vocab::build(["w0", "w1", "w2", "w3", "good0", "bad0", "asp0", "asp1", "asp2"])
}

/// Six tokens, two aspects.
fn gradcheck_instance() -> Instance {
    let tokens = ["good0", "asp0", "w1", "bad0", "asp1", "asp2"];
    Instance {
        id: "g".into(),
        text_tokens: tokens.iter().map(|s| s.to_string()).collect(),
        image_feature: Some(vec![0.3, -0.5, 0.8, 0.1]),
        caption_tokens: Some(vec!["asp0".into(), "asp1".into()]),
        aspects: vec![AspectSpan::new(2, 2), AspectSpan::new(5, 6)],
        sentiments: vec![Sentiment::Pos, Sentiment::Neg],
        split: SplitTag::Train,
    }
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let cfg = ModelConfig { d: 8, n_heads: 2, d_v: 4, l_i: 2, n_layers: 1, ffn_mult: 2, lambda: 0.1, ..Default::default() };
    let mut m = GmpModel::new(cfg, tiny_vocab()).unwrap();
    let inst = m.encode_instance(&gradcheck_instance(), &StoredFeatures, &StoredCaptions).unwrap();
    let setup = Setup::new(Task::Jmasa, Ablations::default()).unwrap();
    let model = m.clone();
    let report = gradcheck(&mut m.store, None, GRAD_EPS, |t| model.forward_train(t, &inst, &setup).unwrap().total);
    let took = start.elapsed();
    outcome(
        report.passes(GRAD_TOL) && took < GRAD_TIME,
        format!(
            "{} entries, max rel error {:.2e} at {:?} (limit {GRAD_TOL:e}), {:.1}s",
            report.n_checked,
            report.max_rel_error,
            report.worst,
            took.as_secs_f64()
        ),
    )
}

fn shape_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..SHAPE_CASES {
        let (l_i, l_cap, l_t, n) =
            (rng.random_range(0..=6), rng.random_range(0..=8), rng.random_range(1..=32), rng.random_range(1..=5));
        let cfg = ModelConfig { d: 4, n_heads: 1, d_v: 3, l_i, n_layers: 1, ..Default::default() };
        let m = GmpModel::new(cfg, tiny_vocab()).unwrap();
        let mut t = Tape::new(&m.store);
        let text = vec![m.vocab.id("w0"); l_t];
        let cap = vec![m.vocab.id("asp0"); l_cap];
        let base = m.base_segments(&mut t, &[0.1, 0.2, 0.3], &cap, &text).unwrap();
        let (e_m, _) = m.assemble_e_m(&mut t, &base).unwrap();
        let ap = m.aspect_placeholders(&mut t, n).unwrap();
        let sp = m.sentiment_placeholders(&mut t, n).unwrap();
        let j = m.assemble_jmasa(&mut t, &base, &ap, sp, n).unwrap();
        let ok = t.shape(e_m).0 == l_i + l_cap + l_t + 7
            && base_len(l_i, l_cap, l_t) == l_i + l_cap + l_t + 7
            && j.len() == l_i + l_cap + 4 * n + l_t + 9
            && prompted_len(Task::Jmasa, l_i, l_cap, l_t, n) == j.len();
        bad += usize::from(!ok);
    }
    outcome(bad == 0, format!("{SHAPE_CASES} configurations, {bad} violations"))
}

fn grammar_fuzz() -> Outcome {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusConfig {
        n_instances: 16,
        d_v: 4,
        text_len_range: (5, 14),
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let vocab = Vocab::build(corpus.iter().flat_map(|i| i.text_tokens.iter().chain(i.caption_tokens.iter().flatten())).map(String::as_str));
    let mut failures = 0;
    let mut decodes = 0;
    for state in 0..FUZZ_STATES {
        let cfg = ModelConfig {
            d: 8,
            n_heads: 2,
            d_v: 4,
            l_i: 1,
            n_layers: 1,
            ffn_mult: 2,
            embed_std: 2.0,
            seed: 10_000 + state as u64,
            ..Default::default()
        };
        let m = GmpModel::new(cfg, vocab.clone()).unwrap();
        let inst = m.encode_instance(&corpus[state % corpus.len()], &StoredFeatures, &StoredCaptions).unwrap();
        for task in [Task::Jmasa, Task::Mate, Task::Masc] {
            decodes += 1;
            if !decode_is_sound(&m, &inst, task) {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{FUZZ_STATES} parameter states, {decodes} decodes, {failures} unsound"))
}

fn decode_is_sound(m: &GmpModel, inst: &EncodedInstance, task: Task) -> bool {
    let mut t = Tape::new(&m.store);
    let t = &mut t;
    let base = m.base_segments(t, &inst.image, &inst.caption_ids, &inst.text_ids).unwrap();
    let (e_m, _) = m.assemble_e_m(t, &base).unwrap();
    let (h_a, h_s) = m.encode_dual(t, e_m).unwrap();
    let n = match task {
        Task::Masc => inst.n_gold(),
        _ => {
            let logits = m.predict_aspect_count(t, h_a).unwrap();
            gmp_core::streams::count_from_logits(&t.value(logits).data)
        }
    };
    let prompted = match task {
        Task::Jmasa => {
            let ap = m.generate_aspect_prompts(t, h_a, n).unwrap();
            let sp = m.generate_sentiment_prompt(t, h_s, n, false).unwrap();
            m.assemble_jmasa(t, &base, &ap, sp, n).unwrap()
        }
        Task::Mate => {
            let ap = m.generate_aspect_prompts(t, h_a, n).unwrap();
            m.assemble_mate(t, &base, &ap, n).unwrap()
        }
        Task::Masc => {
            let sp = m.generate_sentiment_prompt(t, h_s, n, false).unwrap();
            m.assemble_masc(t, &base, sp, &inst.spans).unwrap()
        }
    };
    let h_p = m.encode_prompted(t, &prompted).unwrap();
    let max_steps = default_max_steps(task);
    let spans = (task == Task::Masc).then_some(&inst.spans[..]);
    let Ok(out) = m.constrained_decode(t, h_p, base.text, task, n, spans, max_steps) else {
        return false;
    };
    let l_t = inst.text_len();
    let parsed = decode_targets(&out.indices, l_t, task);
    let steps_ok = out.indices.len() <= max_steps + 1;
    let spans_ok = out.sequence.items.iter().all(|x| x.span.begin <= x.span.end && x.span.end <= l_t);
    let masc_ok = task != Task::Masc || out.sequence.items.iter().map(|x| x.span).eq(inst.spans.iter().copied());
    parsed.is_ok_and(|p| p == out.sequence) && steps_ok && spans_ok && masc_ok
}

type Items = Vec<(usize, usize, Option<usize>)>;

fn random_items(rng: &mut ChaCha8Rng, with_sentiment: bool) -> Items {
    (0..rng.random_range(0..5))
        .map(|_| {
            let b = rng.random_range(1..6);
            (b, b + rng.random_range(0..2), with_sentiment.then(|| rng.random_range(0..3)))
        })
        .collect()
}

fn to_seq(task: Task, items: &Items) -> TripletSequence {
    TripletSequence::new(
        task,
        items
            .iter()
            .map(|&(b, e, s)| Triplet { span: AspectSpan::new(b, e), sentiment: s.map(|s| Sentiment::ALL[s]) })
            .collect(),
    )
}

/// Set intersection counted by explicit pairwise comparison.
fn brute_prf(preds: &[Items], golds: &[Items]) -> (f64, f64, f64) {
    let (mut tp, mut np, mut ng) = (0.0, 0.0, 0.0);
    for (p, g) in preds.iter().zip(golds) {
        let p: BTreeSet<_> = p.iter().collect();
        let g: BTreeSet<_> = g.iter().collect();
        np += p.len() as f64;
        ng += g.len() as f64;
        tp += p.iter().filter(|x| g.contains(*x)).count() as f64;
    }
    let pr = if np == 0.0 { 0.0 } else { tp / np };
    let re = if ng == 0.0 { 0.0 } else { tp / ng };
    let f = if pr + re == 0.0 { 0.0 } else { 2.0 * pr * re / (pr + re) };
    (pr, re, f)
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..METRIC_SETS {
        let size = rng.random_range(1..8);
        let with_sentiment = i % 2 == 0;
        let task = if with_sentiment { Task::Jmasa } else { Task::Mate };
        let preds: Vec<Items> = (0..size).map(|_| random_items(&mut rng, with_sentiment)).collect();
        let golds: Vec<Items> = (0..size).map(|_| random_items(&mut rng, with_sentiment)).collect();
        let ps: Vec<_> = preds.iter().map(|x| to_seq(task, x)).collect();
        let gs: Vec<_> = golds.iter().map(|x| to_seq(task, x)).collect();
        let r = if with_sentiment { jmasa_metrics(&ps, &gs) } else { mate_metrics(&ps, &gs) }.unwrap();
        let (p, rc, f) = brute_prf(&preds, &golds);
        worst = worst.max((r.precision - p).abs()).max((r.recall - rc).abs()).max((r.micro_f1 - f).abs());

        // Accuracy over aligned spans.
        let labels: Vec<Vec<(usize, usize)>> = (0..size)
            .map(|_| (0..rng.random_range(1..5)).map(|_| (rng.random_range(0..3), rng.random_range(0..3))).collect())
            .collect();
        let seq = |pick: fn(&(usize, usize)) -> usize, l: &Vec<(usize, usize)>| {
            to_seq(Task::Masc, &l.iter().enumerate().map(|(k, x)| (k + 1, k + 1, Some(pick(x)))).collect())
        };
        let golds: Vec<_> = labels.iter().map(|l| seq(|x| x.0, l)).collect();
        let preds: Vec<_> = labels.iter().map(|l| seq(|x| x.1, l)).collect();
        let total = labels.iter().map(Vec::len).sum::<usize>() as f64;
        let right = labels.iter().flatten().filter(|(g, p)| g == p).count() as f64;
        let acc = masc_metrics(&preds, &golds).unwrap().accuracy.unwrap();
        worst = worst.max((acc - right / total).abs());
    }
    outcome(worst <= METRIC_TOL, format!("{METRIC_SETS} sets, max deviation {worst:.1e} (limit {METRIC_TOL:e})"))
}

fn sampler_exactness() -> Outcome {
    let pool = generate_synthetic_corpus(&SyntheticCorpusConfig { n_instances: 2000, d_v: 2, seed: 15, ..Default::default() }).unwrap();
    let mut problems = Vec::new();
    for seed in [1u64, 2, 3] {
        let q = FewShotQuota::twitter15(seed);
        let (train, dev, _) = sample_train_dev(&pool, &q).unwrap();
        let (again, again_dev, _) = sample_train_dev(&pool, &q).unwrap();
        if stratum_histogram(&train) != TWITTER15 || stratum_histogram(&dev) != TWITTER15 {
            problems.push(format!("seed {seed}: histogram {:?}/{:?}", stratum_histogram(&train), stratum_histogram(&dev)));
        }
        if train.len() != 138 || dev.len() != 138 {
            problems.push(format!("seed {seed}: sizes {}/{}", train.len(), dev.len()));
        }
        if again != train || again_dev != dev {
            problems.push(format!("seed {seed}: not deterministic"));
        }
    }
    let detail = if problems.is_empty() {
        "train and dev are 138 each, 32/64/16/16/8/2/0, reproducible for seeds 1-3".to_string()
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn learn_corpus(n: usize, seed: u64, prefix: &str) -> SyntheticCorpusConfig {
    SyntheticCorpusConfig { n_instances: n, max_aspects: 3, seed, id_prefix: prefix.into(), ..Default::default() }
}

fn vocab_of(sets: &[&[Instance]]) -> Vocab {
    Vocab::build(sets.iter().flat_map(|s| s.iter()).flat_map(|i| i.text_tokens.iter().chain(i.caption_tokens.iter().flatten())).map(String::as_str))
}

fn encode(m: &GmpModel, data: &[Instance]) -> Vec<EncodedInstance> {
    data.iter().map(|i| m.encode_instance(i, &StoredFeatures, &StoredCaptions).unwrap()).collect()
}

/// Trains for at most `epochs` or `budget`, whichever comes first; returns
/// the test report, epochs run and wall time.
fn train_and_test(
    cfg: ModelConfig,
    vocab: &Vocab,
    train: &[Instance],
    test: &[Instance],
    setup: Setup,
    budget: Duration,
) -> (gmp_core::metrics::MetricsReport, usize, Duration) {
    let start = Instant::now();
    let mut m = GmpModel::new(cfg, vocab.clone()).unwrap();
    let tr = encode(&m, train);
    let te = encode(&m, test);
    let mut trainer = Trainer::new(&m, setup);
    let outcome = trainer.fit(&mut m, &tr, &[], |_| start.elapsed() < budget).unwrap();
    let (report, _) = m.evaluate(&te, &setup).unwrap();
    (report, outcome.history.len(), start.elapsed())
}

fn learnability() -> Outcome {
    let corpus_cfg = learn_corpus(500, 7, "learn");
    let train = generate_synthetic_corpus(&corpus_cfg).unwrap();
    let test = generate_synthetic_corpus(&learn_corpus(200, 7 + 0x7E57, "learn-test")).unwrap();
    let oracle = CueOracle::new(&corpus_cfg);
    let oracle_preds: Vec<_> = test.iter().map(|i| oracle.predict(&i.text_tokens, Task::Jmasa)).collect();
    let golds: Vec<_> = test.iter().map(|i| i.triplets(Task::Jmasa)).collect();
    let oracle_f1 = jmasa_metrics(&oracle_preds, &golds).unwrap().micro_f1;
    let vocab = vocab_of(&[&train, &test]);
    let cfg = ModelConfig { epochs: LEARN_EPOCHS, ..Default::default() };

    let (j, j_epochs, j_time) =
        train_and_test(cfg.clone(), &vocab, &train, &test, Setup::new(Task::Jmasa, Ablations::default()).unwrap(), LEARN_TIME);
    let (s, s_epochs, s_time) =
        train_and_test(cfg, &vocab, &train, &test, Setup::new(Task::Masc, Ablations::default()).unwrap(), LEARN_TIME);
    let acc = s.accuracy.unwrap_or(0.0);
    let pass = oracle_f1 == 1.0
        && j.micro_f1 >= LEARN_JMASA_F1
        && acc >= LEARN_MASC_ACC
        && j_time <= LEARN_TIME + Duration::from_secs(60)
        && s_time <= LEARN_TIME + Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "oracle F1 {oracle_f1:.3}; JMASA F1 {:.3} (need {LEARN_JMASA_F1}) after {j_epochs} epochs in {:.0}s; \
             MASC Acc {acc:.3} (need {LEARN_MASC_ACC}) after {s_epochs} epochs in {:.0}s",
            j.micro_f1,
            j_time.as_secs_f64(),
            s_time.as_secs_f64()
        ),
    )
}

fn ablation_corpus(n: usize, seed: u64, prefix: &str) -> SyntheticCorpusConfig {
    SyntheticCorpusConfig {
        n_instances: n,
        vocab_size: 60,
        n_aspect_tokens: 20,
        max_aspects: 2,
        text_len_range: (5, 10),
        d_v: 32,
        cue_noise: 0.7,
        distractor_rate: 0.7,
        seed,
        id_prefix: prefix.into(),
        ..Default::default()
    }
}

fn ablation_model(seed: u64) -> ModelConfig {
    ModelConfig { d: 32, n_heads: 2, n_layers: 1, d_v: 32, l_i: 2, epochs: 20, seed, ..Default::default() }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ablation_direction() -> Outcome {
    let train = generate_synthetic_corpus(&ablation_corpus(300, 21, "abl")).unwrap();
    let test = generate_synthetic_corpus(&ablation_corpus(150, 22, "abl-test")).unwrap();
    let vocab = vocab_of(&[&train, &test]);
    let score = |task: Task, ablation: Option<&str>, run: usize| {
        let mut ab = Ablations::default();
        if let Some(name) = ablation {
            ab.set(name, true).unwrap();
        }
        let setup = Setup::new(task, ab).unwrap();
        let (r, _, _) = train_and_test(ablation_model(500 + run as u64), &vocab, &train, &test, setup, Duration::MAX);
        r.headline()
    };
    let runs = |task, ablation| (0..ABLATION_RUNS).map(|r| score(task, ablation, r)).collect::<Vec<_>>();
    let masc_full = runs(Task::Masc, None);
    let masc_no_image = runs(Task::Masc, Some("no_image"));
    let mate_full = runs(Task::Mate, None);
    let mate_no_caption = runs(Task::Mate, Some("no_caption"));
    let wins = |a: &[f64], b: &[f64]| a.iter().zip(b).filter(|(x, y)| x > y).count();
    let (mf, mi, tf, tc) = (mean(&masc_full), mean(&masc_no_image), mean(&mate_full), mean(&mate_no_caption));
    outcome(
        mf > mi && tf > tc,
        format!(
            "MASC Acc {mf:.3} full vs {mi:.3} w/o image ({}/{ABLATION_RUNS} paired wins); \
             MATE F1 {tf:.3} full vs {tc:.3} w/o caption ({}/{ABLATION_RUNS} paired wins)",
            wins(&masc_full, &masc_no_image),
            wins(&mate_full, &mate_no_caption)
        ),
    )
}

fn multitask_additivity() -> Outcome {
    let cfg = ModelConfig { d: 8, n_heads: 2, d_v: 4, l_i: 2, n_layers: 1, ffn_mult: 2, ..Default::default() };
    let base = GmpModel::new(cfg, tiny_vocab()).unwrap();
    let inst = base.encode_instance(&gradcheck_instance(), &StoredFeatures, &StoredCaptions).unwrap();
    let setup = Setup::new(Task::Jmasa, Ablations::default()).unwrap();
    let losses = |lambda: f64| {
        let mut m = base.clone();
        m.config.lambda = lambda;
        let mut t = Tape::new(&m.store);
        let p = m.forward_train(&mut t, &inst, &setup).unwrap();
        (t.scalar(p.total), t.scalar(p.generation), t.scalar(p.count.unwrap()))
    };
    let (l0, g0, _) = losses(0.0);
    let exact_zero = l0 == g0;
    let mut zero_model = base.clone();
    zero_model.config.lambda = 0.0;
    let (_, grads) = zero_model.batch_gradients(&[&inst], &setup).unwrap();
    let count_grad = grads.group_norm(&base.store, groups::DEC_COUNT) + grads.group_norm(&base.store, groups::HEAD_COUNT);
    let lambda = 0.1;
    let (l1, g1, c1) = losses(lambda);
    let (l2, _, _) = losses(2.0 * lambda);
    let additive = l1 == g1 + lambda * c1;
    let linear_err = ((l2 - l1) - lambda * c1).abs();
    outcome(
        exact_zero && count_grad == 0.0 && additive && linear_err < LINEARITY_TOL,
        format!(
            "lambda=0: L==L_g {exact_zero}, count-stream grad norm {count_grad:e}; \
             L==L_g+lambda*L_c {additive}; linearity error {linear_err:.1e}"
        ),
    )
}

fn masc_span_fidelity() -> Outcome {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusConfig { n_instances: 200, d_v: 8, seed: 9, ..Default::default() }).unwrap();
    let vocab = vocab_of(&[&corpus]);
    let setup = Setup::new(Task::Masc, Ablations::default()).unwrap();
    let mut total = 0;
    let mut exact = 0;
    for state in 0..5u64 {
        let cfg = ModelConfig { d: 16, n_heads: 2, d_v: 8, l_i: 2, n_layers: 1, seed: 70 + state, ..Default::default() };
        let m = GmpModel::new(cfg, vocab.clone()).unwrap();
        for inst in encode(&m, &corpus) {
            let p = m.predict(&inst, &setup).unwrap();
            total += 1;
            exact += usize::from(p.sequence.items.iter().map(|x| x.span).eq(inst.spans.iter().copied()));
        }
    }
    outcome(exact == total, format!("{exact}/{total} decodes return exactly the provided spans"))
}

fn main() {
    let only: Option<BTreeSet<usize>> =
        std::env::var("GMP_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("GMP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("codec round trip", codec_round_trip),
        ("gradient correctness", gradient_check),
        ("shape law", shape_law),
        ("grammar fuzz", grammar_fuzz),
        ("metric oracle", metric_oracle),
        ("sampler exactness", sampler_exactness),
        ("end-to-end learnability", learnability),
        ("ablation direction", ablation_direction),
        ("multitask additivity", multitask_additivity),
        ("MASC span fidelity", masc_span_fidelity),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let r = check();
        ran += 1;
        failed += usize::from(!r.pass);
        println!(
            "criterion {id:>2} {:<4} {name}: {} [{:.1}s]",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
