//! Stratified few-shot sampling and the synthetic labeled corpus.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::{
    AspectSpan, Instance, Sentiment, SplitTag, StratumSignature, Task, Triplet, TripletSequence,
    MAX_ASPECTS,
};

/// Distinct sentiments of a labeled instance. `None` for unlabeled ones.
pub fn signature_of(instance: &Instance) -> Option<StratumSignature> {
    StratumSignature::from_sentiments(instance.sentiments.iter().copied())
}

/// Per-stratum draw counts for one seeded few-shot split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotQuota {
    pub counts: BTreeMap<StratumSignature, usize>,
    pub seed: u64,
}

impl FewShotQuota {
    pub fn new(seed: u64) -> Self {
        Self {
            counts: BTreeMap::new(),
            seed,
        }
    }

    /// Builds a quota from counts listed in [`StratumSignature::ALL`] order.
    pub fn from_table(counts: [usize; 7], seed: u64) -> Self {
        Self {
            counts: StratumSignature::ALL.into_iter().zip(counts).collect(),
            seed,
        }
    }

    /// 138 instances: 32/64/16/16/8/2/0.
    pub fn twitter15(seed: u64) -> Self {
        Self::from_table([32, 64, 16, 16, 8, 2, 0], seed)
    }

    /// 132 instances: 32/32/16/32/16/2/2.
    pub fn twitter17(seed: u64) -> Self {
        Self::from_table([32, 32, 16, 32, 16, 2, 2], seed)
    }

    pub fn get(&self, sig: StratumSignature) -> usize {
        self.counts.get(&sig).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            counts: self.counts.clone(),
            seed,
        }
    }
}

/// Draws exactly `quota[sig]` instances per stratum, uniformly without
/// replacement. Returns `(train, leftover)`; train is ordered by stratum
/// then draw order, leftover keeps the input order.
pub fn sample_fewshot(
    instances: &[Instance],
    quota: &FewShotQuota,
) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(quota.seed);
    draw(instances, quota, &mut rng)
}

/// Draws a train split and then a dev split of the same quota from the
/// leftover pool. Returns `(train, dev, rest)`.
pub fn sample_train_dev(
    instances: &[Instance],
    quota: &FewShotQuota,
) -> Result<(Vec<Instance>, Vec<Instance>, Vec<Instance>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(quota.seed);
    let (mut train, pool) = draw(instances, quota, &mut rng)?;
    let (mut dev, rest) = draw(&pool, quota, &mut rng)?;
    train.iter_mut().for_each(|i| i.split = SplitTag::Train);
    dev.iter_mut().for_each(|i| i.split = SplitTag::Dev);
    Ok((train, dev, rest))
}

fn draw(
    instances: &[Instance],
    quota: &FewShotQuota,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let mut strata: BTreeMap<StratumSignature, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        if let Some(sig) = signature_of(inst) {
            strata.entry(sig).or_default().push(i);
        }
    }
    let mut chosen = vec![false; instances.len()];
    let mut train = Vec::with_capacity(quota.total());
    for sig in StratumSignature::ALL {
        let requested = quota.get(sig);
        if requested == 0 {
            continue;
        }
        let pool = strata.get(&sig).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < requested {
            return Err(Error::Quota {
                stratum: sig,
                available: pool.len(),
                requested,
            });
        }
        for k in index::sample(rng, pool.len(), requested) {
            let i = pool[k];
            chosen[i] = true;
            train.push(instances[i].clone());
        }
    }
    let leftover = instances
        .iter()
        .zip(&chosen)
        .filter(|(_, &c)| !c)
        .map(|(inst, _)| inst.clone())
        .collect();
    Ok((train, leftover))
}

/// Per-stratum instance counts in table column order.
pub fn stratum_histogram(instances: &[Instance]) -> [usize; 7] {
    let mut hist = [0; 7];
    for sig in instances.iter().filter_map(signature_of) {
        let col = StratumSignature::ALL.iter().position(|&s| s == sig).unwrap();
        hist[col] += 1;
    }
    hist
}

/// Parameters of the synthetic corpus.
///
/// Text is a shuffled sequence of aspect segments `[cue, aspect tokens..]`
/// padded with filler tokens. Aspect tokens come from a dedicated pool,
/// cues from per-sentiment lexicons. Captions list the aspect tokens and
/// image features encode the sentiment multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusConfig {
    pub n_instances: usize,
    /// Distinct word types: fillers + aspect pool + cue lexicons.
    pub vocab_size: usize,
    pub n_aspect_tokens: usize,
    pub max_aspects: usize,
    pub max_aspect_len: usize,
    pub text_len_range: (usize, usize),
    pub d_v: usize,
    pub cues: [Vec<String>; 3],
    /// Standard deviation of the Gaussian noise added to image features.
    pub image_noise: f64,
    /// Probability that a cue is replaced by a filler. Nonzero values make
    /// the image the only sentiment evidence for the affected aspects.
    pub cue_noise: f64,
    /// Probability of inserting one uncued aspect-pool token as a distractor.
    pub distractor_rate: f64,
    pub id_prefix: String,
    pub seed: u64,
    /// Seeds the sentiment image prototypes. Splits meant to be scored
    /// against each other must share it.
    pub image_seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        let lex = |p: &str| vec![format!("{p}0")];
        Self {
            n_instances: 500,
            vocab_size: 120,
            n_aspect_tokens: 40,
            max_aspects: 3,
            max_aspect_len: 2,
            text_len_range: (5, 11),
            d_v: 128,
            cues: [lex("good"), lex("fine"), lex("bad")],
            image_noise: 0.3,
            cue_noise: 0.0,
            distractor_rate: 0.0,
            id_prefix: "syn".to_string(),
            seed: 7,
            image_seed: 0x1AA6_E5EED,
        }
    }
}

impl SyntheticCorpusConfig {
    fn n_cue_tokens(&self) -> usize {
        self.cues.iter().map(Vec::len).sum()
    }

    fn n_fillers(&self) -> usize {
        self.vocab_size
            .saturating_sub(self.n_aspect_tokens + self.n_cue_tokens())
    }

    pub fn aspect_token(&self, i: usize) -> String {
        format!("asp{i}")
    }

    pub fn filler_token(&self, i: usize) -> String {
        format!("w{i}")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.max_aspects == 0 || self.max_aspects > MAX_ASPECTS {
            return bad(format!("max_aspects must be in 1..={MAX_ASPECTS}"));
        }
        if self.max_aspect_len == 0 {
            return bad("max_aspect_len must be positive".into());
        }
        let mut seen = BTreeSet::new();
        for lex in &self.cues {
            if lex.is_empty() {
                return bad("every sentiment needs at least one cue token".into());
            }
            for tok in lex {
                if !seen.insert(tok.as_str()) {
                    return bad(format!("cue token {tok:?} appears in more than one lexicon"));
                }
                if tok.starts_with("asp") || (tok.starts_with('w') && tok[1..].parse::<u32>().is_ok()) {
                    return bad(format!("cue token {tok:?} collides with generated token names"));
                }
            }
        }
        let needed_aspects = self.max_aspects * self.max_aspect_len + 1;
        if self.n_aspect_tokens < needed_aspects {
            return bad(format!("aspect pool needs at least {needed_aspects} tokens"));
        }
        if self.n_fillers() < 2 {
            return bad(format!(
                "vocab_size {} too small for {} aspect and {} cue tokens",
                self.vocab_size,
                self.n_aspect_tokens,
                self.n_cue_tokens()
            ));
        }
        let (lo, hi) = self.text_len_range;
        let longest = self.max_aspects * (1 + self.max_aspect_len) + 2;
        if lo > hi || hi < longest {
            return bad(format!("text_len_range ({lo}, {hi}) cannot hold {longest} tokens"));
        }
        if !(0.0..=1.0).contains(&self.cue_noise) || !(0.0..=1.0).contains(&self.distractor_rate) {
            return bad("cue_noise and distractor_rate must be probabilities".into());
        }
        if !(self.image_noise >= 0.0) {
            return bad("image_noise must be non-negative".into());
        }
        Ok(())
    }

    /// Unit-variance per-sentiment image prototypes. Independent of `seed`.
    pub fn image_prototypes(&self) -> [Vec<f64>; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.image_seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        core::array::from_fn(|_| (0..self.d_v).map(|_| normal.sample(&mut rng)).collect())
    }
}

/// Generates `config.n_instances` labeled instances. Deterministic in the config.
pub fn generate_synthetic_corpus(config: &SyntheticCorpusConfig) -> Result<Vec<Instance>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prototypes = config.image_prototypes();
    let noise = Normal::new(0.0, config.image_noise.max(f64::MIN_POSITIVE)).unwrap();
    let n_fillers = config.n_fillers();

    let mut out = Vec::with_capacity(config.n_instances);
    for idx in 0..config.n_instances {
        let n = rng.random_range(1..=config.max_aspects);
        let lens: Vec<usize> = (0..n)
            .map(|_| rng.random_range(1..=config.max_aspect_len))
            .collect();
        let distractor = rng.random_bool(config.distractor_rate);
        let pool_draw = lens.iter().sum::<usize>() + usize::from(distractor);
        let mut pool = index::sample(&mut rng, config.n_aspect_tokens, pool_draw).into_vec();

        enum Segment {
            Aspect(Vec<usize>, Sentiment),
            Distractor(usize),
        }
        let mut segments: Vec<Segment> = lens
            .iter()
            .map(|&l| {
                let toks = pool.drain(..l).collect();
                let s = Sentiment::ALL[rng.random_range(0..3)];
                Segment::Aspect(toks, s)
            })
            .collect();
        if distractor {
            segments.push(Segment::Distractor(pool[0]));
        }
        segments.shuffle(&mut rng);

        let seg_len = |s: &Segment| match s {
            Segment::Aspect(t, _) => 1 + t.len(),
            Segment::Distractor(_) => 2,
        };
        let required: usize = segments.iter().map(seg_len).sum();
        let (lo, hi) = config.text_len_range;
        let target = rng.random_range(lo.max(required)..=hi.max(required));
        let mut gaps = vec![0usize; segments.len() + 1];
        for _ in 0..target - required {
            let g = rng.random_range(0..gaps.len());
            gaps[g] += 1;
        }

        let filler = |rng: &mut ChaCha8Rng| config.filler_token(rng.random_range(0..n_fillers));
        let mut tokens = Vec::with_capacity(target);
        let mut aspects = Vec::with_capacity(n);
        let mut sentiments = Vec::with_capacity(n);
        let mut caption = Vec::new();
        for (seg, &gap) in segments.iter().zip(&gaps) {
            for _ in 0..gap {
                tokens.push(filler(&mut rng));
            }
            match seg {
                Segment::Aspect(toks, s) => {
                    if rng.random_bool(config.cue_noise) {
                        tokens.push(filler(&mut rng));
                    } else {
                        let lex = &config.cues[s.ordinal()];
                        tokens.push(lex[rng.random_range(0..lex.len())].clone());
                    }
                    let begin = tokens.len() + 1;
                    for &t in toks {
                        tokens.push(config.aspect_token(t));
                        caption.push(config.aspect_token(t));
                    }
                    aspects.push(AspectSpan::new(begin, tokens.len()));
                    sentiments.push(*s);
                }
                Segment::Distractor(t) => {
                    // Leading filler keeps the distractor from extending an aspect run.
                    tokens.push(filler(&mut rng));
                    tokens.push(config.aspect_token(*t));
                }
            }
        }
        for _ in 0..gaps[segments.len()] {
            tokens.push(filler(&mut rng));
        }

        let inv_n = 1.0 / n as f64;
        let image: Vec<f64> = (0..config.d_v)
            .map(|j| {
                let mean: f64 = sentiments.iter().map(|s| prototypes[s.ordinal()][j]).sum::<f64>() * inv_n;
                if config.image_noise > 0.0 {
                    mean + noise.sample(&mut rng)
                } else {
                    mean
                }
            })
            .collect();

        let inst = Instance {
            id: format!("{}-{idx}", config.id_prefix),
            text_tokens: tokens,
            image_feature: Some(image),
            caption_tokens: Some(caption),
            aspects,
            sentiments,
            split: SplitTag::Train,
        };
        inst.validate()?;
        out.push(inst);
    }
    Ok(out)
}

/// Rule-based reader for the synthetic corpus: an aspect is a maximal run of
/// aspect-pool tokens directly preceded by a cue, and the cue's lexicon
/// gives its sentiment.
#[derive(Debug, Clone)]
pub struct CueOracle {
    cue_class: BTreeMap<String, Sentiment>,
}

impl CueOracle {
    pub fn new(config: &SyntheticCorpusConfig) -> Self {
        let cue_class = Sentiment::ALL
            .into_iter()
            .flat_map(|s| config.cues[s.ordinal()].iter().map(move |t| (t.clone(), s)))
            .collect();
        Self { cue_class }
    }

    pub fn predict(&self, tokens: &[String], task: Task) -> TripletSequence {
        let is_aspect = |t: &String| t.starts_with("asp");
        let mut items = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if !is_aspect(&tokens[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i < tokens.len() && is_aspect(&tokens[i]) {
                i += 1;
            }
            let cue = start.checked_sub(1).and_then(|p| self.cue_class.get(&tokens[p]));
            if let Some(&s) = cue {
                items.push(Triplet {
                    span: AspectSpan::new(start + 1, i),
                    sentiment: task.has_sentiment().then_some(s),
                });
            }
        }
        TripletSequence::new(task, items)
    }

    /// Sentiment of a known span, read from the token before it.
    pub fn classify(&self, tokens: &[String], span: AspectSpan) -> Option<Sentiment> {
        span.begin
            .checked_sub(2)
            .and_then(|p| self.cue_class.get(&tokens[p]).copied())
    }
}

/// Source of the raw image vector fed to the image projection.
pub trait ImageFeatureProvider {
    fn image_feature(&self, instance: &Instance, d_v: usize) -> Result<Vec<f64>>;
}

/// Source of the image-prompt (caption) tokens.
pub trait CaptionProvider {
    fn caption<'a>(&self, instance: &'a Instance) -> &'a [String];
}

/// Reads the feature stored on the instance; zeros when absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct StoredFeatures;

/// Always zeros, regardless of what the instance carries.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFeatures;

#[derive(Debug, Clone, Copy, Default)]
pub struct StoredCaptions;

#[derive(Debug, Clone, Copy, Default)]
pub struct NoCaptions;

impl ImageFeatureProvider for StoredFeatures {
    fn image_feature(&self, instance: &Instance, d_v: usize) -> Result<Vec<f64>> {
        provide_image_feature(instance, d_v)
    }
}

impl ImageFeatureProvider for ZeroFeatures {
    fn image_feature(&self, _instance: &Instance, d_v: usize) -> Result<Vec<f64>> {
        Ok(vec![0.0; d_v])
    }
}

impl CaptionProvider for StoredCaptions {
    fn caption<'a>(&self, instance: &'a Instance) -> &'a [String] {
        instance.caption_tokens.as_deref().unwrap_or(&[])
    }
}

impl CaptionProvider for NoCaptions {
    fn caption<'a>(&self, _instance: &'a Instance) -> &'a [String] {
        &[]
    }
}

/// Stored feature if present, else a zero vector of length `d_v`.
pub fn provide_image_feature(instance: &Instance, d_v: usize) -> Result<Vec<f64>> {
    match &instance.image_feature {
        Some(f) if f.len() == d_v => Ok(f.clone()),
        Some(f) => Err(Error::Dimension {
            expected: d_v,
            got: f.len(),
        }),
        None => Ok(vec![0.0; d_v]),
    }
}
