//! `key=value` run configuration.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gmp_core::config::{Ablations, ModelConfig};
use gmp_core::data::{FewShotQuota, SyntheticCorpusConfig};
use gmp_core::types::Task;

use crate::error::{CliError, CliResult};

/// Hyperparameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    ImageSlots,
    Lambda,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::ImageSlots => "l_i",
            SweepParam::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Model config with the swept value applied.
    pub fn apply(&self, base: &ModelConfig, value: f64) -> ModelConfig {
        let mut cfg = base.clone();
        match self.param {
            SweepParam::ImageSlots => cfg.l_i = value as usize,
            SweepParam::Lambda => cfg.lambda = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Per-stratum counts in table column order.
    pub quota: [usize; 7],
    pub seeds: Vec<u64>,
    pub runs_per_seed: usize,
    pub model: ModelConfig,
    pub ablations: Ablations,
    pub corpus: SyntheticCorpusConfig,
    pub n_test: usize,
    pub sweep: Option<Sweep>,
    /// Wall-clock cap per training run, in seconds; 0 means none.
    pub time_budget_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Jmasa,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            quota: [32, 64, 16, 16, 8, 2, 0],
            seeds: vec![42, 87, 100],
            runs_per_seed: 3,
            model: ModelConfig::default(),
            ablations: Ablations::default(),
            corpus: SyntheticCorpusConfig { n_instances: 2000, ..Default::default() },
            n_test: 500,
            sweep: None,
            time_budget_secs: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Applies one model key; `Ok(false)` if the key is not a model key.
pub fn set_model_key(cfg: &mut ModelConfig, key: &str, value: &str) -> CliResult<bool> {
    match key {
        "d" => cfg.d = parse(key, value)?,
        "n_layers" => cfg.n_layers = parse(key, value)?,
        "n_heads" => cfg.n_heads = parse(key, value)?,
        "ffn_mult" => cfg.ffn_mult = parse(key, value)?,
        "d_v" => cfg.d_v = parse(key, value)?,
        "l_i" => cfg.l_i = parse(key, value)?,
        "max_l_t" => cfg.max_l_t = parse(key, value)?,
        "max_l_cap" => cfg.max_l_cap = parse(key, value)?,
        "lambda" => cfg.lambda = parse(key, value)?,
        "lr" => cfg.lr = parse(key, value)?,
        "lr_scale" => cfg.lr_scale = parse(key, value)?,
        "epochs" => cfg.epochs = parse(key, value)?,
        "batch_size" => cfg.batch_size = parse(key, value)?,
        "patience" => cfg.patience = parse(key, value)?,
        "share_s_branch" => cfg.share_s_branch = parse(key, value)?,
        "embed_std" => cfg.embed_std = parse(key, value)?,
        "dropout" => cfg.dropout = parse(key, value)?,
        "weight_decay" => cfg.weight_decay = parse(key, value)?,
        "model_seed" => cfg.seed = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Every model key with its current value, in a stable order.
pub fn model_pairs(cfg: &ModelConfig) -> Vec<(&'static str, String)> {
    vec![
        ("d", cfg.d.to_string()),
        ("n_layers", cfg.n_layers.to_string()),
        ("n_heads", cfg.n_heads.to_string()),
        ("ffn_mult", cfg.ffn_mult.to_string()),
        ("d_v", cfg.d_v.to_string()),
        ("l_i", cfg.l_i.to_string()),
        ("max_l_t", cfg.max_l_t.to_string()),
        ("max_l_cap", cfg.max_l_cap.to_string()),
        ("lambda", cfg.lambda.to_string()),
        ("lr", cfg.lr.to_string()),
        ("lr_scale", cfg.lr_scale.to_string()),
        ("epochs", cfg.epochs.to_string()),
        ("batch_size", cfg.batch_size.to_string()),
        ("patience", cfg.patience.to_string()),
        ("share_s_branch", cfg.share_s_branch.to_string()),
        ("embed_std", cfg.embed_std.to_string()),
        ("dropout", cfg.dropout.to_string()),
        ("weight_decay", cfg.weight_decay.to_string()),
        ("model_seed", cfg.seed.to_string()),
    ]
}

pub fn parse_ablations(value: &str) -> CliResult<Ablations> {
    let mut ab = Ablations::default();
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty() && *s != "none") {
        ab.set(name, true)?;
    }
    Ok(ab)
}

pub fn format_ablations(ab: &Ablations) -> String {
    let on = ab.enabled();
    if on.is_empty() {
        "none".to_string()
    } else {
        on.join(",")
    }
}

fn parse_quota(value: &str) -> CliResult<[usize; 7]> {
    match value.trim() {
        "twitter15" => Ok(table(FewShotQuota::twitter15(0))),
        "twitter17" => Ok(table(FewShotQuota::twitter17(0))),
        other => {
            let v: Vec<usize> = parse_list("quota", other)?;
            v.try_into()
                .map_err(|_| CliError::Config("quota needs 7 comma-separated counts or a preset name".into()))
        }
    }
}

fn table(q: FewShotQuota) -> [usize; 7] {
    gmp_core::types::StratumSignature::ALL.map(|s| q.get(s))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim();
        if set_model_key(&mut self.model, key, value)? {
            // Generated image features must match the projection's input width.
            self.corpus.d_v = self.model.d_v;
            return Ok(());
        }
        let c = &mut self.corpus;
        match key {
            "task" => self.task = parse(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value.trim()),
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "quota" => self.quota = parse_quota(value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "runs_per_seed" => self.runs_per_seed = parse(key, value)?,
            "ablations" => self.ablations = parse_ablations(value)?,
            "time_budget_secs" => self.time_budget_secs = parse(key, value)?,
            "n_test" => self.n_test = parse(key, value)?,
            "corpus.n_instances" => c.n_instances = parse(key, value)?,
            "corpus.vocab_size" => c.vocab_size = parse(key, value)?,
            "corpus.n_aspect_tokens" => c.n_aspect_tokens = parse(key, value)?,
            "corpus.max_aspects" => c.max_aspects = parse(key, value)?,
            "corpus.max_aspect_len" => c.max_aspect_len = parse(key, value)?,
            "corpus.min_len" => c.text_len_range.0 = parse(key, value)?,
            "corpus.max_len" => c.text_len_range.1 = parse(key, value)?,
            "corpus.image_noise" => c.image_noise = parse(key, value)?,
            "corpus.cue_noise" => c.cue_noise = parse(key, value)?,
            "corpus.distractor_rate" => c.distractor_rate = parse(key, value)?,
            "corpus.seed" => c.seed = parse(key, value)?,
            "corpus.image_seed" => c.image_seed = parse(key, value)?,
            "sweep.param" => {
                let param = match value.trim() {
                    "l_i" => SweepParam::ImageSlots,
                    "lambda" => SweepParam::Lambda,
                    "none" => {
                        self.sweep = None;
                        return Ok(());
                    }
                    other => return Err(CliError::Config(format!("cannot sweep {other:?}; use l_i or lambda"))),
                };
                let values = self.sweep.take().map(|s| s.values).unwrap_or_default();
                self.sweep = Some(Sweep { param, values });
            }
            "sweep.values" => {
                let values = parse_list(key, value)?;
                match &mut self.sweep {
                    Some(s) => s.values = values,
                    None => self.sweep = Some(Sweep { param: SweepParam::Lambda, values }),
                }
            }
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_text(&text)
    }

    /// Rejects invalid combinations before any compute.
    pub fn validate(&self) -> CliResult<()> {
        self.model.validate()?;
        self.ablations.validate(self.task)?;
        self.corpus.validate()?;
        if self.seeds.is_empty() || self.runs_per_seed == 0 {
            return Err(CliError::Config("need at least one seed and one run per seed".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::Config("sweep.values is empty".into()));
            }
            for &v in &s.values {
                s.apply(&self.model, v).validate()?;
                if s.param == SweepParam::ImageSlots && (v < 0.0 || v.fract() != 0.0) {
                    return Err(CliError::Config(format!("l_i must be a whole number, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn quota(&self, seed: u64) -> FewShotQuota {
        FewShotQuota::from_table(self.quota, seed)
    }

    /// Round-trippable `key=value` text.
    pub fn to_text(&self) -> String {
        let c = &self.corpus;
        let mut lines = vec![
            format!("task={}", self.task),
            format!("data_dir={}", self.data_dir.display()),
            format!("out_dir={}", self.out_dir.display()),
            format!("quota={}", join(&self.quota)),
            format!("seeds={}", join(&self.seeds)),
            format!("runs_per_seed={}", self.runs_per_seed),
            format!("ablations={}", format_ablations(&self.ablations)),
            format!("time_budget_secs={}", self.time_budget_secs),
            format!("n_test={}", self.n_test),
        ];
        lines.extend(model_pairs(&self.model).into_iter().map(|(k, v)| format!("{k}={v}")));
        lines.extend([
            format!("corpus.n_instances={}", c.n_instances),
            format!("corpus.vocab_size={}", c.vocab_size),
            format!("corpus.n_aspect_tokens={}", c.n_aspect_tokens),
            format!("corpus.max_aspects={}", c.max_aspects),
            format!("corpus.max_aspect_len={}", c.max_aspect_len),
            format!("corpus.min_len={}", c.text_len_range.0),
            format!("corpus.max_len={}", c.text_len_range.1),
            format!("corpus.image_noise={}", c.image_noise),
            format!("corpus.cue_noise={}", c.cue_noise),
            format!("corpus.distractor_rate={}", c.distractor_rate),
            format!("corpus.seed={}", c.seed),
            format!("corpus.image_seed={}", c.image_seed),
        ]);
        match &self.sweep {
            Some(s) => {
                lines.push(format!("sweep.param={}", s.param.as_str()));
                lines.push(format!("sweep.values={}", join(&s.values)));
            }
            None => lines.push("sweep.param=none".to_string()),
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
