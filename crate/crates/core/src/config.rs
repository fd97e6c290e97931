//! Model hyperparameters, ablation switches and the token vocabulary.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{Task, MAX_ASPECTS};

/// Learning rate the full-size model is fine-tuned with.
pub const BASE_LR: f64 = 6.5e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Hidden size, also the token-embedding width.
    pub d: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_mult: usize,
    /// Raw image feature size.
    pub d_v: usize,
    /// Number of image slots.
    pub l_i: usize,
    pub max_l_t: usize,
    pub max_l_cap: usize,
    /// Weight of the aspect-count loss.
    pub lambda: f64,
    pub lr: f64,
    /// Multiplier applied to `lr` for from-scratch toy-size training.
    pub lr_scale: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many epochs without a dev improvement; 0 disables.
    pub patience: usize,
    /// Bind the final task encoder to the sentiment-branch encoder instead
    /// of the aspect-branch one.
    pub share_s_branch: bool,
    pub embed_std: f64,
    /// Dropout rate inside every stack during training.
    pub dropout: f64,
    /// Decoupled weight decay applied by the optimizer.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 64,
            n_layers: 2,
            n_heads: 4,
            ffn_mult: 4,
            d_v: 128,
            l_i: 4,
            max_l_t: 32,
            max_l_cap: 8,
            lambda: 0.1,
            lr: BASE_LR,
            lr_scale: 20.0,
            epochs: 70,
            batch_size: 4,
            patience: 0,
            share_s_branch: false,
            embed_std: 0.5,
            dropout: 0.0,
            weight_decay: 0.0,
            seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d == 0 || self.n_heads == 0 || self.d % self.n_heads != 0 {
            return bad(format!("d={} must be a positive multiple of n_heads={}", self.d, self.n_heads));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.lr > 0.0) || !(self.lr_scale > 0.0) {
            return bad("learning rate must be positive".to_string());
        }
        if !(0.0..0.95).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 0.95), got {}", self.dropout));
        }
        if !(self.weight_decay >= 0.0) || self.weight_decay * self.effective_lr() >= 1.0 {
            return bad(format!("weight_decay must be non-negative and small, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".to_string());
        }
        if self.max_l_t == 0 || self.d_v == 0 || self.ffn_mult == 0 {
            return bad("max_l_t, d_v and ffn_mult must be positive".to_string());
        }
        Ok(())
    }

    pub fn effective_lr(&self) -> f64 {
        self.lr * self.lr_scale
    }

    /// Longest encoder input: the prompted layout at the aspect cap.
    pub fn max_encoder_len(&self) -> usize {
        self.l_i + self.max_l_cap + 4 * MAX_ASPECTS + self.max_l_t + 9
    }

    /// Longest decoder prefix: BOS plus every symbol of five triplets.
    pub fn max_decoder_len(&self) -> usize {
        3 * MAX_ASPECTS + 1
    }
}

/// Table 5-style ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablations {
    pub no_image: bool,
    pub no_caption: bool,
    /// Drop the count subtask: lambda forced to zero and inference uses five prompts.
    pub no_multitask: bool,
    pub no_prompt: bool,
    /// Replace generated aspect prompts with a learned placeholder.
    pub no_gap: bool,
    /// Replace generated sentiment prompts with a learned placeholder.
    pub no_gsp: bool,
    /// Distinct sentiment prompt per aspect instead of one repeated row.
    pub dsp: bool,
}

impl Ablations {
    pub const NAMES: [&'static str; 7] =
        ["no_image", "no_caption", "no_multitask", "no_prompt", "no_gap", "no_gsp", "dsp"];

    pub fn set(&mut self, name: &str, on: bool) -> Result<()> {
        let slot = match name {
            "no_image" => &mut self.no_image,
            "no_caption" => &mut self.no_caption,
            "no_multitask" => &mut self.no_multitask,
            "no_prompt" => &mut self.no_prompt,
            "no_gap" => &mut self.no_gap,
            "no_gsp" => &mut self.no_gsp,
            "dsp" => &mut self.dsp,
            other => return Err(Error::Config(format!("unknown ablation {other:?}"))),
        };
        *slot = on;
        Ok(())
    }

    pub fn enabled(&self) -> Vec<&'static str> {
        let flags = [
            self.no_image,
            self.no_caption,
            self.no_multitask,
            self.no_prompt,
            self.no_gap,
            self.no_gsp,
            self.dsp,
        ];
        Self::NAMES.into_iter().zip(flags).filter(|(_, f)| *f).map(|(n, _)| n).collect()
    }

    /// Rejects switches that name a stream the task does not run.
    pub fn validate(&self, task: Task) -> Result<()> {
        let reject = |flag: &str| {
            Err(Error::Config(format!("ablation {flag} is not defined for task {task}")))
        };
        match task {
            Task::Masc if self.no_multitask => reject("no_multitask"),
            Task::Masc if self.no_gap => reject("no_gap"),
            Task::Mate if self.no_gsp => reject("no_gsp"),
            Task::Jmasa | Task::Mate if self.dsp => reject("dsp"),
            _ if self.no_prompt && (self.no_gap || self.no_gsp || self.dsp) => Err(Error::Config(
                "no_prompt removes the prompt segment; it cannot be combined with no_gap/no_gsp/dsp"
                    .to_string(),
            )),
            _ => Ok(()),
        }
    }
}

/// Special tokens, in table order.
pub const SPECIAL_TOKENS: [&str; 13] = [
    "<img>", "</img>", "<is>", "<cap>", "</cap>", "<s>", "</s>", "<prom>", "</prom>", "<senti>",
    "<gap>", "<gsp>", "<unk>",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Special {
    Img,
    ImgEnd,
    Is,
    Cap,
    CapEnd,
    Bos,
    Eos,
    Prom,
    PromEnd,
    Senti,
    AspectPlaceholder,
    SentimentPlaceholder,
    Unk,
}

impl Special {
    pub fn id(self) -> usize {
        self as usize
    }
}

/// Token to row mapping for the shared embedding table. Special tokens
/// occupy the first rows; unknown words map to `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: BTreeMap::new(),
        };
        for s in SPECIAL_TOKENS {
            v.insert(s);
        }
        v
    }
}

impl Vocab {
    /// Specials followed by the words in first-seen order.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(words: I) -> Self {
        let mut v = Self::default();
        for w in words {
            v.insert(w);
        }
        v
    }

    /// Rebuilds a vocabulary from its ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIAL_TOKENS.len()
            || tokens.iter().zip(SPECIAL_TOKENS).any(|(a, b)| a != b)
        {
            return Err(Error::Config("vocabulary does not start with the special tokens".into()));
        }
        let mut v = Self {
            tokens: Vec::new(),
            index: BTreeMap::new(),
        };
        for t in &tokens {
            if v.index.contains_key(t) {
                return Err(Error::Config(format!("duplicate vocabulary token {t:?}")));
            }
            v.insert(t);
        }
        Ok(v)
    }

    fn insert(&mut self, w: &str) {
        if !self.index.contains_key(w) {
            self.index.insert(w.to_string(), self.tokens.len());
            self.tokens.push(w.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Special::Unk.id())
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
