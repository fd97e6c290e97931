//! Parameter layout of the full model and per-instance input encoding.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ModelConfig, Vocab};
use crate::data::{CaptionProvider, ImageFeatureProvider};
use crate::error::{Error, Result};
use crate::nn::layers::sinusoidal_positions;
use crate::nn::{DecoderStack, EncoderStack, Linear, Matrix, MlpHead, ParamId, ParamStore, StackConfig, Tape, Var};
use crate::types::{AspectSpan, Instance, Sentiment, Task, MAX_ASPECTS};

/// Parameter-name prefixes of the model's component groups.
pub mod groups {
    pub const EMBED: &str = "embed";
    pub const SENTIMENT_LABELS: &str = "sentiment_labels";
    pub const IMAGE_PROJ: &str = "image_proj";
    pub const ENC_ASPECT: &str = "enc_aspect";
    pub const ENC_SENTIMENT: &str = "enc_sentiment";
    pub const DEC_COUNT: &str = "dec_count";
    pub const HEAD_COUNT: &str = "head_count";
    pub const DEC_ASPECT_PROMPT: &str = "dec_aspect_prompt";
    pub const HEAD_ASPECT_PROMPT: &str = "head_aspect_prompt";
    pub const DEC_SENTIMENT_PROMPT: &str = "dec_sentiment_prompt";
    pub const DEC_TASK: &str = "dec_task";

    pub const ALL: [&str; 11] = [
        EMBED,
        SENTIMENT_LABELS,
        IMAGE_PROJ,
        ENC_ASPECT,
        ENC_SENTIMENT,
        DEC_COUNT,
        HEAD_COUNT,
        DEC_ASPECT_PROMPT,
        HEAD_ASPECT_PROMPT,
        DEC_SENTIMENT_PROMPT,
        DEC_TASK,
    ];
}

/// The generative multimodal prompt model.
///
/// Parameters live in [`GmpModel::store`]; the remaining fields are handles
/// into it. The final task encoder has no weights of its own: it reuses the
/// aspect-branch encoder (or the sentiment-branch one with
/// `share_s_branch`).
#[derive(Debug, Clone)]
pub struct GmpModel {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub store: ParamStore,
    pub(crate) embed: ParamId,
    pub(crate) sentiment_labels: ParamId,
    pub(crate) image_proj: Linear,
    pub(crate) enc_aspect: EncoderStack,
    pub(crate) enc_sentiment: EncoderStack,
    pub(crate) dec_count: DecoderStack,
    pub(crate) head_count: MlpHead,
    pub(crate) dec_aspect_prompt: DecoderStack,
    pub(crate) heads_aspect_prompt: Vec<MlpHead>,
    pub(crate) dec_sentiment_prompt: DecoderStack,
    pub(crate) dec_task: DecoderStack,
    pub(crate) enc_positions: Matrix,
    pub(crate) dec_positions: Matrix,
}

impl GmpModel {
    /// Fresh model with seeded initialization.
    pub fn new(config: ModelConfig, vocab: Vocab) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let d = config.d;

        let normal = Normal::new(0.0, config.embed_std).unwrap();
        let mut table = |rows: usize| {
            Matrix::from_vec(rows, d, (0..rows * d).map(|_| normal.sample(&mut rng)).collect())
        };
        let embed = store.add(format!("{}.tokens", groups::EMBED), table(vocab.len()));
        let sentiment_labels = store.add(
            format!("{}.table", groups::SENTIMENT_LABELS),
            table(Sentiment::COUNT),
        );

        let image_proj = Linear::new(&mut store, groups::IMAGE_PROJ, config.d_v, config.l_i * d, &mut rng);
        let enc_cfg = StackConfig {
            d,
            n_heads: config.n_heads,
            n_layers: config.n_layers,
            ffn_hidden: config.ffn_mult * d,
            max_len: config.max_encoder_len(),
        };
        let dec_cfg = StackConfig {
            max_len: config.max_decoder_len(),
            ..enc_cfg
        };
        let enc_aspect = EncoderStack::new(&mut store, groups::ENC_ASPECT, enc_cfg, &mut rng);
        let enc_sentiment = EncoderStack::new(&mut store, groups::ENC_SENTIMENT, enc_cfg, &mut rng);
        let dec_count = DecoderStack::new(&mut store, groups::DEC_COUNT, dec_cfg, &mut rng);
        let head_count = MlpHead::new(&mut store, groups::HEAD_COUNT, &[d, d, MAX_ASPECTS], &mut rng);
        let dec_aspect_prompt = DecoderStack::new(&mut store, groups::DEC_ASPECT_PROMPT, dec_cfg, &mut rng);
        let heads_aspect_prompt = (1..=MAX_ASPECTS)
            .map(|k| {
                let name = format!("{}.{k}", groups::HEAD_ASPECT_PROMPT);
                MlpHead::new(&mut store, &name, &[2 * d, 2 * d, 2 * d], &mut rng)
            })
            .collect();
        let dec_sentiment_prompt =
            DecoderStack::new(&mut store, groups::DEC_SENTIMENT_PROMPT, dec_cfg, &mut rng);
        let dec_task = DecoderStack::new(&mut store, groups::DEC_TASK, dec_cfg, &mut rng);

        Ok(Self {
            enc_positions: sinusoidal_positions(enc_cfg.max_len, d),
            dec_positions: sinusoidal_positions(dec_cfg.max_len, d),
            config,
            vocab,
            store,
            embed,
            sentiment_labels,
            image_proj,
            enc_aspect,
            enc_sentiment,
            dec_count,
            head_count,
            dec_aspect_prompt,
            heads_aspect_prompt,
            dec_sentiment_prompt,
            dec_task,
        })
    }

    /// Same architecture with parameters taken from `store`, which must
    /// match this model's names and shapes.
    pub fn with_params(&self, store: ParamStore) -> Result<Self> {
        if store.len() != self.store.len() {
            return Err(Error::Config(format!(
                "parameter count mismatch: {} vs {}",
                store.len(),
                self.store.len()
            )));
        }
        for ((_, a, ma), (_, b, mb)) in self.store.iter().zip(store.iter()) {
            if a != b || ma.shape() != mb.shape() {
                return Err(Error::Config(format!("parameter {b} does not match {a}")));
            }
        }
        Ok(Self { store, ..self.clone() })
    }

    pub fn d(&self) -> usize {
        self.config.d
    }

    /// Encoder used for the prompted embedding.
    pub(crate) fn task_encoder(&self) -> &EncoderStack {
        if self.config.share_s_branch {
            &self.enc_sentiment
        } else {
            &self.enc_aspect
        }
    }

    /// Embedding rows for `ids`, `len x d`.
    pub fn embed(&self, t: &mut Tape, ids: &[usize]) -> Result<Var> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.vocab.len()) {
            return Err(Error::Vocab(bad));
        }
        let table = t.param(self.embed);
        Ok(t.gather(table, ids))
    }

    pub(crate) fn sentiment_table(&self, t: &mut Tape) -> Var {
        t.param(self.sentiment_labels)
    }

    /// Resolves tokens, image feature and gold labels of one instance.
    pub fn encode_instance(
        &self,
        instance: &Instance,
        images: &dyn ImageFeatureProvider,
        captions: &dyn CaptionProvider,
    ) -> Result<EncodedInstance> {
        let l_t = instance.text_len();
        if l_t == 0 {
            return Err(Error::Validation {
                id: instance.id.clone(),
                reason: "empty text".into(),
            });
        }
        if l_t > self.config.max_l_t {
            return Err(Error::Capacity { len: l_t, max: self.config.max_l_t });
        }
        let caption = captions.caption(instance);
        if caption.len() > self.config.max_l_cap {
            return Err(Error::Capacity { len: caption.len(), max: self.config.max_l_cap });
        }
        Ok(EncodedInstance {
            text_ids: self.vocab.ids(&instance.text_tokens),
            caption_ids: self.vocab.ids(caption),
            image: images.image_feature(instance, self.config.d_v)?,
            spans: instance.aspects.clone(),
            sentiments: instance.sentiments.clone(),
        })
    }
}

/// Model-ready view of an [`Instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    pub text_ids: Vec<usize>,
    pub caption_ids: Vec<usize>,
    pub image: Vec<f64>,
    pub spans: Vec<AspectSpan>,
    pub sentiments: Vec<Sentiment>,
}

impl EncodedInstance {
    pub fn text_len(&self) -> usize {
        self.text_ids.len()
    }

    pub fn n_gold(&self) -> usize {
        self.spans.len()
    }

    pub fn gold(&self, task: Task) -> crate::types::TripletSequence {
        let items = self
            .spans
            .iter()
            .zip(&self.sentiments)
            .map(|(&span, &s)| crate::types::Triplet {
                span,
                sentiment: task.has_sentiment().then_some(s),
            })
            .collect();
        crate::types::TripletSequence::new(task, items)
    }
}
