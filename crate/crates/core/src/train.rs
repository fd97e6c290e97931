//! Per-instance forward passes, the training loop and evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::encode_targets;
use crate::config::Ablations;
use crate::encoder::BaseSegments;
use crate::error::{Error, Result};
use crate::generation::default_max_steps;
use crate::metrics::{count_accuracy, task_metrics, MetricsReport};
use crate::model::{EncodedInstance, GmpModel};
use crate::nn::{Adam, Gradients, ParamStore, Tape, Var};
use crate::prompt::PromptedEmbedding;
use crate::streams::count_from_logits;
use crate::types::{Task, TripletSequence, MAX_ASPECTS};

/// Task and ablation switches of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Setup {
    pub task: Task,
    pub ablations: Ablations,
}

impl Setup {
    pub fn new(task: Task, ablations: Ablations) -> Result<Self> {
        ablations.validate(task)?;
        Ok(Self { task, ablations })
    }

    /// Whether the aspect-count stream runs.
    pub fn uses_count(&self) -> bool {
        self.task != Task::Masc && !self.ablations.no_multitask
    }

    pub fn lambda(&self, configured: f64) -> f64 {
        if self.uses_count() {
            configured
        } else {
            0.0
        }
    }
}

/// Loss components of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct LossParts {
    pub total: Var,
    pub generation: Var,
    pub count: Option<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sequence: TripletSequence,
    /// Predicted aspect count, when the count stream ran.
    pub count: Option<usize>,
    pub truncated: bool,
}

/// Gold sequence for training, cut to at most five triplets.
pub fn training_targets(inst: &EncodedInstance, task: Task) -> Result<Vec<usize>> {
    let mut gold = inst.gold(task);
    gold.items.truncate(MAX_ASPECTS);
    encode_targets(&gold, inst.text_len())
}

impl GmpModel {
    fn base_for(&self, t: &mut Tape, inst: &EncodedInstance, ab: &Ablations) -> Result<BaseSegments> {
        let zeros;
        let image: &[f64] = if ab.no_image {
            zeros = vec![0.0; self.config.d_v];
            &zeros
        } else {
            &inst.image
        };
        let caption: &[usize] = if ab.no_caption { &[] } else { &inst.caption_ids };
        self.base_segments(t, image, caption, &inst.text_ids)
    }

    /// Builds the prompted embedding with `n` groups, or `E_M` under `no_prompt`.
    fn prompted(
        &self,
        t: &mut Tape,
        base: &BaseSegments,
        h_a: Option<Var>,
        h_s: Option<Var>,
        inst: &EncodedInstance,
        setup: &Setup,
        n: usize,
    ) -> Result<PromptedEmbedding> {
        let ab = &setup.ablations;
        if ab.no_prompt {
            return self.assemble_unprompted(t, base, setup.task);
        }
        let ap = |m: &Self, t: &mut Tape| match (ab.no_gap, h_a) {
            (false, Some(h)) => m.generate_aspect_prompts(t, h, n),
            _ => m.aspect_placeholders(t, n),
        };
        let sp = |m: &Self, t: &mut Tape| match (ab.no_gsp, h_s) {
            (false, Some(h)) => m.generate_sentiment_prompt(t, h, n, ab.dsp),
            _ => m.sentiment_placeholders(t, n),
        };
        match setup.task {
            Task::Jmasa => {
                let a = ap(self, t)?;
                let s = sp(self, t)?;
                self.assemble_jmasa(t, base, &a, s, n)
            }
            Task::Mate => {
                let a = ap(self, t)?;
                self.assemble_mate(t, base, &a, n)
            }
            Task::Masc => {
                let s = sp(self, t)?;
                self.assemble_masc(t, base, s, &inst.spans[..n])
            }
        }
    }

    /// Runs the encoders the setup needs: `(H^a_M, H^s_M)`.
    fn branches(&self, t: &mut Tape, e_m: Var, setup: &Setup) -> Result<(Option<Var>, Option<Var>)> {
        let ab = &setup.ablations;
        let pos = Some(&self.enc_positions);
        let need_a = setup.uses_count() || (!ab.no_prompt && !ab.no_gap && setup.task != Task::Masc);
        let need_s = !ab.no_prompt && !ab.no_gsp && setup.task != Task::Mate;
        let h_a = if need_a { Some(self.enc_aspect.forward(t, e_m, pos)?) } else { None };
        let h_s = if need_s { Some(self.enc_sentiment.forward(t, e_m, pos)?) } else { None };
        Ok((h_a, h_s))
    }

    /// Teacher-forced training forward pass: `L = L_g + lambda * L_c`.
    pub fn forward_train(&self, t: &mut Tape, inst: &EncodedInstance, setup: &Setup) -> Result<LossParts> {
        let n_gold = inst.n_gold();
        if n_gold == 0 {
            return Err(Error::CountOutOfRange(0));
        }
        let n = n_gold.min(MAX_ASPECTS);
        let gold = training_targets(inst, setup.task)?;
        let base = self.base_for(t, inst, &setup.ablations)?;
        let (e_m, _) = self.assemble_e_m(t, &base)?;
        let (h_a, h_s) = self.branches(t, e_m, setup)?;
        let count = match (setup.uses_count(), h_a) {
            (true, Some(h)) => {
                let logits = self.predict_aspect_count(t, h)?;
                Some(self.count_loss(t, logits, n_gold)?)
            }
            _ => None,
        };
        let prompted = self.prompted(t, &base, h_a, h_s, inst, setup, n)?;
        let h_p = self.encode_prompted(t, &prompted)?;
        let generation = self.generation_loss(t, h_p, base.text, &gold)?;
        let total = self.total_loss(t, generation, count, setup.lambda(self.config.lambda));
        Ok(LossParts { total, generation, count })
    }

    /// Inference: predicted count (or 5 without the count stream; gold for
    /// MASC), prompts, then constrained decoding.
    pub fn predict(&self, inst: &EncodedInstance, setup: &Setup) -> Result<Prediction> {
        let mut t = Tape::new(&self.store);
        let t = &mut t;
        let base = self.base_for(t, inst, &setup.ablations)?;
        let (e_m, _) = self.assemble_e_m(t, &base)?;
        let (h_a, h_s) = self.branches(t, e_m, setup)?;
        let mut count = None;
        let n = match setup.task {
            Task::Masc => inst.n_gold(),
            _ if setup.uses_count() => {
                let logits = self.predict_aspect_count(t, h_a.expect("count stream needs H^a"))?;
                let c = count_from_logits(&t.value(logits).data);
                count = Some(c);
                c
            }
            _ => MAX_ASPECTS,
        };
        let prompted = self.prompted(t, &base, h_a, h_s, inst, setup, n)?;
        let h_p = self.encode_prompted(t, &prompted)?;
        let spans = (setup.task == Task::Masc).then_some(&inst.spans[..]);
        let out = self.constrained_decode(t, h_p, base.text, setup.task, n, spans, default_max_steps(setup.task))?;
        Ok(Prediction { sequence: out.sequence, count, truncated: out.truncated })
    }

    /// Metrics of the model's predictions over `data`.
    pub fn evaluate(&self, data: &[EncodedInstance], setup: &Setup) -> Result<(MetricsReport, Vec<Prediction>)> {
        let preds = data.iter().map(|inst| self.predict(inst, setup)).collect::<Result<Vec<_>>>()?;
        let seqs: Vec<TripletSequence> = preds.iter().map(|p| p.sequence.clone()).collect();
        let golds: Vec<TripletSequence> = data.iter().map(|i| i.gold(setup.task)).collect();
        let mut report = task_metrics(setup.task, &seqs, &golds)?;
        if setup.uses_count() {
            let pc: Vec<usize> = preds.iter().map(|p| p.count.unwrap_or(0)).collect();
            let gc: Vec<usize> = data.iter().map(|i| i.n_gold()).collect();
            report.count_accuracy = Some(count_accuracy(&pc, &gc)?);
        }
        Ok((report, preds))
    }

    /// Mean batch loss and its gradients; parameters are untouched.
    /// Deterministic: dropout is off.
    pub fn batch_gradients(&self, batch: &[&EncodedInstance], setup: &Setup) -> Result<(BatchLoss, Gradients)> {
        self.batch_gradients_with(batch, setup, None)
    }

    /// As [`Self::batch_gradients`], with dropout drawn from `dropout_seed`.
    pub fn batch_gradients_with(
        &self,
        batch: &[&EncodedInstance],
        setup: &Setup,
        dropout_seed: Option<u64>,
    ) -> Result<(BatchLoss, Gradients)> {
        let mut t = match dropout_seed {
            Some(seed) => Tape::with_dropout(&self.store, self.config.dropout, seed),
            None => Tape::new(&self.store),
        };
        let mut totals = Vec::with_capacity(batch.len());
        let mut stats = BatchLoss::default();
        for inst in batch {
            let parts = self.forward_train(&mut t, inst, setup)?;
            stats.total += t.scalar(parts.total);
            stats.generation += t.scalar(parts.generation);
            stats.count += parts.count.map_or(0.0, |c| t.scalar(c));
            totals.push(parts.total);
        }
        let sum = t.sum(&totals);
        let loss = t.scale(sum, 1.0 / batch.len() as f64);
        let mut grads = Gradients::zeros_like(&self.store);
        t.backward(loss, &mut grads);
        Ok((stats, grads))
    }
}

/// Summed loss components over a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    pub generation: f64,
    pub count: f64,
}

impl BatchLoss {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.generation.is_finite() && self.count.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Per-instance means.
    pub loss: f64,
    pub generation: f64,
    pub count: f64,
    pub dev: Option<MetricsReport>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub history: Vec<EpochStats>,
    /// Epoch whose parameters were kept (0 if no epoch beat the initial state).
    pub best_epoch: usize,
    pub best_dev: Option<MetricsReport>,
}

/// Stateful trainer: optimizer plus epoch shuffling.
pub struct Trainer {
    pub setup: Setup,
    pub optimizer: Adam,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: &GmpModel, setup: Setup) -> Self {
        Self {
            setup,
            optimizer: Adam::new(&model.store, model.config.effective_lr())
                .with_weight_decay(model.config.weight_decay),
            rng: ChaCha8Rng::seed_from_u64(model.config.seed ^ 0x5eed),
            epoch: 0,
        }
    }

    /// One pass over `data` in shuffled batches. A non-finite loss or
    /// gradient aborts before the offending update is applied.
    pub fn train_epoch(&mut self, model: &mut GmpModel, data: &[EncodedInstance]) -> Result<EpochStats> {
        self.epoch += 1;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut sum = BatchLoss::default();
        for (b, chunk) in order.chunks(model.config.batch_size).enumerate() {
            let batch: Vec<&EncodedInstance> = chunk.iter().map(|&i| &data[i]).collect();
            let seed = self.rng.random::<u64>();
            let (loss, grads) = model.batch_gradients_with(&batch, &self.setup, Some(seed))?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence { epoch: self.epoch, batch: b });
            }
            self.optimizer.step(&mut model.store, &grads);
            sum.total += loss.total;
            sum.generation += loss.generation;
            sum.count += loss.count;
        }
        let n = data.len().max(1) as f64;
        Ok(EpochStats {
            epoch: self.epoch,
            loss: sum.total / n,
            generation: sum.generation / n,
            count: sum.count / n,
            dev: None,
        })
    }

    /// Trains for `config.epochs`, scoring `dev` after each epoch and
    /// keeping the best-scoring parameters. With `patience > 0`, stops once
    /// that many epochs pass without improvement. `on_epoch` may return
    /// `false` to stop early.
    pub fn fit(
        &mut self,
        model: &mut GmpModel,
        train: &[EncodedInstance],
        dev: &[EncodedInstance],
        mut on_epoch: impl FnMut(&EpochStats) -> bool,
    ) -> Result<FitOutcome> {
        let mut history = Vec::new();
        let mut best: Option<(f64, usize, ParamStore, MetricsReport)> = None;
        let mut since_best = 0;
        for _ in 0..model.config.epochs {
            let mut stats = self.train_epoch(model, train)?;
            if !dev.is_empty() {
                let (report, _) = model.evaluate(dev, &self.setup)?;
                let score = report.headline();
                if best.as_ref().is_none_or(|b| score > b.0) {
                    best = Some((score, stats.epoch, model.store.clone(), report));
                    since_best = 0;
                } else {
                    since_best += 1;
                }
                stats.dev = Some(report);
            }
            let keep_going = on_epoch(&stats);
            history.push(stats);
            let patience = model.config.patience;
            if !keep_going || (patience > 0 && since_best >= patience) {
                break;
            }
        }
        let (best_epoch, best_dev) = match best {
            Some((_, epoch, store, report)) => {
                model.store = store;
                (epoch, Some(report))
            }
            None => (history.last().map_or(0, |s| s.epoch), None),
        };
        Ok(FitOutcome { history, best_epoch, best_dev })
    }
}
