//! Final encoder-decoder pass: pointer distribution, losses and
//! grammar-constrained greedy decoding.

use alloc::vec::Vec;

use crate::codec::decode_targets;
use crate::config::Special;
use crate::error::{Error, Result};
use crate::model::GmpModel;
use crate::nn::{Tape, Var};
use crate::prompt::PromptedEmbedding;
use crate::types::{AspectSpan, Sentiment, TargetSymbol, Task, TripletSequence, MAX_ASPECTS};

/// Where the decoder is inside the current triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Begin,
    End { begin: usize },
    Sentiment,
}

/// Incremental state of one constrained decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationState {
    pub task: Task,
    pub text_len: usize,
    pub phase: Phase,
    pub emitted: Vec<usize>,
    pub n_hint: usize,
    pub triplets_done: usize,
    pub done: bool,
}

impl GenerationState {
    pub fn new(task: Task, text_len: usize, n_hint: usize) -> Self {
        Self {
            task,
            text_len,
            phase: Phase::Begin,
            emitted: Vec::new(),
            n_hint,
            triplets_done: 0,
            done: false,
        }
    }

    /// Whether target index `i` may be emitted next.
    pub fn allowed(&self, i: usize) -> bool {
        if self.done {
            return false;
        }
        match self.phase {
            Phase::Begin if self.triplets_done >= MAX_ASPECTS => i == 0,
            Phase::Begin => i <= self.text_len,
            Phase::End { begin } => (begin..=self.text_len).contains(&i),
            Phase::Sentiment => (self.text_len + 1..self.text_len + 1 + Sentiment::COUNT).contains(&i),
        }
    }

    pub fn push(&mut self, i: usize) -> Result<()> {
        if !self.allowed(i) {
            return Err(Error::Parse {
                position: self.emitted.len(),
                reason: "symbol not allowed by the grammar",
            });
        }
        self.emitted.push(i);
        self.phase = match self.phase {
            Phase::Begin if i == 0 => {
                self.done = true;
                Phase::Begin
            }
            Phase::Begin => Phase::End { begin: i },
            Phase::End { .. } if self.task.has_sentiment() => Phase::Sentiment,
            Phase::End { .. } | Phase::Sentiment => {
                self.triplets_done += 1;
                Phase::Begin
            }
        };
        Ok(())
    }

    /// Emitted symbols cut back to whole triplets and closed with EOS.
    pub fn valid_prefix(&self) -> Vec<usize> {
        let arity = self.task.arity();
        let body = if self.done { self.emitted.len() - 1 } else { self.emitted.len() };
        let mut out = self.emitted[..body - body % arity].to_vec();
        out.push(0);
        out
    }
}

/// Result of [`GmpModel::constrained_decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub sequence: TripletSequence,
    pub indices: Vec<usize>,
    /// `max_steps` ran out before EOS.
    pub truncated: bool,
}

/// Steps needed for five triplets plus EOS.
pub fn default_max_steps(task: Task) -> usize {
    task.arity() * MAX_ASPECTS + 1
}

impl GmpModel {
    /// Task-encoder pass over the prompted embedding.
    pub fn encode_prompted(&self, t: &mut Tape, e: &PromptedEmbedding) -> Result<Var> {
        self.task_encoder().forward(t, e.rows, Some(&self.enc_positions))
    }

    /// `[e_eos; E_T; E_S]`, one row per target index.
    pub fn target_table(&self, t: &mut Tape, text: Var) -> Var {
        let eos = self.embed(t, &[Special::Eos.id()]).expect("special token");
        let labels = self.sentiment_table(t);
        t.vstack(&[eos, text, labels])
    }

    /// Logits over the target space for every row of `h`.
    pub fn pointer_logits(&self, t: &mut Tape, h: Var, targets: Var) -> Var {
        t.matmul_bt(h, targets)
    }

    /// Decoder hidden states for the given target-index prefix (BOS first).
    fn decode_hidden(&self, t: &mut Tape, h_p: Var, targets: Var, prefix: &[usize]) -> Result<Var> {
        let bos = self.embed(t, &[Special::Bos.id()])?;
        let rows = t.gather(targets, prefix);
        let input = t.vstack(&[bos, rows]);
        self.dec_task.forward(t, h_p, input, Some(&self.dec_positions))
    }

    /// Teacher-forced mean cross-entropy over every gold step, EOS included.
    pub fn generation_loss(&self, t: &mut Tape, h_p: Var, text: Var, gold: &[usize]) -> Result<Var> {
        let l_t = t.shape(text).0;
        let space = TargetSymbol::space_size(l_t);
        if gold.last() != Some(&0) {
            return Err(Error::Parse { position: gold.len(), reason: "missing EOS" });
        }
        if let Some(pos) = gold.iter().position(|&g| g >= space) {
            return Err(Error::Parse { position: pos, reason: "index outside the target space" });
        }
        let targets = self.target_table(t, text);
        let h = self.decode_hidden(t, h_p, targets, &gold[..gold.len() - 1])?;
        let logits = self.pointer_logits(t, h, targets);
        Ok(t.cross_entropy(logits, gold))
    }

    /// `L_g + lambda * L_c`.
    pub fn total_loss(&self, t: &mut Tape, l_g: Var, l_c: Option<Var>, lambda: f64) -> Var {
        match l_c {
            Some(l_c) => {
                let weighted = t.scale(l_c, lambda);
                t.add(l_g, weighted)
            }
            None => l_g,
        }
    }

    /// Greedy decoding restricted by the triplet grammar. For MASC the span
    /// symbols come from `given_spans` and only sentiments are chosen.
    pub fn constrained_decode(
        &self,
        t: &mut Tape,
        h_p: Var,
        text: Var,
        task: Task,
        n_hint: usize,
        given_spans: Option<&[AspectSpan]>,
        max_steps: usize,
    ) -> Result<Decoded> {
        let l_t = t.shape(text).0;
        let targets = self.target_table(t, text);
        let mut state = GenerationState::new(task, l_t, n_hint);
        let forced = match (task, given_spans) {
            (Task::Masc, Some(spans)) => {
                if spans.len() > MAX_ASPECTS {
                    return Err(Error::CountOutOfRange(spans.len()));
                }
                let mut f = Vec::with_capacity(2 * spans.len());
                for s in spans {
                    s.check(l_t)?;
                    f.push((s.begin, s.end));
                }
                Some(f)
            }
            (Task::Masc, None) => return Err(Error::Arity("MASC decoding needs the aspect spans".into())),
            _ => None,
        };

        let mut steps = 0;
        while !state.done && steps < max_steps {
            let choice = match (&forced, state.phase) {
                (Some(spans), Phase::Begin) => spans.get(state.triplets_done).map_or(0, |s| s.0),
                (Some(spans), Phase::End { .. }) => spans[state.triplets_done].1,
                _ => {
                    let h = self.decode_hidden(t, h_p, targets, &state.emitted)?;
                    let last = t.shape(h).0 - 1;
                    let row = t.slice_rows(h, last, 1);
                    let logits = self.pointer_logits(t, row, targets);
                    argmax_allowed(&t.value(logits).data, &state)
                }
            };
            state.push(choice)?;
            steps += 1;
        }
        let truncated = !state.done;
        let indices = if truncated { state.valid_prefix() } else { state.emitted.clone() };
        let sequence = decode_targets(&indices, l_t, task)?;
        Ok(Decoded { sequence, indices, truncated })
    }
}

/// Highest-scoring index the grammar allows; NaN scores lose to any number.
pub fn argmax_allowed(logits: &[f64], state: &GenerationState) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in logits.iter().enumerate() {
        if !state.allowed(i) {
            continue;
        }
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v > b || (b.is_nan() && !v.is_nan()) => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i).unwrap_or(0)
}
