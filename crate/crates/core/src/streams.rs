//! Prompt generators: aspect count, aspect-oriented prompts and the
//! sentiment-oriented prompt.

use alloc::vec::Vec;

use crate::config::Special;
use crate::error::{Error, Result};
use crate::model::GmpModel;
use crate::nn::{Tape, Var};
use crate::types::MAX_ASPECTS;

/// Generated prompts for one instance.
#[derive(Debug, Clone)]
pub struct PromptBundle {
    /// `1 x 5` logits over counts `1..=5`, when the count stream ran.
    pub count_logits: Option<Var>,
    /// Number of prompt groups actually built.
    pub n_used: usize,
    /// One `2 x d` block per aspect group.
    pub aspect_prompts: Vec<Var>,
    /// `n_used x d` sentiment prompt rows.
    pub sentiment_prompts: Option<Var>,
}

fn check_count(n: usize) -> Result<()> {
    if (1..=MAX_ASPECTS).contains(&n) {
        Ok(())
    } else {
        Err(Error::CountOutOfRange(n))
    }
}

/// Predicted count from logits: argmax + 1, in `1..=5`.
pub fn count_from_logits(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best + 1
}

impl GmpModel {
    fn bos_row(&self, t: &mut Tape) -> Var {
        self.embed(t, &[Special::Bos.id()]).expect("bos is a special token")
    }

    /// One count-decoder step from BOS over `H^a_M`, then the count head.
    pub fn predict_aspect_count(&self, t: &mut Tape, h_a: Var) -> Result<Var> {
        let bos = self.bos_row(t);
        let h = self.dec_count.forward(t, h_a, bos, Some(&self.dec_positions))?;
        self.head_count.forward(t, h)
    }

    /// Cross-entropy against the gold count clamped to 5.
    pub fn count_loss(&self, t: &mut Tape, count_logits: Var, n_gold: usize) -> Result<Var> {
        if n_gold == 0 {
            return Err(Error::CountOutOfRange(0));
        }
        Ok(t.cross_entropy(count_logits, &[n_gold.min(MAX_ASPECTS) - 1]))
    }

    /// Two self-conditioned decoder steps from BOS give `h1, h2`; head `k`
    /// maps `[h1; h2]` to the `2 x d` prompt of group `k`.
    pub fn generate_aspect_prompts(&self, t: &mut Tape, h_a: Var, n: usize) -> Result<Vec<Var>> {
        check_count(n)?;
        let d = self.d();
        let pos = Some(&self.dec_positions);
        let bos = self.bos_row(t);
        let h1 = self.dec_aspect_prompt.forward(t, h_a, bos, pos)?;
        let prefix = t.vstack(&[bos, h1]);
        let out = self.dec_aspect_prompt.forward(t, h_a, prefix, pos)?;
        let h2 = t.slice_rows(out, 1, 1);
        let joined = t.hstack(&[h1, h2]);
        self.heads_aspect_prompt[..n]
            .iter()
            .map(|head| {
                let p = head.forward(t, joined)?;
                Ok(t.reshape(p, 2, d))
            })
            .collect()
    }

    /// One decoder step from BOS over `H^s_M` gives `P_s`, repeated `n`
    /// times. With `distinct`, runs `n` self-conditioned steps instead and
    /// returns one row per step.
    pub fn generate_sentiment_prompt(&self, t: &mut Tape, h_s: Var, n: usize, distinct: bool) -> Result<Var> {
        check_count(n)?;
        let pos = Some(&self.dec_positions);
        let bos = self.bos_row(t);
        if !distinct {
            let p_s = self.dec_sentiment_prompt.forward(t, h_s, bos, pos)?;
            return Ok(t.repeat_rows(p_s, n));
        }
        let mut rows = Vec::with_capacity(n);
        let mut prefix = bos;
        for step in 0..n {
            let out = self.dec_sentiment_prompt.forward(t, h_s, prefix, pos)?;
            let row = t.slice_rows(out, step, 1);
            rows.push(row);
            prefix = t.vstack(&[prefix, row]);
        }
        Ok(t.vstack(&rows))
    }
}
