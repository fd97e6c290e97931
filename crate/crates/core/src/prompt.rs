//! Task-specific prompted embeddings.

use alloc::format;
use alloc::vec::Vec;

use crate::config::Special;
use crate::encoder::{BaseSegments, LayoutBuilder, LayoutMap, Segment};
use crate::error::{Error, Result};
use crate::model::GmpModel;
use crate::nn::{Tape, Var};
use crate::types::{AspectSpan, Task, MAX_ASPECTS};

/// Assembled encoder input plus the position of every segment.
#[derive(Debug, Clone)]
pub struct PromptedEmbedding {
    pub rows: Var,
    pub layout: LayoutMap,
    pub task: Task,
}

impl PromptedEmbedding {
    pub fn len(&self) -> usize {
        self.layout.total_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `l_m`: length of the unprompted multimodal embedding.
pub fn base_len(l_i: usize, l_cap: usize, l_t: usize) -> usize {
    l_i + l_cap + l_t + 7
}

/// Length of the prompted embedding for `task` with `n` prompt groups.
pub fn prompted_len(task: Task, l_i: usize, l_cap: usize, l_t: usize, n: usize) -> usize {
    let per_group = match task {
        Task::Jmasa => 4,
        Task::Masc => 3,
        Task::Mate => 2,
    };
    base_len(l_i, l_cap, l_t) + 2 + per_group * n
}

fn check_n(n: usize) -> Result<()> {
    if (1..=MAX_ASPECTS).contains(&n) {
        Ok(())
    } else {
        Err(Error::CountOutOfRange(n))
    }
}

impl GmpModel {
    fn check_aspect_prompts(&self, t: &Tape, ap: &[Var], n: usize) -> Result<()> {
        check_n(n)?;
        if ap.len() != n {
            return Err(Error::Arity(format!("{} aspect prompt groups for n={n}", ap.len())));
        }
        for &p in ap {
            if t.shape(p) != (2, self.d()) {
                let (r, c) = t.shape(p);
                return Err(Error::Arity(format!("aspect prompt group is {r}x{c}, expected 2x{}", self.d())));
            }
        }
        Ok(())
    }

    fn check_sentiment_prompts(&self, t: &Tape, sp: Var, n: usize) -> Result<()> {
        if t.shape(sp) != (n, self.d()) {
            let (r, c) = t.shape(sp);
            return Err(Error::Arity(format!("sentiment prompt is {r}x{c}, expected {n}x{}", self.d())));
        }
        Ok(())
    }

    /// Two placeholder rows per group, standing in for generated aspect prompts.
    pub fn aspect_placeholders(&self, t: &mut Tape, n: usize) -> Result<Vec<Var>> {
        check_n(n)?;
        let id = Special::AspectPlaceholder.id();
        let rows = self.embed(t, &[id, id])?;
        Ok(alloc::vec![rows; n])
    }

    /// `n` placeholder rows standing in for the sentiment prompt.
    pub fn sentiment_placeholders(&self, t: &mut Tape, n: usize) -> Result<Var> {
        check_n(n)?;
        self.embed(t, &alloc::vec![Special::SentimentPlaceholder.id(); n])
    }

    fn finish_prompted(
        &self,
        t: &mut Tape,
        mut b: LayoutBuilder,
        base: &BaseSegments,
        task: Task,
    ) -> PromptedEmbedding {
        b.push_special(t, self, Segment::PromClose, Special::PromEnd);
        self.push_text(t, &mut b, base);
        let (rows, layout) = b.finish(t);
        PromptedEmbedding { rows, layout, task }
    }

    fn open_prompt(&self, t: &mut Tape, base: &BaseSegments) -> LayoutBuilder {
        let mut b = LayoutBuilder::new();
        self.push_image_caption(t, &mut b, base);
        b.push_special(t, self, Segment::PromOpen, Special::Prom);
        b
    }

    /// `[.., prom, {P_a^k, senti, SP_k} x n, /prom, bos, E_T, eos]`.
    pub fn assemble_jmasa(
        &self,
        t: &mut Tape,
        base: &BaseSegments,
        ap: &[Var],
        sp: Var,
        n: usize,
    ) -> Result<PromptedEmbedding> {
        self.check_widths(t, base)?;
        self.check_aspect_prompts(t, ap, n)?;
        self.check_sentiment_prompts(t, sp, n)?;
        let mut b = self.open_prompt(t, base);
        for (k, &p) in ap.iter().enumerate() {
            b.push(t, Segment::AspectPrompt(k), p);
            b.push_special(t, self, Segment::Senti(k), Special::Senti);
            let row = t.slice_rows(sp, k, 1);
            b.push(t, Segment::SentimentPrompt(k), row);
        }
        Ok(self.finish_prompted(t, b, base, Task::Jmasa))
    }

    /// Groups `{mean(E_T[span]), senti, SP_k}` for the given spans.
    pub fn assemble_masc(
        &self,
        t: &mut Tape,
        base: &BaseSegments,
        sp: Var,
        spans: &[AspectSpan],
    ) -> Result<PromptedEmbedding> {
        self.check_widths(t, base)?;
        let n = spans.len();
        check_n(n)?;
        self.check_sentiment_prompts(t, sp, n)?;
        let l_t = t.shape(base.text).0;
        for s in spans {
            s.check(l_t)?;
        }
        let mut b = self.open_prompt(t, base);
        for (k, s) in spans.iter().enumerate() {
            let rows = t.slice_rows(base.text, s.begin - 1, s.len());
            let summary = t.mean_rows(rows);
            b.push(t, Segment::AspectSummary(k), summary);
            b.push_special(t, self, Segment::Senti(k), Special::Senti);
            let row = t.slice_rows(sp, k, 1);
            b.push(t, Segment::SentimentPrompt(k), row);
        }
        Ok(self.finish_prompted(t, b, base, Task::Masc))
    }

    /// Groups hold only the two aspect-prompt rows.
    pub fn assemble_mate(&self, t: &mut Tape, base: &BaseSegments, ap: &[Var], n: usize) -> Result<PromptedEmbedding> {
        self.check_widths(t, base)?;
        self.check_aspect_prompts(t, ap, n)?;
        let mut b = self.open_prompt(t, base);
        for (k, &p) in ap.iter().enumerate() {
            b.push(t, Segment::AspectPrompt(k), p);
        }
        Ok(self.finish_prompted(t, b, base, Task::Mate))
    }

    /// Prompt-free input: plain `E_M`.
    pub fn assemble_unprompted(&self, t: &mut Tape, base: &BaseSegments, task: Task) -> Result<PromptedEmbedding> {
        let (rows, layout) = self.assemble_e_m(t, base)?;
        Ok(PromptedEmbedding { rows, layout, task })
    }
}
