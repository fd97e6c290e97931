//! Image projection, the multimodal embedding layout and the dual encoders.

use alloc::vec::Vec;

use crate::config::Special;
use crate::error::{Error, Result};
use crate::model::GmpModel;
use crate::nn::{Matrix, Tape, Var};

/// Named region of an assembled embedding sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    ImgOpen,
    Image,
    ImgClose,
    Is,
    CapOpen,
    Caption,
    CapClose,
    PromOpen,
    /// Two aspect-prompt rows of group `k` (0-based).
    AspectPrompt(usize),
    /// Pooled gold-span embedding of group `k` (sentiment classification).
    AspectSummary(usize),
    Senti(usize),
    SentimentPrompt(usize),
    PromClose,
    Bos,
    Text,
    Eos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSpan {
    pub segment: Segment,
    pub start: usize,
    pub len: usize,
}

/// Contiguous, ordered segments covering an assembled sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LayoutMap {
    segments: Vec<SegmentSpan>,
}

impl LayoutMap {
    pub fn segments(&self) -> &[SegmentSpan] {
        &self.segments
    }

    pub fn total_len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.start + s.len)
    }

    pub fn find(&self, segment: Segment) -> Option<SegmentSpan> {
        self.segments.iter().copied().find(|s| s.segment == segment)
    }

    pub fn text(&self) -> SegmentSpan {
        self.find(Segment::Text).expect("every layout has a text segment")
    }

    /// Absolute row of 1-based text position `p`.
    pub fn text_row(&self, p: usize) -> Option<usize> {
        let text = self.text();
        (1..=text.len).contains(&p).then(|| text.start + p - 1)
    }

    /// Rows between the prompt delimiters, if a prompt segment exists.
    pub fn prompt_len(&self) -> Option<usize> {
        let open = self.find(Segment::PromOpen)?;
        let close = self.find(Segment::PromClose)?;
        Some(close.start - open.start - 1)
    }
}

/// Accumulates `(segment, rows)` pieces and stacks them.
pub(crate) struct LayoutBuilder {
    pieces: Vec<Var>,
    layout: LayoutMap,
    next: usize,
}

impl LayoutBuilder {
    pub(crate) fn new() -> Self {
        Self {
            pieces: Vec::new(),
            layout: LayoutMap::default(),
            next: 0,
        }
    }

    pub(crate) fn push(&mut self, t: &Tape, segment: Segment, rows: Var) {
        let len = t.shape(rows).0;
        self.layout.segments.push(SegmentSpan { segment, start: self.next, len });
        self.next += len;
        self.pieces.push(rows);
    }

    pub(crate) fn push_special(&mut self, t: &mut Tape, model: &GmpModel, segment: Segment, s: Special) {
        let row = model.embed(t, &[s.id()]).expect("special tokens are always in vocabulary");
        self.push(t, segment, row);
    }

    pub(crate) fn finish(self, t: &mut Tape) -> (Var, LayoutMap) {
        (t.vstack(&self.pieces), self.layout)
    }
}

/// Rows of the three content segments shared by every layout.
#[derive(Debug, Clone, Copy)]
pub struct BaseSegments {
    pub image: Var,
    pub caption: Var,
    pub text: Var,
}

impl GmpModel {
    /// `Reshape(W_i f + b_i)` into `l_i x d` image slots.
    pub fn project_image(&self, t: &mut Tape, feature: &[f64]) -> Result<Var> {
        if feature.len() != self.config.d_v {
            return Err(Error::Dimension { expected: self.config.d_v, got: feature.len() });
        }
        let f = t.leaf(Matrix::row_vector(feature.to_vec()));
        let flat = self.image_proj.forward(t, f);
        Ok(t.reshape(flat, self.config.l_i, self.config.d))
    }

    /// Embeds text and caption tokens and projects the image.
    pub fn base_segments(
        &self,
        t: &mut Tape,
        image: &[f64],
        caption_ids: &[usize],
        text_ids: &[usize],
    ) -> Result<BaseSegments> {
        let image = self.project_image(t, image)?;
        let caption = self.embed(t, caption_ids)?;
        let text = self.embed(t, text_ids)?;
        Ok(BaseSegments { image, caption, text })
    }

    /// Emits `[img, V, /img, is, cap, E_C, /cap]`.
    pub(crate) fn push_image_caption(&self, t: &mut Tape, b: &mut LayoutBuilder, base: &BaseSegments) {
        b.push_special(t, self, Segment::ImgOpen, Special::Img);
        b.push(t, Segment::Image, base.image);
        b.push_special(t, self, Segment::ImgClose, Special::ImgEnd);
        b.push_special(t, self, Segment::Is, Special::Is);
        b.push_special(t, self, Segment::CapOpen, Special::Cap);
        b.push(t, Segment::Caption, base.caption);
        b.push_special(t, self, Segment::CapClose, Special::CapEnd);
    }

    /// Emits `[bos, E_T, eos]`.
    pub(crate) fn push_text(&self, t: &mut Tape, b: &mut LayoutBuilder, base: &BaseSegments) {
        b.push_special(t, self, Segment::Bos, Special::Bos);
        b.push(t, Segment::Text, base.text);
        b.push_special(t, self, Segment::Eos, Special::Eos);
    }

    /// `E_M = [img, V, /img, is, cap, E_C, /cap, bos, E_T, eos]`,
    /// of length `l_i + l_cap + l_t + 7`.
    pub fn assemble_e_m(&self, t: &mut Tape, base: &BaseSegments) -> Result<(Var, LayoutMap)> {
        self.check_widths(t, base)?;
        let mut b = LayoutBuilder::new();
        self.push_image_caption(t, &mut b, base);
        self.push_text(t, &mut b, base);
        Ok(b.finish(t))
    }

    pub(crate) fn check_widths(&self, t: &Tape, base: &BaseSegments) -> Result<()> {
        for v in [base.image, base.caption, base.text] {
            let (_, cols) = t.shape(v);
            if cols != self.config.d {
                return Err(Error::Dimension { expected: self.config.d, got: cols });
            }
        }
        Ok(())
    }

    /// `(H^a_M, H^s_M)`, each `l_m x d`.
    pub fn encode_dual(&self, t: &mut Tape, e_m: Var) -> Result<(Var, Var)> {
        let h_a = self.enc_aspect.forward(t, e_m, Some(&self.enc_positions))?;
        let h_s = self.enc_sentiment.forward(t, e_m, Some(&self.enc_positions))?;
        Ok((h_a, h_s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelConfig, Vocab};

    fn model(l_i: usize) -> GmpModel {
        let cfg = ModelConfig { d: 8, n_heads: 2, d_v: 16, l_i, ..Default::default() };
        GmpModel::new(cfg, Vocab::build(["a", "b", "c", "d"])).unwrap()
    }

    #[test]
    fn image_projection_shapes() {
        let m = model(4);
        let mut t = Tape::new(&m.store);
        let v = m.project_image(&mut t, &[0.5; 16]).unwrap();
        assert_eq!(t.shape(v), (4, 8));
        assert!(matches!(m.project_image(&mut t, &[0.5; 15]), Err(Error::Dimension { .. })));

        let m0 = model(0);
        let mut t = Tape::new(&m0.store);
        let v = m0.project_image(&mut t, &[0.5; 16]).unwrap();
        assert_eq!(t.shape(v), (0, 8));
    }

    #[test]
    fn zero_image_gives_bias_only() {
        let mut m = model(4);
        let bias = m.image_proj.bias;
        for (i, x) in m.store.get_mut(bias).data.iter_mut().enumerate() {
            *x = i as f64 * 0.01;
        }
        let mut t = Tape::new(&m.store);
        let v = m.project_image(&mut t, &[0.0; 16]).unwrap();
        assert_eq!(t.value(v).data, m.store.get(bias).data);

        let mut m = model(4);
        m.store.get_mut(bias).data.fill(0.0);
        let mut t = Tape::new(&m.store);
        let v = m.project_image(&mut t, &[0.0; 16]).unwrap();
        assert!(t.value(v).data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn e_m_layout() {
        let m = model(4);
        let mut t = Tape::new(&m.store);
        let text: Vec<usize> = (0..20).map(|i| 13 + i % 4).collect();
        let base = m.base_segments(&mut t, &[0.1; 16], &[13, 14, 15, 16, 13, 14, 15, 16], &text).unwrap();
        let (e_m, layout) = m.assemble_e_m(&mut t, &base).unwrap();
        assert_eq!(t.shape(e_m), (39, 8));
        assert_eq!(layout.total_len(), 39);
        for p in 1..=20 {
            let row = layout.text_row(p).unwrap();
            assert_eq!(t.value(e_m).row(row), t.value(base.text).row(p - 1));
        }
        assert_eq!(layout.text_row(0), None);
        assert_eq!(layout.text_row(21), None);

        let base = m.base_segments(&mut t, &[0.1; 16], &[], &text).unwrap();
        let (e_m, layout) = m.assemble_e_m(&mut t, &base).unwrap();
        assert_eq!(t.shape(e_m).0, 4 + 20 + 7);
        assert_eq!(layout.find(Segment::Caption).unwrap().len, 0);
    }

    #[test]
    fn dual_encoders_differ() {
        let m = model(2);
        let mut t = Tape::new(&m.store);
        let base = m.base_segments(&mut t, &[0.3; 16], &[13], &[14, 15, 16]).unwrap();
        let (e_m, _) = m.assemble_e_m(&mut t, &base).unwrap();
        let (a, s) = m.encode_dual(&mut t, e_m).unwrap();
        assert_eq!(t.shape(a), (2 + 1 + 3 + 7, 8));
        assert_eq!(t.shape(a), t.shape(s));
        assert!(t.value(a).max_abs_diff(t.value(s)) > 1e-3);
    }

    #[test]
    fn unknown_token_id_is_rejected() {
        let m = model(1);
        let mut t = Tape::new(&m.store);
        assert_eq!(m.embed(&mut t, &[999]), Err(Error::Vocab(999)));
        let e = m.embed(&mut t, &[]).unwrap();
        assert_eq!(t.shape(e), (0, 8));
        let e = m.embed(&mut t, &[13, 14, 13]).unwrap();
        assert_eq!(t.value(e).row(0), t.value(e).row(2));
    }
}
