//! Domain vocabulary shared by every other module.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Maximum number of aspects the count subtask distinguishes.
pub const MAX_ASPECTS: usize = 5;

/// Sentiment polarity. The declaration order fixes the target-space layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sentiment {
    Pos,
    Neu,
    Neg,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Pos, Sentiment::Neu, Sentiment::Neg];
    pub const COUNT: usize = 3;

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Pos => "POS",
            Sentiment::Neu => "NEU",
            Sentiment::Neg => "NEG",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "POS" | "POSITIVE" => Ok(Sentiment::Pos),
            "NEU" | "NEUTRAL" => Ok(Sentiment::Neu),
            "NEG" | "NEGATIVE" => Ok(Sentiment::Neg),
            other => Err(Error::Config(format!("unknown sentiment {other:?}"))),
        }
    }
}

/// Inclusive 1-based token span into the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AspectSpan {
    pub begin: usize,
    pub end: usize,
}

impl AspectSpan {
    pub fn new(begin: usize, end: usize) -> Self {
        Self { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.begin
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks `1 <= begin <= end <= text_len`.
    pub fn check(&self, text_len: usize) -> Result<()> {
        if self.begin == 0 || self.begin > self.end || self.end > text_len {
            return Err(Error::SpanOutOfRange {
                begin: self.begin,
                end: self.end,
                len: text_len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SplitTag {
    #[default]
    Train,
    Dev,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Dev => "dev",
            SplitTag::Test => "test",
        }
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitTag::Train),
            "dev" => Ok(SplitTag::Dev),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// One text/image sample with its gold aspects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Instance {
    pub id: String,
    pub text_tokens: Vec<String>,
    pub image_feature: Option<Vec<f64>>,
    pub caption_tokens: Option<Vec<String>>,
    pub aspects: Vec<AspectSpan>,
    pub sentiments: Vec<Sentiment>,
    pub split: SplitTag,
}

impl Instance {
    pub fn text_len(&self) -> usize {
        self.text_tokens.len()
    }

    pub fn n_aspects(&self) -> usize {
        self.aspects.len()
    }

    /// Surface tokens of the `k`-th aspect term.
    pub fn aspect_term(&self, k: usize) -> &[String] {
        let span = self.aspects[k];
        &self.text_tokens[span.begin - 1..span.end]
    }

    /// Enforces the labeled-instance invariants: at least one aspect, one
    /// sentiment per aspect, in-range spans sorted by begin and non-overlapping.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Validation {
            id: self.id.clone(),
            reason,
        };
        if self.aspects.is_empty() {
            return Err(fail("no aspects".to_string()));
        }
        if self.aspects.len() != self.sentiments.len() {
            return Err(fail(format!(
                "{} aspects but {} sentiments",
                self.aspects.len(),
                self.sentiments.len()
            )));
        }
        let len = self.text_len();
        let mut prev_end = 0;
        for span in &self.aspects {
            span.check(len).map_err(|e| fail(e.to_string()))?;
            if span.begin <= prev_end {
                return Err(fail(format!(
                    "span ({}, {}) overlaps or precedes the previous span",
                    span.begin, span.end
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }

    /// Gold triplets for `task`.
    pub fn triplets(&self, task: Task) -> TripletSequence {
        let items = self
            .aspects
            .iter()
            .zip(&self.sentiments)
            .map(|(&span, &s)| Triplet {
                span,
                sentiment: task.has_sentiment().then_some(s),
            })
            .collect();
        TripletSequence { task, items }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Jmasa,
    Masc,
    Mate,
}

impl Task {
    pub fn has_sentiment(self) -> bool {
        !matches!(self, Task::Mate)
    }

    /// Symbols per triplet in the flat encoding.
    pub fn arity(self) -> usize {
        if self.has_sentiment() {
            3
        } else {
            2
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Jmasa => "jmasa",
            Task::Masc => "masc",
            Task::Mate => "mate",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jmasa" => Ok(Task::Jmasa),
            "masc" => Ok(Task::Masc),
            "mate" => Ok(Task::Mate),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub span: AspectSpan,
    pub sentiment: Option<Sentiment>,
}

impl Triplet {
    pub fn new(begin: usize, end: usize, sentiment: Sentiment) -> Self {
        Self {
            span: AspectSpan::new(begin, end),
            sentiment: Some(sentiment),
        }
    }

    pub fn span_only(begin: usize, end: usize) -> Self {
        Self {
            span: AspectSpan::new(begin, end),
            sentiment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSequence {
    pub task: Task,
    pub items: Vec<Triplet>,
}

impl TripletSequence {
    pub fn new(task: Task, items: Vec<Triplet>) -> Self {
        Self { task, items }
    }

    pub fn empty(task: Task) -> Self {
        Self {
            task,
            items: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// One slot of the pointer target space: `EOS` at 0, text pointers at
/// `1..=text_len`, then the three sentiment labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetSymbol {
    Eos,
    Pointer(usize),
    Sentiment(Sentiment),
}

impl TargetSymbol {
    pub fn space_size(text_len: usize) -> usize {
        1 + text_len + Sentiment::COUNT
    }

    pub fn index(self, text_len: usize) -> usize {
        match self {
            TargetSymbol::Eos => 0,
            TargetSymbol::Pointer(p) => p,
            TargetSymbol::Sentiment(s) => text_len + 1 + s.ordinal(),
        }
    }

    pub fn from_index(index: usize, text_len: usize) -> Option<Self> {
        match index {
            0 => Some(TargetSymbol::Eos),
            p if p <= text_len => Some(TargetSymbol::Pointer(p)),
            i => Sentiment::from_ordinal(i - text_len - 1).map(TargetSymbol::Sentiment),
        }
    }
}

/// Set of distinct sentiments present in an instance, stored as a bitmask
/// (bit `ordinal`). Always non-empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StratumSignature(u8);

impl StratumSignature {
    /// Column order of the few-shot statistics table.
    pub const ALL: [StratumSignature; 7] = [
        StratumSignature(0b001),
        StratumSignature(0b010),
        StratumSignature(0b100),
        StratumSignature(0b011),
        StratumSignature(0b110),
        StratumSignature(0b101),
        StratumSignature(0b111),
    ];

    pub fn from_sentiments<I: IntoIterator<Item = Sentiment>>(it: I) -> Option<Self> {
        let bits = it.into_iter().fold(0u8, |acc, s| acc | 1 << s.ordinal());
        (bits != 0).then_some(Self(bits))
    }

    pub fn contains(self, s: Sentiment) -> bool {
        self.0 & (1 << s.ordinal()) != 0
    }

    pub fn members(self) -> impl Iterator<Item = Sentiment> {
        Sentiment::ALL.into_iter().filter(move |&s| self.contains(s))
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Display for StratumSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.members().map(Sentiment::as_str).collect();
        if names.len() == 1 {
            f.write_str(names[0])
        } else {
            write!(f, "{{{}}}", names.join(", "))
        }
    }
}

impl FromStr for StratumSignature {
    type Err = Error;

    /// Accepts `POS`, `POS+NEU`, `{POS, NEU}` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let parts = inner
            .split(|c| c == ',' || c == '+' || c == '|')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse::<Sentiment>)
            .collect::<Result<Vec<_>>>()?;
        Self::from_sentiments(parts)
            .ok_or_else(|| Error::Config(format!("empty stratum signature {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_order_is_fixed() {
        assert!(Sentiment::Pos < Sentiment::Neu && Sentiment::Neu < Sentiment::Neg);
        assert_eq!(Sentiment::Neg.ordinal(), 2);
    }

    #[test]
    fn target_symbol_bijection() {
        for len in [1usize, 5, 20, 64] {
            for i in 0..TargetSymbol::space_size(len) {
                let sym = TargetSymbol::from_index(i, len).unwrap();
                assert_eq!(sym.index(len), i);
            }
            assert_eq!(TargetSymbol::from_index(len + 4, len), None);
        }
    }

    #[test]
    fn validation_rejects_bad_instances() {
        let mut inst = Instance {
            id: "a".into(),
            text_tokens: vec!["x".into(), "y".into()],
            aspects: vec![AspectSpan::new(1, 1)],
            sentiments: vec![Sentiment::Pos],
            ..Default::default()
        };
        inst.validate().unwrap();
        inst.aspects[0] = AspectSpan::new(3, 3);
        assert!(matches!(inst.validate(), Err(Error::Validation { .. })));
        inst.aspects = vec![AspectSpan::new(1, 2), AspectSpan::new(2, 2)];
        inst.sentiments = vec![Sentiment::Pos, Sentiment::Neg];
        assert!(inst.validate().is_err());
        inst.aspects.clear();
        inst.sentiments.clear();
        assert!(inst.validate().is_err());
    }

    #[test]
    fn signature_parse_and_display() {
        let sig: StratumSignature = "{POS, NEU}".parse().unwrap();
        assert_eq!(sig.to_string(), "{POS, NEU}");
        assert_eq!("NEG".parse::<StratumSignature>().unwrap().to_string(), "NEG");
        assert_eq!("POS+NEG+NEU".parse::<StratumSignature>().unwrap(), StratumSignature::ALL[6]);
        assert!("{}".parse::<StratumSignature>().is_err());
    }
}
