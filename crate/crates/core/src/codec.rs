//! Bidirectional codec between triplet lists and flat pointer-target sequences.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{AspectSpan, TargetSymbol, Task, Triplet, TripletSequence};

/// Flattens triplets into `[b1, e1, s1, ..., bn, en, sn, EOS]` (sentiment
/// slots omitted for MATE).
pub fn encode_targets(triplets: &TripletSequence, text_len: usize) -> Result<Vec<usize>> {
    let task = triplets.task;
    let mut out = Vec::with_capacity(triplets.len() * task.arity() + 1);
    for item in &triplets.items {
        item.span.check(text_len)?;
        out.push(TargetSymbol::Pointer(item.span.begin).index(text_len));
        out.push(TargetSymbol::Pointer(item.span.end).index(text_len));
        match (task.has_sentiment(), item.sentiment) {
            (true, Some(s)) => out.push(TargetSymbol::Sentiment(s).index(text_len)),
            (false, None) => {}
            (true, None) => {
                return Err(Error::Arity(format!("{task} triplet without a sentiment")));
            }
            (false, Some(_)) => {
                return Err(Error::Arity(format!("{task} triplet carries a sentiment")));
            }
        }
    }
    out.push(TargetSymbol::Eos.index(text_len));
    Ok(out)
}

/// Inverse of [`encode_targets`]. The sequence must end with exactly one EOS.
pub fn decode_targets(indices: &[usize], text_len: usize, task: Task) -> Result<TripletSequence> {
    let parse = |position: usize, reason: &'static str| Error::Parse { position, reason };
    let symbol = |position: usize| {
        TargetSymbol::from_index(indices[position], text_len)
            .ok_or_else(|| parse(position, "index outside the target space"))
    };

    let mut items = Vec::new();
    let mut pos = 0;
    loop {
        if pos >= indices.len() {
            return Err(parse(pos, "missing EOS"));
        }
        let begin = match symbol(pos)? {
            TargetSymbol::Eos => {
                if pos + 1 != indices.len() {
                    return Err(parse(pos + 1, "symbols after EOS"));
                }
                return Ok(TripletSequence { task, items });
            }
            TargetSymbol::Pointer(p) => p,
            TargetSymbol::Sentiment(_) => return Err(parse(pos, "sentiment in a begin slot")),
        };
        pos += 1;
        if pos >= indices.len() {
            return Err(parse(pos, "truncated triplet"));
        }
        let end = match symbol(pos)? {
            TargetSymbol::Pointer(p) if p >= begin => p,
            TargetSymbol::Pointer(_) => return Err(parse(pos, "begin > end")),
            TargetSymbol::Eos => return Err(parse(pos, "EOS inside a triplet")),
            TargetSymbol::Sentiment(_) => return Err(parse(pos, "sentiment in an end slot")),
        };
        pos += 1;
        let sentiment = if task.has_sentiment() {
            if pos >= indices.len() {
                return Err(parse(pos, "truncated triplet"));
            }
            match symbol(pos)? {
                TargetSymbol::Sentiment(s) => {
                    pos += 1;
                    Some(s)
                }
                TargetSymbol::Eos => return Err(parse(pos, "EOS inside a triplet")),
                TargetSymbol::Pointer(_) => return Err(parse(pos, "pointer in a sentiment slot")),
            }
        } else {
            None
        };
        items.push(Triplet {
            span: AspectSpan::new(begin, end),
            sentiment,
        });
    }
}
