//! Span-level metrics for the three tasks and the count subtask.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{Sentiment, Task, Triplet, TripletSequence, MAX_ASPECTS};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub task: Option<Task>,
    pub precision: f64,
    pub recall: f64,
    pub micro_f1: f64,
    /// MASC only.
    pub accuracy: Option<f64>,
    /// MASC only: unweighted mean of per-class F1.
    pub macro_f1: Option<f64>,
    pub count_accuracy: Option<f64>,
    pub n_instances: usize,
}

impl MetricsReport {
    /// Model-selection score: accuracy for MASC, micro-F1 otherwise.
    pub fn headline(&self) -> f64 {
        match self.task {
            Some(Task::Masc) => self.accuracy.unwrap_or(0.0),
            _ => self.micro_f1,
        }
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn aligned(preds: usize, golds: usize) -> Result<()> {
    if preds != golds {
        return Err(Error::Misaligned { left: preds, right: golds });
    }
    Ok(())
}

type Key = (usize, usize, Option<Sentiment>);

fn key_set(seq: &TripletSequence, with_sentiment: bool) -> BTreeSet<Key> {
    seq.items
        .iter()
        .map(|t| (t.span.begin, t.span.end, if with_sentiment { t.sentiment } else { None }))
        .collect()
}

fn span_metrics(task: Task, preds: &[TripletSequence], golds: &[TripletSequence], with_sentiment: bool) -> Result<MetricsReport> {
    aligned(preds.len(), golds.len())?;
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for (p, g) in preds.iter().zip(golds) {
        let p = key_set(p, with_sentiment);
        let g = key_set(g, with_sentiment);
        tp += p.intersection(&g).count();
        n_pred += p.len();
        n_gold += g.len();
    }
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    Ok(MetricsReport {
        task: Some(task),
        precision,
        recall,
        micro_f1: f1(precision, recall),
        n_instances: preds.len(),
        ..Default::default()
    })
}

/// Exact `(begin, end, sentiment)` matching, micro-averaged.
pub fn jmasa_metrics(preds: &[TripletSequence], golds: &[TripletSequence]) -> Result<MetricsReport> {
    span_metrics(Task::Jmasa, preds, golds, true)
}

/// Exact `(begin, end)` matching, micro-averaged.
pub fn mate_metrics(preds: &[TripletSequence], golds: &[TripletSequence]) -> Result<MetricsReport> {
    span_metrics(Task::Mate, preds, golds, false)
}

/// `confusion[gold][pred]` over the three sentiment classes.
pub fn confusion_matrix(preds: &[Sentiment], golds: &[Sentiment]) -> Result<[[usize; 3]; 3]> {
    aligned(preds.len(), golds.len())?;
    let mut m = [[0; 3]; 3];
    for (p, g) in preds.iter().zip(golds) {
        m[g.ordinal()][p.ordinal()] += 1;
    }
    Ok(m)
}

/// Per-class F1 from a confusion matrix, in sentiment order.
pub fn per_class_f1(m: &[[usize; 3]; 3]) -> [f64; 3] {
    core::array::from_fn(|c| {
        let tp = m[c][c];
        let predicted: usize = (0..3).map(|g| m[g][c]).sum();
        let actual: usize = m[c].iter().sum();
        f1(ratio(tp, predicted), ratio(tp, actual))
    })
}

pub fn macro_f1(m: &[[usize; 3]; 3]) -> f64 {
    per_class_f1(m).iter().sum::<f64>() / 3.0
}

/// Sentiment classification over given spans. Each prediction must cover
/// exactly the gold spans of its instance.
pub fn masc_metrics(preds: &[TripletSequence], golds: &[TripletSequence]) -> Result<MetricsReport> {
    aligned(preds.len(), golds.len())?;
    let mut ps = Vec::new();
    let mut gs = Vec::new();
    for (p, g) in preds.iter().zip(golds) {
        aligned(p.items.len(), g.items.len())?;
        for (a, b) in p.items.iter().zip(&g.items) {
            let (Triplet { sentiment: Some(sp), .. }, Triplet { sentiment: Some(sg), .. }) = (a, b) else {
                return Err(Error::Arity("MASC items need sentiments".into()));
            };
            ps.push(*sp);
            gs.push(*sg);
        }
    }
    let m = confusion_matrix(&ps, &gs)?;
    let correct: usize = (0..3).map(|c| m[c][c]).sum();
    let acc = ratio(correct, gs.len());
    Ok(MetricsReport {
        task: Some(Task::Masc),
        precision: acc,
        recall: acc,
        micro_f1: acc,
        accuracy: Some(acc),
        macro_f1: Some(macro_f1(&m)),
        n_instances: preds.len(),
        ..Default::default()
    })
}

/// Dispatches on `task`.
pub fn task_metrics(task: Task, preds: &[TripletSequence], golds: &[TripletSequence]) -> Result<MetricsReport> {
    match task {
        Task::Jmasa => jmasa_metrics(preds, golds),
        Task::Masc => masc_metrics(preds, golds),
        Task::Mate => mate_metrics(preds, golds),
    }
}

/// Fraction of exact matches after clamping gold counts to 5.
pub fn count_accuracy(pred: &[usize], gold: &[usize]) -> Result<f64> {
    aligned(pred.len(), gold.len())?;
    let hits = pred.iter().zip(gold).filter(|(&p, &g)| p == g.min(MAX_ASPECTS)).count();
    Ok(ratio(hits, pred.len()))
}
