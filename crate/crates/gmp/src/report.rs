//! Metrics documents, multi-run aggregation and sweep tables.

use std::fmt::Write as _;

use gmp_core::metrics::MetricsReport;
use gmp_core::types::Task;
use serde::{Deserialize, Serialize};

/// One evaluation, as written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub task: String,
    pub seed: u64,
    pub run: usize,
    pub split: String,
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "Acc")]
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub count_accuracy: Option<f64>,
    pub n_instances: usize,
}

impl RunMetrics {
    pub fn new(task: Task, seed: u64, run: usize, split: &str, r: &MetricsReport) -> Self {
        Self {
            task: task.to_string(),
            seed,
            run,
            split: split.to_string(),
            precision: r.precision,
            recall: r.recall,
            f1: r.micro_f1,
            accuracy: r.accuracy,
            macro_f1: r.macro_f1,
            count_accuracy: r.count_accuracy,
            n_instances: r.n_instances,
        }
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| {
            let (mean, sd) = mean_sd(values);
            Self { mean, sd }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub n_runs: usize,
    #[serde(rename = "P")]
    pub precision: MeanSd,
    #[serde(rename = "R")]
    pub recall: MeanSd,
    #[serde(rename = "F1")]
    pub f1: MeanSd,
    #[serde(rename = "Acc")]
    pub accuracy: Option<MeanSd>,
    pub macro_f1: Option<MeanSd>,
    pub count_accuracy: Option<MeanSd>,
}

pub fn summarize(runs: &[RunMetrics]) -> Option<Summary> {
    let first = runs.first()?;
    let col = |f: fn(&RunMetrics) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(f).collect() };
    Some(Summary {
        task: first.task.clone(),
        n_runs: runs.len(),
        precision: MeanSd::of(&col(|r| Some(r.precision)))?,
        recall: MeanSd::of(&col(|r| Some(r.recall)))?,
        f1: MeanSd::of(&col(|r| Some(r.f1)))?,
        accuracy: MeanSd::of(&col(|r| r.accuracy)),
        macro_f1: MeanSd::of(&col(|r| r.macro_f1)),
        count_accuracy: MeanSd::of(&col(|r| r.count_accuracy)),
    })
}

fn pct(m: &MeanSd) -> String {
    format!("{:6.2} ± {:5.2}", 100.0 * m.mean, 100.0 * m.sd)
}

/// Human-readable table: one line per run, then the aggregate.
pub fn render_table(runs: &[RunMetrics], summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>4} {:>7} {:>7} {:>7} {:>7} {:>7}", "seed", "run", "P", "R", "F1", "Acc", "count");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.2}", 100.0 * x));
    for r in runs {
        let _ = writeln!(
            s,
            "{:>6} {:>4} {:>7.2} {:>7.2} {:>7.2} {:>7} {:>7}",
            r.seed,
            r.run,
            100.0 * r.precision,
            100.0 * r.recall,
            100.0 * r.f1,
            opt(r.accuracy),
            opt(r.count_accuracy)
        );
    }
    let _ = writeln!(s, "{} over {} runs (mean ± sd, %)", summary.task, summary.n_runs);
    let _ = writeln!(s, "  P   {}", pct(&summary.precision));
    let _ = writeln!(s, "  R   {}", pct(&summary.recall));
    let _ = writeln!(s, "  F1  {}", pct(&summary.f1));
    if let Some(a) = &summary.accuracy {
        let _ = writeln!(s, "  Acc {}", pct(a));
    }
    if let Some(m) = &summary.macro_f1 {
        let _ = writeln!(s, "  macro-F1 {}", pct(m));
    }
    if let Some(c) = &summary.count_accuracy {
        let _ = writeln!(s, "  count {}", pct(c));
    }
    s
}

/// One sweep CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: RunMetrics,
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{param},seed,run,P,R,F1,Acc,count_accuracy\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for row in rows {
        let m = &row.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            row.value,
            m.seed,
            m.run,
            m.precision,
            m.recall,
            m.f1,
            opt(m.accuracy),
            opt(m.count_accuracy)
        );
    }
    s
}
