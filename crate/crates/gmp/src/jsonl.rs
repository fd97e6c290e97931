//! Line-delimited JSON datasets.

use std::fs;
use std::path::Path;

use gmp_core::types::{AspectSpan, Instance, Sentiment, SplitTag};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
struct AspectRecord {
    begin: usize,
    end: usize,
    sentiment: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    tokens: Vec<String>,
    aspects: Vec<AspectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_feature: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    caption_tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
}

fn to_instance(r: Record, line: usize) -> CliResult<Instance> {
    let bad = |msg: String| CliError::Data(format!("line {line}: {msg}"));
    let sentiments = r
        .aspects
        .iter()
        .map(|a| a.sentiment.parse::<Sentiment>().map_err(|e| bad(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let split = match r.split {
        Some(s) => s.parse::<SplitTag>().map_err(|e| bad(e.to_string()))?,
        None => SplitTag::default(),
    };
    let inst = Instance {
        id: r.id,
        text_tokens: r.tokens,
        image_feature: r.image_feature,
        caption_tokens: r.caption_tokens,
        aspects: r.aspects.iter().map(|a| AspectSpan::new(a.begin, a.end)).collect(),
        sentiments,
        split,
    };
    inst.validate()?;
    Ok(inst)
}

fn to_record(inst: &Instance) -> Record {
    Record {
        id: inst.id.clone(),
        tokens: inst.text_tokens.clone(),
        aspects: inst
            .aspects
            .iter()
            .zip(&inst.sentiments)
            .map(|(a, s)| AspectRecord { begin: a.begin, end: a.end, sentiment: s.as_str().to_string() })
            .collect(),
        image_feature: inst.image_feature.clone(),
        caption_tokens: inst.caption_tokens.clone(),
        split: Some(inst.split.as_str().to_string()),
    }
}

/// Parses one instance per non-blank line. Errors name the 1-based line.
pub fn parse_jsonl(text: &str) -> CliResult<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        out.push(to_instance(record, i + 1)?);
    }
    Ok(out)
}

pub fn to_jsonl(instances: &[Instance]) -> String {
    let mut s = String::new();
    for inst in instances {
        s.push_str(&serde_json::to_string(&to_record(inst)).expect("records always serialize"));
        s.push('\n');
    }
    s
}

pub fn load_jsonl(path: &Path) -> CliResult<Vec<Instance>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_jsonl(&text).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_jsonl(path: &Path, instances: &[Instance]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, to_jsonl(instances)).map_err(|e| CliError::io(path, e))
}
