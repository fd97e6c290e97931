//! Self-describing text checkpoints.
//!
//! ```text
//! gmp-checkpoint 1
//! [config]
//! key=value ...
//! [vocab] <count>
//! "<json-escaped token>" ...
//! [tensors] <count>
//! <name> <rows> <cols>
//! <row-major values, one matrix row per line>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gmp_core::config::{Ablations, ModelConfig, Vocab};
use gmp_core::model::GmpModel;
use gmp_core::nn::{Matrix, ParamStore};
use gmp_core::types::Task;

use crate::error::{CliError, CliResult};
use crate::runconfig::{format_ablations, model_pairs, parse_ablations, set_model_key};

const MAGIC: &str = "gmp-checkpoint 1";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub task: Task,
    pub ablations: Ablations,
    pub model: GmpModel,
    /// Free-form provenance such as seed, run and selected epoch.
    pub meta: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Data(format!("checkpoint: {}", msg.into()))
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push_str("\n[config]\n");
        let _ = writeln!(s, "task={}", self.task);
        let _ = writeln!(s, "ablations={}", format_ablations(&self.ablations));
        for (k, v) in model_pairs(&self.model.config) {
            let _ = writeln!(s, "{k}={v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(s, "meta.{k}={v}");
        }
        let tokens = self.model.vocab.tokens();
        let _ = writeln!(s, "[vocab] {}", tokens.len());
        for t in tokens {
            let _ = writeln!(s, "{}", serde_json::to_string(t).expect("strings serialize"));
        }
        let _ = writeln!(s, "[tensors] {}", self.model.store.len());
        for (_, name, m) in self.model.store.iter() {
            let _ = writeln!(s, "{name} {} {}", m.rows, m.cols);
            for r in 0..m.rows {
                let row: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing header"));
        }
        if lines.next() != Some("[config]") {
            return Err(bad("missing [config] section"));
        }
        let mut config = ModelConfig::default();
        let mut task = None;
        let mut ablations = Ablations::default();
        let mut meta = BTreeMap::new();
        let vocab_len = loop {
            let line = lines.next().ok_or_else(|| bad("missing [vocab] section"))?;
            if let Some(n) = line.strip_prefix("[vocab] ") {
                break n.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad config line {line:?}")))?;
            match k {
                "task" => task = Some(v.parse::<Task>()?),
                "ablations" => ablations = parse_ablations(v)?,
                _ if k.starts_with("meta.") => {
                    meta.insert(k["meta.".len()..].to_string(), v.to_string());
                }
                _ => {
                    if !set_model_key(&mut config, k, v)? {
                        return Err(bad(format!("unknown config key {k:?}")));
                    }
                }
            }
        };
        let task = task.ok_or_else(|| bad("config lacks task"))?;
        let mut tokens = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let line = lines.next().ok_or_else(|| bad("vocabulary truncated"))?;
            tokens.push(serde_json::from_str::<String>(line).map_err(|e| bad(e.to_string()))?);
        }
        let header = lines.next().ok_or_else(|| bad("missing [tensors] section"))?;
        let n_tensors: usize = header
            .strip_prefix("[tensors] ")
            .ok_or_else(|| bad("missing [tensors] section"))?
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        let mut store = ParamStore::new();
        for _ in 0..n_tensors {
            let head = lines.next().ok_or_else(|| bad("tensor list truncated"))?;
            let parts: Vec<&str> = head.split(' ').collect();
            let [name, rows, cols] = parts[..] else {
                return Err(bad(format!("bad tensor header {head:?}")));
            };
            let rows: usize = rows.parse().map_err(|_| bad(format!("bad rows in {head:?}")))?;
            let cols: usize = cols.parse().map_err(|_| bad(format!("bad cols in {head:?}")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let line = lines.next().ok_or_else(|| bad(format!("tensor {name} truncated")))?;
                for v in line.split(' ').filter(|v| !v.is_empty()) {
                    data.push(v.parse::<f64>().map_err(|_| bad(format!("bad value {v:?} in {name}")))?);
                }
            }
            if data.len() != rows * cols {
                return Err(bad(format!("tensor {name} has {} values, expected {}", data.len(), rows * cols)));
            }
            store.add(name, Matrix::from_vec(rows, cols, data));
        }
        let vocab = Vocab::from_tokens(tokens)?;
        let model = GmpModel::new(config, vocab)?.with_params(store)?;
        Ok(Self { task, ablations, model, meta })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_text(&text)
    }
}
