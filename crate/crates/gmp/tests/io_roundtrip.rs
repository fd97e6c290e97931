use gmp::checkpoint::Checkpoint;
use gmp::error::CliError;
use gmp::jsonl::{parse_jsonl, to_jsonl};
use gmp::report::{mean_sd, summarize, RunMetrics};
use gmp::runconfig::RunConfig;
use gmp_core::config::{Ablations, ModelConfig, Vocab};
use gmp_core::data::{generate_synthetic_corpus, StoredCaptions, StoredFeatures, SyntheticCorpusConfig};
use gmp_core::model::GmpModel;
use gmp_core::train::Setup;
use gmp_core::types::Task;
use std::collections::BTreeMap;

fn small_corpus(n: usize) -> Vec<gmp_core::types::Instance> {
    generate_synthetic_corpus(&SyntheticCorpusConfig { n_instances: n, d_v: 6, ..Default::default() }).unwrap()
}

#[test]
fn jsonl_round_trip() {
    let corpus = small_corpus(25);
    let text = to_jsonl(&corpus);
    assert_eq!(text.lines().count(), 25);
    assert_eq!(parse_jsonl(&text).unwrap(), corpus);
}

#[test]
fn jsonl_errors_name_the_line() {
    let good = to_jsonl(&small_corpus(2));
    let bad_json = format!("{good}{{not json\n");
    match parse_jsonl(&bad_json) {
        Err(CliError::Data(m)) => assert!(m.starts_with("line 3"), "{m}"),
        other => panic!("{other:?}"),
    }
    let bad_span = r#"{"id":"x","tokens":["a","b"],"aspects":[{"begin":2,"end":1,"sentiment":"POS"}]}"#;
    assert!(matches!(parse_jsonl(bad_span), Err(CliError::Data(_))));
    let bad_label = r#"{"id":"x","tokens":["a","b"],"aspects":[{"begin":1,"end":1,"sentiment":"GOOD"}]}"#;
    match parse_jsonl(bad_label) {
        Err(CliError::Data(m)) => assert!(m.contains("line 1"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn minimal_record_without_image_or_caption() {
    let line = r#"{"id":"m","tokens":["the","pizza","was","good"],"aspects":[{"begin":2,"end":2,"sentiment":"POS"}]}"#;
    let inst = &parse_jsonl(line).unwrap()[0];
    assert!(inst.image_feature.is_none() && inst.caption_tokens.is_none());
    assert_eq!(inst.aspect_term(0), ["pizza"]);
}

#[test]
fn run_config_text_round_trip() {
    let mut cfg = RunConfig::default();
    cfg.apply_text("task=masc\nseeds=1,2\nlambda=0.25\n# comment\nquota=twitter17\nablations=no_image\nsweep.param=l_i\nsweep.values=0,2,4\n")
        .unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.task, Task::Masc);
    assert_eq!(cfg.quota, [32, 32, 16, 32, 16, 2, 2]);
    assert!(cfg.ablations.no_image);
    let again = RunConfig::from_text(&cfg.to_text()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn run_config_rejections() {
    assert!(matches!(RunConfig::from_text("nonsense=1"), Err(CliError::Config(_))));
    assert!(matches!(RunConfig::from_text("lambda=abc"), Err(CliError::Config(_))));
    assert!(matches!(RunConfig::from_text("no equals sign"), Err(CliError::Config(_))));
    let cfg = RunConfig::from_text("task=mate\nablations=no_gsp").unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    let cfg = RunConfig::from_text("d=30\nn_heads=4").unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

fn tiny_model() -> (GmpModel, Vec<gmp_core::types::Instance>) {
    let corpus = small_corpus(6);
    let vocab = Vocab::build(corpus.iter().flat_map(|i| i.text_tokens.iter().map(String::as_str)));
    let cfg = ModelConfig { d: 8, n_heads: 2, d_v: 6, l_i: 2, n_layers: 1, seed: 5, ..Default::default() };
    (GmpModel::new(cfg, vocab).unwrap(), corpus)
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let (model, corpus) = tiny_model();
    let ck = Checkpoint {
        task: Task::Jmasa,
        ablations: Ablations::default(),
        model,
        meta: BTreeMap::from([("seed".to_string(), "42".to_string())]),
    };
    let text = ck.to_text();
    let back = Checkpoint::from_text(&text).unwrap();
    assert_eq!(back.to_text(), text);
    assert_eq!(back.meta["seed"], "42");
    let setup = Setup::new(Task::Jmasa, Ablations::default()).unwrap();
    for inst in &corpus {
        let a = ck.model.encode_instance(inst, &StoredFeatures, &StoredCaptions).unwrap();
        let b = back.model.encode_instance(inst, &StoredFeatures, &StoredCaptions).unwrap();
        assert_eq!(ck.model.predict(&a, &setup).unwrap(), back.model.predict(&b, &setup).unwrap());
    }
}

#[test]
fn corrupted_checkpoints_are_data_errors() {
    let (model, _) = tiny_model();
    let ck = Checkpoint { task: Task::Mate, ablations: Ablations::default(), model, meta: BTreeMap::new() };
    let text = ck.to_text();
    assert!(matches!(Checkpoint::from_text("garbage"), Err(CliError::Data(_))));
    let truncated: String = text.lines().take(text.lines().count() - 3).collect::<Vec<_>>().join("\n");
    assert!(Checkpoint::from_text(&truncated).is_err());
    let bad_value = text.replacen("[tensors]", "[tensors] x", 1);
    assert!(Checkpoint::from_text(&bad_value).is_err());
}

#[test]
fn sample_sd_matches_hand_computation() {
    let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(mean_sd(&[7.0]), (7.0, 0.0));
    let runs: Vec<RunMetrics> = [0.5, 0.7]
        .iter()
        .enumerate()
        .map(|(i, &f)| RunMetrics {
            task: "jmasa".into(),
            seed: 42,
            run: i,
            split: "test".into(),
            precision: f,
            recall: f,
            f1: f,
            accuracy: None,
            macro_f1: None,
            count_accuracy: Some(1.0),
            n_instances: 10,
        })
        .collect();
    let s = summarize(&runs).unwrap();
    assert!((s.f1.mean - 0.6).abs() < 1e-15);
    assert!((s.f1.sd - 0.02f64.sqrt()).abs() < 1e-12);
    assert!(s.accuracy.is_none());
    let json = serde_json::to_value(&runs[0]).unwrap();
    for key in ["task", "seed", "split", "P", "R", "F1", "Acc", "macro_f1", "count_accuracy", "n_instances"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
