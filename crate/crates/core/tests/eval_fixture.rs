//! Batch evaluation over the checked-in 20-claim fixture.

use std::fs;
use std::path::PathBuf;

use argverify_core::annotator::{classification_prompt, MockClient};
use argverify_core::eval::{evaluate, read_claims, write_outputs, HISTOGRAM_BINS};
use argverify_core::pipeline::{fallback_prompt, PipelineConfig};
use argverify_core::retrieval::CorpusIndex;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/eval20")
        .join(name)
}

fn run(jobs: usize) -> (String, String, argverify_core::eval::EvalSummary) {
    let claims = read_claims(fixture("claims.jsonl")).unwrap();
    let index = CorpusIndex::from_jsonl(fixture("corpus.jsonl")).unwrap();
    let mock = MockClient::from_jsonl(fixture("mock.jsonl")).unwrap();
    let (summary, records) =
        evaluate(&claims, &index, &PipelineConfig::default(), &mock, jobs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &summary, &records).unwrap();
    (
        fs::read_to_string(dir.path().join("summary.json")).unwrap(),
        fs::read_to_string(dir.path().join("records.jsonl")).unwrap(),
        summary,
    )
}

#[test]
fn fixture_runs_are_byte_identical() {
    let (s1, r1, summary) = run(1);
    let (s2, r2, _) = run(4);
    assert_eq!(s1, s2);
    assert_eq!(r1, r2);
    assert_eq!(summary.n_claims, 20);
    assert_eq!(summary.n_errors, 0, "{r1}");
    assert!(summary.n_fallback >= 1);
    let decided: u64 = summary.histogram.all.iter().sum();
    assert_eq!(decided as usize, summary.n_claims - summary.n_fallback);
    assert_eq!(summary.histogram.all.len(), HISTOGRAM_BINS);
    assert_eq!(r1.lines().count(), 20);
    let acc = summary.accuracy.unwrap();
    assert!((acc - summary.n_correct as f64 / 20.0).abs() < 1e-15);
    eprintln!(
        "fixture accuracy {acc}, fallback {}, nonconverged {}",
        summary.n_fallback, summary.n_nonconverged
    );
}

#[test]
fn everything_irrelevant_means_every_claim_falls_back() {
    let claims = read_claims(fixture("claims.jsonl")).unwrap();
    let index = CorpusIndex::from_jsonl(fixture("corpus.jsonl")).unwrap();
    let config = PipelineConfig::default();
    let mut mock = MockClient::new();
    for c in &claims {
        let hits = index.search(&c.claim, config.top_k).unwrap().hits;
        let texts: Vec<&str> = hits.iter().map(|h| h.text.as_str()).collect();
        mock.register(
            &classification_prompt(&c.claim, &texts),
            r#"{"support": [], "contradict": [], "irrelevant": ["E1", "E2", "E3", "E4", "E5"]}"#,
        );
        mock.register(&fallback_prompt(&c.claim), "true");
    }
    let (summary, records) = evaluate(&claims, &index, &config, &mock, 2).unwrap();
    assert_eq!(summary.n_fallback, 20);
    assert!(summary.histogram.all.iter().all(|&b| b == 0));
    assert!(records
        .iter()
        .all(|r| r.verification.as_ref().unwrap().solve.is_none()));
}

#[test]
fn missing_fixtures_are_recorded_not_fatal() {
    let claims = read_claims(fixture("claims.jsonl")).unwrap();
    let index = CorpusIndex::from_jsonl(fixture("corpus.jsonl")).unwrap();
    let (summary, records) = evaluate(
        &claims,
        &index,
        &PipelineConfig::default(),
        &MockClient::new(),
        1,
    )
    .unwrap();
    assert_eq!(summary.n_errors, 20);
    assert_eq!(summary.n_correct, 0);
    assert_eq!(records[0].error.as_ref().unwrap().kind, "MissingFixture");
}
