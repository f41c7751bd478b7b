//! Property tests for lexical retrieval.

use argverify_core::retrieval::{CorpusIndex, Document};
use proptest::prelude::*;

const VOCAB: &[&str] = &[
    "vitamin", "cold", "virus", "trial", "effect", "dose", "study", "patients", "placebo", "risk",
];

fn doc(id: String, words: &[usize]) -> Document {
    Document {
        doc_id: id,
        text: words
            .iter()
            .map(|&w| VOCAB[w])
            .collect::<Vec<_>>()
            .join(" "),
        source: None,
    }
}

fn ranking(index: &CorpusIndex, query: &str) -> Vec<String> {
    index
        .search(query, index.len())
        .unwrap()
        .hits
        .into_iter()
        .map(|h| h.doc_id)
        .filter(|id| !id.starts_with("zz"))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn zero_overlap_document_preserves_order(
        docs in prop::collection::vec(prop::collection::vec(0usize..VOCAB.len(), 1..8), 1..8),
        query in prop::collection::vec(0usize..VOCAB.len(), 1..6),
        extra in 1usize..4,
    ) {
        let base: Vec<Document> = docs.iter().enumerate().map(|(i, w)| doc(format!("d{i}"), w)).collect();
        let query: String = query.iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" ");
        let before = ranking(&CorpusIndex::new(base.clone()).unwrap(), &query);
        let mut grown = base;
        for j in 0..extra {
            grown.push(Document { doc_id: format!("zz{j}"), text: format!("unrelated{j} filler{j}"), source: None });
        }
        let after = ranking(&CorpusIndex::new(grown).unwrap(), &query);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn scores_are_bounded(
        docs in prop::collection::vec(prop::collection::vec(0usize..VOCAB.len(), 1..8), 1..8),
        query in prop::collection::vec(0usize..VOCAB.len(), 0..6),
        k in 1usize..10,
    ) {
        let base: Vec<Document> = docs.iter().enumerate().map(|(i, w)| doc(format!("d{i}"), w)).collect();
        let index = CorpusIndex::new(base).unwrap();
        let query: String = query.iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" ");
        let r = index.search(&query, k).unwrap();
        prop_assert_eq!(r.hits.len(), k.min(index.len()));
        prop_assert_eq!(r.truncated, index.len() > k);
        for w in r.hits.windows(2) {
            prop_assert!(w[0].raw_score >= w[1].raw_score);
        }
        for h in &r.hits {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&h.raw_score));
            prop_assert!((0.0..=1.0).contains(&h.normalized_score));
        }
    }
}

#[test]
fn zero_overlap_document_keeps_scores_identical() {
    let base = vec![
        doc("a".into(), &[0, 1, 1]),
        doc("b".into(), &[0, 2]),
        doc("c".into(), &[3, 4, 5]),
    ];
    let before = CorpusIndex::new(base.clone())
        .unwrap()
        .search("vitamin cold", 3)
        .unwrap();
    let mut grown = base;
    grown.push(Document {
        doc_id: "zz".into(),
        text: "zebra".into(),
        source: None,
    });
    let after = CorpusIndex::new(grown)
        .unwrap()
        .search("vitamin cold", 3)
        .unwrap();
    assert_eq!(before.hits, after.hits);
}
