//! Evidence corpus and lexical top-k retrieval.
//!
//! Documents are scored against a claim with TF-IDF weighted cosine
//! similarity over lowercased word tokens (runs of alphanumeric characters).
//! Precomputed rankings produced by an external retriever can be ingested
//! instead and served through the same [`Retriever`] interface.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: String,
    pub text: String,
    pub raw_score: f64,
    /// Min-max normalized over the returned list; a single hit gets 1.0.
    pub normalized_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub hits: Vec<Hit>,
    /// True when more candidates existed than were returned.
    pub truncated: bool,
}

impl RetrievalResult {
    /// Sorts by raw score descending (ties by doc id), keeps the top `k` and
    /// fills in normalized scores.
    fn from_scored(mut scored: Vec<(String, String, f64)>, k: usize) -> Self {
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        let truncated = scored.len() > k;
        scored.truncate(k);
        let max = scored.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
        let min = scored.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
        let span = max - min;
        let hits = scored
            .into_iter()
            .map(|(doc_id, text, raw_score)| Hit {
                normalized_score: if span > 0.0 {
                    (raw_score - min) / span
                } else {
                    1.0
                },
                doc_id,
                text,
                raw_score,
            })
            .collect();
        Self { hits, truncated }
    }
}

/// Source of ranked evidence for a claim.
pub trait Retriever: Send + Sync {
    /// `claim_id` lets precomputed sources look up their ranking; lexical
    /// retrieval ignores it.
    fn retrieve(&self, claim_id: Option<&str>, claim: &str, k: usize) -> Result<RetrievalResult>;
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn term_counts(text: &str) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for tok in tokenize(text) {
        *counts.entry(tok).or_insert(0.0) += 1.0;
    }
    counts
}

#[derive(Debug, Clone)]
pub struct CorpusIndex {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    counts: Vec<BTreeMap<String, f64>>,
    doc_freq: HashMap<String, usize>,
    max_df: usize,
}

impl CorpusIndex {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut by_id = HashMap::with_capacity(docs.len());
        let mut counts = Vec::with_capacity(docs.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for (i, doc) in docs.iter().enumerate() {
            if doc.text.trim().is_empty() {
                return Err(Error::schema(
                    format!("documents[{i}].text"),
                    "document text must be non-empty",
                ));
            }
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(doc.doc_id.clone()));
            }
            let tc = term_counts(&doc.text);
            for term in tc.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            counts.push(tc);
        }
        let max_df = doc_freq.values().copied().max().unwrap_or(1);
        Ok(Self {
            docs,
            by_id,
            counts,
            doc_freq,
            max_df,
        })
    }

    /// Reads a JSONL corpus, one `{"doc_id", "text", "source"?}` per line.
    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut docs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(line)
                .map_err(|e| Error::schema(format!("line {}", n + 1), e.to_string()))?;
            docs.push(doc);
        }
        Self::new(docs)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    /// Inverse document frequency `1 + ln(M / df)`, where `M` is the largest
    /// document frequency in the corpus. Using `M` instead of the corpus size
    /// means that adding documents which share no term with the existing ones
    /// leaves every existing weight, and therefore every score, unchanged.
    /// Terms absent from the corpus get weight 0 since they cannot match.
    fn idf(&self, term: &str) -> f64 {
        match self.doc_freq.get(term) {
            Some(&df) => 1.0 + (self.max_df as f64 / df as f64).ln(),
            None => 0.0,
        }
    }

    fn weights(&self, counts: &BTreeMap<String, f64>) -> (BTreeMap<String, f64>, f64) {
        let w: BTreeMap<String, f64> = counts
            .iter()
            .map(|(t, c)| (t.clone(), c * self.idf(t)))
            .collect();
        let norm = w.values().map(|x| x * x).sum::<f64>().sqrt();
        (w, norm)
    }

    /// Cosine similarity between the claim and every document.
    pub fn score_all(&self, query: &str) -> Vec<f64> {
        let (q, q_norm) = self.weights(&term_counts(query));
        self.counts
            .iter()
            .map(|dc| {
                if q_norm == 0.0 {
                    return 0.0;
                }
                let (d, d_norm) = self.weights(dc);
                let dot: f64 = q
                    .iter()
                    .filter_map(|(t, qw)| d.get(t).map(|dw| qw * dw))
                    .sum();
                dot / (q_norm * d_norm)
            })
            .collect()
    }

    pub fn search(&self, query: &str, k: usize) -> Result<RetrievalResult> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let scored = self
            .score_all(query)
            .into_iter()
            .zip(&self.docs)
            .map(|(s, d)| (d.doc_id.clone(), d.text.clone(), s))
            .collect();
        Ok(RetrievalResult::from_scored(scored, k))
    }
}

impl Retriever for CorpusIndex {
    fn retrieve(&self, _claim_id: Option<&str>, claim: &str, k: usize) -> Result<RetrievalResult> {
        self.search(claim, k)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecomputedRanking {
    pub claim_id: String,
    pub ranked: Vec<RankedDoc>,
}

/// Rankings computed elsewhere, keyed by claim id. Passage text comes from
/// the accompanying corpus.
#[derive(Debug, Clone)]
pub struct PrecomputedRetrieval {
    corpus: CorpusIndex,
    rankings: HashMap<String, Vec<RankedDoc>>,
}

impl PrecomputedRetrieval {
    pub fn new(corpus: CorpusIndex, rankings: Vec<PrecomputedRanking>) -> Result<Self> {
        let mut map = HashMap::new();
        for r in rankings {
            for d in &r.ranked {
                if corpus.document(&d.doc_id).is_none() {
                    return Err(Error::schema(
                        format!("claim {}", r.claim_id),
                        format!("unknown doc_id `{}`", d.doc_id),
                    ));
                }
            }
            map.insert(r.claim_id, r.ranked);
        }
        Ok(Self {
            corpus,
            rankings: map,
        })
    }

    pub fn from_jsonl(corpus: CorpusIndex, path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut rankings = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: PrecomputedRanking = serde_json::from_str(line)
                .map_err(|e| Error::schema(format!("line {}", n + 1), e.to_string()))?;
            rankings.push(r);
        }
        Self::new(corpus, rankings)
    }
}

impl Retriever for PrecomputedRetrieval {
    fn retrieve(&self, claim_id: Option<&str>, _claim: &str, k: usize) -> Result<RetrievalResult> {
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let id = claim_id
            .ok_or_else(|| Error::InvalidParams("precomputed retrieval needs a claim id".into()))?;
        let ranked = self.rankings.get(id).ok_or_else(|| {
            Error::InvalidParams(format!("no precomputed ranking for claim `{id}`"))
        })?;
        let scored = ranked
            .iter()
            .map(|d| {
                let text = self
                    .corpus
                    .document(&d.doc_id)
                    .expect("checked on load")
                    .text
                    .clone();
                (d.doc_id.clone(), text, d.score)
            })
            .collect();
        Ok(RetrievalResult::from_scored(scored, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: text.into(),
            source: None,
        }
    }

    fn corpus() -> CorpusIndex {
        CorpusIndex::new(vec![
            doc("d1", "Vitamin C prevents the common cold."),
            doc(
                "d2",
                "Trials found no effect of vitamin C on cold duration.",
            ),
            doc("d3", "The stock market closed higher on Friday."),
        ])
        .unwrap()
    }

    #[test]
    fn tokenizer_strips_punctuation() {
        assert_eq!(
            tokenize("Hello, World! it's 2024"),
            ["hello", "world", "it", "s", "2024"]
        );
    }

    #[test]
    fn self_similarity_ranks_first() {
        let c = corpus();
        let r = c
            .search("Trials found no effect of vitamin C on cold duration.", 3)
            .unwrap();
        assert_eq!(r.hits[0].doc_id, "d2");
        assert!((r.hits[0].raw_score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_larger_than_corpus() {
        let r = corpus().search("vitamin", 10).unwrap();
        assert_eq!(r.hits.len(), 3);
        assert!(!r.truncated);
        let r = corpus().search("vitamin", 2).unwrap();
        assert!(r.truncated);
        assert!(matches!(
            corpus().search("vitamin", 0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn normalized_scores_span_unit_interval() {
        let r = corpus().search("vitamin C cold", 3).unwrap();
        let max = r
            .hits
            .iter()
            .map(|h| h.normalized_score)
            .fold(f64::MIN, f64::max);
        let min = r
            .hits
            .iter()
            .map(|h| h.normalized_score)
            .fold(f64::MAX, f64::min);
        assert_eq!((min, max), (0.0, 1.0));
        let single = corpus().search("vitamin C cold", 1).unwrap();
        assert_eq!(single.hits[0].normalized_score, 1.0);
    }

    #[test]
    fn ties_break_by_doc_id() {
        let c = CorpusIndex::new(vec![doc("b", "alpha"), doc("a", "alpha")]).unwrap();
        let r = c.search("alpha", 2).unwrap();
        assert_eq!(r.hits[0].doc_id, "a");
        assert_eq!(r.hits[1].doc_id, "b");
    }

    #[test]
    fn corpus_errors() {
        assert!(matches!(CorpusIndex::new(vec![]), Err(Error::EmptyCorpus)));
        assert!(matches!(
            CorpusIndex::new(vec![doc("x", "a"), doc("x", "b")]),
            Err(Error::DuplicateDocId(id)) if id == "x"
        ));
        assert!(matches!(
            CorpusIndex::new(vec![doc("x", "  ")]),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn precomputed_rankings() {
        let p = PrecomputedRetrieval::new(
            corpus(),
            vec![PrecomputedRanking {
                claim_id: "c1".into(),
                ranked: vec![
                    RankedDoc {
                        doc_id: "d3".into(),
                        score: 0.2,
                    },
                    RankedDoc {
                        doc_id: "d1".into(),
                        score: 0.9,
                    },
                    RankedDoc {
                        doc_id: "d2".into(),
                        score: 0.5,
                    },
                ],
            }],
        )
        .unwrap();
        let r = p.retrieve(Some("c1"), "", 2).unwrap();
        let ids: Vec<_> = r.hits.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2"]);
        assert_eq!(r.hits[1].normalized_score, 0.0);
        assert!(r.truncated);
        assert!(p.retrieve(Some("zz"), "", 2).is_err());

        let bad = PrecomputedRetrieval::new(
            corpus(),
            vec![PrecomputedRanking {
                claim_id: "c1".into(),
                ranked: vec![RankedDoc {
                    doc_id: "nope".into(),
                    score: 1.0,
                }],
            }],
        );
        assert!(bad.is_err());
    }
}
