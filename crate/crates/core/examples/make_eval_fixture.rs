//! Writes the 20-claim evaluation fixture: a small health-claims corpus, a
//! claims file with gold labels, and mock completion responses for every
//! prompt the pipeline issues at top_k = 5.
//!
//! Usage: cargo run -p argverify-core --example make_eval_fixture -- [out_dir]

use std::fs;
use std::path::PathBuf;

use argverify_core::annotator::{classification_prompt, pairs_prompt, with_correction, MockClient};
use argverify_core::eval::ClaimInput;
use argverify_core::pipeline::{fallback_prompt, Label};
use argverify_core::retrieval::{CorpusIndex, Document};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOP_K: usize = 5;
const SEED: u64 = 2024;

const TOPICS: [(&str, &str); 20] = [
    ("zinc lozenges", "shorten the common cold"),
    (
        "vitamin D supplements",
        "prevent bone fractures in elderly adults",
    ),
    ("green tea extracts", "accelerate weight loss"),
    ("omega-3 capsules", "reduce the risk of heart attacks"),
    ("echinacea remedies", "prevent influenza infections"),
    ("probiotic yogurts", "relieve irritable bowel symptoms"),
    ("garlic pills", "lower blood pressure"),
    (
        "melatonin tablets",
        "improve sleep quality in shift workers",
    ),
    ("turmeric powders", "reduce joint inflammation"),
    ("cranberry juices", "prevent urinary tract infections"),
    ("acupuncture sessions", "relieve chronic back pain"),
    ("intermittent fasting plans", "improve insulin sensitivity"),
    (
        "fluoridated water supplies",
        "reduce tooth decay in children",
    ),
    ("mobile phone signals", "cause brain tumours"),
    ("standing desks", "reduce lower back pain"),
    ("electric toothbrushes", "remove more dental plaque"),
    ("caffeinated drinks", "dehydrate healthy adults"),
    ("sunscreen lotions", "prevent melanoma skin cancer"),
    ("flu vaccines", "reduce hospital admissions among seniors"),
    ("air purifiers", "reduce asthma attacks in children"),
];

/// Topics whose corpus holds only off-topic mentions, so every retrieved
/// passage is irrelevant and the pipeline falls back to a direct query.
const ALL_IRRELEVANT: [usize; 2] = [6, 13];
/// Topic whose first classification response is fenced and only the
/// corrected retry parses.
const RETRY_TOPIC: usize = 3;

const SUPPORT: [&str; 3] = [
    "Randomized trials show that {s} {p}.",
    "A meta-analysis concluded that {s} {p} in most participants.",
    "Clinicians report that {s} reliably {p}.",
];
const CONTRADICT: [&str; 3] = [
    "A large review found no evidence that {s} {p}.",
    "Controlled studies show that {s} do not {p}.",
    "Experts warn that the idea that {s} {p} is unsupported.",
];
const OFF_TOPIC: [&str; 2] = [
    "Retail prices of {s} rose sharply in local markets last year.",
    "A newspaper column described how {s} became popular on social media.",
];

fn render(t: &str, s: &str, p: &str) -> String {
    t.replace("{s}", s).replace("{p}", p)
}

fn topic_of(doc: &Document) -> (usize, &str) {
    let src = doc.source.as_deref().expect("fixture docs carry a source");
    let (t, stance) = src.split_once('/').unwrap();
    (t.trim_start_matches('t').parse().unwrap(), stance)
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/eval20".into())
        .into();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut docs = Vec::new();
    let mut claims = Vec::new();
    for (t, (s, p)) in TOPICS.iter().enumerate() {
        let (n_sup, n_con) = if ALL_IRRELEVANT.contains(&t) {
            (0, 0)
        } else {
            loop {
                let pair = (rng.random_range(0..=3usize), rng.random_range(0..=3usize));
                if pair.0 + pair.1 > 0 {
                    break pair;
                }
            }
        };
        let mut push = |stance: &str, text: String| {
            let n = docs.len();
            docs.push(Document {
                doc_id: format!("doc{n:03}"),
                text,
                source: Some(format!("t{t:02}/{stance}")),
            });
        };
        for tpl in &SUPPORT[..n_sup] {
            push("support", render(tpl, s, p));
        }
        for tpl in &CONTRADICT[..n_con] {
            push("contradict", render(tpl, s, p));
        }
        for tpl in OFF_TOPIC {
            push("irrelevant", render(tpl, s, p));
        }
        let mut label = if n_sup + n_con == 0 {
            rng.random_bool(0.5)
        } else {
            n_sup >= n_con
        };
        // a little label noise so accuracy is informative
        if rng.random_bool(0.15) {
            label = !label;
        }
        claims.push(ClaimInput {
            claim_id: format!("c{:02}", t + 1),
            claim: format!("{}{} {}.", s[..1].to_uppercase(), &s[1..], p),
            label: Some(Label::from_bool(label)),
        });
    }

    let index = CorpusIndex::new(docs.clone()).unwrap();
    let mut mock = MockClient::new();
    for (t, c) in claims.iter().enumerate() {
        let hits = index.search(&c.claim, TOP_K).unwrap().hits;
        let texts: Vec<&str> = hits.iter().map(|h| h.text.as_str()).collect();
        let mut groups: [Vec<String>; 3] = Default::default();
        let mut relevant = Vec::new();
        for (i, h) in hits.iter().enumerate() {
            let (topic, stance) = topic_of(index.document(&h.doc_id).unwrap());
            let slot = match (topic == t, stance) {
                (true, "support") => 0,
                (true, "contradict") => 1,
                _ => 2,
            };
            if slot < 2 {
                relevant.push((h.text.as_str(), slot));
            }
            groups[slot].push(format!("\"E{}\"", i + 1));
        }
        let response = format!(
            "{{\"support\": [{}], \"contradict\": [{}], \"irrelevant\": [{}]}}",
            groups[0].join(", "),
            groups[1].join(", "),
            groups[2].join(", ")
        );
        let prompt = classification_prompt(&c.claim, &texts);
        if t == RETRY_TOPIC {
            mock.register(&prompt, format!("```json\n{response}\n```"));
            mock.register(&with_correction(&prompt), response);
        } else {
            mock.register(&prompt, response);
        }

        if relevant.is_empty() {
            let answer = if rng.random_bool(0.5) {
                "True"
            } else {
                "false"
            };
            mock.register(&fallback_prompt(&c.claim), answer);
            continue;
        }
        if relevant.len() >= 2 {
            let mut sup = Vec::new();
            let mut con = Vec::new();
            for i in 0..relevant.len() {
                for j in i + 1..relevant.len() {
                    if !rng.random_bool(0.6) {
                        continue;
                    }
                    let pair = format!("[\"E{}\", \"E{}\"]", i + 1, j + 1);
                    if relevant[i].1 == relevant[j].1 {
                        sup.push(pair);
                    } else {
                        con.push(pair);
                    }
                }
            }
            let rel_texts: Vec<&str> = relevant.iter().map(|r| r.0).collect();
            mock.register(
                &pairs_prompt(&c.claim, &rel_texts),
                format!(
                    "{{\"support\": [{}], \"contradict\": [{}]}}",
                    sup.join(", "),
                    con.join(", ")
                ),
            );
        }
    }

    fs::create_dir_all(&out).unwrap();
    let jsonl = |items: Vec<String>| items.join("\n") + "\n";
    fs::write(
        out.join("corpus.jsonl"),
        jsonl(
            docs.iter()
                .map(|d| serde_json::to_string(d).unwrap())
                .collect(),
        ),
    )
    .unwrap();
    fs::write(
        out.join("claims.jsonl"),
        jsonl(
            claims
                .iter()
                .map(|c| serde_json::to_string(c).unwrap())
                .collect(),
        ),
    )
    .unwrap();
    fs::write(
        out.join("mock.jsonl"),
        jsonl(
            mock.fixtures()
                .iter()
                .map(|f| serde_json::to_string(f).unwrap())
                .collect(),
        ),
    )
    .unwrap();
    println!(
        "wrote {} documents, {} claims, {} fixtures to {}",
        docs.len(),
        claims.len(),
        mock.len(),
        out.display()
    );
}
