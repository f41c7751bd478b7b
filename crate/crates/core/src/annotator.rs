//! Two-step relation annotation through a text-completion client.
//!
//! Step one classifies every retrieved evidence item against the claim as
//! support, contradict or irrelevant. Step two asks once for support and
//! contradict pairs among the evidence that survived step one. Evidence is
//! shown to the model as `E1..Ek` in input order and mapped back to the
//! caller's ids after parsing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Token budget for both annotation prompts.
pub const ANNOTATION_MAX_TOKENS: u32 = 2048;
/// All requests run greedy.
pub const TEMPERATURE: f64 = 0.0;

/// Appended to the prompt when the first response does not parse.
pub const CORRECTIVE_SENTENCE: &str = "Your previous answer could not be parsed. Reply with exactly one JSON object using only the keys requested above, with no markdown formatting and no other text.";

pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String> {
        (**self).complete(prompt, max_tokens, temperature)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for std::sync::Arc<C> {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String> {
        (**self).complete(prompt, max_tokens, temperature)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for Box<C> {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String> {
        (**self).complete(prompt, max_tokens, temperature)
    }
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub prompt_sha256: String,
    pub response: String,
}

/// Replays recorded responses keyed by the SHA-256 of the prompt.
#[derive(Debug, Clone, Default)]
pub struct MockClient {
    responses: HashMap<String, String>,
}

impl MockClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut mock = Self::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Fixture = serde_json::from_str(line)
                .map_err(|e| Error::schema(format!("line {}", n + 1), e.to_string()))?;
            mock.responses.insert(f.prompt_sha256, f.response);
        }
        Ok(mock)
    }

    pub fn register(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses
            .insert(prompt_sha256(prompt), response.into());
    }

    pub fn fixtures(&self) -> Vec<Fixture> {
        let mut out: Vec<Fixture> = self
            .responses
            .iter()
            .map(|(k, v)| Fixture {
                prompt_sha256: k.clone(),
                response: v.clone(),
            })
            .collect();
        out.sort_by(|a, b| a.prompt_sha256.cmp(&b.prompt_sha256));
        out
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionClient for MockClient {
    fn complete(&self, prompt: &str, _max_tokens: u32, _temperature: f64) -> Result<String> {
        if prompt.is_empty() {
            return Err(Error::InvalidParams("prompt must be non-empty".into()));
        }
        let key = prompt_sha256(prompt);
        self.responses
            .get(&key)
            .cloned()
            .ok_or(Error::MissingFixture(key))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpClientConfig {
    /// Full URL of a chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Read from `api_key_env` when absent.
    pub api_key: Option<String>,
    pub api_key_env: String,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
}

impl Default for HttpClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4.1-mini".into(),
            api_key: None,
            api_key_env: "ARGVERIFY_API_KEY".into(),
            max_attempts: 3,
            backoff_base_ms: 500,
            timeout_secs: 60,
        }
    }
}

/// Blocking client for chat-completions compatible endpoints. Transport
/// failures and 5xx statuses are retried with exponential backoff.
pub struct HttpClient {
    config: HttpClientConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpClientConfig) -> Result<Self> {
        if config.max_attempts == 0 {
            return Err(Error::InvalidParams(
                "max_attempts must be at least 1".into(),
            ));
        }
        let api_key = config
            .api_key
            .clone()
            .or_else(|| std::env::var(&config.api_key_env).ok());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Client {
                status: None,
                message: e.to_string(),
            })?;
        Ok(Self {
            config,
            api_key,
            http,
        })
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, (Option<u16>, String, bool)> {
        let mut req = self.http.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (None, e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err((Some(status.as_u16()), text, status.is_server_error()));
        }
        let v: Value = resp
            .json()
            .map_err(|e| (Some(status.as_u16()), e.to_string(), false))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| {
                (
                    Some(status.as_u16()),
                    "response has no choices[0].message.content".into(),
                    false,
                )
            })
    }
}

impl CompletionClient for HttpClient {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String> {
        if prompt.is_empty() {
            return Err(Error::InvalidParams("prompt must be non-empty".into()));
        }
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_tokens,
            "temperature": temperature,
        });
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((status, message, retryable)) => {
                    if !retryable || attempt >= self.config.max_attempts {
                        return Err(Error::Client { status, message });
                    }
                    log::warn!("completion attempt {attempt} failed ({status:?}): {message}");
                    let delay = self.config.backoff_base_ms << (attempt - 1).min(16);
                    thread::sleep(Duration::from_millis(delay));
                }
            }
        }
    }
}

/// Caps the number of completions in flight across threads.
pub struct Limited<C> {
    inner: C,
    cap: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl<C> Limited<C> {
    pub fn new(inner: C, cap: usize) -> Self {
        Self {
            inner,
            cap: cap.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }
}

impl<C: CompletionClient> CompletionClient for Limited<C> {
    fn complete(&self, prompt: &str, max_tokens: u32, temperature: f64) -> Result<String> {
        {
            let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
            while *n >= self.cap {
                n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
            }
            *n += 1;
        }
        let out = self.inner.complete(prompt, max_tokens, temperature);
        *self.active.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.freed.notify_one();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimLabel {
    Support,
    Contradict,
    Irrelevant,
}

impl ClaimLabel {
    const KEYS: [(&'static str, ClaimLabel); 3] = [
        ("support", ClaimLabel::Support),
        ("contradict", ClaimLabel::Contradict),
        ("irrelevant", ClaimLabel::Irrelevant),
    ];
}

/// An unordered pair stored with the smaller id first.
pub type Pair = (String, String);

pub fn unordered(a: &str, b: &str) -> Pair {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub claim_labels: BTreeMap<String, ClaimLabel>,
    pub sup_pairs: BTreeSet<Pair>,
    pub att_pairs: BTreeSet<Pair>,
}

impl RelationAnnotation {
    pub fn relevant_ids(&self) -> impl Iterator<Item = &str> {
        self.claim_labels
            .iter()
            .filter(|(_, l)| **l != ClaimLabel::Irrelevant)
            .map(|(id, _)| id.as_str())
    }

    pub fn all_irrelevant(&self) -> bool {
        self.relevant_ids().next().is_none()
    }
}

const CLASSIFY_TEMPLATE: &str = r#"Task: Given a claim and multiple pieces of evidence, classify each evidence as "support", "contradict", or "irrelevant" to the claim. Classify each evidence as either supporting, contradicting, or irrelevant to the claim.

Instructions:
- Support: Evidence that backs the claim.
- Contradict: Evidence that counters or limits the claim.
- Irrelevant: Evidence unrelated to the claim.

Output Format:
Return a single JSON object with three keys: "support", "contradict", and "irrelevant", each mapping to a list of evidence items.

Example Format:
{"support": ["E1"], "contradict": ["E3", "E4"], "irrelevant": ["E2", "E5"]}.

Claim:
{claim}
Evidence:
{evidence}

You must always PROVIDE ONLY A SINGLE JSON without any additional explanation or commentary.
DO NOT include markdown formatting (such as triple backticks or `json` tags) in the output."#;

const PAIRS_TEMPLATE: &str = r#"Task: Given a claim and multiple pieces of evidence, analyze the relationships between evidence with respect to the claim.

Instructions:
- Support: Two evidence items that reinforce each other regarding the claim.
- Contradict: Two evidence items that conflict with each other regarding the claim.

Output Format:
Return a single JSON object with two keys: "support" and "contradict", each mapping to a list of evidence pairs.

Example format:
{"support": [["E1", "E2"], ["E1", "E3"]], "contradict": [["E2", "E3"]]}

Claim: {claim}
Evidence: {evidence}

You must always PROVIDE ONLY A SINGLE JSON without any additional explanation or commentary.
DO NOT include markdown formatting (such as triple backticks or `json` tags) in the output."#;

fn render_evidence(texts: &[&str]) -> String {
    let mut out = String::new();
    for (i, t) in texts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "E{}: {}", i + 1, t.trim());
    }
    out
}

fn fill(template: &str, claim: &str, texts: &[&str]) -> String {
    template
        .replacen("{claim}", claim.trim(), 1)
        .replacen("{evidence}", &render_evidence(texts), 1)
}

/// Prompt for claim-evidence classification.
pub fn classification_prompt(claim: &str, texts: &[&str]) -> String {
    fill(CLASSIFY_TEMPLATE, claim, texts)
}

/// Prompt for evidence-evidence pairs.
pub fn pairs_prompt(claim: &str, texts: &[&str]) -> String {
    fill(PAIRS_TEMPLATE, claim, texts)
}

pub fn with_correction(prompt: &str) -> String {
    format!("{prompt}\n\n{CORRECTIVE_SENTENCE}")
}

fn object_with_keys(response: &str, keys: &[&str]) -> Result<serde_json::Map<String, Value>> {
    if response.contains("```") {
        return Err(Error::MalformedResponse(
            "response contains markdown fences".into(),
        ));
    }
    let v: Value = serde_json::from_str(response.trim())
        .map_err(|e| Error::MalformedResponse(format!("not a single JSON value: {e}")))?;
    let Value::Object(map) = v else {
        return Err(Error::MalformedResponse("expected a JSON object".into()));
    };
    for k in keys {
        if !map.contains_key(*k) {
            return Err(Error::MalformedResponse(format!("missing key `{k}`")));
        }
    }
    if let Some(extra) = map.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(Error::MalformedResponse(format!(
            "unexpected key `{extra}`"
        )));
    }
    Ok(map)
}

fn evidence_index(label: &str, k: usize) -> Result<usize> {
    label
        .strip_prefix('E')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0'))
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&n| (1..=k).contains(&n))
        .map(|n| n - 1)
        .ok_or_else(|| {
            Error::AnnotationMismatch(format!("unknown evidence id `{label}` for {k} items"))
        })
}

fn string_items<'a>(v: &'a Value, key: &str) -> Result<Vec<&'a Value>> {
    v.as_array()
        .map(|a| a.iter().collect())
        .ok_or_else(|| Error::MalformedResponse(format!("`{key}` must be a list")))
}

/// Parses a classification response over `k` rendered items. Returns one
/// label per item in input order.
pub fn parse_claim_labels(response: &str, k: usize) -> Result<Vec<ClaimLabel>> {
    let map = object_with_keys(response, &["support", "contradict", "irrelevant"])?;
    let mut labels: Vec<Option<ClaimLabel>> = vec![None; k];
    for (key, label) in ClaimLabel::KEYS {
        for item in string_items(&map[key], key)? {
            let s = item.as_str().ok_or_else(|| {
                Error::MalformedResponse(format!("`{key}` items must be strings"))
            })?;
            let i = evidence_index(s, k)?;
            if labels[i].is_some() {
                return Err(Error::AnnotationMismatch(format!(
                    "`{s}` labeled more than once"
                )));
            }
            labels[i] = Some(label);
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::AnnotationMismatch(format!("`E{}` is not labeled", i + 1)))
        })
        .collect()
}

/// Index pairs `(i, j)` with `i < j` for support and contradiction.
pub type IndexPairs = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>);

/// Parses a pairs response over `k` rendered items. Pairs are normalized to
/// unordered form, self-pairs and pairs present in both lists are dropped
/// with a warning.
pub fn parse_pairs(response: &str, k: usize) -> Result<IndexPairs> {
    let map = object_with_keys(response, &["support", "contradict"])?;
    let mut sets = [BTreeSet::new(), BTreeSet::new()];
    for (slot, key) in ["support", "contradict"].into_iter().enumerate() {
        for item in string_items(&map[key], key)? {
            let pair = item
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_str()?, a[1].as_str()?)))
                .ok_or_else(|| {
                    Error::MalformedResponse(format!("`{key}` items must be pairs of ids"))
                })?;
            let (i, j) = (evidence_index(pair.0, k)?, evidence_index(pair.1, k)?);
            if i == j {
                log::warn!("dropping self-pair ({}, {})", pair.0, pair.1);
                continue;
            }
            sets[slot].insert((i.min(j), i.max(j)));
        }
    }
    let [mut sup, mut att] = sets;
    let both: Vec<_> = sup.intersection(&att).copied().collect();
    for p in both {
        log::warn!(
            "pair (E{}, E{}) listed as both support and contradict; dropped",
            p.0 + 1,
            p.1 + 1
        );
        sup.remove(&p);
        att.remove(&p);
    }
    Ok((sup, att))
}

/// Calls the client, retrying once with a corrective sentence when the
/// response is malformed. Other errors are returned immediately.
fn complete_parsed<T>(
    client: &dyn CompletionClient,
    prompt: &str,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<T> {
    let first = client.complete(prompt, ANNOTATION_MAX_TOKENS, TEMPERATURE)?;
    match parse(&first) {
        Err(Error::MalformedResponse(why)) => {
            log::warn!("malformed response, retrying once: {why}");
            let second =
                client.complete(&with_correction(prompt), ANNOTATION_MAX_TOKENS, TEMPERATURE)?;
            parse(&second)
        }
        other => other,
    }
}

fn check_evidence(evidence: &[(String, String)]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (id, _) in evidence {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidParams(format!(
                "duplicate evidence id `{id}`"
            )));
        }
    }
    Ok(())
}

/// Labels every evidence item relative to the claim.
pub fn classify_claim_relations(
    client: &dyn CompletionClient,
    claim: &str,
    evidence: &[(String, String)],
) -> Result<BTreeMap<String, ClaimLabel>> {
    if evidence.is_empty() {
        return Err(Error::InvalidParams(
            "classification needs at least one evidence item".into(),
        ));
    }
    check_evidence(evidence)?;
    let texts: Vec<&str> = evidence.iter().map(|(_, t)| t.as_str()).collect();
    let prompt = classification_prompt(claim, &texts);
    let labels = complete_parsed(client, &prompt, |r| parse_claim_labels(r, evidence.len()))?;
    Ok(evidence
        .iter()
        .map(|(id, _)| id.clone())
        .zip(labels)
        .collect())
}

/// Support and contradiction pairs among `relevant`, keyed by caller ids.
/// Fewer than two items cannot form a pair, so no request is made.
pub fn extract_evidence_pairs(
    client: &dyn CompletionClient,
    claim: &str,
    relevant: &[(String, String)],
) -> Result<(BTreeSet<Pair>, BTreeSet<Pair>)> {
    check_evidence(relevant)?;
    if relevant.len() < 2 {
        return Ok(Default::default());
    }
    let texts: Vec<&str> = relevant.iter().map(|(_, t)| t.as_str()).collect();
    let prompt = pairs_prompt(claim, &texts);
    let (sup, att) = complete_parsed(client, &prompt, |r| parse_pairs(r, relevant.len()))?;
    let map = |set: BTreeSet<(usize, usize)>| {
        set.into_iter()
            .map(|(i, j)| unordered(&relevant[i].0, &relevant[j].0))
            .collect()
    };
    Ok((map(sup), map(att)))
}

/// Runs both steps. With `claim_only` the pairs step is skipped.
pub fn annotate(
    client: &dyn CompletionClient,
    claim: &str,
    evidence: &[(String, String)],
    claim_only: bool,
) -> Result<RelationAnnotation> {
    let claim_labels = classify_claim_relations(client, claim, evidence)?;
    let mut ann = RelationAnnotation {
        claim_labels,
        ..Default::default()
    };
    if !claim_only {
        let relevant: Vec<(String, String)> = evidence
            .iter()
            .filter(|(id, _)| ann.claim_labels[id] != ClaimLabel::Irrelevant)
            .cloned()
            .collect();
        let (sup, att) = extract_evidence_pairs(client, claim, &relevant)?;
        ann.sup_pairs = sup;
        ann.att_pairs = att;
    }
    Ok(ann)
}
