//! End-to-end verification of a single claim.
//!
//! retrieve top-k → one argument per hit → annotate relations → build the
//! framework → solve → threshold the claim strength. When every retrieved
//! item is judged irrelevant the claim is sent to the model directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotator::{self, ClaimLabel, CompletionClient, RelationAnnotation, TEMPERATURE};
use crate::error::{check_unit, Error, Result};
use crate::qbaf::{Argument, ArgumentKind, Edge, Qbaf};
use crate::retrieval::{RetrievalResult, Retriever};
use crate::semantics::{solve, Semantics, SolveResult, SolverParams};

pub const CLAIM_ID: &str = "claim";
pub const NEUTRAL_BASE: f64 = 0.5;
pub const FALLBACK_MAX_TOKENS: u32 = 15;

const FALLBACK_TEMPLATE: &str = "You are a fact-checking expert.

For each input claim, output only true if the claim is factually correct, or false if it is not.
Respond with a single word (true or false) \u{2014} no explanations, justifications, or additional text.

Claim: {claim}
Answer:";

pub fn fallback_prompt(claim: &str) -> String {
    FALLBACK_TEMPLATE.replacen("{claim}", claim.trim(), 1)
}

pub fn evidence_id(rank: usize) -> String {
    format!("E{rank}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationsMode {
    #[default]
    Full,
    ClaimOnly,
}

impl FromStr for RelationsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "claim-only" | "claim_only" => Ok(Self::ClaimOnly),
            _ => Err(Error::InvalidParams(format!(
                "unknown relations mode `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseInit {
    #[default]
    Uniform,
    RetrieverScore,
}

impl FromStr for BaseInit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "retriever" | "retriever_score" | "retriever-score" => Ok(Self::RetrieverScore),
            _ => Err(Error::InvalidParams(format!("unknown base init `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub top_k: usize,
    pub tau: f64,
    pub relations_mode: RelationsMode,
    pub base_init: BaseInit,
    pub semantics: Semantics,
    pub solver: SolverParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            tau: 0.5,
            relations_mode: RelationsMode::Full,
            base_init: BaseInit::Uniform,
            semantics: Semantics::Qe,
            solver: SolverParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::InvalidParams("top_k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidParams(format!(
                "tau = {} is outside [0, 1]",
                self.tau
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::True
        } else {
            Label::False
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "true",
            Label::False => "false",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(Label::True),
            "false" => Ok(Label::False),
            _ => Err(Error::MalformedResponse(format!(
                "expected true or false, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    Qbaf,
    FallbackLlm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub claim_strength: Option<f64>,
    pub decided_by: DecidedBy,
    /// False only when the solver hit its time limit.
    pub converged: bool,
}

impl Verdict {
    pub fn from_strength(strength: f64, tau: f64, converged: bool) -> Self {
        Self {
            label: Label::from_bool(strength >= tau),
            claim_strength: Some(strength),
            decided_by: DecidedBy::Qbaf,
            converged,
        }
    }

    pub fn fallback(label: Label) -> Self {
        Self {
            label,
            claim_strength: None,
            decided_by: DecidedBy::FallbackLlm,
            converged: true,
        }
    }
}

/// Everything produced while verifying one claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim_id: Option<String>,
    pub claim: String,
    pub verdict: Verdict,
    pub qbaf: Qbaf,
    pub solve: Option<SolveResult>,
    pub annotation: RelationAnnotation,
    pub retrieval: RetrievalResult,
    pub config: PipelineConfig,
}

/// Builds the framework from one annotation. `evidence[i]` corresponds to
/// `retrieval.hits[i]`. Irrelevant evidence is removed; pairs touching it
/// are discarded with a warning.
pub fn build_qbaf_from_annotations(
    claim: &Argument,
    evidence: &[Argument],
    annotation: &RelationAnnotation,
    base_init: BaseInit,
    retrieval: &RetrievalResult,
) -> Result<Qbaf> {
    if claim.kind != ArgumentKind::Claim {
        return Err(Error::MissingClaim);
    }
    if base_init == BaseInit::RetrieverScore && retrieval.hits.len() != evidence.len() {
        return Err(Error::InvalidParams(format!(
            "{} evidence arguments but {} retrieval hits",
            evidence.len(),
            retrieval.hits.len()
        )));
    }
    if annotation.claim_labels.len() != evidence.len()
        || evidence
            .iter()
            .any(|e| !annotation.claim_labels.contains_key(&e.id))
    {
        return Err(Error::AnnotationMismatch(
            "claim labels do not cover exactly the evidence list".into(),
        ));
    }

    let mut args = vec![Argument {
        base_score: NEUTRAL_BASE,
        ..claim.clone()
    }];
    let mut attacks: Vec<Edge> = Vec::new();
    let mut supports: Vec<Edge> = Vec::new();
    for (i, e) in evidence.iter().enumerate() {
        let label = annotation.claim_labels[&e.id];
        if label == ClaimLabel::Irrelevant {
            continue;
        }
        let base_score = match base_init {
            BaseInit::Uniform => NEUTRAL_BASE,
            BaseInit::RetrieverScore => check_unit(
                format!("normalized score of {}", e.id),
                retrieval.hits[i].normalized_score,
            )?,
        };
        args.push(Argument {
            id: e.id.clone(),
            text: e.text.clone(),
            kind: ArgumentKind::Evidence,
            base_score,
        });
        let edge = (e.id.clone(), claim.id.clone());
        match label {
            ClaimLabel::Support => supports.push(edge),
            ClaimLabel::Contradict => attacks.push(edge),
            ClaimLabel::Irrelevant => unreachable!(),
        }
    }

    let relevant = |id: &str| {
        annotation
            .claim_labels
            .get(id)
            .map(|l| *l != ClaimLabel::Irrelevant)
    };
    for (pairs, out) in [
        (&annotation.sup_pairs, &mut supports),
        (&annotation.att_pairs, &mut attacks),
    ] {
        for (a, b) in pairs {
            match (relevant(a), relevant(b)) {
                (None, _) | (_, None) => {
                    return Err(Error::AnnotationMismatch(format!(
                        "pair ({a}, {b}) references unknown evidence"
                    )))
                }
                (Some(true), Some(true)) => {
                    out.push((a.clone(), b.clone()));
                    out.push((b.clone(), a.clone()));
                }
                _ => log::warn!("discarding pair ({a}, {b}) that involves irrelevant evidence"),
            }
        }
    }
    Qbaf::build(args, attacks, supports)
}

pub fn parse_fallback_answer(response: &str) -> Result<Label> {
    response.parse()
}

/// Verifies one claim. `claim_id` is only needed by precomputed retrieval.
pub fn verify(
    claim_id: Option<&str>,
    claim: &str,
    retriever: &dyn Retriever,
    config: &PipelineConfig,
    client: &dyn CompletionClient,
) -> Result<Verification> {
    config.validate()?;
    if claim.trim().is_empty() {
        return Err(Error::schema("claim", "claim text must be non-empty"));
    }
    let retrieval = retriever.retrieve(claim_id, claim, config.top_k)?;
    let claim_arg = Argument::claim(CLAIM_ID, claim, NEUTRAL_BASE);
    let evidence: Vec<Argument> = retrieval
        .hits
        .iter()
        .enumerate()
        .map(|(i, h)| Argument::evidence(evidence_id(i + 1), h.text.clone(), NEUTRAL_BASE))
        .collect();

    let annotation = if evidence.is_empty() {
        RelationAnnotation::default()
    } else {
        let items: Vec<(String, String)> = evidence
            .iter()
            .map(|e| (e.id.clone(), e.text.clone()))
            .collect();
        annotator::annotate(
            client,
            claim,
            &items,
            config.relations_mode == RelationsMode::ClaimOnly,
        )?
    };

    let record = |verdict, qbaf, solve| Verification {
        claim_id: claim_id.map(str::to_owned),
        claim: claim.to_owned(),
        verdict,
        qbaf,
        solve,
        annotation: annotation.clone(),
        retrieval: retrieval.clone(),
        config: *config,
    };

    if annotation.all_irrelevant() {
        let answer = client.complete(&fallback_prompt(claim), FALLBACK_MAX_TOKENS, TEMPERATURE)?;
        let label = parse_fallback_answer(&answer)?;
        let qbaf = Qbaf::build(vec![claim_arg], vec![], vec![])?;
        return Ok(record(Verdict::fallback(label), qbaf, None));
    }

    let qbaf = build_qbaf_from_annotations(
        &claim_arg,
        &evidence,
        &annotation,
        config.base_init,
        &retrieval,
    )?;
    let result = solve(&qbaf, config.semantics, &config.solver)?;
    if !result.converged {
        log::warn!("solver did not converge for claim {claim_id:?}; using final strengths");
    }
    let strength = result.strengths[CLAIM_ID];
    let verdict = Verdict::from_strength(strength, config.tau, result.converged);
    Ok(record(verdict, qbaf, Some(result)))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::annotator::{classification_prompt, pairs_prompt, MockClient};
    use crate::qbaf::Relation;
    use crate::retrieval::{CorpusIndex, Document, Hit};

    fn hits(n: usize) -> RetrievalResult {
        RetrievalResult {
            hits: (0..n)
                .map(|i| Hit {
                    doc_id: format!("d{i}"),
                    text: format!("t{i}"),
                    raw_score: 1.0 - i as f64 * 0.1,
                    normalized_score: 1.0 - i as f64 / (n.max(2) - 1) as f64,
                })
                .collect(),
            truncated: false,
        }
    }

    fn evidence(n: usize) -> Vec<Argument> {
        (1..=n)
            .map(|i| Argument::evidence(evidence_id(i), format!("t{}", i - 1), 0.5))
            .collect()
    }

    fn labels(ls: &[ClaimLabel]) -> RelationAnnotation {
        RelationAnnotation {
            claim_labels: ls
                .iter()
                .enumerate()
                .map(|(i, l)| (evidence_id(i + 1), *l))
                .collect(),
            ..Default::default()
        }
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        annotator::unordered(a, b)
    }

    use ClaimLabel::*;

    #[test]
    fn irrelevant_evidence_and_its_pairs_are_removed() {
        let mut ann = labels(&[Support, Irrelevant, Contradict]);
        ann.sup_pairs = BTreeSet::from([pair("E1", "E2")]);
        ann.att_pairs = BTreeSet::from([pair("E1", "E3")]);
        let claim = Argument::claim(CLAIM_ID, "c", 0.5);
        let q =
            build_qbaf_from_annotations(&claim, &evidence(3), &ann, BaseInit::Uniform, &hits(3))
                .unwrap();
        assert!(!q.contains("E2"));
        assert_eq!(q.relation("E1", "claim"), Some(Relation::Support));
        assert_eq!(q.relation("E3", "claim"), Some(Relation::Attack));
        assert_eq!(q.relation("E1", "E3"), Some(Relation::Attack));
        assert_eq!(q.relation("E3", "E1"), Some(Relation::Attack));
        assert_eq!(q.edge_count(), 4);
        assert!(q
            .attackers("claim")
            .chain(q.supporters("claim"))
            .all(|a| a != "claim"));
        assert_eq!(q.relation("claim", "E1"), None);
    }

    #[test]
    fn support_pairs_become_bidirectional_edges() {
        let mut ann = labels(&[Support, Support]);
        ann.sup_pairs = BTreeSet::from([pair("E2", "E1")]);
        let claim = Argument::claim(CLAIM_ID, "c", 0.5);
        let q =
            build_qbaf_from_annotations(&claim, &evidence(2), &ann, BaseInit::Uniform, &hits(2))
                .unwrap();
        assert_eq!(q.relation("E1", "E2"), Some(Relation::Support));
        assert_eq!(q.relation("E2", "E1"), Some(Relation::Support));
    }

    #[test]
    fn all_irrelevant_leaves_only_claim() {
        let ann = labels(&[Irrelevant, Irrelevant]);
        let claim = Argument::claim(CLAIM_ID, "c", 0.9);
        let q =
            build_qbaf_from_annotations(&claim, &evidence(2), &ann, BaseInit::Uniform, &hits(2))
                .unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.base_score("claim"), Some(0.5));
    }

    #[test]
    fn retriever_scores_become_base_scores() {
        let ann = labels(&[Support, Support, Contradict]);
        let claim = Argument::claim(CLAIM_ID, "c", 0.5);
        let q = build_qbaf_from_annotations(
            &claim,
            &evidence(3),
            &ann,
            BaseInit::RetrieverScore,
            &hits(3),
        )
        .unwrap();
        assert_eq!(q.base_score("E1"), Some(1.0));
        assert_eq!(q.base_score("E2"), Some(0.5));
        assert_eq!(q.base_score("E3"), Some(0.0));
        assert_eq!(q.base_score("claim"), Some(0.5));
    }

    #[test]
    fn annotation_must_cover_evidence() {
        let ann = labels(&[Support]);
        let claim = Argument::claim(CLAIM_ID, "c", 0.5);
        let err =
            build_qbaf_from_annotations(&claim, &evidence(2), &ann, BaseInit::Uniform, &hits(2))
                .unwrap_err();
        assert_eq!(err.kind(), "AnnotationMismatch");
        let mut ann = labels(&[Support, Support]);
        ann.sup_pairs = BTreeSet::from([pair("E1", "E7")]);
        let err =
            build_qbaf_from_annotations(&claim, &evidence(2), &ann, BaseInit::Uniform, &hits(2))
                .unwrap_err();
        assert_eq!(err.kind(), "AnnotationMismatch");
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(Verdict::from_strength(0.5, 0.5, true).label, Label::True);
        assert_eq!(Verdict::from_strength(0.459, 0.5, true).label, Label::False);
    }

    #[test]
    fn fallback_answers() {
        assert_eq!(parse_fallback_answer(" True\n").unwrap(), Label::True);
        assert_eq!(parse_fallback_answer("FALSE").unwrap(), Label::False);
        assert_eq!(
            parse_fallback_answer("Probably true").unwrap_err().kind(),
            "MalformedResponse"
        );
    }

    fn corpus() -> CorpusIndex {
        CorpusIndex::new(vec![
            Document {
                doc_id: "a".into(),
                text: "zinc shortens colds".into(),
                source: None,
            },
            Document {
                doc_id: "b".into(),
                text: "zinc has no effect on colds".into(),
                source: None,
            },
            Document {
                doc_id: "c".into(),
                text: "weather report for Tuesday".into(),
                source: None,
            },
        ])
        .unwrap()
    }

    #[test]
    fn verify_end_to_end_with_mock() {
        let index = corpus();
        let claim = "zinc shortens colds";
        let r = index.search(claim, 3).unwrap();
        let texts: Vec<&str> = r.hits.iter().map(|h| h.text.as_str()).collect();
        assert_eq!(texts[0], "zinc shortens colds");
        let mut mock = MockClient::new();
        mock.register(
            &classification_prompt(claim, &texts),
            r#"{"support": ["E1"], "contradict": ["E2"], "irrelevant": ["E3"]}"#,
        );
        mock.register(
            &pairs_prompt(claim, &texts[..2]),
            r#"{"support": [], "contradict": [["E1", "E2"]]}"#,
        );
        let config = PipelineConfig {
            top_k: 3,
            ..Default::default()
        };
        let v = verify(None, claim, &index, &config, &mock).unwrap();
        assert_eq!(v.verdict.decided_by, DecidedBy::Qbaf);
        assert_eq!(v.qbaf.len(), 3);
        assert_eq!(v.qbaf.relation("E1", "E2"), Some(Relation::Attack));
        // symmetric instance: support and attack cancel, claim stays at 0.5
        let s = v.verdict.claim_strength.unwrap();
        assert!((s - 0.5).abs() < 1e-12, "{s}");
        assert_eq!(v.verdict.label, Label::True);

        let again = verify(None, claim, &index, &config, &mock).unwrap();
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn verify_falls_back_when_everything_is_irrelevant() {
        let index = corpus();
        let claim = "the moon is made of cheese";
        let r = index.search(claim, 2).unwrap();
        let texts: Vec<&str> = r.hits.iter().map(|h| h.text.as_str()).collect();
        let mut mock = MockClient::new();
        mock.register(
            &classification_prompt(claim, &texts),
            r#"{"support": [], "contradict": [], "irrelevant": ["E1", "E2"]}"#,
        );
        mock.register(&fallback_prompt(claim), "false");
        let config = PipelineConfig {
            top_k: 2,
            ..Default::default()
        };
        let v = verify(None, claim, &index, &config, &mock).unwrap();
        assert_eq!(v.verdict, Verdict::fallback(Label::False));
        assert!(v.solve.is_none());
        assert_eq!(v.qbaf.len(), 1);
    }

    #[test]
    fn claim_only_mode_skips_pairs_and_is_acyclic() {
        let index = corpus();
        let claim = "zinc shortens colds";
        let r = index.search(claim, 3).unwrap();
        let texts: Vec<&str> = r.hits.iter().map(|h| h.text.as_str()).collect();
        let mut mock = MockClient::new();
        mock.register(
            &classification_prompt(claim, &texts),
            r#"{"support": ["E1", "E3"], "contradict": ["E2"], "irrelevant": []}"#,
        );
        let config = PipelineConfig {
            top_k: 3,
            relations_mode: RelationsMode::ClaimOnly,
            ..Default::default()
        };
        let v = verify(None, claim, &index, &config, &mock).unwrap();
        assert!(v.qbaf.is_acyclic());
        assert_eq!(v.qbaf.edge_count(), 3);
        assert!(v.verdict.converged);
    }

    #[test]
    fn config_validation() {
        let bad = PipelineConfig {
            top_k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PipelineConfig {
            tau: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(
            "claim-only".parse::<RelationsMode>().unwrap(),
            RelationsMode::ClaimOnly
        );
        assert_eq!(
            "retriever".parse::<BaseInit>().unwrap(),
            BaseInit::RetrieverScore
        );
    }
}
