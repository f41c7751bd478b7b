//! Template explanations of solved frameworks and contestation by editing.
//!
//! An argument with strength at least 0.5 is explained as
//! "a is accepted because [strongest supporter] even though [strongest
//! attacker]"; below 0.5 the wording flips to "rejected" and the roles of
//! supporters and attackers swap. Missing clauses are omitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::pipeline::{Label, Verdict};
use crate::qbaf::{Qbaf, Relation};
use crate::semantics::{solve, Semantics, SolveResult, SolverParams};

/// Acceptance cut-off used by explanations, independent of the verdict
/// threshold.
pub const ACCEPTANCE_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SNIPPET_LEN: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub target: String,
    pub status: Status,
    pub strength: f64,
    pub because: Option<String>,
    pub even_though: Option<String>,
    pub rendered: String,
}

fn strongest<'a>(ids: impl Iterator<Item = &'a str>, result: &SolveResult) -> Option<String> {
    // ids arrive sorted, so keeping the first maximum breaks ties by smallest id
    let mut best: Option<(&str, f64)> = None;
    for id in ids {
        let s = result.strengths[id];
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    best.map(|(id, _)| id.to_owned())
}

fn placeholder(qbaf: &Qbaf, id: &str, snippet_len: usize) -> String {
    let text = qbaf.argument(id).map(|a| a.text.trim()).unwrap_or("");
    if snippet_len == 0 || text.is_empty() {
        return format!("[{id}]");
    }
    let mut snippet: String = text.chars().take(snippet_len).collect();
    if text.chars().count() > snippet_len {
        snippet.push_str("...");
    }
    format!("[{id}: {snippet}]")
}

fn check_covers(qbaf: &Qbaf, result: &SolveResult) -> Result<()> {
    match qbaf.ids().find(|id| !result.strengths.contains_key(*id)) {
        Some(id) => Err(Error::InvalidParams(format!(
            "solve result has no strength for `{id}`"
        ))),
        None => Ok(()),
    }
}

pub fn explain_argument(qbaf: &Qbaf, result: &SolveResult, id: &str) -> Result<Explanation> {
    explain_argument_with(qbaf, result, id, DEFAULT_SNIPPET_LEN)
}

/// `snippet_len` characters of argument text follow each id in the
/// rendered sentence; 0 renders ids only.
pub fn explain_argument_with(
    qbaf: &Qbaf,
    result: &SolveResult,
    id: &str,
    snippet_len: usize,
) -> Result<Explanation> {
    if !qbaf.contains(id) {
        return Err(Error::UnknownId(id.to_owned()));
    }
    check_covers(qbaf, result)?;
    let strength = result.strengths[id];
    let top_sup = strongest(qbaf.supporters(id), result);
    let top_att = strongest(qbaf.attackers(id), result);
    let (status, because, even_though) = if strength >= ACCEPTANCE_THRESHOLD {
        (Status::Accepted, top_sup, top_att)
    } else {
        (Status::Rejected, top_att, top_sup)
    };
    let mut rendered = format!(
        "{} is {}",
        placeholder(qbaf, id, snippet_len),
        match status {
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
        }
    );
    if let Some(b) = &because {
        let _ = write!(rendered, " because {}", placeholder(qbaf, b, snippet_len));
    }
    if let Some(e) = &even_though {
        let _ = write!(
            rendered,
            " even though {}",
            placeholder(qbaf, e, snippet_len)
        );
    }
    Ok(Explanation {
        target: id.to_owned(),
        status,
        strength,
        because,
        even_though,
        rendered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Attack,
    Support,
    Neutral,
}

impl Polarity {
    fn relation(self) -> Option<Relation> {
        match self {
            Polarity::Attack => Some(Relation::Attack),
            Polarity::Support => Some(Relation::Support),
            Polarity::Neutral => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    SetBaseScore {
        id: String,
        base_score: f64,
    },
    /// Acts on the single directed edge `from → to`.
    SetPolarity {
        from: String,
        to: String,
        polarity: Polarity,
    },
}

/// Returns a new framework with `edit` applied.
pub fn apply_edit(qbaf: &Qbaf, edit: &Edit) -> Result<Qbaf> {
    match edit {
        Edit::SetBaseScore { id, base_score } => {
            check_unit(format!("base score of {id}"), *base_score)?;
            qbaf.with_base_score(id, *base_score)
        }
        Edit::SetPolarity { from, to, polarity } => {
            for end in [from, to] {
                if !qbaf.contains(end) {
                    return Err(Error::UnknownId(end.clone()));
                }
            }
            if *polarity == Polarity::Neutral && qbaf.relation(from, to).is_none() {
                return Err(Error::EdgeNotFound {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            qbaf.with_relation(from, to, polarity.relation())
        }
    }
}

pub fn apply_edits(qbaf: &Qbaf, edits: &[Edit]) -> Result<Qbaf> {
    edits
        .iter()
        .try_fold(qbaf.clone(), |q, e| apply_edit(&q, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub strengths: BTreeMap<String, f64>,
    pub label: Label,
    pub claim_strength: f64,
    pub converged: bool,
}

impl Snapshot {
    fn new(qbaf: &Qbaf, result: &SolveResult, tau: f64) -> Result<Self> {
        let claim = qbaf.claim().ok_or(Error::MissingClaim)?;
        let s = result.strengths[&claim.id];
        let verdict = Verdict::from_strength(s, tau, result.converged);
        Ok(Self {
            strengths: result.strengths.clone(),
            label: verdict.label,
            claim_strength: s,
            converged: result.converged,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestReport {
    pub edits: Vec<Edit>,
    pub before: Snapshot,
    pub after: Snapshot,
    pub flipped: bool,
}

/// Outcome of a contest together with the edited framework and its solve.
#[derive(Debug, Clone)]
pub struct Contested {
    pub report: ContestReport,
    pub qbaf: Qbaf,
    pub result: SolveResult,
}

/// Applies `edits` in order, re-solves and compares the verdicts. The input
/// framework is left untouched.
pub fn contest(
    qbaf: &Qbaf,
    edits: &[Edit],
    semantics: Semantics,
    params: &SolverParams,
    tau: f64,
) -> Result<Contested> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParams(format!(
            "tau = {tau} is outside [0, 1]"
        )));
    }
    if qbaf.claim().is_none() {
        return Err(Error::MissingClaim);
    }
    let edited = apply_edits(qbaf, edits)?;
    let before_result = solve(qbaf, semantics, params)?;
    let after_result = solve(&edited, semantics, params)?;
    let before = Snapshot::new(qbaf, &before_result, tau)?;
    let after = Snapshot::new(&edited, &after_result, tau)?;
    let flipped = before.label != after.label;
    Ok(Contested {
        report: ContestReport {
            edits: edits.to_vec(),
            before,
            after,
            flipped,
        },
        qbaf: edited,
        result: after_result,
    })
}
