//! In-memory API sessions with optional JSON snapshot persistence.
//!
//! A session keeps the framework it was created with and the list of
//! contests applied since; the current framework and its solve are always
//! the result of replaying that history, which is also how snapshots are
//! restored.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use argverify_core::explain::{apply_edits, contest, ContestReport, Edit};
use argverify_core::pipeline::{DecidedBy, Verdict, Verification};
use argverify_core::{solve, Error, Qbaf, Result, Semantics, SolveResult, SolverParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// The persisted part of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub initial: Qbaf,
    pub semantics: Semantics,
    pub solver: SolverParams,
    pub tau: f64,
    pub history: Vec<Vec<Edit>>,
    pub verification: Option<Verification>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub record: SessionRecord,
    pub qbaf: Qbaf,
    pub result: SolveResult,
}

impl Session {
    pub fn new(record: SessionRecord) -> Result<Self> {
        let mut qbaf = record.initial.clone();
        for edits in &record.history {
            qbaf = apply_edits(&qbaf, edits)?;
        }
        let result = solve(&qbaf, record.semantics, &record.solver)?;
        Ok(Self {
            record,
            qbaf,
            result,
        })
    }

    pub fn id(&self) -> &str {
        &self.record.id
    }

    /// Verdict on the current framework, or the recorded fallback verdict
    /// while the session is unedited.
    pub fn verdict(&self) -> Option<Verdict> {
        if let Some(v) = &self.record.verification {
            if self.record.history.is_empty() && v.verdict.decided_by == DecidedBy::FallbackLlm {
                return Some(v.verdict.clone());
            }
        }
        let claim = self.qbaf.claim()?;
        Some(Verdict::from_strength(
            self.result.strengths[&claim.id],
            self.record.tau,
            self.result.converged,
        ))
    }

    pub fn contest(&mut self, edits: &[Edit]) -> Result<ContestReport> {
        let c = contest(
            &self.qbaf,
            edits,
            self.record.semantics,
            &self.record.solver,
            self.record.tau,
        )?;
        self.record.history.push(edits.to_vec());
        self.qbaf = c.qbaf;
        self.result = c.result;
        Ok(c.report)
    }

    pub fn view(&self) -> Value {
        let t = &self.result.trajectory;
        json!({
            "session_id": self.record.id,
            "qbaf": self.qbaf,
            "strengths": self.result.strengths,
            "converged": self.result.converged,
            "steps": self.result.steps,
            "trajectory": {"ids": t.ids, "times": t.times, "samples": t.samples},
            "verdict": self.verdict(),
            "tau": self.record.tau,
            "semantics": self.record.semantics,
            "solver": self.record.solver,
            "history": self.record.history,
            "verification": self.record.verification,
        })
    }
}

#[derive(Debug, Default)]
pub struct SessionStore {
    next: u64,
    sessions: BTreeMap<String, Session>,
    snapshot: Option<PathBuf>,
}

impl SessionStore {
    /// Restores sessions from `snapshot` when the file exists.
    pub fn open(snapshot: Option<PathBuf>) -> Result<Self> {
        let mut store = Self {
            snapshot,
            ..Self::default()
        };
        if let Some(path) = store.snapshot.clone().filter(|p| p.exists()) {
            let text = fs::read_to_string(&path)?;
            let records: Vec<SessionRecord> =
                serde_json::from_str(&text).map_err(|e| Error::Schema {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            for r in records {
                let n = r.id.trim_start_matches('s').parse::<u64>().unwrap_or(0);
                store.next = store.next.max(n);
                let s = Session::new(r)?;
                store.sessions.insert(s.id().to_owned(), s);
            }
        }
        Ok(store)
    }

    pub fn create(
        &mut self,
        initial: Qbaf,
        semantics: Semantics,
        solver: SolverParams,
        tau: f64,
        verification: Option<Verification>,
    ) -> Result<&Session> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParams(format!(
                "tau = {tau} is outside [0, 1]"
            )));
        }
        self.next += 1;
        let id = format!("s{}", self.next);
        let s = Session::new(SessionRecord {
            id: id.clone(),
            initial,
            semantics,
            solver,
            tau,
            history: Vec::new(),
            verification,
        })?;
        self.sessions.insert(id.clone(), s);
        self.persist()?;
        Ok(&self.sessions[&id])
    }

    pub fn get(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    /// `None` when the session does not exist.
    pub fn contest(&mut self, id: &str, edits: &[Edit]) -> Option<Result<ContestReport>> {
        let session = self.sessions.get_mut(id)?;
        let out = session.contest(edits);
        if out.is_ok() {
            if let Err(e) = self.persist() {
                return Some(Err(e));
            }
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    fn persist(&self) -> Result<()> {
        let Some(path) = &self.snapshot else {
            return Ok(());
        };
        let records: Vec<&SessionRecord> = self.sessions.values().map(|s| &s.record).collect();
        let text = serde_json::to_string_pretty(&records).map_err(std::io::Error::from)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}
