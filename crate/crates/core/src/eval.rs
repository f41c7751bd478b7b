//! Batch verification over a claims file.
//!
//! Each claim is verified independently (in parallel when asked); records
//! are written in input order so output files are reproducible regardless
//! of scheduling.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotator::CompletionClient;
use crate::error::{Error, Result};
use crate::pipeline::{verify, DecidedBy, Label, PipelineConfig, Verification};
use crate::retrieval::Retriever;

pub const HISTOGRAM_BINS: usize = 20;
pub const BIN_WIDTH: f64 = 1.0 / HISTOGRAM_BINS as f64;
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimInput {
    pub claim_id: String,
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

pub fn read_claims(path: impl AsRef<Path>) -> Result<Vec<ClaimInput>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: ClaimInput = serde_json::from_str(line)
            .map_err(|e| Error::schema(format!("line {}", n + 1), e.to_string()))?;
        out.push(c);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordError {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for RecordError {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

/// One line of the records file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub claim_id: String,
    pub gold: Option<Label>,
    pub correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
}

/// Counts of claim strengths per bin of width 0.05; strength 1 falls in the
/// last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub all: Vec<u64>,
    pub gold_true: Vec<u64>,
    pub gold_false: Vec<u64>,
}

impl Default for Histogram {
    fn default() -> Self {
        Self {
            bin_width: BIN_WIDTH,
            all: vec![0; HISTOGRAM_BINS],
            gold_true: vec![0; HISTOGRAM_BINS],
            gold_false: vec![0; HISTOGRAM_BINS],
        }
    }
}

pub fn bin_index(strength: f64) -> usize {
    ((strength * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

impl Histogram {
    fn add(&mut self, strength: f64, gold: Option<Label>) {
        let b = bin_index(strength);
        self.all[b] += 1;
        match gold {
            Some(Label::True) => self.gold_true[b] += 1,
            Some(Label::False) => self.gold_false[b] += 1,
            None => {}
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_claims: usize,
    pub n_labeled: usize,
    pub n_correct: usize,
    /// `n_correct / n_labeled`; absent when no claim carries a label.
    pub accuracy: Option<f64>,
    pub n_fallback: usize,
    pub n_nonconverged: usize,
    pub n_errors: usize,
    /// Relative to the summary file.
    pub records_path: String,
    pub histogram: Histogram,
    pub config: PipelineConfig,
}

/// Verifies every claim. `jobs` bounds the worker threads (0 = rayon default).
pub fn evaluate(
    claims: &[ClaimInput],
    retriever: &dyn Retriever,
    config: &PipelineConfig,
    client: &dyn CompletionClient,
    jobs: usize,
) -> Result<(EvalSummary, Vec<EvalRecord>)> {
    config.validate()?;
    let run_one = |c: &ClaimInput| {
        let outcome = verify(Some(&c.claim_id), &c.claim, retriever, config, client);
        match outcome {
            Ok(v) => EvalRecord {
                claim_id: c.claim_id.clone(),
                gold: c.label,
                correct: c.label.map(|g| g == v.verdict.label),
                verification: Some(v),
                error: None,
            },
            Err(e) => {
                log::warn!("claim {} failed: {e}", c.claim_id);
                EvalRecord {
                    claim_id: c.claim_id.clone(),
                    gold: c.label,
                    correct: c.label.map(|_| false),
                    verification: None,
                    error: Some(RecordError::from(&e)),
                }
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let records: Vec<EvalRecord> = pool.install(|| claims.par_iter().map(run_one).collect());

    let mut histogram = Histogram::default();
    let mut summary = EvalSummary {
        n_claims: claims.len(),
        n_labeled: claims.iter().filter(|c| c.label.is_some()).count(),
        n_correct: records.iter().filter(|r| r.correct == Some(true)).count(),
        accuracy: None,
        n_fallback: 0,
        n_nonconverged: 0,
        n_errors: records.iter().filter(|r| r.error.is_some()).count(),
        records_path: RECORDS_FILE.into(),
        histogram: Histogram::default(),
        config: *config,
    };
    for r in &records {
        let Some(v) = &r.verification else { continue };
        match v.verdict.decided_by {
            DecidedBy::FallbackLlm => summary.n_fallback += 1,
            DecidedBy::Qbaf => {
                if let Some(s) = v.verdict.claim_strength {
                    histogram.add(s, r.gold);
                }
            }
        }
        if !v.verdict.converged {
            summary.n_nonconverged += 1;
        }
    }
    summary.histogram = histogram;
    if summary.n_labeled > 0 {
        summary.accuracy = Some(summary.n_correct as f64 / summary.n_labeled as f64);
    }
    Ok((summary, records))
}

/// Writes `records.jsonl` and `summary.json` into `out_dir`.
pub fn write_outputs(
    out_dir: impl AsRef<Path>,
    summary: &EvalSummary,
    records: &[EvalRecord],
) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(fs::File::create(dir.join(RECORDS_FILE))?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(std::io::Error::from)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    let mut text = serde_json::to_string_pretty(summary).map_err(std::io::Error::from)?;
    text.push('\n');
    fs::write(dir.join(SUMMARY_FILE), text)?;
    Ok(())
}
