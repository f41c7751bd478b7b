//! Engine options shared by every subcommand, and the optional TOML file
//! that overrides them.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use argverify_core::annotator::{
    CompletionClient, HttpClient, HttpClientConfig, Limited, MockClient,
};
use argverify_core::pipeline::{BaseInit, PipelineConfig, RelationsMode};
use argverify_core::retrieval::{CorpusIndex, PrecomputedRetrieval, Retriever};
use argverify_core::{Error, Result, Semantics, SolverParams};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotatorKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Gradual semantics: qe, dfquad or euler
    #[arg(long, default_value = "qe", global = true)]
    pub semantics: Semantics,
    /// RK4 step size
    #[arg(long, default_value_t = 0.1, global = true)]
    pub step: f64,
    /// Convergence threshold on max |dσ/dt|
    #[arg(long, default_value_t = 0.001, global = true)]
    pub epsilon: f64,
    /// Integration time limit
    #[arg(long, default_value_t = 100.0, global = true)]
    pub max_time: f64,
    /// Verdict threshold on the claim strength
    #[arg(long, default_value_t = 0.5, global = true)]
    pub tau: f64,
    /// Number of passages retrieved per claim
    #[arg(long, default_value_t = 5, global = true)]
    pub top_k: usize,
    /// full or claim-only
    #[arg(long, default_value = "full", global = true)]
    pub relations: RelationsMode,
    /// uniform or retriever
    #[arg(long, default_value = "uniform", global = true)]
    pub base_init: BaseInit,
    #[arg(long, value_enum, default_value = "mock", global = true)]
    pub annotator: AnnotatorKind,
    /// Mock responses (JSONL of prompt_sha256/response)
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Chat-completions endpoint for the http annotator
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Model name for the http annotator
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Maximum concurrent completions
    #[arg(long, default_value_t = 4, global = true)]
    pub in_flight: usize,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads for eval (0 = one per core)
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
    /// TOML file whose values override the flags above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Every key is optional; present keys replace the flag value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub semantics: Option<Semantics>,
    pub step: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_time: Option<f64>,
    pub tau: Option<f64>,
    pub top_k: Option<usize>,
    pub relations: Option<RelationsMode>,
    pub base_init: Option<BaseInit>,
    pub annotator: Option<AnnotatorKind>,
    pub fixtures: Option<PathBuf>,
    pub in_flight: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub http: Option<HttpClientConfig>,
}

/// Options after applying the config file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub annotator: AnnotatorKind,
    pub fixtures: Option<PathBuf>,
    pub http: HttpClientConfig,
    pub in_flight: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl EngineArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| Error::Schema {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            }
            None => ConfigFile::default(),
        };
        let mut http = file.http.unwrap_or_default();
        if let Some(e) = &self.endpoint {
            http.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            http.model = m.clone();
        }
        let pipeline = PipelineConfig {
            top_k: file.top_k.unwrap_or(self.top_k),
            tau: file.tau.unwrap_or(self.tau),
            relations_mode: file.relations.unwrap_or(self.relations),
            base_init: file.base_init.unwrap_or(self.base_init),
            semantics: file.semantics.unwrap_or(self.semantics),
            solver: SolverParams {
                step: file.step.unwrap_or(self.step),
                epsilon: file.epsilon.unwrap_or(self.epsilon),
                max_time: file.max_time.unwrap_or(self.max_time),
            },
        };
        pipeline.validate()?;
        Ok(Resolved {
            pipeline,
            annotator: file.annotator.unwrap_or(self.annotator),
            fixtures: file.fixtures.or_else(|| self.fixtures.clone()),
            http,
            in_flight: file.in_flight.unwrap_or(self.in_flight),
            seed: file.seed.unwrap_or(self.seed),
            jobs: file.jobs.unwrap_or(self.jobs),
        })
    }
}

impl Resolved {
    pub fn client(&self) -> Result<Arc<dyn CompletionClient>> {
        let inner: Arc<dyn CompletionClient> = match self.annotator {
            AnnotatorKind::Mock => {
                let path = self.fixtures.as_ref().ok_or_else(|| {
                    Error::InvalidParams("the mock annotator needs --fixtures".into())
                })?;
                Arc::new(MockClient::from_jsonl(path)?)
            }
            AnnotatorKind::Http => Arc::new(HttpClient::new(self.http.clone())?),
        };
        Ok(Arc::new(Limited::new(inner, self.in_flight)))
    }
}

/// Lexical retrieval over `corpus`, or precomputed rankings when
/// `retrieval` is given.
pub fn load_retriever(corpus: &Path, retrieval: Option<&Path>) -> Result<Arc<dyn Retriever>> {
    let index = CorpusIndex::from_jsonl(corpus)?;
    Ok(match retrieval {
        Some(r) => Arc::new(PrecomputedRetrieval::from_jsonl(index, r)?),
        None => Arc::new(index),
    })
}
