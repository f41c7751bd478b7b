//! `argverify`: verify claims, run evaluations and property suites, and
//! serve the local session API.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use argverify_cli::options::{load_retriever, EngineArgs};
use argverify_cli::server::{router, AppState};
use argverify_cli::session::SessionStore;
use argverify_core::axioms::{run_suite, PropertyKind};
use argverify_core::eval::{evaluate, read_claims, write_outputs};
use argverify_core::explain::{contest, explain_argument_with, Edit, DEFAULT_SNIPPET_LEN};
use argverify_core::pipeline::verify;
use argverify_core::{solve, Error, Qbaf, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "argverify",
    version,
    about = "Claim verification with quantitative bipolar argumentation"
)]
struct Cli {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a framework file and print final strengths
    Solve {
        #[arg(long)]
        qbaf: PathBuf,
    },
    /// Verify one claim against a corpus
    Verify {
        #[arg(long)]
        claim: String,
        #[arg(long)]
        claim_id: Option<String>,
        #[arg(long)]
        corpus: PathBuf,
        /// Precomputed rankings (JSONL) used instead of lexical search
        #[arg(long)]
        retrieval: Option<PathBuf>,
    },
    /// Verify a claims file and write records.jsonl and summary.json
    Eval {
        #[arg(long)]
        claims: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        retrieval: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check gradual-semantics properties on generated instances; prints
    /// one JSON report per instance
    Axioms {
        /// Properties to check (default: all)
        #[arg(long = "property")]
        properties: Vec<PropertyKind>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Write per-property counts here as JSON
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Explain the final strength of one argument
    Explain {
        #[arg(long)]
        qbaf: PathBuf,
        #[arg(long = "arg")]
        argument: String,
        #[arg(long, default_value_t = DEFAULT_SNIPPET_LEN)]
        snippet: usize,
    },
    /// Apply edits, re-solve and report whether the verdict flips
    Contest {
        #[arg(long)]
        qbaf: PathBuf,
        /// One edit as JSON; repeatable, applied in order
        #[arg(long = "edit")]
        edits: Vec<String>,
        /// JSON file holding an array of edits, applied after --edit
        #[arg(long)]
        edits_file: Option<PathBuf>,
        /// Write the edited framework here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the RK4 trajectory as CSV
    ExportTrajectory {
        #[arg(long)]
        qbaf: PathBuf,
        /// Output file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the session API
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Enables POST /verify together with an annotator
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        retrieval: Option<PathBuf>,
        /// Sessions are restored from and saved to this file
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            return fail("UsageError", message.trim_end());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
    ExitCode::from(if kind == "UsageError" { 2 } else { 1 })
}

/// A closed pipe on stdout ends the command quietly.
fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    write_stdout(&(text + "\n"))
}

fn read_qbaf(path: &Path) -> Result<Qbaf> {
    Qbaf::from_json(&fs::read_to_string(path)?)
}

fn schema(path: &Path, e: impl ToString) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let opts = cli.engine.resolve()?;
    let cfg = opts.pipeline;
    match cli.command {
        Command::Solve { qbaf } => {
            let q = read_qbaf(&qbaf)?;
            let r = solve(&q, cfg.semantics, &cfg.solver)?;
            print_json(&r)
        }
        Command::Verify {
            claim,
            claim_id,
            corpus,
            retrieval,
        } => {
            let retriever = load_retriever(&corpus, retrieval.as_deref())?;
            let client = opts.client()?;
            let v = verify(
                claim_id.as_deref(),
                &claim,
                retriever.as_ref(),
                &cfg,
                client.as_ref(),
            )?;
            print_json(&v)
        }
        Command::Eval {
            claims,
            corpus,
            retrieval,
            out,
        } => {
            let retriever = load_retriever(&corpus, retrieval.as_deref())?;
            let client = opts.client()?;
            let claims = read_claims(&claims)?;
            let (summary, records) = evaluate(
                &claims,
                retriever.as_ref(),
                &cfg,
                client.as_ref(),
                opts.jobs,
            )?;
            write_outputs(&out, &summary, &records)?;
            print_json(&summary)
        }
        Command::Axioms {
            properties,
            count,
            tolerance,
            summary: summary_path,
        } => {
            let kinds = if properties.is_empty() {
                PropertyKind::ALL.to_vec()
            } else {
                properties
            };
            let mut summary = Vec::new();
            let mut lines = String::new();
            for kind in kinds {
                let (rs, nonconverged) = run_suite(
                    kind,
                    count,
                    opts.seed,
                    cfg.semantics,
                    &cfg.solver,
                    tolerance,
                )?;
                let violations = rs.iter().filter(|r| r.holds == Some(false)).count();
                let inconclusive = rs.iter().filter(|r| r.holds.is_none()).count();
                let worst_seed = rs
                    .iter()
                    .find(|r| r.holds == Some(false))
                    .and_then(|r| r.seed);
                summary.push(json!({
                    "property": kind,
                    "semantics": cfg.semantics,
                    "instances": count,
                    "checked": rs.len() - inconclusive,
                    "violations": violations,
                    "inconclusive": inconclusive,
                    "nonconverged": nonconverged,
                    "first_violation_seed": worst_seed,
                }));
                for r in &rs {
                    lines.push_str(&serde_json::to_string(r).map_err(std::io::Error::from)?);
                    lines.push('\n');
                }
            }
            if let Some(path) = summary_path {
                let text = serde_json::to_string_pretty(&summary).map_err(std::io::Error::from)?;
                fs::write(path, text + "\n")?;
            }
            write_stdout(&lines)
        }
        Command::Explain {
            qbaf,
            argument,
            snippet,
        } => {
            let q = read_qbaf(&qbaf)?;
            let r = solve(&q, cfg.semantics, &cfg.solver)?;
            print_json(&explain_argument_with(&q, &r, &argument, snippet)?)
        }
        Command::Contest {
            qbaf,
            edits,
            edits_file,
            out,
        } => {
            let q = read_qbaf(&qbaf)?;
            let mut all: Vec<Edit> = Vec::new();
            for e in &edits {
                all.push(serde_json::from_str(e).map_err(|err| schema(Path::new("--edit"), err))?);
            }
            if let Some(path) = edits_file {
                let text = fs::read_to_string(&path)?;
                let more: Vec<Edit> =
                    serde_json::from_str(&text).map_err(|err| schema(&path, err))?;
                all.extend(more);
            }
            if all.is_empty() {
                return Err(Error::InvalidParams("no edits given".into()));
            }
            let c = contest(&q, &all, cfg.semantics, &cfg.solver, cfg.tau)?;
            if let Some(path) = out {
                fs::write(path, c.qbaf.to_json_pretty())?;
            }
            print_json(&c.report)
        }
        Command::ExportTrajectory { qbaf, out } => {
            let q = read_qbaf(&qbaf)?;
            let r = solve(&q, cfg.semantics, &cfg.solver)?;
            let csv = r.trajectory.to_csv();
            match out {
                Some(path) => fs::write(path, csv)?,
                None => write_stdout(&csv)?,
            }
            Ok(())
        }
        Command::Serve {
            addr,
            corpus,
            retrieval,
            snapshot,
        } => {
            let (retriever, client) = match corpus {
                Some(c) => (
                    Some(load_retriever(&c, retrieval.as_deref())?),
                    Some(opts.client()?),
                ),
                None => (None, None),
            };
            let state = Arc::new(AppState {
                pipeline: cfg,
                retriever,
                client,
                store: Mutex::new(SessionStore::open(snapshot)?),
            });
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                log::info!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(state)).await
            })?;
            Ok(())
        }
    }
}
