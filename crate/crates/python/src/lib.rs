//! Python bindings for the argverify engine.
//!
//! Structured results cross the boundary as plain dicts and lists built from
//! the same JSON the CLI prints, so Python sees exactly the engine's numbers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use argverify_core::annotator::MockClient as CoreMockClient;
use argverify_core::axioms::{run_suite, PropertyKind};
use argverify_core::eval::{evaluate as core_evaluate, read_claims, write_outputs};
use argverify_core::explain::{
    contest as core_contest, explain_argument_with, Edit, DEFAULT_SNIPPET_LEN,
};
use argverify_core::pipeline::{verify as core_verify, BaseInit, PipelineConfig, RelationsMode};
use argverify_core::retrieval::CorpusIndex as CoreCorpusIndex;
use argverify_core::{
    Argument, ArgumentKind, Error, Qbaf, Semantics, SolveResult as CoreSolveResult, SolverParams,
};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(
    argverify,
    ArgverifyError,
    PyException,
    "Engine error; args are (kind, message)."
);

fn err(e: Error) -> PyErr {
    ArgverifyError::new_err((e.kind().to_string(), e.to_string()))
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n
                .as_f64()
                .unwrap_or(f64::NAN)
                .into_pyobject(py)?
                .into_any()
                .unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn ser_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value)
        .map_err(|e| ArgverifyError::new_err(("SerializeError", e.to_string())))?;
    to_py(py, &v)
}

/// Round-trips a Python object through the `json` module.
fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| {
        err(Error::Schema {
            path: "$".into(),
            message: e.to_string(),
        })
    })
}

fn solver(
    semantics: &str,
    step: f64,
    epsilon: f64,
    max_time: f64,
) -> PyResult<(Semantics, SolverParams)> {
    let sem: Semantics = semantics.parse().map_err(err)?;
    let params = SolverParams {
        step,
        epsilon,
        max_time,
    };
    params.validate().map_err(err)?;
    Ok((sem, params))
}

/// A quantitative bipolar argumentation framework.
#[pyclass(name = "QBAF", module = "argverify", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQbaf {
    inner: Qbaf,
}

#[pymethods]
impl PyQbaf {
    /// `arguments` holds `(id, kind, text, base_score)` tuples with kind
    /// "claim" or "evidence"; edges are `(from, to)` pairs.
    #[new]
    #[pyo3(signature = (arguments, attacks=Vec::new(), supports=Vec::new()))]
    fn new(
        arguments: Vec<(String, String, String, f64)>,
        attacks: Vec<(String, String)>,
        supports: Vec<(String, String)>,
    ) -> PyResult<Self> {
        let mut args = Vec::with_capacity(arguments.len());
        for (id, kind, text, base) in arguments {
            let kind = match kind.as_str() {
                "claim" => ArgumentKind::Claim,
                "evidence" => ArgumentKind::Evidence,
                other => {
                    return Err(err(Error::Schema {
                        path: format!("arguments[{id}].kind"),
                        message: format!("unknown kind `{other}`"),
                    }))
                }
            };
            args.push(Argument::new(id, text, kind, base));
        }
        Ok(Self {
            inner: Qbaf::build(args, attacks, supports).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Qbaf::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(str::to_owned).collect()
    }

    fn base_score(&self, id: &str) -> PyResult<f64> {
        self.inner
            .base_score(id)
            .ok_or_else(|| err(Error::UnknownId(id.to_owned())))
    }

    fn attackers(&self, id: &str) -> PyResult<Vec<String>> {
        if !self.inner.contains(id) {
            return Err(err(Error::UnknownId(id.to_owned())));
        }
        Ok(self.inner.attackers(id).map(str::to_owned).collect())
    }

    fn supporters(&self, id: &str) -> PyResult<Vec<String>> {
        if !self.inner.contains(id) {
            return Err(err(Error::UnknownId(id.to_owned())));
        }
        Ok(self.inner.supporters(id).map(str::to_owned).collect())
    }

    fn claim_id(&self) -> Option<String> {
        self.inner.claim().map(|a| a.id.clone())
    }

    #[pyo3(signature = (semantics="qe", step=0.1, epsilon=0.001, max_time=100.0))]
    fn solve(
        &self,
        py: Python<'_>,
        semantics: &str,
        step: f64,
        epsilon: f64,
        max_time: f64,
    ) -> PyResult<SolveResult> {
        let (sem, params) = solver(semantics, step, epsilon, max_time)?;
        let inner = self.inner.clone();
        let result = py
            .detach(move || argverify_core::solve(&inner, sem, &params))
            .map_err(err)?;
        Ok(SolveResult { inner: result })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "QBAF(arguments={}, edges={})",
            self.inner.len(),
            self.inner.edge_count()
        )
    }
}

#[pyclass(module = "argverify", frozen)]
struct SolveResult {
    inner: CoreSolveResult,
}

#[pymethods]
impl SolveResult {
    #[getter]
    fn strengths(&self) -> BTreeMap<String, f64> {
        self.inner.strengths.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps
    }

    /// Trajectory columns in id order; `samples[i]` is the state at `times[i]`.
    #[getter]
    fn trajectory_ids(&self) -> Vec<String> {
        self.inner.trajectory.ids.clone()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.trajectory.times.clone()
    }

    #[getter]
    fn samples(&self) -> Vec<Vec<f64>> {
        self.inner.trajectory.samples.clone()
    }

    fn series(&self, id: &str) -> Option<Vec<f64>> {
        self.inner.trajectory.series(id)
    }

    fn trajectory_csv(&self) -> String {
        self.inner.trajectory.to_csv()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(converged={}, steps={})",
            self.inner.converged, self.inner.steps
        )
    }
}

/// Canned completions keyed by the SHA-256 of the prompt.
#[pyclass(module = "argverify")]
struct MockClient {
    inner: CoreMockClient,
}

#[pymethods]
impl MockClient {
    #[new]
    fn new() -> Self {
        Self {
            inner: CoreMockClient::new(),
        }
    }

    #[staticmethod]
    fn from_jsonl(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreMockClient::from_jsonl(path).map_err(err)?,
        })
    }

    fn register(&mut self, prompt: &str, response: String) {
        self.inner.register(prompt, response);
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// TF-IDF index over a JSONL corpus.
#[pyclass(module = "argverify", frozen)]
struct CorpusIndex {
    inner: CoreCorpusIndex,
}

#[pymethods]
impl CorpusIndex {
    #[staticmethod]
    fn from_jsonl(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreCorpusIndex::from_jsonl(path).map_err(err)?,
        })
    }

    #[pyo3(signature = (query, k=5))]
    fn search(&self, py: Python<'_>, query: &str, k: usize) -> PyResult<Py<PyAny>> {
        let r = self.inner.search(query, k).map_err(err)?;
        ser_to_py(py, &r)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[allow(clippy::too_many_arguments)]
fn pipeline_config(
    top_k: usize,
    tau: f64,
    relations: &str,
    base_init: &str,
    semantics: &str,
    step: f64,
    epsilon: f64,
    max_time: f64,
) -> PyResult<PipelineConfig> {
    let (semantics, solver) = solver(semantics, step, epsilon, max_time)?;
    let cfg = PipelineConfig {
        top_k,
        tau,
        relations_mode: relations.parse::<RelationsMode>().map_err(err)?,
        base_init: base_init.parse::<BaseInit>().map_err(err)?,
        semantics,
        solver,
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Explains the final strength of argument `id`.
#[pyfunction]
#[pyo3(signature = (qbaf, result, id, snippet=DEFAULT_SNIPPET_LEN))]
fn explain(
    py: Python<'_>,
    qbaf: &PyQbaf,
    result: &SolveResult,
    id: &str,
    snippet: usize,
) -> PyResult<Py<PyAny>> {
    let e = explain_argument_with(&qbaf.inner, &result.inner, id, snippet).map_err(err)?;
    ser_to_py(py, &e)
}

/// Applies edit dicts (`{"op": "set_base_score", ...}`) and re-solves.
/// Returns `(report, edited_qbaf)`.
#[pyfunction]
#[pyo3(signature = (qbaf, edits, semantics="qe", tau=0.5, step=0.1, epsilon=0.001, max_time=100.0))]
#[allow(clippy::too_many_arguments)]
fn contest(
    py: Python<'_>,
    qbaf: &PyQbaf,
    edits: &Bound<'_, PyAny>,
    semantics: &str,
    tau: f64,
    step: f64,
    epsilon: f64,
    max_time: f64,
) -> PyResult<(Py<PyAny>, PyQbaf)> {
    let (sem, params) = solver(semantics, step, epsilon, max_time)?;
    let edits: Vec<Edit> = from_py(edits)?;
    let c = core_contest(&qbaf.inner, &edits, sem, &params, tau).map_err(err)?;
    Ok((ser_to_py(py, &c.report)?, PyQbaf { inner: c.qbaf }))
}

/// Runs `count` generated instances of one property; returns
/// `(reports, nonconverged)`.
#[pyfunction]
#[pyo3(signature = (kind, count=1000, seed=0, semantics="qe", tolerance=1e-4))]
fn check_axioms(
    py: Python<'_>,
    kind: &str,
    count: usize,
    seed: u64,
    semantics: &str,
    tolerance: f64,
) -> PyResult<(Py<PyAny>, usize)> {
    let kind: PropertyKind = kind.parse().map_err(err)?;
    let sem: Semantics = semantics.parse().map_err(err)?;
    let params = SolverParams::default();
    let (reports, nonconverged) = py
        .detach(move || run_suite(kind, count, seed, sem, &params, tolerance))
        .map_err(err)?;
    Ok((ser_to_py(py, &reports)?, nonconverged))
}

/// Verifies one claim; returns the verification record as a dict.
#[pyfunction]
#[pyo3(signature = (
    claim, corpus, client, claim_id=None, top_k=5, tau=0.5, relations="full",
    base_init="uniform", semantics="qe", step=0.1, epsilon=0.001, max_time=100.0
))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    claim: &str,
    corpus: &CorpusIndex,
    client: &MockClient,
    claim_id: Option<&str>,
    top_k: usize,
    tau: f64,
    relations: &str,
    base_init: &str,
    semantics: &str,
    step: f64,
    epsilon: f64,
    max_time: f64,
) -> PyResult<Py<PyAny>> {
    let cfg = pipeline_config(
        top_k, tau, relations, base_init, semantics, step, epsilon, max_time,
    )?;
    let v = core_verify(claim_id, claim, &corpus.inner, &cfg, &client.inner).map_err(err)?;
    ser_to_py(py, &v)
}

/// Runs the pipeline over a claims JSONL file; writes `records.jsonl` and
/// `summary.json` when `out_dir` is given and returns the summary.
#[pyfunction]
#[pyo3(signature = (
    claims_path, corpus, client, out_dir=None, jobs=0, top_k=5, tau=0.5, relations="full",
    base_init="uniform", semantics="qe", step=0.1, epsilon=0.001, max_time=100.0
))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    claims_path: PathBuf,
    corpus: &CorpusIndex,
    client: &MockClient,
    out_dir: Option<PathBuf>,
    jobs: usize,
    top_k: usize,
    tau: f64,
    relations: &str,
    base_init: &str,
    semantics: &str,
    step: f64,
    epsilon: f64,
    max_time: f64,
) -> PyResult<Py<PyAny>> {
    let cfg = pipeline_config(
        top_k, tau, relations, base_init, semantics, step, epsilon, max_time,
    )?;
    let claims = read_claims(claims_path).map_err(err)?;
    let (summary, records) =
        core_evaluate(&claims, &corpus.inner, &cfg, &client.inner, jobs).map_err(err)?;
    if let Some(dir) = out_dir {
        write_outputs(dir, &summary, &records).map_err(err)?;
    }
    ser_to_py(py, &summary)
}

#[pymodule]
fn argverify(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ArgverifyError", m.py().get_type::<ArgverifyError>())?;
    m.add_class::<PyQbaf>()?;
    m.add_class::<SolveResult>()?;
    m.add_class::<MockClient>()?;
    m.add_class::<CorpusIndex>()?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(contest, m)?)?;
    m.add_function(wrap_pyfunction!(check_axioms, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
