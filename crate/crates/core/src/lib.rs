pub mod annotator;
pub mod axioms;
pub mod error;
pub mod eval;
pub mod explain;
pub mod pipeline;
pub mod qbaf;
pub mod retrieval;
pub mod semantics;

pub use error::{Error, Result};
pub use qbaf::{Argument, ArgumentKind, Edge, Qbaf, Relation};
pub use retrieval::{CorpusIndex, Document, Hit, PrecomputedRetrieval, RetrievalResult, Retriever};
pub use semantics::{solve, Semantics, SolveResult, SolverParams, Trajectory};
