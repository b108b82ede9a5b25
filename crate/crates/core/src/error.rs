use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("node {node} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("eigenvector centrality did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("state-space guard exceeded: {num_nodes} nodes > guard {guard}")]
    GuardExceeded { num_nodes: usize, guard: usize },

    #[error("policy `{0}` has no exact allocation distribution")]
    NotExactlyEvaluable(String),

    #[error("invalid conditional table: {0}")]
    InvalidTable(String),

    #[error("linear program is malformed: {0}")]
    MalformedProgram(String),

    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),

    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub(crate) fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
