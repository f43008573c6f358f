use thiserror::Error;

use crate::vocab::Partition;

/// Errors from the graph model, its text format and merging.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` belongs to {actual}, not {expected}")]
    PartitionViolation {
        relation: String,
        expected: Partition,
        actual: Partition,
    },
    #[error("object `{0}` appears twice in one frame")]
    DuplicateObject(String),
    #[error("relation `{0}` repeated in one set")]
    DuplicateRelation(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error("frame ids must be strictly increasing (saw {previous} then {next})")]
    NonIncreasingFrames { previous: u32, next: u32 },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
}

impl GraphError {
    /// Attaches a line number to a vocabulary error raised while parsing.
    pub(crate) fn at_line(self, line: usize) -> GraphError {
        match self {
            GraphError::Parse { .. } | GraphError::AtLine { .. } => self,
            other => GraphError::AtLine {
                line,
                source: Box::new(other),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("video `{video_id}`: {source}")]
    Record {
        video_id: String,
        #[source]
        source: GraphError,
    },
    #[error("invalid fraction {0}; expected 0 < f < 1")]
    InvalidFraction(f64),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("malformed corpus: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("observed sequence is empty")]
    EmptyObserved,
    #[error("no future frames requested")]
    NoFutureFrames,
    #[error("future frame {future} is not after the last observed frame {last_observed}")]
    FutureNotAfterObserved { future: u32, last_observed: u32 },
    #[error("object `{0}` never appears in the observed frames")]
    ObjectNotObserved(String),
    #[error("prompt scaffold alone needs ~{needed} tokens, budget is {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("rate limit still exceeded after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("server error HTTP {status} after {attempts} attempt(s)")]
    Server { status: u16, attempts: u32 },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("could not decode response: {0}")]
    Decode(String),
    #[error("mock backend: {0}")]
    Mock(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no parseable line in model output")]
    TotalParseFailure,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("{0}")]
    InvalidArgument(String),
}

/// Crate-wide error for callers that do not care which stage failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
