use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("window size must be at least 2, got {0}")]
    WindowTooSmall(usize),

    #[error("degenerate fit for {feature}: all speed means are identical")]
    DegenerateFit { feature: &'static str },

    #[error("need at least {needed} events, got {got}")]
    TooFewEvents { needed: usize, got: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),

    #[error("point matrix is ragged: {len} values do not split into rows of {dim}")]
    RaggedPoints { len: usize, dim: usize },

    #[error("spanning tree is invalid: {0}")]
    InvalidSpanningTree(String),

    #[error("no dominant cluster: every event was labeled noise")]
    NoDominantCluster,

    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),

    #[error("evaluation unavailable: {0}")]
    EvaluationUnavailable(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Pipeline step used to tag errors with provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Windowing,
    Calibration,
    Normalization,
    FirstClustering,
    SecondClustering,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Windowing => "windowing",
            Stage::Calibration => "calibration",
            Stage::Normalization => "normalization",
            Stage::FirstClustering => "first clustering",
            Stage::SecondClustering => "second clustering",
        })
    }
}
