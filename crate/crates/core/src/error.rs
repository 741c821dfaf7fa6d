use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Least squares on a design whose numerical rank is below its column count.
    #[error("singular system: numerical rank {rank} < {cols} columns{}", fmt_iteration(*.iteration))]
    Singular {
        rank: usize,
        cols: usize,
        iteration: Option<usize>,
    },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("combinatorial guard exceeded: {required} subsets > limit {limit}")]
    ResourceLimit { required: u128, limit: u128 },

    #[error("missing metadata: {0}")]
    MissingMetadata(&'static str),
}

fn fmt_iteration(iteration: Option<usize>) -> String {
    match iteration {
        Some(t) => format!(" at iteration {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach an iteration index to a singular-system error.
    pub(crate) fn at_iteration(self, t: usize) -> Self {
        match self {
            Error::Singular { rank, cols, .. } => Error::Singular {
                rank,
                cols,
                iteration: Some(t),
            },
            other => other,
        }
    }
}
