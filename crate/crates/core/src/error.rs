use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context}: multiplier component {index} is negative ({value})")]
    NegativeMultiplier {
        context: &'static str,
        index: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("oracle evaluated outside its domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projection onto intersection did not converge after {iterations} iterations (change {change:e})")]
    ProjectionNotConverged { iterations: usize, change: f64 },

    #[error("agent {agent}: no sample satisfies g(x) <= -{margin}; the Slater margin is too large for this local set")]
    EmptySlaterSet { agent: usize, margin: f64 },

    #[error("max/min consensus not reached after {rounds} rounds; the graph sequence violates periodic connectivity")]
    ConsensusNotReached { rounds: usize },

    #[error("assumption check failed:\n{0}")]
    Validation(ValidationReport),

    #[error("step-size schedule rejected: {0}")]
    Schedule(String),

    #[error("dual estimate exceeded safety cap {cap:e} at round {round} (norm {norm:e})")]
    DualBlowUp { round: usize, norm: f64, cap: f64 },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("round {round}, agent {agent}, {op}: {source}")]
    InRound {
        round: usize,
        agent: usize,
        op: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_round(self, round: usize, agent: usize, op: &'static str) -> Self {
        Error::InRound {
            round,
            agent,
            op,
            source: Box::new(self),
        }
    }

    /// True for failures of the assumption/schedule validators, as opposed to
    /// runtime errors.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) | Error::Schedule(_) | Error::Config(_) | Error::Precondition(_) => true,
            Error::InRound { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { context, expected, got });
    }
    Ok(())
}

pub(crate) fn check_nonneg(context: &'static str, v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeMultiplier { context, index, value });
        }
    }
    Ok(())
}

pub(crate) fn check_finite(context: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}
