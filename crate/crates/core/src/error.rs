use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter box: {0}")]
    InvalidBox(String),

    #[error("parameter vector {theta:?} lies outside the parameter box")]
    OutsideBox { theta: Vec<f64> },

    #[error("{what} = {value} lies outside the state space")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The Poisson rate attached to a random element is below `r(m, θ)`,
    /// which means the model's rate bound is broken.
    #[error("rate {lambda} is below r(m, theta) = {r}")]
    DominanceViolation { lambda: f64, r: f64 },

    #[error("exact sampler gave up after {proposals} proposals (running acceptance estimate {acceptance:.3e})")]
    IterationCap { proposals: u64, acceptance: f64 },

    #[error("finite-difference stencil leaves the box along coordinate {0}")]
    StepOutsideBox(usize),

    #[error("every simplex vertex has log-likelihood -inf")]
    NoProgress,

    #[error("path left the state space at time {time} after 10 step halvings")]
    StateSpaceExit { time: f64 },

    #[error("oracle starved: {accepted} accepted out of {proposals} proposals")]
    Starvation { accepted: u64, proposals: u64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bank cache: {0}")]
    Cache(String),

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
