use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("invalid interval [{lo},{hi}] at {pos}: need 0 <= lo < hi")]
    Interval { pos: usize, lo: i64, hi: i64 },

    #[error("unknown variable x{} at {pos} (state dimension is {state_dim})", index + 1)]
    UnknownVariable {
        pos: usize,
        index: usize,
        state_dim: usize,
    },

    #[error("trajectory too short: need {required} samples, have {available}")]
    TrajectoryTooShort { required: usize, available: usize },

    #[error("formula contains `true`, which has no smooth or cumulative value")]
    ContainsTrue,

    #[error("negated eventually or until at {path}; cumulative robustness needs it positive")]
    NegatedFinally { path: String },

    #[error("non-finite state produced at step {step}")]
    NonFiniteState { step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
