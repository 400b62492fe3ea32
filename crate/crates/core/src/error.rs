use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what}: {msg}")]
    Domain { what: &'static str, msg: String },

    #[error("{what}: no convergence after {iters} iterations")]
    NoConvergence { what: &'static str, iters: usize },

    /// The requested quantity has an empty feasible set (e.g. no admissible ξ
    /// for the Ekert threshold). Callers at protocol level map this to l = 0.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid configuration `{field}`: {msg}")]
    Config { field: &'static str, msg: String },

    #[error("degenerate channel: no detections expected")]
    DegenerateChannel,

    /// The threshold function is not locally nondecreasing at p_th, so the
    /// conditional failure guarantee does not apply.
    #[error("slope condition violated for {family} at p_th = {p_th}: threshold not nondecreasing")]
    SlopeCondition { family: &'static str, p_th: f64 },
}

impl Error {
    pub(crate) fn domain(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { what, msg: msg.into() }
    }

    pub(crate) fn config(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Config { field, msg: msg.into() }
    }
}
