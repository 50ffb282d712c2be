use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario {id}: non-finite state at step {step} (t = {time:.4} s)")]
    NonFiniteState { id: String, step: usize, time: f64 },

    #[error("window {window} s beyond trace horizon (event at {t_event} s, horizon {horizon} s)")]
    WindowOutOfRange {
        window: f64,
        t_event: f64,
        horizon: f64,
    },

    #[error("window {window} s is not an integer multiple of dt = {dt} s")]
    WindowNotOnGrid { window: f64, dt: f64 },

    #[error("rocof windows do not match configured limits: {0}")]
    WindowMismatch(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("grid specification: {0}")]
    Grid(String),

    #[error("regression fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
