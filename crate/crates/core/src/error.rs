use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension d = {0} (need d >= {1})")]
    Dimension(usize, usize),

    #[error("loss probability {0} outside [0, 1)")]
    LossOutOfRange(f64),

    #[error("s = {s} output ports cannot resolve d = {d}: informational completeness needs s >= d - 1")]
    NotInformationallyComplete { s: u64, d: usize },

    #[error("operation needs a finite number of output ports")]
    InfinitePorts,

    #[error("singular frame operator (smallest eigenvalue {0:e})")]
    SingularFrame(f64),

    #[error("singular amplitude matrix")]
    SingularAmplitudes,

    #[error("singular Fisher information")]
    SingularFisher,

    #[error("boundary distribution: p[{index}] = {value:e} is at or below the floor {floor:e}")]
    Boundary { index: usize, value: f64, floor: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid amplitude matrix: {0}")]
    InvalidAmplitudes(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("exact integer result would exceed {0} bits")]
    Overflow(u64),

    #[error("index n = {n} beyond the memoized table (n_max = {n_max})")]
    TableLimit { n: usize, n_max: usize },

    #[error("constraint is not monotone in eps on the validation scan (near eps = {0})")]
    NonMonotone(f64),

    #[error("{rejected} of {total} samples rejected at the probability floor")]
    RejectionRate { rejected: u64, total: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;
