use thiserror::Error;

use crate::protocol::Phase;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("beam splitter needs r, t in [0, 1] with r + t = 1 (got r = {reflectivity}, t = {transmissivity})")]
    InvalidBeamSplitter {
        reflectivity: f64,
        transmissivity: f64,
    },
    #[error("polarization is not normalized: |cH|^2 + |cV|^2 = {0}")]
    NotNormalized(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("beam splitter with r = {0} is degenerate: 0 <= q < p < 1 does not hold")]
    DegenerateBeamSplitter(f64),
    #[error("probabilities must satisfy 0 <= q < p < 1 (got p = {p}, q = {q})")]
    ProbabilityOrder { p: f64, q: f64 },
    #[error("sequence {sequence} has no slot outside Alice's confirmed set; nothing left to flip")]
    AttackImpossible { sequence: usize },
    #[error("target {target} for {bound} is unreachable")]
    Infeasible { bound: &'static str, target: f64 },
    #[error("opening has shape {found_m}x{found_n}, transcript is {m}x{n}")]
    DimensionMismatch {
        m: usize,
        n: usize,
        found_m: usize,
        found_n: usize,
    },
    #[error("transcript is {0:?}, expected it to be committed")]
    WrongPhase(Phase),
    #[error("brute-force oracle supports 2 <= n <= 4, got {0}")]
    OracleRange(usize),
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
