use thiserror::Error;

use crate::protection::Mismatch;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid modulus: must be at least 2")]
    InvalidModulus,
    #[error("invalid exponent group order: {0}")]
    InvalidTotient(&'static str),
    #[error("base is not a unit modulo N; exponent reduction would change the result")]
    NotAUnit,
    #[error("partial window l must be at least 1")]
    InvalidWindow,
    #[error("coefficient width must be at least 1 bit")]
    InvalidCoefficientWidth,
    #[error("invalid fault model: {0}")]
    InvalidFaultModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not sample a problem instance after {0} attempts")]
    InstanceSampling(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("fault detected at step {step}: {detail}")]
    FaultDetected { step: usize, detail: Mismatch },
    #[error("timer resolution {resolution_ns} ns is too coarse for a {sample_ns} ns sample; raise the batch size")]
    TimerTooCoarse { resolution_ns: u64, sample_ns: u64 },
    #[error("malformed fixture: {0}")]
    Fixture(String),
    #[error("campaign cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
