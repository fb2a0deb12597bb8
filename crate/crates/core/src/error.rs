use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{what} = {value} outside allowed range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state is not normalized: |a0|^2 + |a1|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is not a density matrix: {0}")]
    NotPhysical(&'static str),

    #[error("no photons recorded in the {0} basis")]
    EmptyBasis(&'static str),

    #[error("likelihood optimizer returned a non-finite log-likelihood")]
    NonFiniteLikelihood,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
