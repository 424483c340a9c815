//! Crate-wide error type.
//!
//! Variants are grouped by how a front end should report them: malformed or
//! inconsistent input, an exceeded enumeration cap, or an internal invariant
//! that failed (the last one indicates a bug, not bad input).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CwError {
    #[error("input error: {0}")]
    Input(String),

    #[error("graph is disconnected: no path between {a:?} and {b:?}")]
    Disconnected { a: String, b: String },

    #[error("subgroup is not normal: conjugate of {n:?} by {g:?} lands outside")]
    NotNormal { g: String, n: String },

    #[error("{what} needs {needed} states, cap is {cap}")]
    CapExceeded { what: String, needed: u128, cap: u128 },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CwError {
    pub fn input(msg: impl Into<String>) -> Self {
        CwError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CwError::Internal(msg.into())
    }

    pub fn cap(what: impl Into<String>, needed: u128, cap: u128) -> Self {
        CwError::CapExceeded { what: what.into(), needed, cap }
    }
}

pub type Result<T> = std::result::Result<T, CwError>;
