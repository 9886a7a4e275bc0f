// SPDX-License-Identifier: Apache-2.0

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A loss or parameter became NaN or infinite during training.
    #[error("non-finite {term} at epoch {epoch}, batch {batch}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        term: &'static str,
    },

    /// A tensor file is malformed.
    #[error("tensor file corrupt at byte {offset}{}: {reason}", record.as_ref().map(|r| format!(" (record {r:?})")).unwrap_or_default())]
    Format {
        offset: u64,
        record: Option<String>,
        reason: String,
    },

    /// A sampling procedure could not satisfy its constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
