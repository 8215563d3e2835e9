use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The edge list contains a directed cycle. `witness` lists the vertices
    /// of one cycle in edge order.
    #[error("graph contains a directed cycle through vertices {witness:?}")]
    Cycle { witness: Vec<u32> },

    #[error("vertex {vertex} out of range (graph has {vertex_count} vertices)")]
    Range { vertex: u64, vertex_count: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("path count overflows 64 bits at vertex {vertex}, length {length}")]
    Overflow { vertex: u32, length: usize },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("output budget of {budget} traces exceeded")]
    BudgetExceeded { budget: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// True for errors caused by invalid input data or parameters, as opposed
    /// to I/O failures.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
