//! Program input: the `.ctp` text format, the parameterized benchmark
//! families and a seeded random program generator.

mod ctp;
mod families;
mod random;

use std::path::Path;

use thiserror::Error;

use crate::model::ModelError;
use crate::syntax::ParseError;

pub use ctp::{parse, parse_property, parse_term, render};
pub use families::{
    closely_coupled, dining_philosophers, loosely_coupled, producer_consumer, sum_of_ids, Family,
};
pub use random::{random_program, RandomConfig};

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("invalid program: {0}")]
    Semantic(#[from] ModelError),
    #[error("{0}")]
    Generator(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Program text together with the name it is reported under.
#[derive(Debug, Clone)]
pub struct SourceText {
    pub name: String,
    pub text: String,
}

impl SourceText {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, FrontendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FrontendError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(SourceText {
            name: path.display().to_string(),
            text,
        })
    }

    pub fn parse(&self) -> Result<crate::model::Program, FrontendError> {
        parse(&self.text)
    }
}
