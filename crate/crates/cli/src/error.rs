use std::io;
use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("game fails validation")]
    Validation,
    #[error(transparent)]
    Model(#[from] mdpcg::Error),
    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation => 1,
            CliError::Read { .. } | CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Write(_) => 3,
            CliError::Model(e) => match e {
                mdpcg::Error::NotStrictlyPositive { .. }
                | mdpcg::Error::NotPositiveDefinite { .. }
                | mdpcg::Error::IllConditioned { .. } => 4,
                mdpcg::Error::NotInvertible { .. } | mdpcg::Error::SelfLoopUnsupported { .. } => 5,
                _ => 3,
            },
        }
    }

    /// Machine-readable diagnostic for stdout, where one applies.
    pub fn payload(&self) -> Option<Value> {
        match self {
            CliError::Model(e) => {
                let mut v = json!({ "error": e.kind(), "message": e.to_string() });
                if let mdpcg::Error::NotInvertible { edges, hyperarcs } = e {
                    v["edges"] = json!(edges);
                    v["hyperarcs"] = json!(hyperarcs);
                }
                Some(v)
            }
            CliError::Parse(msg) => Some(json!({ "error": "ParseError", "message": msg })),
            _ => None,
        }
    }
}
