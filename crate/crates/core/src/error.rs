use std::fmt;

use thiserror::Error;

use crate::syntax::{Diagnostic, SymbolInfo};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("symbol `{name}` declared both as {old:?} and as {new:?}")]
    Clash {
        name: String,
        old: SymbolInfo,
        new: SymbolInfo,
    },
    #[error("`{0}` is not a valid symbol name")]
    BadName(String),
}

/// A lexical or syntactic error, positioned at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", render_diagnostics(.0))]
    InvalidProgram(Vec<Diagnostic>),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("`{0}` is not a partial pattern")]
    NotAPattern(String),
    #[error("{value} is not derivable for {expr} within the bound")]
    NotDerivable { expr: String, value: String },
    #[error("{0}")]
    Io(String),
    #[error("unsafe extension: {0}")]
    UnsafeExtension(String),
    #[error("let-rewriting is only defined for programs without extra variables")]
    ExtraVariables,
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    let mut out = String::from("invalid program");
    for d in diags {
        out.push_str("\n  ");
        out.push_str(&d.to_string());
    }
    out
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
