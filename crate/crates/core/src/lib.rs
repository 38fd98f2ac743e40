//! A workbench for the denotational semantics of higher-order
//! functional-logic programs: bounded denotations, let-rewriting, extensional
//! equivalence, and constructive distinguishing contexts.

pub mod analysis;
pub mod calculus;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod letrw;
pub mod parser;
pub mod syntax;
pub mod transforms;

pub use error::{Error, Result};
