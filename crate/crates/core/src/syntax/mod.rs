//! Terms, patterns, contexts, substitutions and programs.

mod expr;
mod pattern;
mod program;
mod signature;

pub use expr::{Context, Expr, Name, PSubstitution};
pub(crate) use expr::{BOTTOM_TEXT, HOLE_TEXT};
pub use pattern::{
    approximates, bottom_prefixes, check_declared, enumerate_patterns, is_fo_pattern, is_pattern,
    match_pattern, sort_for_display, Pattern, PatternGrid,
};
pub(crate) use pattern::{fo_shape, match_into, pattern_shape};
pub use program::{
    validate_program, Diagnostic, DiagnosticKind, Program, ProgramFlags, ProgramRule,
};
pub use signature::{Signature, SymbolInfo, SymbolKind};

/// `C[e]`.
pub fn apply_context(c: &Context, e: &Expr) -> Expr {
    c.fill(e)
}

/// `eθ`.
pub fn apply_substitution(e: &Expr, theta: &PSubstitution) -> Expr {
    e.substitute(theta)
}
