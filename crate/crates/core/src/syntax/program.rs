use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::expr::{Expr, Name};
use super::pattern::{fo_shape, pattern_shape};
use super::signature::{Signature, SymbolKind};
use crate::error::{Error, Result};

/// `f p1 .. pn -> rhs`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProgramRule {
    pub function: Name,
    pub params: Vec<Expr>,
    pub rhs: Expr,
}

impl ProgramRule {
    pub fn new(function: &str, params: Vec<Expr>, rhs: Expr) -> Self {
        ProgramRule {
            function: Name::from(function),
            params,
            rhs,
        }
    }

    pub fn lhs(&self) -> Expr {
        Expr::apply_all(
            Expr::Sym(self.function.clone()),
            self.params.iter().cloned(),
        )
    }

    pub fn param_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for p in &self.params {
            p.collect_vars(&mut out);
        }
        out
    }

    /// Variables of the right side that do not occur in the parameters.
    pub fn extra_vars(&self) -> BTreeSet<Name> {
        let params = self.param_vars();
        self.rhs
            .vars()
            .into_iter()
            .filter(|v| !params.contains(v))
            .collect()
    }

    /// Equality up to a consistent renaming of rule variables.
    pub fn alpha_eq(&self, other: &ProgramRule) -> bool {
        if self.function != other.function || self.params.len() != other.params.len() {
            return false;
        }
        let mut fwd: HashMap<Name, Name> = HashMap::new();
        let mut bwd: HashMap<Name, Name> = HashMap::new();
        let mut pairs: Vec<(&Expr, &Expr)> = self.params.iter().zip(other.params.iter()).collect();
        pairs.push((&self.rhs, &other.rhs));
        pairs
            .into_iter()
            .all(|(a, b)| alpha_walk(a, b, &mut fwd, &mut bwd))
    }
}

fn alpha_walk(
    a: &Expr,
    b: &Expr,
    fwd: &mut HashMap<Name, Name>,
    bwd: &mut HashMap<Name, Name>,
) -> bool {
    match (a, b) {
        (Expr::Var(x), Expr::Var(y)) => {
            let f = fwd.entry(x.clone()).or_insert_with(|| y.clone()).clone();
            let g = bwd.entry(y.clone()).or_insert_with(|| x.clone()).clone();
            f == *y && g == *x
        }
        (Expr::App(f1, a1), Expr::App(f2, a2)) => {
            alpha_walk(f1, f2, fwd, bwd) && alpha_walk(a1, a2, fwd, bwd)
        }
        (x, y) => x == y,
    }
}

impl fmt::Display for ProgramRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs(), self.rhs)
    }
}

impl fmt::Debug for ProgramRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl Serialize for ProgramRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ProgramFlags {
    pub extra_variables_allowed: bool,
    pub left_fo_required: bool,
}

impl ProgramFlags {
    pub fn extra_variables() -> Self {
        ProgramFlags {
            extra_variables_allowed: true,
            left_fo_required: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiagnosticKind {
    UndeclaredSymbol { name: String },
    NotAFunction { name: String },
    ArityMismatch { expected: usize, found: usize },
    NonLinear { var: String },
    ExtraVariable { var: String },
    HigherOrderParam { index: usize },
    ParamNotPattern { index: usize },
    BottomInRule,
}

/// A validation failure attached to the rule (by index) that caused it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Diagnostic {
    pub rule: usize,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: ", self.rule + 1)?;
        match &self.kind {
            DiagnosticKind::UndeclaredSymbol { name } => write!(f, "undeclared symbol `{name}`"),
            DiagnosticKind::NotAFunction { name } => {
                write!(f, "`{name}` heads a rule but is not a function symbol")
            }
            DiagnosticKind::ArityMismatch { expected, found } => {
                write!(f, "expected {expected} parameters, found {found}")
            }
            DiagnosticKind::NonLinear { var } => {
                write!(f, "variable `{var}` occurs more than once in the left side")
            }
            DiagnosticKind::ExtraVariable { var } => {
                write!(f, "extra variable `{var}` occurs only in the right side")
            }
            DiagnosticKind::HigherOrderParam { index } => {
                write!(
                    f,
                    "parameter {} is a higher-order pattern (left-FO required)",
                    index + 1
                )
            }
            DiagnosticKind::ParamNotPattern { index } => {
                write!(f, "parameter {} is not a pattern", index + 1)
            }
            DiagnosticKind::BottomInRule => f.write_str("`_|_` may not occur in program rules"),
        }
    }
}

/// Checks every rule invariant under `flags`; an empty result means valid.
pub fn validate_program(
    sig: &Signature,
    rules: &[ProgramRule],
    flags: ProgramFlags,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (idx, rule) in rules.iter().enumerate() {
        let mut push = |kind| out.push(Diagnostic { rule: idx, kind });
        match sig.get(&rule.function) {
            None => push(DiagnosticKind::UndeclaredSymbol {
                name: rule.function.to_string(),
            }),
            Some(info) if info.kind != SymbolKind::Function => push(DiagnosticKind::NotAFunction {
                name: rule.function.to_string(),
            }),
            Some(info) if info.arity != rule.params.len() => push(DiagnosticKind::ArityMismatch {
                expected: info.arity,
                found: rule.params.len(),
            }),
            Some(_) => {}
        }

        let mut undeclared = BTreeSet::new();
        for e in rule.params.iter().chain(std::iter::once(&rule.rhs)) {
            undeclared.extend(e.symbols().into_iter().filter(|s| !sig.contains(s)));
        }
        for name in undeclared {
            push(DiagnosticKind::UndeclaredSymbol {
                name: name.to_string(),
            });
        }

        if rule.params.iter().any(Expr::contains_bottom) || rule.rhs.contains_bottom() {
            push(DiagnosticKind::BottomInRule);
        }
        for (i, p) in rule.params.iter().enumerate() {
            if !pattern_shape(p, sig) {
                push(DiagnosticKind::ParamNotPattern { index: i });
            } else if flags.left_fo_required && !fo_shape(p, sig) {
                push(DiagnosticKind::HigherOrderParam { index: i });
            }
        }

        let mut seen = BTreeSet::new();
        let mut repeated = BTreeSet::new();
        for p in &rule.params {
            for v in p.var_occurrences() {
                if !seen.insert(v.clone()) {
                    repeated.insert(v);
                }
            }
        }
        for v in repeated {
            push(DiagnosticKind::NonLinear { var: v.to_string() });
        }

        if !flags.extra_variables_allowed {
            for v in rule.extra_vars() {
                push(DiagnosticKind::ExtraVariable { var: v.to_string() });
            }
        }
    }
    out
}

/// A validated program. Rule order is kept for reproducible enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    signature: Signature,
    rules: Vec<ProgramRule>,
    flags: ProgramFlags,
    by_function: HashMap<Name, Vec<usize>>,
}

impl Program {
    pub fn new(
        signature: Signature,
        rules: Vec<ProgramRule>,
        flags: ProgramFlags,
    ) -> Result<Program> {
        let diags = validate_program(&signature, &rules, flags);
        if !diags.is_empty() {
            return Err(Error::InvalidProgram(diags));
        }
        let mut by_function: HashMap<Name, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_function.entry(r.function.clone()).or_default().push(i);
        }
        Ok(Program {
            signature,
            rules,
            flags,
            by_function,
        })
    }

    pub fn empty(signature: Signature) -> Program {
        Program {
            signature,
            rules: Vec::new(),
            flags: ProgramFlags::default(),
            by_function: HashMap::new(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rules(&self) -> &[ProgramRule] {
        &self.rules
    }

    pub fn flags(&self) -> ProgramFlags {
        self.flags
    }

    pub fn rules_for<'a>(&'a self, function: &str) -> impl Iterator<Item = &'a ProgramRule> + 'a {
        self.by_function
            .get(function)
            .into_iter()
            .flatten()
            .map(move |&i| &self.rules[i])
    }

    pub fn has_rules_for(&self, function: &str) -> bool {
        self.by_function.contains_key(function)
    }

    pub fn has_extra_variables(&self) -> bool {
        self.rules.iter().any(|r| !r.extra_vars().is_empty())
    }

    /// Renders the program in the textual program format: an explicit
    /// signature header followed by one rule per line.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for (name, info) in self.signature.iter() {
            let kw = match info.kind {
                SymbolKind::Constructor => "constructor",
                SymbolKind::Function => "function",
            };
            out.push_str(&format!("{kw} {name}/{}\n", info.arity));
        }
        for r in &self.rules {
            out.push_str(&format!("{r}\n"));
        }
        out
    }
}
