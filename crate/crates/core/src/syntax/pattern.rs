use std::fmt;
use std::ops::Deref;

use serde::{Serialize, Serializer};

use super::expr::{Expr, PSubstitution};
use super::signature::{Signature, SymbolKind};
use crate::error::{Error, Result};

/// A partial pattern, i.e. an irreducible value. Totality (absence of `⊥`)
/// is computed once at construction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    expr: Expr,
    total: bool,
}

impl Pattern {
    pub fn new(expr: Expr, sig: &Signature) -> Result<Pattern> {
        if is_pattern(&expr, sig)? {
            Ok(Pattern::trusted(expr))
        } else {
            Err(Error::NotAPattern(expr.to_string()))
        }
    }

    /// Wraps an expression already known to satisfy the pattern grammar.
    pub(crate) fn trusted(expr: Expr) -> Pattern {
        let total = !expr.contains_bottom();
        Pattern { expr, total }
    }

    pub fn bottom() -> Pattern {
        Pattern {
            expr: Expr::Bottom,
            total: false,
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }

    pub fn is_total(&self) -> bool {
        self.total
    }
}

impl Deref for Pattern {
    type Target = Expr;

    fn deref(&self) -> &Expr {
        &self.expr
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.expr, f)
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.expr.serialize(s)
    }
}

/// Fails with the first symbol of `e` missing from `sig`.
pub fn check_declared(e: &Expr, sig: &Signature) -> Result<()> {
    match e.symbols().into_iter().find(|s| !sig.contains(s)) {
        Some(s) => Err(Error::Undeclared(s.to_string())),
        None => Ok(()),
    }
}

/// `t ::= X | c t1..tn (n <= ar(c)) | f t1..tm (m < ar(f))`, with `⊥` as a
/// 0-ary constructor.
pub fn is_pattern(e: &Expr, sig: &Signature) -> Result<bool> {
    check_declared(e, sig)?;
    Ok(pattern_shape(e, sig))
}

/// FO-patterns: variables and fully applied constructor terms.
pub fn is_fo_pattern(e: &Expr, sig: &Signature) -> Result<bool> {
    check_declared(e, sig)?;
    Ok(fo_shape(e, sig))
}

/// Pattern check that treats undeclared symbols as non-patterns.
pub(crate) fn pattern_shape(e: &Expr, sig: &Signature) -> bool {
    let (head, args) = e.spine();
    let head_ok = match head {
        Expr::Var(_) | Expr::Bottom => args.is_empty(),
        Expr::Sym(name) => match sig.get(name) {
            Some(info) => match info.kind {
                SymbolKind::Constructor => args.len() <= info.arity,
                SymbolKind::Function => args.len() < info.arity,
            },
            None => false,
        },
        Expr::App(..) => unreachable!("spine head is never an application"),
    };
    head_ok && args.iter().all(|a| pattern_shape(a, sig))
}

pub(crate) fn fo_shape(e: &Expr, sig: &Signature) -> bool {
    let (head, args) = e.spine();
    match head {
        Expr::Var(_) | Expr::Bottom => args.is_empty(),
        Expr::Sym(name) => {
            sig.is_constructor(name)
                && sig.arity(name) == Some(args.len())
                && args.iter().all(|a| fo_shape(a, sig))
        }
        Expr::App(..) => unreachable!("spine head is never an application"),
    }
}

/// Matches a linear, `⊥`-free parameter pattern against a derived value,
/// returning the unique `θ` with `pθ = v`.
pub fn match_pattern(param: &Expr, value: &Expr) -> Option<PSubstitution> {
    let mut theta = PSubstitution::new();
    if match_into(param, value, &mut theta) {
        Some(theta)
    } else {
        None
    }
}

pub(crate) fn match_into(param: &Expr, value: &Expr, theta: &mut PSubstitution) -> bool {
    match (param, value) {
        (Expr::Var(x), v) => match theta.get(x) {
            Some(old) => old == v,
            None => {
                theta.insert(x.clone(), v.clone());
                true
            }
        },
        (Expr::Sym(a), Expr::Sym(b)) => a == b,
        (Expr::App(f1, a1), Expr::App(f2, a2)) => {
            match_into(f1, f2, theta) && match_into(a1, a2, theta)
        }
        _ => false,
    }
}

/// The approximation order on partial patterns: `t ⊑ u` iff `t` is obtained
/// from `u` by replacing subpatterns with `⊥`.
pub fn approximates(t: &Expr, u: &Expr) -> bool {
    match (t, u) {
        (Expr::Bottom, _) => true,
        (Expr::App(f1, a1), Expr::App(f2, a2)) => approximates(f1, f2) && approximates(a1, a2),
        (a, b) => a == b,
    }
}

/// Every `t' ⊑ t`, including `⊥` and `t` itself.
pub fn bottom_prefixes(t: &Expr) -> Vec<Expr> {
    let mut out = vec![Expr::Bottom];
    if !t.is_bottom() {
        out.extend(head_prefixes(t));
    }
    out
}

// Prefixes that keep the head symbol of `t` in place.
fn head_prefixes(t: &Expr) -> Vec<Expr> {
    match t {
        Expr::App(f, a) => {
            let fs = head_prefixes(f);
            let as_ = bottom_prefixes(a);
            let mut out = Vec::with_capacity(fs.len() * as_.len());
            for f in &fs {
                for a in &as_ {
                    out.push(Expr::app(f.clone(), a.clone()));
                }
            }
            out
        }
        other => vec![other.clone()],
    }
}

/// Options for [`enumerate_patterns`].
#[derive(Clone, Copy, Debug)]
pub struct PatternGrid {
    pub max_size: usize,
    pub include_bottom: bool,
}

/// All ground partial patterns over `sig` with at most `max_size` atoms.
///
/// Order: by size; within a size by head (constructors, then functions, each
/// by name) and then by argument order. `⊥` comes last among size-1 patterns
/// so that total patterns are tried first.
pub fn enumerate_patterns(sig: &Signature, grid: PatternGrid) -> Vec<Expr> {
    let heads: Vec<(Expr, usize)> = sig
        .constructors()
        .map(|(n, ar)| (Expr::Sym(n.clone()), ar))
        .chain(
            sig.functions()
                .filter(|(_, ar)| *ar > 0)
                .map(|(n, ar)| (Expr::Sym(n.clone()), ar - 1)),
        )
        .collect();

    // by_size[k] = patterns with exactly k atoms
    let mut by_size: Vec<Vec<Expr>> = vec![Vec::new(); grid.max_size + 1];
    if grid.max_size == 0 {
        return Vec::new();
    }
    for (h, _) in &heads {
        by_size[1].push(h.clone());
    }
    if grid.include_bottom {
        by_size[1].push(Expr::Bottom);
    }
    for size in 2..=grid.max_size {
        let mut level = Vec::new();
        for (h, max_args) in &heads {
            for m in 1..=*max_args {
                if m > size - 1 {
                    break;
                }
                for sizes in compositions(size - 1, m) {
                    let mut acc = vec![h.clone()];
                    for s in sizes {
                        let mut next = Vec::with_capacity(acc.len() * by_size[s].len());
                        for prefix in &acc {
                            for a in &by_size[s] {
                                next.push(Expr::app(prefix.clone(), a.clone()));
                            }
                        }
                        acc = next;
                    }
                    level.extend(acc);
                }
            }
        }
        by_size[size] = level;
    }
    by_size.into_iter().flatten().collect()
}

/// Ordered ways to write `total` as a sum of `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Sorts patterns for display: by size, then structurally with `⊥` first.
pub fn sort_for_display<T: Deref<Target = Expr>>(items: &mut [T]) {
    items.sort_by(|a, b| (a.size(), &**a).cmp(&(b.size(), &**b)));
}
