//! Observations, bounded extensional equivalence, compositionality checks
//! and the search for contexts that separate extensionally equal
//! expressions.

use std::fmt;

use serde::Serialize;

use crate::calculus::{Calculus, DenotationSet, SearchBudget};
use crate::corpus::nest;
use crate::error::Result;
use crate::letrw::{reachable_patterns_with, RewriteLimits};
use crate::syntax::{
    enumerate_patterns, fo_shape, sort_for_display, Context, Expr, Pattern, PatternGrid, Program,
    Signature,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum ObservationKind {
    /// All total patterns.
    #[default]
    HO,
    /// Total first-order patterns only.
    FO,
}

/// The total values of an expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub kind: ObservationKind,
    pub values: Vec<Pattern>,
    /// No search limit was hit, so `values` is the full observation.
    pub exhausted: bool,
}

impl Observation {
    fn from_values(
        kind: ObservationKind,
        values: Vec<Pattern>,
        sig: &Signature,
        exhausted: bool,
    ) -> Self {
        let mut values: Vec<Pattern> = values
            .into_iter()
            .filter(|v| kind == ObservationKind::HO || fo_shape(v, sig))
            .collect();
        sort_for_display(&mut values);
        Observation {
            kind,
            values,
            exhausted,
        }
    }

    pub fn contains(&self, t: &Expr) -> bool {
        self.values.iter().any(|v| v.expr() == t)
    }

    /// A value of `self` that `other` provably lacks.
    pub fn genuine_difference(&self, other: &Observation) -> Option<&Pattern> {
        if !other.exhausted {
            return None;
        }
        self.values.iter().find(|v| !other.contains(v))
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        f.write_str(&vals.join(", "))
    }
}

/// `⟦e⟧ ∩ Pat`, or `∩ FOPat` for [`ObservationKind::FO`].
pub fn observe(p: &Program, e: &Expr, kind: ObservationKind, budget: SearchBudget) -> Observation {
    observe_with(&mut Calculus::new(p, budget), e, kind)
}

fn observe_with(c: &mut Calculus<'_>, e: &Expr, kind: ObservationKind) -> Observation {
    let d = c.denote(e);
    Observation::from_values(
        kind,
        d.total_elements(),
        c.program().signature(),
        d.complete_at_bound(),
    )
}

/// The same observation computed by let-rewriting.
pub fn observe_by_rewriting(
    p: &Program,
    e: &Expr,
    kind: ObservationKind,
    limits: RewriteLimits,
) -> Result<Observation> {
    let r = reachable_patterns_with(p, e, limits)?;
    Ok(Observation::from_values(
        kind,
        r.values,
        p.signature(),
        r.exhausted,
    ))
}

/// Result of computing the total values of one expression with both engines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum OracleOutcome {
    Agree {
        values: Vec<Pattern>,
    },
    Mismatch {
        calculus: Vec<Pattern>,
        rewriting: Vec<Pattern>,
    },
    /// One of the searches hit its limit.
    Inconclusive,
}

/// Compares the total patterns of `⟦e⟧` with those reachable by
/// let-rewriting. Rewriting is skipped when the calculus is already cut by
/// its bound.
pub fn oracle_compare(
    p: &Program,
    e: &Expr,
    budget: SearchBudget,
    limits: RewriteLimits,
) -> Result<OracleOutcome> {
    let d = Calculus::new(p, budget).denote(e);
    if !d.complete_at_bound() {
        return Ok(OracleOutcome::Inconclusive);
    }
    let r = reachable_patterns_with(p, e, limits)?;
    if !r.exhausted {
        return Ok(OracleOutcome::Inconclusive);
    }
    let calculus = d.total_elements();
    Ok(if calculus == r.values {
        OracleOutcome::Agree { values: calculus }
    } else {
        OracleOutcome::Mismatch {
            calculus,
            rewriting: r.values,
        }
    })
}

/// Search limits for extensional comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExtBound {
    pub budget: SearchBudget,
    /// Atom cap for each argument pattern.
    pub max_arg_size: usize,
    /// Cap on the number of argument tuples tried.
    pub max_tuples: usize,
}

impl Default for ExtBound {
    fn default() -> Self {
        ExtBound {
            budget: SearchBudget::default(),
            max_arg_size: 2,
            max_tuples: 2_000,
        }
    }
}

/// Argument tuples of partial patterns, in order of total size. Within a
/// size, patterns follow [`enumerate_patterns`], so `⊥` comes after the
/// other atoms.
pub fn argument_tuples(sig: &Signature, n: usize, bound: &ExtBound) -> (Vec<Vec<Expr>>, bool) {
    let grid = enumerate_patterns(
        sig,
        PatternGrid {
            max_size: bound.max_arg_size,
            include_bottom: true,
        },
    );
    let mut by_size: Vec<Vec<Expr>> = vec![Vec::new(); bound.max_arg_size + 1];
    for t in grid {
        by_size[t.size()].push(t);
    }
    if n == 0 {
        return (vec![Vec::new()], false);
    }
    let mut out = Vec::new();
    for total in n..=n * bound.max_arg_size {
        for sizes in size_splits(total, n, bound.max_arg_size) {
            let mut acc: Vec<Vec<Expr>> = vec![Vec::new()];
            for s in sizes {
                let mut next = Vec::new();
                for prefix in &acc {
                    for t in &by_size[s] {
                        let mut tuple = prefix.clone();
                        tuple.push(t.clone());
                        next.push(tuple);
                        if next.len() > bound.max_tuples {
                            break;
                        }
                    }
                }
                acc = next;
            }
            for tuple in acc {
                if out.len() == bound.max_tuples {
                    return (out, true);
                }
                out.push(tuple);
            }
        }
    }
    (out, false)
}

fn size_splits(total: usize, parts: usize, max: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for first in 1..=max.min(total) {
        for mut rest in size_splits(total - first, parts - 1, max) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ExtVerdict {
    /// No tuple in the grid separates the two sides. Not a proof.
    EquivalentAtBound {
        tuples: usize,
        /// Tuples where the denotations differed but one side was cut by
        /// the bound, so the difference might vanish at a larger bound.
        inconclusive: usize,
        grid_truncated: bool,
    },
    /// A proof that the two sides are not n-extensionally equivalent.
    Distinguished {
        witness: Vec<Pattern>,
        /// An element of exactly one side.
        value: Pattern,
        /// Whether `value` belongs to the left side.
        in_left: bool,
        left: DenotationSet,
        right: DenotationSet,
    },
}

impl ExtVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, ExtVerdict::EquivalentAtBound { .. })
    }
}

impl fmt::Display for ExtVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtVerdict::EquivalentAtBound { .. } => f.write_str("equivalent-at-bound"),
            ExtVerdict::Distinguished { witness, .. } => {
                let args: Vec<String> = witness.iter().map(|t| arg_text(t)).collect();
                if args.is_empty() {
                    f.write_str("distinguished with no arguments")
                } else {
                    write!(f, "distinguished at {}", args.join(" "))
                }
            }
        }
    }
}

fn arg_text(t: &Expr) -> String {
    if matches!(t, Expr::App(..)) {
        format!("({t})")
    } else {
        t.to_string()
    }
}

/// Where two denotations provably differ: an element of one that the other
/// lacks although the other is complete at the bound.
fn genuine_difference(l: &DenotationSet, r: &DenotationSet) -> Option<(Pattern, bool)> {
    if r.complete_at_bound() {
        if let Some(t) = l.difference_witness(r) {
            return Some((t.clone(), true));
        }
    }
    if l.complete_at_bound() {
        if let Some(t) = r.difference_witness(l) {
            return Some((t.clone(), false));
        }
    }
    None
}

/// Compares `⟦e t1 .. tn⟧` with `⟦e' t1 .. tn⟧` over a grid of pattern
/// tuples.
pub fn ext_equiv(p: &Program, e: &Expr, e2: &Expr, n: usize, bound: ExtBound) -> ExtVerdict {
    let (tuples, grid_truncated) = argument_tuples(p.signature(), n, &bound);
    let mut calc = Calculus::new(p, bound.budget);
    let mut inconclusive = 0;
    for tuple in &tuples {
        let l = calc.denote(&Expr::apply_all(e.clone(), tuple.iter().cloned()));
        let r = calc.denote(&Expr::apply_all(e2.clone(), tuple.iter().cloned()));
        if l.same_elements(&r) {
            continue;
        }
        match genuine_difference(&l, &r) {
            Some((value, in_left)) => {
                return ExtVerdict::Distinguished {
                    witness: tuple.iter().cloned().map(Pattern::trusted).collect(),
                    value,
                    in_left,
                    left: l,
                    right: r,
                }
            }
            None => inconclusive += 1,
        }
    }
    ExtVerdict::EquivalentAtBound {
        tuples: tuples.len(),
        inconclusive,
        grid_truncated,
    }
}

/// `λt1 .. tn. ⟦e t1 .. tn⟧` tabulated over a bounded grid.
#[derive(Clone, Debug, Serialize)]
pub struct ExtSemantics {
    pub arity: usize,
    pub table: Vec<(Vec<Pattern>, DenotationSet)>,
}

impl ExtSemantics {
    pub fn get(&self, args: &[Expr]) -> Option<&DenotationSet> {
        self.table
            .iter()
            .find(|(k, _)| k.iter().map(Pattern::expr).eq(args.iter()))
            .map(|(_, d)| d)
    }

    /// Every entry was computed without hitting a bound.
    pub fn complete(&self) -> bool {
        self.table.iter().all(|(_, d)| d.complete_at_bound())
    }
}

/// Tables agree pointwise, as sets.
impl PartialEq for ExtSemantics {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.table.len() == other.table.len()
            && self
                .table
                .iter()
                .zip(&other.table)
                .all(|((k1, d1), (k2, d2))| k1 == k2 && d1.same_elements(d2))
    }
}

pub fn ext_semantics(p: &Program, e: &Expr, n: usize, bound: ExtBound) -> ExtSemantics {
    let (tuples, _) = argument_tuples(p.signature(), n, &bound);
    let mut calc = Calculus::new(p, bound.budget);
    let table = tuples
        .into_iter()
        .map(|tuple| {
            let d = calc.denote(&Expr::apply_all(e.clone(), tuple.iter().cloned()));
            (tuple.into_iter().map(Pattern::trusted).collect(), d)
        })
        .collect();
    ExtSemantics { arity: n, table }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CompositionalityVerdict {
    /// Every set involved was complete and both sides coincide.
    Equal,
    /// Some set was cut by the bound; `⟦C[e]⟧` at bound `b` is included in
    /// the right side at `b`, and the right side at `b` is included in
    /// `⟦C[e]⟧` at bound `2b`.
    InclusionsAtBound,
    /// `value` is in `⟦C[e]⟧` but in no `⟦C[t]⟧`.
    LeftNotInRight { value: Pattern },
    /// `value` is in some `⟦C[t]⟧`, `t ∈ ⟦e⟧`, but not in `⟦C[e]⟧`.
    RightNotInLeft { value: Pattern, via: Pattern },
}

impl CompositionalityVerdict {
    pub fn holds(&self) -> bool {
        matches!(
            self,
            CompositionalityVerdict::Equal | CompositionalityVerdict::InclusionsAtBound
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionalityReport {
    pub expr: Expr,
    pub context: Context,
    pub left: DenotationSet,
    /// Maximal elements of the union of `⟦C[t]⟧` over `t ∈ ⟦e⟧`.
    pub right: Vec<Pattern>,
    pub verdict: CompositionalityVerdict,
}

/// Compares `⟦C[e]⟧` with the union of `⟦C[t]⟧` over `t ∈ ⟦e⟧`.
pub fn check_compositionality(
    p: &Program,
    e: &Expr,
    c: &Context,
    budget: SearchBudget,
) -> CompositionalityReport {
    let mut calc = Calculus::new(p, budget);
    let inner = calc.denote(e);
    let left = calc.denote(&c.fill(e));
    let mut complete = inner.complete_at_bound() && left.complete_at_bound();
    // ⟦C[t]⟧ grows with t, so the maximal elements of ⟦e⟧ suffice
    let mut parts: Vec<(Pattern, DenotationSet)> = Vec::new();
    for t in inner.maximal() {
        let d = calc.denote(&c.fill(t));
        complete &= d.complete_at_bound();
        parts.push((t.clone(), d));
    }
    let in_right = |v: &Expr| parts.iter().any(|(_, d)| d.contains(v));
    let mut right: Vec<Pattern> = Vec::new();
    for (_, d) in &parts {
        for m in d.maximal() {
            if !right.iter().any(|r| crate::syntax::approximates(m, r)) {
                right.retain(|r| !crate::syntax::approximates(r, m));
                right.push(m.clone());
            }
        }
    }
    sort_for_display(&mut right);

    let verdict = if let Some(v) = left.maximal().iter().find(|m| !in_right(m)) {
        CompositionalityVerdict::LeftNotInRight { value: v.clone() }
    } else {
        let wide = if complete {
            left.clone()
        } else {
            let doubled = SearchBudget {
                max_or_depth: budget.max_or_depth.saturating_mul(2),
                ..budget
            };
            Calculus::new(p, doubled).denote(&c.fill(e))
        };
        let missing = parts.iter().find_map(|(t, d)| {
            d.maximal()
                .iter()
                .find(|m| !wide.contains(m))
                .map(|m| (m.clone(), t.clone()))
        });
        match missing {
            // a truncated wide set is only a lower bound
            Some(_) if wide.is_truncated() => CompositionalityVerdict::InclusionsAtBound,
            Some((value, via)) => CompositionalityVerdict::RightNotInLeft { value, via },
            None if complete => CompositionalityVerdict::Equal,
            None => CompositionalityVerdict::InclusionsAtBound,
        }
    };
    CompositionalityReport {
        expr: e.clone(),
        context: c.clone(),
        left,
        right,
        verdict,
    }
}

/// Limits for the context search in [`unsoundness_witness`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessSearch {
    pub ext: ExtBound,
    pub kind: ObservationKind,
    /// Nesting depth of application spines around the hole.
    pub max_depth: usize,
    /// Arguments per spine, hole included.
    pub max_args: usize,
    /// Atom cap for the other arguments of each spine.
    pub filler_size: usize,
    pub max_contexts: usize,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        WitnessSearch {
            ext: ExtBound::default(),
            kind: ObservationKind::FO,
            max_depth: 3,
            max_args: 3,
            filler_size: 1,
            max_contexts: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum UnsoundnessReport {
    /// The two expressions are not extensionally equivalent, so they say
    /// nothing about soundness.
    NotApplicable { ext: ExtVerdict },
    /// Extensionally equivalent at the bound, and no context in the search
    /// space separated them.
    NotFound { contexts: usize },
    Found {
        context: Context,
        /// Observed for exactly one side.
        value: Pattern,
        in_left: bool,
        left: Observation,
        right: Observation,
        contexts: usize,
    },
}

/// One-spine contexts `h a1 .. [ ] .. ak`, ordered by `k`, then head, hole
/// position and fillers.
fn spine_contexts(sig: &Signature, search: &WitnessSearch) -> Vec<Context> {
    let fillers: Vec<Expr> = enumerate_patterns(
        sig,
        PatternGrid {
            max_size: search.filler_size,
            include_bottom: false,
        },
    );
    let heads: Vec<Expr> = sig.names().map(|n| Expr::Sym(n.clone())).collect();
    let mut out = Vec::new();
    for k in 1..=search.max_args {
        for h in &heads {
            for pos in 0..k {
                let mut tuples: Vec<Vec<Expr>> = vec![Vec::new()];
                for _ in 1..k {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| {
                            fillers.iter().map(move |f| {
                                let mut t = t.clone();
                                t.push(f.clone());
                                t
                            })
                        })
                        .collect();
                }
                for t in tuples {
                    let (before, after) = t.split_at(pos);
                    out.push(Context::spine(h.clone(), before.to_vec(), after.to_vec()));
                }
            }
        }
    }
    out
}

/// Looks for a context separating the observations of two n-extensionally
/// equivalent expressions: a witness that n-extensional semantics is not
/// sound for observational equivalence.
pub fn unsoundness_witness(
    p: &Program,
    e: &Expr,
    e2: &Expr,
    n: usize,
    search: WitnessSearch,
) -> UnsoundnessReport {
    let ext = ext_equiv(p, e, e2, n, search.ext);
    if !ext.is_equivalent() {
        return UnsoundnessReport::NotApplicable { ext };
    }
    let mut calc = Calculus::new(p, search.ext.budget);
    let layer = spine_contexts(p.signature(), &search);
    let mut frontier = vec![Context::Hole];
    let mut tried = 0;
    for depth in 0..=search.max_depth {
        let mut next = Vec::new();
        for ctx in frontier {
            if tried == search.max_contexts {
                return UnsoundnessReport::NotFound { contexts: tried };
            }
            tried += 1;
            let left = observe_with(&mut calc, &ctx.fill(e), search.kind);
            let right = observe_with(&mut calc, &ctx.fill(e2), search.kind);
            let split = left
                .genuine_difference(&right)
                .map(|v| (v.clone(), true))
                .or_else(|| right.genuine_difference(&left).map(|v| (v.clone(), false)));
            if let Some((value, in_left)) = split {
                return UnsoundnessReport::Found {
                    context: ctx,
                    value,
                    in_left,
                    left,
                    right,
                    contexts: tried,
                };
            }
            if depth < search.max_depth {
                next.extend(layer.iter().map(|outer| nest(ctx.clone(), outer.clone())));
            }
        }
        frontier = next;
    }
    UnsoundnessReport::NotFound { contexts: tried }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_context, parse_expr, parse_programs, PRELUDE};
    use crate::syntax::ProgramFlags;

    const EX1: &str = include_str!("../programs/ex1.crwl");

    fn ex1() -> Program {
        parse_programs(&[PRELUDE, EX1], ProgramFlags::default()).unwrap()
    }

    fn ex(p: &Program, s: &str) -> Expr {
        parse_expr(s, p.signature()).unwrap()
    }

    #[test]
    fn observations() {
        let p = ex1();
        let b = SearchBudget::default();
        let o = observe(&p, &ex(&p, "fdouble f 0"), ObservationKind::HO, b);
        assert_eq!(o.to_string(), "0, s (s 0)");
        assert_eq!(
            observe(&p, &ex(&p, "f"), ObservationKind::HO, b).to_string(),
            "g, h"
        );
        let fo = observe(&p, &ex(&p, "f"), ObservationKind::FO, b);
        assert!(fo.values.is_empty() && fo.exhausted);
        let by_rw = observe_by_rewriting(
            &p,
            &ex(&p, "fdouble f' 0"),
            ObservationKind::FO,
            RewriteLimits::default(),
        )
        .unwrap();
        assert_eq!(by_rw.to_string(), "0, s 0, s (s 0)");
    }

    #[test]
    fn extensional_equivalence() {
        let p = ex1();
        let b = ExtBound::default();
        let v = ext_equiv(&p, &ex(&p, "f"), &ex(&p, "f'"), 1, b);
        assert_eq!(v.to_string(), "equivalent-at-bound");
        let v = ext_equiv(&p, &ex(&p, "g"), &ex(&p, "h"), 1, b);
        assert_eq!(v.to_string(), "distinguished at 0");
        let ExtVerdict::Distinguished { value, in_left, .. } = v else {
            unreachable!()
        };
        assert_eq!(value.to_string(), "0");
        assert!(in_left);
        let v = ext_equiv(&p, &ex(&p, "f"), &ex(&p, "f"), 3, b);
        assert!(v.is_equivalent());
    }

    #[test]
    fn extensional_tables() {
        let p = ex1();
        let b = ExtBound {
            budget: SearchBudget::with_depth(6),
            ..Default::default()
        };
        let tf = ext_semantics(&p, &ex(&p, "f"), 1, b);
        let entry = tf.get(&[Expr::sym("0")]).unwrap();
        let shown: Vec<String> = entry.elements().iter().map(|t| t.to_string()).collect();
        assert_eq!(shown, ["_|_", "0", "s _|_", "s 0"]);
        assert_eq!(tf, ext_semantics(&p, &ex(&p, "f'"), 1, b));
        assert_ne!(tf, ext_semantics(&p, &ex(&p, "g"), 1, b));
        let t0 = ext_semantics(&p, &ex(&p, "f"), 0, b);
        assert_eq!(t0.table.len(), 1);
        assert!(t0.table[0].0.is_empty());
    }

    #[test]
    fn tuples_come_in_size_order() {
        let p = ex1();
        let (tuples, _) = argument_tuples(p.signature(), 2, &ExtBound::default());
        let sizes: Vec<usize> = tuples
            .iter()
            .map(|t| t.iter().map(Expr::size).sum())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(tuples[0], [Expr::sym("0"), Expr::sym("0")]);
    }

    #[test]
    fn compositionality_of_fdouble() {
        let p = ex1();
        let c = parse_context("fdouble [ ] 0", p.signature()).unwrap();
        let r = check_compositionality(&p, &ex(&p, "f"), &c, SearchBudget::default());
        assert_eq!(r.verdict, CompositionalityVerdict::Equal);
        let shown: Vec<String> = r.right.iter().map(|t| t.to_string()).collect();
        assert_eq!(shown, ["0", "s (s 0)"]);
        let r = check_compositionality(&p, &ex(&p, "s 0"), &Context::Hole, SearchBudget::default());
        assert_eq!(r.verdict, CompositionalityVerdict::Equal);
    }

    #[test]
    fn witness_for_f_and_f_prime() {
        let p = ex1();
        let r = unsoundness_witness(&p, &ex(&p, "f"), &ex(&p, "f'"), 1, WitnessSearch::default());
        let UnsoundnessReport::Found {
            context,
            value,
            in_left,
            ..
        } = r
        else {
            panic!("{r:?}")
        };
        assert_eq!(context.to_string(), "fdouble [ ] 0");
        assert_eq!(value.to_string(), "s 0");
        assert!(!in_left);
    }

    #[test]
    fn witness_not_applicable_or_absent() {
        let p = ex1();
        let r = unsoundness_witness(&p, &ex(&p, "g"), &ex(&p, "h"), 1, WitnessSearch::default());
        assert!(matches!(r, UnsoundnessReport::NotApplicable { .. }));
        let small = WitnessSearch {
            max_depth: 1,
            max_args: 2,
            ..Default::default()
        };
        let r = unsoundness_witness(&p, &ex(&p, "g"), &ex(&p, "g"), 1, small);
        assert!(matches!(r, UnsoundnessReport::NotFound { .. }));
    }
}
