//! Bounded proof search for the rewriting-logic calculus with rules B, RR,
//! DC and OR.
//!
//! Denotations are downward closed under the approximation order, so the
//! search only tracks the maximal elements of each set. Because derivability
//! is monotone in the values bound by `θ`, rule OR only needs to match
//! parameters against maximal argument values.

mod proof;
mod search;

pub use proof::{check_proof, ProofChecker, ProofError, ProofRule, ProofTree, RuleInstance};
pub use search::Calculus;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::syntax::{
    approximates, bottom_prefixes, pattern_shape, sort_for_display, Expr, Pattern, Program,
};

/// Limits for the (otherwise infinite) enumeration of denotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// OR applications allowed along any branch of a proof.
    pub max_or_depth: u32,
    /// Atom cap for patterns enumerated as values of extra variables.
    pub max_pattern_size: usize,
    /// Cap on intermediate set and product sizes; exceeding it truncates the
    /// query.
    pub max_results: Option<usize>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_or_depth: 8,
            max_pattern_size: 4,
            max_results: Some(20_000),
        }
    }
}

impl SearchBudget {
    pub fn with_depth(depth: u32) -> Self {
        SearchBudget {
            max_or_depth: depth,
            ..Default::default()
        }
    }
}

/// The derivable partial patterns of an expression at a bound, stored as
/// the antichain of maximal elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DenotationSet {
    maximal: Vec<Pattern>,
    bound: u32,
    complete_at_bound: bool,
    truncated: bool,
}

impl DenotationSet {
    pub(crate) fn new(
        mut maximal: Vec<Pattern>,
        bound: u32,
        complete: bool,
        truncated: bool,
    ) -> Self {
        if maximal.is_empty() {
            maximal.push(Pattern::bottom());
        }
        sort_for_display(&mut maximal);
        DenotationSet {
            maximal,
            bound,
            complete_at_bound: complete && !truncated,
            truncated,
        }
    }

    /// Maximal elements; every element is approximated by one of these.
    pub fn maximal(&self) -> &[Pattern] {
        &self.maximal
    }

    /// All elements, sorted for display.
    pub fn elements(&self) -> Vec<Pattern> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.maximal {
            for p in bottom_prefixes(m) {
                seen.insert(p);
            }
        }
        let mut out: Vec<Pattern> = seen.into_iter().map(Pattern::trusted).collect();
        sort_for_display(&mut out);
        out
    }

    /// Elements without `⊥`; these are exactly the total maximal elements.
    pub fn total_elements(&self) -> Vec<Pattern> {
        self.maximal
            .iter()
            .filter(|p| p.is_total())
            .cloned()
            .collect()
    }

    pub fn contains(&self, t: &Expr) -> bool {
        self.maximal.iter().any(|m| approximates(t, m))
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// No branch was cut by the OR bound or any other limit, so raising the
    /// bound cannot add elements.
    pub fn complete_at_bound(&self) -> bool {
        self.complete_at_bound
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Set equality, ignoring bounds and flags.
    pub fn same_elements(&self, other: &DenotationSet) -> bool {
        self.maximal == other.maximal
    }

    /// `self ⊆ other`, as sets.
    pub fn is_subset(&self, other: &DenotationSet) -> bool {
        self.maximal.iter().all(|m| other.contains(m))
    }

    /// Some maximal element of `self` missing from `other`.
    pub fn difference_witness(&self, other: &DenotationSet) -> Option<&Pattern> {
        self.maximal.iter().find(|m| !other.contains(m))
    }
}

/// `⟦e⟧` at the given budget.
pub fn denote(p: &Program, e: &Expr, budget: SearchBudget) -> DenotationSet {
    Calculus::new(p, budget).denote(e)
}

/// A proof of `e ⇝ t` within the budget, if one exists.
pub fn derive(p: &Program, e: &Expr, t: &Expr, budget: SearchBudget) -> Result<Option<ProofTree>> {
    if !pattern_shape(t, p.signature()) {
        return Err(Error::NotAPattern(t.to_string()));
    }
    Ok(Calculus::new(p, budget).derive(e, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_programs, PRELUDE};
    use crate::syntax::ProgramFlags;

    const EX1: &str = include_str!("../../programs/ex1.crwl");
    const EXTRA: &str = include_str!("../../programs/extra_var.crwl");
    const EXT_G: &str = include_str!("../../programs/g_extension.crwl");

    fn ex1() -> Program {
        parse_programs(&[PRELUDE, EX1], ProgramFlags::default()).unwrap()
    }

    fn shown(d: &DenotationSet) -> Vec<String> {
        d.elements().iter().map(|p| p.to_string()).collect()
    }

    fn den(p: &Program, src: &str, depth: u32) -> DenotationSet {
        denote(
            p,
            &parse_expr(src, p.signature()).unwrap(),
            SearchBudget::with_depth(depth),
        )
    }

    #[test]
    fn fdouble_denotations() {
        let p = ex1();
        let d = den(&p, "fdouble f 0", 8);
        assert_eq!(shown(&d), ["_|_", "0", "s _|_", "s (s _|_)", "s (s 0)"]);
        assert!(d.complete_at_bound());
        let d = den(&p, "fdouble f' 0", 8);
        assert_eq!(
            shown(&d),
            ["_|_", "0", "s _|_", "s 0", "s (s _|_)", "s (s 0)"]
        );
    }

    #[test]
    fn free_variable_and_constants() {
        let p = ex1();
        assert_eq!(shown(&den(&p, "X", 3)), ["_|_", "X"]);
        assert_eq!(shown(&den(&p, "0", 0)), ["_|_", "0"]);
        assert_eq!(shown(&den(&p, "f", 2)), ["_|_", "g", "h"]);
        assert_eq!(shown(&den(&p, "f 0", 6)), ["_|_", "0", "s _|_", "s 0"]);
    }

    #[test]
    fn budget_cut_is_reported() {
        let p = ex1();
        let d = den(&p, "fdouble f 0", 1);
        assert!(!d.complete_at_bound());
        assert!(d.is_subset(&den(&p, "fdouble f 0", 8)));
    }

    #[test]
    fn truncation_gives_bottom_only() {
        let p = ex1();
        let e = parse_expr("fdouble f' 0", p.signature()).unwrap();
        let d = denote(
            &p,
            &e,
            SearchBudget {
                max_results: Some(1),
                ..Default::default()
            },
        );
        assert!(d.is_truncated());
        assert_eq!(shown(&d), ["_|_"]);
    }

    #[test]
    fn derive_or_over_dc() {
        let p = ex1();
        let pt = derive(
            &p,
            &Expr::sym("f"),
            &Expr::sym("g"),
            SearchBudget::with_depth(2),
        )
        .unwrap()
        .unwrap();
        assert_eq!(pt.rule, ProofRule::OR);
        assert_eq!(pt.instance.as_ref().unwrap().rule.to_string(), "f -> g");
        assert_eq!(pt.premises.len(), 1);
        assert_eq!(pt.premises[0].rule, ProofRule::DC);
        assert!(check_proof(&p, &pt));
    }

    #[test]
    fn derive_bottom_is_a_leaf() {
        let p = ex1();
        let e = parse_expr("fdouble f 0", p.signature()).unwrap();
        let pt = derive(&p, &e, &Expr::Bottom, SearchBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(pt.rule, ProofRule::B);
        assert!(pt.premises.is_empty());
    }

    #[test]
    fn derive_rejects_non_patterns() {
        let p = ex1();
        let e = parse_expr("f", p.signature()).unwrap();
        let t = parse_expr("fadd f f", p.signature()).unwrap();
        assert!(matches!(
            derive(&p, &e, &t, SearchBudget::default()),
            Err(Error::NotAPattern(_))
        ));
    }

    #[test]
    fn every_element_has_a_checked_proof() {
        let p = ex1();
        for src in ["fdouble f 0", "fdouble f' 0", "f' 0", "fadd g h 0"] {
            let e = parse_expr(src, p.signature()).unwrap();
            let mut c = Calculus::new(&p, SearchBudget::default());
            for t in c.denote(&e).elements() {
                let pt = c
                    .derive(&e, &t)
                    .unwrap_or_else(|| panic!("no proof of {src} ~> {t}"));
                if let Err(err) = ProofChecker::new(&p).check(&pt) {
                    panic!("{src} ~> {t}: {err}\n{pt}");
                }
            }
        }
    }

    #[test]
    fn tampered_theta_fails_check() {
        let p = ex1();
        let e = parse_expr("f' 0", p.signature()).unwrap();
        let t = parse_expr("s 0", p.signature()).unwrap();
        let mut pt = derive(&p, &e, &t, SearchBudget::default())
            .unwrap()
            .unwrap();
        let inst = pt.instance.as_mut().unwrap();
        inst.theta.insert("X".into(), Expr::sym("s"));
        let err = ProofChecker::new(&p).check(&pt).unwrap_err();
        assert!(err.path.is_empty(), "{err}");
    }

    fn extra_programs() -> (Program, Program) {
        let flags = ProgramFlags::extra_variables();
        (
            parse_programs(&[EXTRA], flags).unwrap(),
            parse_programs(&[EXTRA, EXT_G], flags).unwrap(),
        )
    }

    #[test]
    fn extra_variable_example() {
        let (p, q) = extra_programs();
        let budget = SearchBudget {
            max_pattern_size: 3,
            ..SearchBudget::with_depth(4)
        };
        let e0 = parse_expr("f 0", p.signature()).unwrap();
        let e1 = parse_expr("f 1", p.signature()).unwrap();
        assert_eq!(shown(&denote(&p, &e0, budget)), ["_|_"]);
        assert_eq!(shown(&denote(&p, &e1, budget)), ["_|_"]);
        let one = Expr::sym("1");
        assert!(denote(&q, &e0, budget).contains(&one));
        assert!(!denote(&q, &e1, budget).contains(&one));

        let pt = derive(&q, &e0, &one, budget).unwrap().unwrap();
        let theta = &pt.instance.as_ref().unwrap().theta;
        assert_eq!(theta.get("Y"), Some(&Expr::sym("g")));
        assert!(ProofChecker::new(&q).check(&pt).is_ok());
        let err = ProofChecker::new(&q)
            .extra_variables(false)
            .check(&pt)
            .unwrap_err();
        assert!(err.reason.contains("extra variable"), "{err}");
    }

    #[test]
    fn proof_json_shape() {
        let p = ex1();
        let pt = derive(
            &p,
            &Expr::sym("f"),
            &Expr::sym("h"),
            SearchBudget::default(),
        )
        .unwrap()
        .unwrap();
        let v = serde_json::to_value(&pt).unwrap();
        assert_eq!(v["rule"], "OR");
        assert_eq!(v["conclusion"]["expr"], "f");
        assert_eq!(v["conclusion"]["value"], "h");
        assert_eq!(v["program_rule"], "f -> h");
        assert_eq!(v["premises"][0]["rule"], "DC");
        assert!(v["premises"][0]["theta"].is_null());
    }
}
