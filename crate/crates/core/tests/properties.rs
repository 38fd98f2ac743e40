use proptest::prelude::*;

use hocrwl::analysis::{ext_equiv, ext_semantics, ExtBound, ExtVerdict};
use hocrwl::analysis::{observe, ObservationKind};
use hocrwl::calculus::{check_proof, denote, derive, SearchBudget};
use hocrwl::corpus::{CorpusConfig, Generator};
use hocrwl::letrw::{random_trace, step, LetExpr, LetRule};
use hocrwl::parser::{parse_context, parse_expr_with, parse_program, ExprOptions};
use hocrwl::syntax::{
    approximates, bottom_prefixes, is_fo_pattern, is_pattern, match_pattern, validate_program,
    Context, Expr, PSubstitution, Pattern, Program, ProgramFlags,
};
use hocrwl::transforms::{gen_distinguisher, hat, Variant};

fn setup(seed: u64) -> (Generator, Program) {
    let mut g = Generator::new(seed);
    let cfg = CorpusConfig::default();
    let p = g.program(&cfg);
    (g, p)
}

fn budget() -> SearchBudget {
    SearchBudget::with_depth(5)
}

fn ext_bound() -> ExtBound {
    ExtBound {
        budget: budget(),
        max_arg_size: 2,
        max_tuples: 200,
    }
}

/// Two symbols of the program, possibly the same one.
fn two_symbols(g: &mut Generator, p: &Program) -> (Expr, Expr) {
    use rand::seq::SliceRandom;
    let names: Vec<_> = p.signature().names().cloned().collect();
    let a = names.choose(g.rng()).unwrap().clone();
    let b = names.choose(g.rng()).unwrap().clone();
    (Expr::Sym(a), Expr::Sym(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 7);
        let back = parse_expr_with(&e.to_string(), p.signature(), ExprOptions { allow_bottom: true }).unwrap();
        prop_assert_eq!(back, e);
        let t = g.pattern(p.signature(), 5);
        let back = parse_expr_with(&t.to_string(), p.signature(), ExprOptions { allow_bottom: true }).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn printed_contexts_reparse(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let c = g.context(p.signature(), 3);
        prop_assert_eq!(parse_context(&c.to_string(), p.signature()).unwrap(), c);
    }

    #[test]
    fn printed_programs_reparse(seed in any::<u64>()) {
        let (_, p) = setup(seed);
        let back = parse_program(&p.to_source(), ProgramFlags::default()).unwrap();
        prop_assert_eq!(back.rules().len(), p.rules().len());
        for (a, b) in back.rules().iter().zip(p.rules()) {
            prop_assert!(a.alpha_eq(b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn matching_recovers_substitution(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let mut next = 0;
        let param = g.param(p.signature(), 4, &mut next);
        let mut theta = PSubstitution::new();
        for v in param.vars() {
            theta.insert(v, g.pattern(p.signature(), 3));
        }
        let value = param.substitute(&theta);
        prop_assert_eq!(match_pattern(&param, &value), Some(theta));
    }

    #[test]
    fn fo_patterns_are_patterns(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        if is_fo_pattern(&e, p.signature()).unwrap() {
            prop_assert!(is_pattern(&e, p.signature()).unwrap());
        }
    }

    #[test]
    fn denotations_grow_with_budget(seed in any::<u64>(), b in 0u32..5) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        let small = denote(&p, &e, SearchBudget::with_depth(b));
        let large = denote(&p, &e, SearchBudget::with_depth(b + 1));
        if !small.is_truncated() && !large.is_truncated() {
            prop_assert!(small.is_subset(&large));
        }
        if small.complete_at_bound() && !large.is_truncated() {
            prop_assert!(small.same_elements(&large));
        }
    }

    #[test]
    fn denotations_are_downward_closed(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        let d = denote(&p, &e, budget());
        prop_assert!(d.contains(&Expr::Bottom));
        for m in d.maximal() {
            for t in bottom_prefixes(m.expr()) {
                prop_assert!(approximates(&t, m.expr()));
                prop_assert!(d.contains(&t), "{} missing below {}", t, m);
            }
        }
    }

    #[test]
    fn patterns_denote_their_approximations(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let t = g.pattern(p.signature(), 4);
        let d = denote(&p, &t, budget());
        prop_assert!(d.complete_at_bound());
        prop_assert_eq!(d.maximal().iter().map(|m| m.expr().clone()).collect::<Vec<_>>(), vec![t]);
    }

    #[test]
    fn variables_denote_themselves(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = Expr::var("X");
        let d = denote(&p, &e, budget());
        prop_assert_eq!(d.elements().len(), 2);
        prop_assert!(d.contains(&e));
        let t = g.query(p.signature(), 3);
        prop_assert!(denote(&p, &Expr::app(e, t), budget()).contains(&Expr::Bottom));
    }

    #[test]
    fn every_element_has_a_checked_proof(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        let d = denote(&p, &e, budget());
        for t in d.elements().iter().take(12) {
            let proof = derive(&p, &e, t.expr(), budget()).unwrap();
            prop_assert!(proof.is_some(), "no proof of {} for {}", t, e);
            prop_assert!(check_proof(&p, &proof.unwrap()));
        }
    }

    #[test]
    fn patterns_are_rewriting_normal_forms(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let mut t = g.pattern(p.signature(), 4);
        if t.contains_bottom() {
            t = Expr::var("X");
        }
        let succ = step(&p, &LetExpr::from(&t)).unwrap();
        prop_assert!(succ.is_empty(), "{} rewrites to {}", t, succ[0].result);
    }

    #[test]
    fn hats_are_total_and_fo_hats_first_order(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let t = Pattern::new(g.pattern(p.signature(), 5), p.signature()).unwrap();
        let avoid = p.signature().names().cloned().collect();
        for v in [Variant::HO, Variant::FO] {
            let h = hat(t.expr(), v);
            prop_assert!(!h.contains_bottom());
            let d = gen_distinguisher(&t, v, &avoid);
            prop_assert!(!d.hat.contains_bottom());
            let ext = d.extension(&p).unwrap();
            prop_assert!(is_pattern(&d.hat, ext.signature()).unwrap());
            if v == Variant::FO {
                prop_assert!(is_fo_pattern(&d.hat, ext.signature()).unwrap());
            }
            let mut rules = p.rules().to_vec();
            rules.extend(ext.rules().iter().cloned());
            prop_assert!(validate_program(ext.signature(), &rules, ProgramFlags::default()).is_empty());
        }
    }

    #[test]
    fn extensional_equivalence_lifts_to_more_arguments(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let (e, e2) = two_symbols(&mut g, &p);
        let one = ext_equiv(&p, &e, &e2, 1, ext_bound());
        if let ExtVerdict::EquivalentAtBound { inconclusive: 0, grid_truncated: false, .. } = one {
            let two = ext_equiv(&p, &e, &e2, 2, ext_bound());
            prop_assert!(two.is_equivalent(), "{} vs {}: {:?}", e, e2, two);
        }
    }

    #[test]
    fn verdicts_agree_with_tables(seed in any::<u64>(), n in 0usize..3) {
        let (mut g, p) = setup(seed);
        let (e, e2) = two_symbols(&mut g, &p);
        let verdict = ext_equiv(&p, &e, &e2, n, ext_bound());
        let (t1, t2) = (ext_semantics(&p, &e, n, ext_bound()), ext_semantics(&p, &e2, n, ext_bound()));
        if t1 == t2 {
            prop_assert!(verdict.is_equivalent());
        }
        if !verdict.is_equivalent() {
            prop_assert!(t1 != t2);
        }
        if t1.complete() && t2.complete() {
            prop_assert_eq!(verdict.is_equivalent(), t1 == t2);
        }
    }

    #[test]
    fn filling_a_context_inserts_one_occurrence(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let c = g.context(p.signature(), 3);
        let marker = Expr::var("Marker");
        let filled = c.fill(&marker);
        let count = filled.var_occurrences().iter().filter(|v| v.as_ref() == "Marker").count();
        prop_assert_eq!(count, 1);
        prop_assert_eq!(c.fill(&Expr::Bottom).var_occurrences().len() + 1, filled.var_occurrences().len());
        prop_assert_eq!(Context::Hole.fill(&filled), filled);
    }

    #[test]
    fn substitutions_outside_the_domain_are_identities(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 6);
        let mut theta = PSubstitution::new();
        theta.insert("Unused".into(), g.pattern(p.signature(), 3));
        prop_assert_eq!(e.substitute(&theta), e.clone());
        prop_assert_eq!(e.substitute(&PSubstitution::new()), e);
    }

    #[test]
    fn observations_are_total_elements(seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        let d = denote(&p, &e, budget());
        let ho = observe(&p, &e, ObservationKind::HO, budget());
        prop_assert_eq!(&ho.values, &d.total_elements());
        let fo = observe(&p, &e, ObservationKind::FO, budget());
        let filtered: Vec<_> = ho
            .values
            .iter()
            .filter(|v| is_fo_pattern(v.expr(), p.signature()).unwrap())
            .cloned()
            .collect();
        prop_assert_eq!(fo.values, filtered);
    }

    #[test]
    fn rewriting_copies_only_patterns(seed in any::<u64>(), trace_seed in any::<u64>()) {
        let (mut g, p) = setup(seed);
        let e = g.query(p.signature(), 5);
        let trace = random_trace(&p, &e, trace_seed, 40).unwrap();
        let mut state = trace.start.clone();
        for s in &trace.steps {
            let redex = state.canonical().at(&s.position).cloned();
            prop_assert!(redex.is_some(), "no subterm at {}", s.position);
            let redex = redex.unwrap();
            match s.rule {
                LetRule::Fapp => {
                    let e = redex.to_expr();
                    prop_assert!(e.is_some(), "Fapp redex {} has bindings", redex);
                    let e = e.unwrap();
                    let (head, args) = e.spine();
                    let n = p.signature().arity(&head.to_string()).unwrap();
                    for a in &args[..n] {
                        prop_assert!(is_pattern(a, p.signature()).unwrap(), "{} copies {}", redex, a);
                    }
                }
                LetRule::Bind => {
                    let LetExpr::Let(_, bound, _) = &redex else {
                        return Err(TestCaseError::fail(format!("Bind at non-let {redex}")));
                    };
                    let b = bound.to_expr();
                    prop_assert!(b.is_some_and(|b| is_pattern(&b, p.signature()).unwrap()));
                }
                _ => {}
            }
            state = s.result.clone();
        }
    }
}
