//! Call-time choice rewriting with local bindings, used as an independent
//! oracle for the calculus.
//!
//! Rules, applied anywhere inside arguments, let-bound expressions and let
//! bodies:
//!
//! * `Fapp`: `f t1 .. tn a1 .. am -> rθ a1 .. am` for a program rule
//!   `f p1 .. pn -> r` with `piθ = ti` and every `ti` a pattern.
//! * `LetIn`: `h .. e .. -> let X = e in h .. X ..` for a non-pattern argument
//!   `e` of an application spine.
//! * `Bind`: `let X = t in e -> e[X/t]` for a pattern `t`.
//! * `Elim`: `let X = e1 in e2 -> e2` when `X` does not occur in `e2`.
//! * `Flat`: `let X = (let Y = e1 in e2) in e3 -> let Y = e1 in let X = e2 in e3`.
//!
//! Only patterns are ever copied, so a shared computation is performed once
//! for all of its uses.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::syntax::{
    match_pattern, pattern_shape, sort_for_display, Expr, Name, Pattern, Program, SymbolKind,
};

/// An expression that may contain local bindings.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LetExpr {
    Bottom,
    Var(Name),
    Sym(Name),
    App(Box<LetExpr>, Box<LetExpr>),
    Let(Name, Box<LetExpr>, Box<LetExpr>),
}

impl LetExpr {
    pub fn app(f: LetExpr, a: LetExpr) -> LetExpr {
        LetExpr::App(Box::new(f), Box::new(a))
    }

    pub fn let_in(var: Name, bound: LetExpr, body: LetExpr) -> LetExpr {
        LetExpr::Let(var, Box::new(bound), Box::new(body))
    }

    fn apply_all(head: LetExpr, args: impl IntoIterator<Item = LetExpr>) -> LetExpr {
        args.into_iter().fold(head, LetExpr::app)
    }

    fn spine(&self) -> (&LetExpr, Vec<&LetExpr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let LetExpr::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// The core expression, if there are no bindings.
    pub fn to_expr(&self) -> Option<Expr> {
        Some(match self {
            LetExpr::Bottom => Expr::Bottom,
            LetExpr::Var(x) => Expr::Var(x.clone()),
            LetExpr::Sym(s) => Expr::Sym(s.clone()),
            LetExpr::App(f, a) => Expr::app(f.to_expr()?, a.to_expr()?),
            LetExpr::Let(..) => return None,
        })
    }

    pub fn has_let(&self) -> bool {
        match self {
            LetExpr::App(f, a) => f.has_let() || a.has_let(),
            LetExpr::Let(..) => true,
            _ => false,
        }
    }

    pub fn let_count(&self) -> usize {
        match self {
            LetExpr::App(f, a) => f.let_count() + a.let_count(),
            LetExpr::Let(_, b, e) => 1 + b.let_count() + e.let_count(),
            _ => 0,
        }
    }

    fn occurs(&self, x: &str) -> bool {
        match self {
            LetExpr::Var(y) => &**y == x,
            LetExpr::App(f, a) => f.occurs(x) || a.occurs(x),
            LetExpr::Let(_, b, e) => b.occurs(x) || e.occurs(x),
            _ => false,
        }
    }

    fn replace_var(&self, x: &str, t: &LetExpr) -> LetExpr {
        match self {
            LetExpr::Var(y) if &**y == x => t.clone(),
            LetExpr::App(f, a) => LetExpr::app(f.replace_var(x, t), a.replace_var(x, t)),
            LetExpr::Let(y, b, e) => {
                LetExpr::let_in(y.clone(), b.replace_var(x, t), e.replace_var(x, t))
            }
            other => other.clone(),
        }
    }

    /// The subterm at `pos`, if the path exists.
    pub fn at(&self, pos: &Position) -> Option<&LetExpr> {
        let mut cur = self;
        for step in &pos.0 {
            cur = match (step, cur) {
                (PathStep::Bound, LetExpr::Let(_, b, _)) => b,
                (PathStep::Body, LetExpr::Let(_, _, body)) => body,
                (PathStep::Arg(i), LetExpr::App(..)) => *cur.spine().1.get(i.checked_sub(1)?)?,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Renames binders to `#0`, `#1`, .. in pre-order, so that equal states
    /// up to renaming become equal values.
    pub fn canonical(&self) -> LetExpr {
        fn go(e: &LetExpr, env: &mut Vec<(Name, Name)>, next: &mut usize) -> LetExpr {
            match e {
                LetExpr::Var(x) => match env.iter().rev().find(|(old, _)| old == x) {
                    Some((_, new)) => LetExpr::Var(new.clone()),
                    None => e.clone(),
                },
                LetExpr::App(f, a) => {
                    let f = go(f, env, next);
                    LetExpr::app(f, go(a, env, next))
                }
                LetExpr::Let(x, b, body) => {
                    let new: Name = Arc::from(format!("#{next}"));
                    *next += 1;
                    let b = go(b, env, next);
                    env.push((x.clone(), new.clone()));
                    let body = go(body, env, next);
                    env.pop();
                    LetExpr::let_in(new, b, body)
                }
                _ => e.clone(),
            }
        }
        go(self, &mut Vec::new(), &mut 0)
    }

    fn fmt_in(&self, f: &mut fmt::Formatter<'_>, slot: Slot) -> fmt::Result {
        match self {
            LetExpr::Bottom => f.write_str("_|_"),
            LetExpr::Var(x) | LetExpr::Sym(x) => f.write_str(x),
            LetExpr::App(fun, arg) => {
                if slot == Slot::Arg {
                    f.write_str("(")?;
                }
                fun.fmt_in(f, Slot::Fun)?;
                f.write_str(" ")?;
                arg.fmt_in(f, Slot::Arg)?;
                if slot == Slot::Arg {
                    f.write_str(")")?;
                }
                Ok(())
            }
            LetExpr::Let(x, b, body) => {
                if slot != Slot::Top {
                    f.write_str("(")?;
                }
                write!(f, "let {x} = ")?;
                if matches!(**b, LetExpr::Let(..)) {
                    b.fmt_in(f, Slot::Arg)?;
                } else {
                    b.fmt_in(f, Slot::Top)?;
                }
                f.write_str(" in ")?;
                body.fmt_in(f, Slot::Top)?;
                if slot != Slot::Top {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Top,
    Fun,
    Arg,
}

impl From<&Expr> for LetExpr {
    fn from(e: &Expr) -> Self {
        match e {
            Expr::Bottom => LetExpr::Bottom,
            Expr::Var(x) => LetExpr::Var(x.clone()),
            Expr::Sym(s) => LetExpr::Sym(s.clone()),
            Expr::App(f, a) => LetExpr::app(LetExpr::from(&**f), LetExpr::from(&**a)),
        }
    }
}

impl fmt::Display for LetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_in(f, Slot::Top)
    }
}

impl fmt::Debug for LetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl Serialize for LetExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LetRule {
    Fapp,
    LetIn,
    Bind,
    Elim,
    Flat,
}

impl fmt::Display for LetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One step into a subterm: an argument of the spine (1-based), the bound
/// expression of a let, or its body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathStep {
    Arg(usize),
    Bound,
    Body,
}

/// Where a rule fired, as a path of spine steps from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<PathStep>);

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| match s {
                PathStep::Arg(i) => i.to_string(),
                PathStep::Bound => "bound".into(),
                PathStep::Body => "body".into(),
            })
            .collect();
        f.write_str(&parts.join("."))
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A successor of a state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Successor {
    pub rule: LetRule,
    pub position: Position,
    #[serde(rename = "snapshot")]
    pub result: LetExpr,
}

struct Stepper<'p> {
    program: &'p Program,
    fresh: Name,
}

impl Stepper<'_> {
    fn is_pattern(&self, e: &LetExpr) -> bool {
        e.to_expr()
            .is_some_and(|x| pattern_shape(&x, self.program.signature()))
    }

    fn local(&self, e: &LetExpr, out: &mut Vec<(LetRule, Vec<PathStep>, LetExpr)>) {
        if let LetExpr::Let(x, b, body) = e {
            if self.is_pattern(b) {
                out.push((LetRule::Bind, Vec::new(), body.replace_var(x, b)));
            }
            if !body.occurs(x) {
                out.push((LetRule::Elim, Vec::new(), (**body).clone()));
            }
            if let LetExpr::Let(y, b1, b2) = &**b {
                let inner = LetExpr::let_in(x.clone(), (**b2).clone(), (**body).clone());
                out.push((
                    LetRule::Flat,
                    Vec::new(),
                    LetExpr::let_in(y.clone(), (**b1).clone(), inner),
                ));
            }
            return;
        }

        let (head, args) = e.spine();
        if let LetExpr::Sym(f) = head {
            let sig = self.program.signature();
            if let Some(info) = sig.get(f).filter(|i| i.kind == SymbolKind::Function) {
                let n = info.arity;
                if args.len() >= n {
                    let vals: Option<Vec<Expr>> = args[..n]
                        .iter()
                        .map(|a| a.to_expr().filter(|x| pattern_shape(x, sig)))
                        .collect();
                    if let Some(vals) = vals {
                        for rule in self.program.rules_for(f) {
                            let theta =
                                rule.params.iter().zip(&vals).try_fold(
                                    crate::syntax::PSubstitution::new(),
                                    |acc, (p, v)| acc.union(&match_pattern(p, v)?),
                                );
                            if let Some(theta) = theta {
                                let rhs = LetExpr::from(&rule.rhs.substitute(&theta));
                                let rest = args[n..].iter().map(|a| (*a).clone());
                                out.push((
                                    LetRule::Fapp,
                                    Vec::new(),
                                    LetExpr::apply_all(rhs, rest),
                                ));
                            }
                        }
                    }
                }
            }
        }
        for (i, a) in args.iter().enumerate() {
            if !self.is_pattern(a) {
                let new_args = args.iter().enumerate().map(|(j, b)| {
                    if i == j {
                        LetExpr::Var(self.fresh.clone())
                    } else {
                        (*b).clone()
                    }
                });
                let body = LetExpr::apply_all(head.clone(), new_args);
                out.push((
                    LetRule::LetIn,
                    Vec::new(),
                    LetExpr::let_in(self.fresh.clone(), (*a).clone(), body),
                ));
            }
        }
    }

    /// All one-step rewrites of `e`, with positions relative to `e`.
    fn all(&self, e: &LetExpr) -> Vec<(LetRule, Vec<PathStep>, LetExpr)> {
        let mut out = Vec::new();
        self.local(e, &mut out);
        match e {
            LetExpr::Let(x, b, body) => {
                for (rule, mut path, nb) in self.all(b) {
                    path.insert(0, PathStep::Bound);
                    out.push((rule, path, LetExpr::let_in(x.clone(), nb, (**body).clone())));
                }
                for (rule, mut path, nbody) in self.all(body) {
                    path.insert(0, PathStep::Body);
                    out.push((rule, path, LetExpr::let_in(x.clone(), (**b).clone(), nbody)));
                }
            }
            LetExpr::App(..) => {
                let (head, args) = e.spine();
                for (i, a) in args.iter().enumerate() {
                    for (rule, mut path, na) in self.all(a) {
                        path.insert(0, PathStep::Arg(i + 1));
                        let new_args = args.iter().enumerate().map(|(j, b)| {
                            if i == j {
                                na.clone()
                            } else {
                                (*b).clone()
                            }
                        });
                        out.push((rule, path, LetExpr::apply_all(head.clone(), new_args)));
                    }
                }
            }
            _ => {}
        }
        out
    }
}

fn ensure_no_extra(p: &Program) -> Result<()> {
    if p.has_extra_variables() {
        return Err(Error::ExtraVariables);
    }
    Ok(())
}

fn successors(p: &Program, e: &LetExpr) -> Vec<Successor> {
    let fresh: Name = Arc::from(format!("#{}", e.let_count()));
    let stepper = Stepper { program: p, fresh };
    stepper
        .all(e)
        .into_iter()
        .map(|(rule, path, result)| Successor {
            rule,
            position: Position(path),
            result: result.canonical(),
        })
        .collect()
}

/// All one-step successors of `e`, each in canonical form.
pub fn step(p: &Program, e: &LetExpr) -> Result<Vec<Successor>> {
    ensure_no_extra(p)?;
    Ok(successors(p, &e.canonical()))
}

/// Limits for the breadth-first exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteLimits {
    /// Rewriting steps from the start expression.
    pub max_steps: usize,
    /// Distinct states visited before giving up.
    pub max_states: usize,
}

impl Default for RewriteLimits {
    fn default() -> Self {
        RewriteLimits {
            max_steps: 200,
            max_states: 50_000,
        }
    }
}

/// Total patterns reachable from an expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reachable {
    pub values: Vec<Pattern>,
    /// The whole reachable state space was explored.
    pub exhausted: bool,
    pub states: usize,
}

impl Reachable {
    pub fn contains(&self, t: &Expr) -> bool {
        self.values.iter().any(|v| v.expr() == t)
    }
}

pub fn reachable_patterns(p: &Program, e: &Expr, max_steps: usize) -> Result<Reachable> {
    reachable_patterns_with(
        p,
        e,
        RewriteLimits {
            max_steps,
            ..Default::default()
        },
    )
}

pub fn reachable_patterns_with(p: &Program, e: &Expr, limits: RewriteLimits) -> Result<Reachable> {
    ensure_no_extra(p)?;
    let sig = p.signature();
    let start = LetExpr::from(e).canonical();
    let mut seen: HashSet<LetExpr> = HashSet::new();
    let mut values = BTreeSet::new();
    let mut queue = VecDeque::new();
    let mut exhausted = true;
    seen.insert(start.clone());
    queue.push_back((start, 0usize));

    while let Some((s, depth)) = queue.pop_front() {
        if let Some(x) = s.to_expr() {
            if !x.contains_bottom() && pattern_shape(&x, sig) {
                values.insert(x);
                continue;
            }
        }
        let next = successors(p, &s);
        if next.is_empty() {
            continue;
        }
        if depth >= limits.max_steps {
            exhausted = false;
            continue;
        }
        for succ in next {
            if seen.contains(&succ.result) {
                continue;
            }
            if seen.len() >= limits.max_states {
                exhausted = false;
                break;
            }
            seen.insert(succ.result.clone());
            queue.push_back((succ.result, depth + 1));
        }
    }

    let mut values: Vec<Pattern> = values.into_iter().map(Pattern::trusted).collect();
    sort_for_display(&mut values);
    Ok(Reachable {
        values,
        exhausted,
        states: seen.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub start: LetExpr,
    pub steps: Vec<Successor>,
}

impl Trace {
    /// The last state (the start when no step was taken).
    pub fn last(&self) -> &LetExpr {
        self.steps.last().map_or(&self.start, |s| &s.result)
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "   {}", self.start)?;
        for s in &self.steps {
            writeln!(f, "-> {}   [{} at {}]", s.result, s.rule, s.position)?;
        }
        Ok(())
    }
}

/// One pseudo-random rewriting sequence, stopping at a normal form or after
/// `max_steps` steps.
pub fn random_trace(p: &Program, e: &Expr, seed: u64, max_steps: usize) -> Result<Trace> {
    ensure_no_extra(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = LetExpr::from(e).canonical();
    let mut cur = start.clone();
    let mut steps = Vec::new();
    while steps.len() < max_steps {
        let next = successors(p, &cur);
        let Some(choice) = next.choose(&mut rng) else {
            break;
        };
        cur = choice.result.clone();
        steps.push(choice.clone());
    }
    Ok(Trace { start, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_programs, PRELUDE};
    use crate::syntax::ProgramFlags;

    const EX1: &str = include_str!("../programs/ex1.crwl");

    fn ex1() -> Program {
        parse_programs(&[PRELUDE, EX1], ProgramFlags::default()).unwrap()
    }

    fn values(p: &Program, src: &str) -> Vec<String> {
        let r = reachable_patterns(p, &parse_expr(src, p.signature()).unwrap(), 200).unwrap();
        assert!(r.exhausted, "{src} not exhausted");
        r.values.iter().map(|v| v.to_string()).collect()
    }

    #[test]
    fn fdouble_values() {
        let p = ex1();
        assert_eq!(values(&p, "fdouble f 0"), ["0", "s (s 0)"]);
        assert_eq!(values(&p, "fdouble f' 0"), ["0", "s 0", "s (s 0)"]);
        assert_eq!(values(&p, "s 0"), ["s 0"]);
        assert_eq!(values(&p, "f"), ["g", "h"]);
    }

    #[test]
    fn fdouble_shares_its_argument() {
        let p = ex1();
        let e = LetExpr::from(&parse_expr("fdouble f 0", p.signature()).unwrap());
        let first: Vec<_> = step(&p, &e)
            .unwrap()
            .into_iter()
            .filter(|s| s.rule == LetRule::LetIn)
            .collect();
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].result.to_string(), "let #0 = f in fdouble #0 0");
        let second = step(&p, &first[0].result).unwrap();
        let shown: Vec<String> = second
            .iter()
            .map(|s| format!("{} {} {}", s.rule, s.position, s.result))
            .collect();
        assert_eq!(
            shown,
            [
                "Fapp bound let #0 = g in fdouble #0 0",
                "Fapp bound let #0 = h in fdouble #0 0",
                "Fapp body let #0 = f in fadd #0 #0 0",
            ]
        );
    }

    #[test]
    fn bind_and_normal_forms() {
        let p = ex1();
        let e = LetExpr::let_in(
            "X".into(),
            LetExpr::Sym("0".into()),
            LetExpr::app(LetExpr::Sym("s".into()), LetExpr::Var("X".into())),
        );
        let succ = step(&p, &e).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].rule, LetRule::Bind);
        assert_eq!(succ[0].result.to_string(), "s 0");
        assert!(step(&p, &LetExpr::Sym("0".into())).unwrap().is_empty());
        assert!(step(
            &p,
            &LetExpr::from(&parse_expr("fadd f' g", p.signature()).unwrap())
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn flat_and_elim() {
        let p = ex1();
        let e = parse_expr("f' (f' 0)", p.signature()).unwrap();
        let mut rules = BTreeSet::new();
        let r = reachable_patterns(&p, &e, 200).unwrap();
        assert_eq!(
            r.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            ["0", "s 0"]
        );
        for seed in 0..20 {
            for s in random_trace(&p, &e, seed, 100).unwrap().steps {
                rules.insert(s.rule);
            }
        }
        assert!(rules.contains(&LetRule::Flat) || rules.contains(&LetRule::Bind));
    }

    #[test]
    fn random_trace_is_reproducible() {
        let p = ex1();
        let e = parse_expr("fdouble f' 0", p.signature()).unwrap();
        let a = random_trace(&p, &e, 1, 200).unwrap();
        assert_eq!(a, random_trace(&p, &e, 1, 200).unwrap());
        let end = a.last().to_expr().unwrap();
        assert!(reachable_patterns(&p, &e, 200).unwrap().contains(&end));
        assert!(random_trace(&p, &Expr::sym("0"), 7, 10).unwrap().is_empty());
    }

    #[test]
    fn trace_json() {
        let p = ex1();
        let e = parse_expr("f' 0", p.signature()).unwrap();
        let t = random_trace(&p, &e, 3, 50).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["start"], "f' 0");
        assert!(v["steps"][0]["rule"].is_string());
        assert!(v["steps"][0]["position"].is_string());
        assert!(v["steps"][0]["snapshot"].is_string());
    }

    #[test]
    fn rejects_extra_variables() {
        let p = parse_programs(
            &[include_str!("../programs/extra_var.crwl")],
            ProgramFlags::extra_variables(),
        )
        .unwrap();
        assert!(matches!(
            reachable_patterns(&p, &Expr::sym("0"), 5),
            Err(Error::ExtraVariables)
        ));
    }
}
