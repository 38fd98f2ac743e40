use std::collections::HashMap;
use std::rc::Rc;

use super::proof::{ProofRule, ProofTree, RuleInstance};
use super::{DenotationSet, SearchBudget};
use crate::syntax::{
    approximates, enumerate_patterns, match_into, Expr, PSubstitution, Pattern, PatternGrid,
    Program, ProgramRule, SymbolKind,
};

/// Raised when a set or product grows past `max_results`.
#[derive(Debug, Clone, Copy)]
struct Overflow;

type Step<T> = Result<T, Overflow>;

struct Node {
    /// Antichain of maximal values; `[⊥]` when nothing else is derivable.
    max: Vec<Expr>,
    complete: bool,
}

/// A memoizing denotation engine for one program and budget.
///
/// Results are cached per `(expression, remaining OR budget)` and shared by
/// every query made through the same engine.
pub struct Calculus<'p> {
    program: &'p Program,
    budget: SearchBudget,
    memo: HashMap<(Expr, u32), Rc<Node>>,
    extra_pool: Option<Rc<Vec<Expr>>>,
}

struct Antichain {
    items: Vec<Expr>,
    cap: usize,
}

impl Antichain {
    fn new(cap: usize) -> Self {
        Antichain {
            items: Vec::new(),
            cap,
        }
    }

    fn insert(&mut self, v: Expr) -> Step<()> {
        if v.is_bottom() || self.items.iter().any(|u| approximates(&v, u)) {
            return Ok(());
        }
        self.items.retain(|u| !approximates(u, &v));
        self.items.push(v);
        if self.items.len() > self.cap {
            return Err(Overflow);
        }
        Ok(())
    }

    fn finish(mut self) -> Vec<Expr> {
        if self.items.is_empty() {
            self.items.push(Expr::Bottom);
        }
        self.items
    }
}

fn product_len<T>(lists: &[Vec<T>]) -> Option<usize> {
    lists
        .iter()
        .try_fold(1usize, |acc, l| acc.checked_mul(l.len()))
}

/// Calls `f` on every element of the cartesian product, in odometer order
/// (last list varies fastest).
fn for_each_combo<T>(lists: &[Vec<T>], mut f: impl FnMut(&[&T]) -> Step<()>) -> Step<()> {
    if lists.iter().any(|l| l.is_empty()) {
        return Ok(());
    }
    let mut idx = vec![0usize; lists.len()];
    loop {
        let combo: Vec<&T> = idx.iter().zip(lists).map(|(&i, l)| &l[i]).collect();
        f(&combo)?;
        let mut k = lists.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl<'p> Calculus<'p> {
    pub fn new(program: &'p Program, budget: SearchBudget) -> Self {
        Calculus {
            program,
            budget,
            memo: HashMap::new(),
            extra_pool: None,
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }

    fn cap(&self) -> usize {
        self.budget.max_results.unwrap_or(usize::MAX)
    }

    pub fn denote(&mut self, e: &Expr) -> DenotationSet {
        self.denote_with_depth(e, self.budget.max_or_depth)
    }

    /// Like [`Calculus::denote`] but with an explicit OR bound.
    pub fn denote_with_depth(&mut self, e: &Expr, depth: u32) -> DenotationSet {
        match self.node(e, depth) {
            Ok(n) => DenotationSet::new(
                n.max.iter().cloned().map(Pattern::trusted).collect(),
                depth,
                n.complete,
                false,
            ),
            Err(Overflow) => DenotationSet::new(Vec::new(), depth, false, true),
        }
    }

    pub fn derive(&mut self, e: &Expr, t: &Expr) -> Option<ProofTree> {
        self.derive_with_depth(e, t, self.budget.max_or_depth)
    }

    /// Returns a proof using as few nested OR steps as possible.
    pub fn derive_with_depth(&mut self, e: &Expr, t: &Expr, depth: u32) -> Option<ProofTree> {
        if !self
            .node(e, depth)
            .ok()?
            .max
            .iter()
            .any(|m| approximates(t, m))
        {
            return None;
        }
        (0..=depth).find_map(|b| self.derive_at(e, t, b).ok().flatten())
    }

    fn pool(&mut self) -> Rc<Vec<Expr>> {
        if let Some(p) = &self.extra_pool {
            return p.clone();
        }
        let grid = PatternGrid {
            max_size: self.budget.max_pattern_size,
            include_bottom: true,
        };
        let pool = Rc::new(enumerate_patterns(self.program.signature(), grid));
        self.extra_pool = Some(pool.clone());
        pool
    }

    fn dc_applies(&self, head: &Expr, nargs: usize) -> bool {
        match head {
            Expr::Sym(h) => match self.program.signature().get(h) {
                Some(info) => match info.kind {
                    SymbolKind::Constructor => nargs <= info.arity,
                    SymbolKind::Function => nargs < info.arity,
                },
                None => false,
            },
            _ => false,
        }
    }

    fn or_arity(&self, head: &Expr, nargs: usize) -> Option<usize> {
        match head {
            Expr::Sym(h) => match self.program.signature().get(h) {
                Some(info) if info.kind == SymbolKind::Function && nargs >= info.arity => {
                    Some(info.arity)
                }
                _ => None,
            },
            _ => None,
        }
    }

    fn node(&mut self, e: &Expr, b: u32) -> Step<Rc<Node>> {
        if let Some(n) = self.memo.get(&(e.clone(), b)) {
            return Ok(n.clone());
        }
        let mut acc = Antichain::new(self.cap());
        let mut complete = true;
        let (head, args) = e.spine();

        match head {
            Expr::Var(_) if args.is_empty() => acc.insert(e.clone())?,
            Expr::Sym(_) => {
                if self.dc_applies(head, args.len()) {
                    let mut sets = Vec::with_capacity(args.len());
                    for a in &args {
                        let n = self.node(a, b)?;
                        complete &= n.complete;
                        sets.push(n.max.clone());
                    }
                    if product_len(&sets).is_none_or(|n| n > self.cap()) {
                        return Err(Overflow);
                    }
                    for_each_combo(&sets, |combo| {
                        acc.insert(Expr::apply_all(
                            head.clone(),
                            combo.iter().map(|v| (*v).clone()),
                        ))
                    })?;
                }
                if let Some(n) = self.or_arity(head, args.len()) {
                    let Expr::Sym(f) = head else { unreachable!() };
                    if self.program.has_rules_for(f) {
                        if b == 0 {
                            complete = false;
                        } else {
                            let program = self.program;
                            for rule in program.rules_for(f) {
                                let insts =
                                    self.rule_instances(rule, &args, n, b, &mut complete)?;
                                for (_, rhs) in insts {
                                    let r = self.node(&rhs, b - 1)?;
                                    complete &= r.complete;
                                    for v in &r.max {
                                        acc.insert(v.clone())?;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            _ => {}
        }

        let node = Rc::new(Node {
            max: acc.finish(),
            complete,
        });
        self.memo.insert((e.clone(), b), node.clone());
        Ok(node)
    }

    /// Every `(θ, rθ a_{n+1} .. a_m)` for which the parameter premises
    /// `e_i ⇝ p_iθ` hold at budget `b - 1`, with `θ` built by matching
    /// parameters against maximal argument values.
    fn rule_instances(
        &mut self,
        rule: &ProgramRule,
        args: &[&Expr],
        n: usize,
        b: u32,
        complete: &mut bool,
    ) -> Step<Vec<(PSubstitution, Expr)>> {
        let mut per_param: Vec<Vec<PSubstitution>> = Vec::with_capacity(n);
        for (param, arg) in rule.params.iter().zip(&args[..n]) {
            let node = self.node(arg, b - 1)?;
            *complete &= node.complete;
            let cands: Vec<PSubstitution> = node
                .max
                .iter()
                .filter_map(|v| {
                    let mut theta = PSubstitution::new();
                    match_into(param, v, &mut theta).then_some(theta)
                })
                .collect();
            if cands.is_empty() {
                return Ok(Vec::new());
            }
            per_param.push(cands);
        }

        let extra: Vec<_> = rule.extra_vars().into_iter().collect();
        let mut extra_lists: Vec<Vec<Expr>> = Vec::new();
        if !extra.is_empty() {
            *complete = false;
            let pool = self.pool();
            extra_lists = vec![(*pool).clone(); extra.len()];
        }

        let cap = self.cap();
        let total = product_len(&per_param)
            .and_then(|a| product_len(&extra_lists).and_then(|b| a.checked_mul(b)));
        if total.is_none_or(|t| t > cap) {
            return Err(Overflow);
        }

        let rest = &args[n..];
        let mut out = Vec::new();
        for_each_combo(&per_param, |thetas| {
            let mut base = PSubstitution::new();
            for t in thetas {
                for (k, v) in t.iter() {
                    base.insert(k.clone(), v.clone());
                }
            }
            let mut emit = |theta: PSubstitution| {
                let rhs = Expr::apply_all(
                    rule.rhs.substitute(&theta),
                    rest.iter().map(|a| (*a).clone()),
                );
                out.push((theta, rhs));
                Ok(())
            };
            if extra.is_empty() {
                emit(base)
            } else {
                for_each_combo(&extra_lists, |vals| {
                    let mut theta = base.clone();
                    for (x, v) in extra.iter().zip(vals) {
                        theta.insert(x.clone(), (*v).clone());
                    }
                    emit(theta)
                })
            }
        })?;
        Ok(out)
    }

    fn derive_at(&mut self, e: &Expr, t: &Expr, b: u32) -> Step<Option<ProofTree>> {
        if t.is_bottom() {
            return Ok(Some(ProofTree::leaf(e.clone(), Expr::Bottom, ProofRule::B)));
        }
        let node = self.node(e, b)?;
        if !node.max.iter().any(|m| approximates(t, m)) {
            return Ok(None);
        }
        let (head, args) = e.spine();
        match head {
            Expr::Var(_) if args.is_empty() && t == e => {
                return Ok(Some(ProofTree::leaf(e.clone(), t.clone(), ProofRule::RR)));
            }
            Expr::Sym(_) => {}
            _ => return Ok(None),
        }

        if self.dc_applies(head, args.len()) {
            let (t_head, t_args) = t.spine();
            if t_head == head && t_args.len() == args.len() {
                let mut premises = Vec::with_capacity(args.len());
                for (a, v) in args.iter().zip(&t_args) {
                    match self.derive_at(a, v, b)? {
                        Some(p) => premises.push(p),
                        None => break,
                    }
                }
                if premises.len() == args.len() {
                    return Ok(Some(ProofTree {
                        expr: e.clone(),
                        value: t.clone(),
                        rule: ProofRule::DC,
                        premises,
                        instance: None,
                    }));
                }
            }
        }

        if let (Some(n), true) = (self.or_arity(head, args.len()), b > 0) {
            let Expr::Sym(f) = head else { unreachable!() };
            let program = self.program;
            let mut ignored = true;
            for rule in program.rules_for(f) {
                for (theta, rhs) in self.rule_instances(rule, &args, n, b, &mut ignored)? {
                    let r = self.node(&rhs, b - 1)?;
                    if !r.max.iter().any(|m| approximates(t, m)) {
                        continue;
                    }
                    let mut premises = Vec::with_capacity(n + 1);
                    for (p, a) in rule.params.iter().zip(&args[..n]) {
                        let v = p.substitute(&theta);
                        let pt = self
                            .derive_at(a, &v, b - 1)?
                            .expect("matched from a derivable value");
                        premises.push(pt);
                    }
                    let last = self
                        .derive_at(&rhs, t, b - 1)?
                        .expect("membership checked above");
                    premises.push(last);
                    return Ok(Some(ProofTree {
                        expr: e.clone(),
                        value: t.clone(),
                        rule: ProofRule::OR,
                        premises,
                        instance: Some(RuleInstance {
                            rule: rule.clone(),
                            theta,
                        }),
                    }));
                }
            }
        }
        Ok(None)
    }
}
