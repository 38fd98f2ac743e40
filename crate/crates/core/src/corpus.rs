//! Seeded generators for random programs, expressions, contexts and
//! extensions, used by the property suites and `check` subcommands.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{
    Context, Expr, Name, Program, ProgramFlags, ProgramRule, Signature, SymbolInfo, SymbolKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusConfig {
    pub programs: usize,
    pub max_rules: usize,
    /// User symbols (constructors plus functions) per program.
    pub max_symbols: usize,
    /// Atom count cap for each rule parameter.
    pub max_param_size: usize,
    pub max_rhs_size: usize,
    pub exprs_per_program: usize,
    pub max_expr_size: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            programs: 200,
            max_rules: 6,
            max_symbols: 4,
            max_param_size: 3,
            max_rhs_size: 5,
            exprs_per_program: 50,
            max_expr_size: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub program: Program,
    pub exprs: Vec<Expr>,
}

/// A reproducible source of random syntax.
pub struct Generator {
    rng: ChaCha8Rng,
    /// Probability of a call to a function that is not later in the
    /// symbol order, which is the only way to build recursion.
    pub recursion_bias: f64,
}

fn name(s: String) -> Name {
    Arc::from(s)
}

/// Ordered ways to split `total` atoms among `parts` non-empty arguments,
/// picked uniformly at random.
fn split<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    let mut sizes = vec![1; parts];
    for _ in parts..total {
        let k = rng.gen_range(0..parts);
        sizes[k] += 1;
    }
    sizes
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            recursion_bias: 0.15,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn signature(&mut self, max_symbols: usize) -> Signature {
        let total = self.rng.gen_range(2..=max_symbols.max(2));
        let constructors = self.rng.gen_range(1..total);
        let mut sig = Signature::new();
        for i in 0..constructors {
            let arity = if i == 0 { 0 } else { self.rng.gen_range(0..=2) };
            sig.declare(&format!("c{i}"), SymbolKind::Constructor, arity)
                .expect("fresh name");
        }
        for i in 0..total - constructors {
            let arity = self.rng.gen_range(0..=2);
            sig.declare(&format!("f{i}"), SymbolKind::Function, arity)
                .expect("fresh name");
        }
        sig
    }

    /// A linear, `⊥`-free pattern; variables are drawn from `next_var`.
    pub fn param(&mut self, sig: &Signature, size: usize, next_var: &mut usize) -> Expr {
        let heads: Vec<(Name, usize)> = sig
            .constructors()
            .map(|(n, ar)| (n.clone(), ar))
            .chain(
                sig.functions()
                    .filter(|(_, ar)| *ar > 0)
                    .map(|(n, ar)| (n.clone(), ar - 1)),
            )
            .collect();
        if size <= 1 || self.rng.gen_bool(0.35) {
            if self.rng.gen_bool(0.55) {
                *next_var += 1;
                return Expr::Var(name(format!("X{next_var}")));
            }
            let (h, _) = heads.choose(&mut self.rng).expect("non-empty signature");
            return Expr::Sym(h.clone());
        }
        let callable: Vec<_> = heads.iter().filter(|(_, m)| *m > 0).collect();
        let Some((h, max_args)) = callable.choose(&mut self.rng) else {
            *next_var += 1;
            return Expr::Var(name(format!("X{next_var}")));
        };
        let k = self.rng.gen_range(1..=(*max_args).min(size - 1));
        let sizes = split(&mut self.rng, size - 1, k);
        let args: Vec<Expr> = sizes
            .into_iter()
            .map(|s| self.param(sig, s, next_var))
            .collect();
        Expr::apply_all(Expr::Sym(h.clone()), args)
    }

    /// An expression of roughly `size` atoms. `caller` restricts calls to
    /// functions ordered after it, except with probability `recursion_bias`.
    fn expr_in(
        &mut self,
        sig: &Signature,
        vars: &[Name],
        size: usize,
        caller: Option<&str>,
    ) -> Expr {
        let allowed = |n: &Name, kind: SymbolKind, bias: bool| match (kind, caller) {
            (SymbolKind::Function, Some(c)) => bias || n.as_ref() > c,
            _ => true,
        };
        let bias = self.rng.gen_bool(self.recursion_bias);
        let syms: Vec<(Name, SymbolInfo)> = sig
            .iter()
            .filter(|(n, i)| allowed(n, i.kind, bias))
            .map(|(n, i)| (n.clone(), i))
            .collect();

        let leaf = |g: &mut Self| -> Expr {
            if !vars.is_empty() && g.rng.gen_bool(0.4) {
                return Expr::Var(vars.choose(&mut g.rng).expect("non-empty").clone());
            }
            match syms.choose(&mut g.rng) {
                Some((n, _)) => Expr::Sym(n.clone()),
                None => Expr::Var(vars.first().cloned().unwrap_or_else(|| name("X".into()))),
            }
        };
        if size <= 1 || self.rng.gen_bool(0.2) {
            return leaf(self);
        }

        if !vars.is_empty() && self.rng.gen_bool(0.15) {
            let head = Expr::Var(vars.choose(&mut self.rng).expect("non-empty").clone());
            let k = self.rng.gen_range(1..=2.min(size - 1));
            let sizes = split(&mut self.rng, size - 1, k);
            let args: Vec<Expr> = sizes
                .into_iter()
                .map(|s| self.expr_in(sig, vars, s, caller))
                .collect();
            return Expr::apply_all(head, args);
        }

        let callable: Vec<_> = syms.iter().filter(|(_, i)| i.arity > 0).collect();
        let Some((h, info)) = callable.choose(&mut self.rng) else {
            return leaf(self);
        };
        let mut max_args = info.arity;
        if info.kind == SymbolKind::Function && self.rng.gen_bool(0.15) {
            max_args += 1;
        }
        let k = self.rng.gen_range(1..=max_args.min(size - 1));
        let sizes = split(&mut self.rng, size - 1, k);
        let args: Vec<Expr> = sizes
            .into_iter()
            .map(|s| self.expr_in(sig, vars, s, caller))
            .collect();
        Expr::apply_all(Expr::Sym(h.clone()), args)
    }

    pub fn expr(&mut self, sig: &Signature, vars: &[Name], size: usize) -> Expr {
        self.expr_in(sig, vars, size, None)
    }

    /// A query expression: ground, or rarely with the free variable `X`.
    pub fn query(&mut self, sig: &Signature, max_size: usize) -> Expr {
        let size = self.rng.gen_range(1..=max_size.max(1));
        let vars = if self.rng.gen_bool(0.1) {
            vec![name("X".into())]
        } else {
            Vec::new()
        };
        self.expr(sig, &vars, size)
    }

    pub fn rule(&mut self, sig: &Signature, function: &Name, cfg: &CorpusConfig) -> ProgramRule {
        let arity = sig.arity(function).expect("declared function");
        let mut next_var = 0;
        let params: Vec<Expr> = (0..arity)
            .map(|_| {
                let size = self.rng.gen_range(1..=cfg.max_param_size.max(1));
                self.param(sig, size, &mut next_var)
            })
            .collect();
        let vars: Vec<Name> = params.iter().flat_map(|p| p.vars()).collect();
        let size = self.rng.gen_range(1..=cfg.max_rhs_size.max(1));
        let rhs = self.expr_in(sig, &vars, size, Some(function));
        ProgramRule {
            function: function.clone(),
            params,
            rhs,
        }
    }

    pub fn program(&mut self, cfg: &CorpusConfig) -> Program {
        let sig = self.signature(cfg.max_symbols);
        let functions: Vec<Name> = sig.functions().map(|(n, _)| n.clone()).collect();
        let n_rules = self.rng.gen_range(1..=cfg.max_rules.max(1));
        let rules: Vec<ProgramRule> = (0..n_rules)
            .map(|_| {
                let f = functions
                    .choose(&mut self.rng)
                    .expect("one function")
                    .clone();
                self.rule(&sig, &f, cfg)
            })
            .collect();
        Program::new(sig, rules, ProgramFlags::default()).expect("generated rules are valid")
    }

    /// A ground partial pattern of at most `max_size` atoms.
    pub fn pattern(&mut self, sig: &Signature, max_size: usize) -> Expr {
        let size = self.rng.gen_range(1..=max_size.max(1));
        let mut unused = 0;
        let p = self.param(sig, size, &mut unused);
        let p = self.ground(sig, &p);
        if self.rng.gen_bool(0.3) {
            self.sprinkle_bottom(&p)
        } else {
            p
        }
    }

    fn ground(&mut self, sig: &Signature, p: &Expr) -> Expr {
        match p {
            Expr::Var(_) => {
                let zero: Vec<&Name> = sig
                    .constructors()
                    .filter(|(_, ar)| *ar == 0)
                    .map(|(n, _)| n)
                    .collect();
                Expr::Sym((*zero.choose(&mut self.rng).expect("a constant")).clone())
            }
            Expr::App(f, a) => Expr::app(self.ground(sig, f), self.ground(sig, a)),
            other => other.clone(),
        }
    }

    fn sprinkle_bottom(&mut self, p: &Expr) -> Expr {
        let (head, args) = p.spine();
        if args.is_empty() || self.rng.gen_bool(0.3) {
            return Expr::Bottom;
        }
        let k = self.rng.gen_range(0..args.len());
        let args: Vec<Expr> = args
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i == k {
                    self.sprinkle_bottom(a)
                } else {
                    (*a).clone()
                }
            })
            .collect();
        Expr::apply_all(head.clone(), args)
    }

    /// A context whose hole sits at spine depth `depth`; the surrounding
    /// arguments are small ground expressions.
    pub fn context(&mut self, sig: &Signature, depth: usize) -> Context {
        let mut ctx = Context::Hole;
        for _ in 0..depth {
            let syms: Vec<(Name, usize)> = sig
                .iter()
                .filter(|(_, i)| i.arity > 0)
                .map(|(n, i)| (n.clone(), i.arity))
                .collect();
            let Some((h, arity)) = syms.choose(&mut self.rng).cloned() else {
                break;
            };
            let k = self.rng.gen_range(1..=arity);
            let pos = self.rng.gen_range(0..k);
            let mut before = Vec::new();
            let mut after = Vec::new();
            for i in 0..k {
                if i == pos {
                    continue;
                }
                let size = self.rng.gen_range(1..=2);
                let e = self.expr(sig, &[], size);
                if i < pos {
                    before.push(e)
                } else {
                    after.push(e)
                }
            }
            ctx = nest(Context::spine(Expr::Sym(h), before, after), ctx);
        }
        ctx
    }

    /// Rules defining fresh functions `x0, x1, ..` (named after `avoid`),
    /// over the base signature extended with those functions. The rules may
    /// call base functions and one another.
    pub fn extension(&mut self, base: &Program, cfg: &CorpusConfig) -> Program {
        let mut sig = base.signature().clone();
        let count = self.rng.gen_range(1..=2);
        let mut fresh = Vec::new();
        let mut i = 0;
        while fresh.len() < count {
            let n = format!("x{i}");
            i += 1;
            if sig.contains(&n) {
                continue;
            }
            sig.declare(&n, SymbolKind::Function, self.rng.gen_range(0..=2))
                .expect("fresh name");
            fresh.push(name(n));
        }
        let n_rules = self.rng.gen_range(1..=3);
        let rules: Vec<ProgramRule> = (0..n_rules)
            .map(|_| {
                let f = fresh.choose(&mut self.rng).expect("fresh").clone();
                self.rule(&sig, &f, cfg)
            })
            .collect();
        Program::new(sig, rules, ProgramFlags::default()).expect("generated rules are valid")
    }
}

/// `outer[inner]`: plugs a context into the hole of another.
pub fn nest(outer: Context, inner: Context) -> Context {
    match outer {
        Context::Hole => inner,
        Context::ApplyLeft(c, a) => Context::ApplyLeft(Box::new(nest(*c, inner)), a),
        Context::ApplyRight(f, c) => Context::ApplyRight(f, Box::new(nest(*c, inner))),
    }
}

/// `cfg.programs` random programs with their query expressions.
pub fn corpus(seed: u64, cfg: &CorpusConfig) -> Vec<CorpusEntry> {
    let mut g = Generator::new(seed);
    (0..cfg.programs)
        .map(|_| {
            let program = g.program(cfg);
            let mut exprs: Vec<Expr> = Vec::new();
            for _ in 0..cfg.exprs_per_program {
                let e = g.query(program.signature(), cfg.max_expr_size);
                if !exprs.contains(&e) {
                    exprs.push(e);
                }
            }
            CorpusEntry { program, exprs }
        })
        .collect()
}
