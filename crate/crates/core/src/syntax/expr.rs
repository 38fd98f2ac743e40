use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Interned-ish symbol and variable names.
pub type Name = Arc<str>;

/// Applicative expressions over variables and signature symbols, possibly
/// containing the undefined value `⊥`.
///
/// Application is binary and left-associative: `f a b` is
/// `App(App(f, a), b)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Bottom,
    Var(Name),
    Sym(Name),
    App(Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Name::from(name))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(Name::from(name))
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::App(Arc::new(fun), Arc::new(arg))
    }

    /// Builds `head a1 ... an`.
    pub fn apply_all<I>(head: Expr, args: I) -> Expr
    where
        I: IntoIterator<Item = Expr>,
    {
        args.into_iter().fold(head, Expr::app)
    }

    /// Splits `h e1 ... em` into its head and argument list.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Expr::App(f, a) = cur {
            args.push(a.as_ref());
            cur = f.as_ref();
        }
        args.reverse();
        (cur, args)
    }

    pub fn head(&self) -> &Expr {
        let mut cur = self;
        while let Expr::App(f, _) = cur {
            cur = f;
        }
        cur
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Expr::Bottom)
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Number of atoms (variables, symbols and `⊥`) in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::App(f, a) => f.size() + a.size(),
            _ => 1,
        }
    }

    /// Nesting depth of argument positions: atoms have height 1.
    pub fn height(&self) -> usize {
        let (_, args) = self.spine();
        1 + args.iter().map(|a| a.height()).max().unwrap_or(0)
    }

    pub fn contains_bottom(&self) -> bool {
        match self {
            Expr::Bottom => true,
            Expr::App(f, a) => f.contains_bottom() || a.contains_bottom(),
            _ => false,
        }
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::App(f, a) => {
                f.collect_vars(out);
                a.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Variables in left-to-right order of occurrence, with repetitions.
    pub fn var_occurrences(&self) -> Vec<Name> {
        fn go(e: &Expr, out: &mut Vec<Name>) {
            match e {
                Expr::Var(v) => out.push(v.clone()),
                Expr::App(f, a) => {
                    go(f, out);
                    go(a, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn symbols(&self) -> BTreeSet<Name> {
        fn go(e: &Expr, out: &mut BTreeSet<Name>) {
            match e {
                Expr::Sym(s) => {
                    out.insert(s.clone());
                }
                Expr::App(f, a) => {
                    go(f, out);
                    go(a, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn has_var(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v.as_ref() == name,
            Expr::App(f, a) => f.has_var(name) || a.has_var(name),
            _ => false,
        }
    }

    /// Simultaneous replacement of variables in the domain of `theta`.
    pub fn substitute(&self, theta: &PSubstitution) -> Expr {
        if theta.is_empty() {
            return self.clone();
        }
        self.subst_with(&|v| theta.get(v).cloned())
    }

    pub(crate) fn subst_with(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::App(fun, arg) => {
                let nf = fun.subst_with(f);
                let na = arg.subst_with(f);
                if nf == **fun && na == **arg {
                    self.clone()
                } else {
                    Expr::app(nf, na)
                }
            }
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, false)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub(crate) const BOTTOM_TEXT: &str = "_|_";

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, as_arg: bool) -> fmt::Result {
    match e {
        Expr::Bottom => f.write_str(BOTTOM_TEXT),
        Expr::Var(v) | Expr::Sym(v) => f.write_str(v),
        Expr::App(fun, arg) => {
            if as_arg {
                f.write_str("(")?;
            }
            write_expr(fun, f, false)?;
            f.write_str(" ")?;
            write_expr(arg, f, true)?;
            if as_arg {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

/// A pattern substitution: a finite map from variables to (partial)
/// patterns.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PSubstitution(BTreeMap<Name, Expr>);

impl PSubstitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Expr> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Name, value: Expr) -> Option<Expr> {
        self.0.insert(var, value)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Expr)> {
        self.0.iter()
    }

    /// Union of two substitutions with disjoint domains; `None` on a
    /// conflicting binding.
    pub fn union(mut self, other: &PSubstitution) -> Option<PSubstitution> {
        for (k, v) in other.iter() {
            match self.0.get(k) {
                Some(old) if old != v => return None,
                _ => {
                    self.0.insert(k.clone(), v.clone());
                }
            }
        }
        Some(self)
    }
}

impl FromIterator<(Name, Expr)> for PSubstitution {
    fn from_iter<T: IntoIterator<Item = (Name, Expr)>>(iter: T) -> Self {
        PSubstitution(iter.into_iter().collect())
    }
}

impl fmt::Debug for PSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for PSubstitution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k.as_ref(), &v.to_string())?;
        }
        map.end()
    }
}

/// One-hole contexts `[ ] | C e | e C`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Context {
    Hole,
    ApplyLeft(Box<Context>, Expr),
    ApplyRight(Expr, Box<Context>),
}

pub(crate) const HOLE_TEXT: &str = "[ ]";

impl Context {
    pub fn apply_left(ctx: Context, arg: Expr) -> Context {
        Context::ApplyLeft(Box::new(ctx), arg)
    }

    pub fn apply_right(fun: Expr, ctx: Context) -> Context {
        Context::ApplyRight(fun, Box::new(ctx))
    }

    /// `C[e]`.
    pub fn fill(&self, e: &Expr) -> Expr {
        match self {
            Context::Hole => e.clone(),
            Context::ApplyLeft(c, arg) => Expr::app(c.fill(e), arg.clone()),
            Context::ApplyRight(fun, c) => Expr::app(fun.clone(), c.fill(e)),
        }
    }

    /// `h a1 .. [ ] .. ak`: a spine context with the hole at argument `hole`.
    pub fn spine(head: Expr, before: Vec<Expr>, after: Vec<Expr>) -> Context {
        let prefix = Expr::apply_all(head, before);
        let mut ctx = Context::apply_right(prefix, Context::Hole);
        for a in after {
            ctx = Context::apply_left(ctx, a);
        }
        ctx
    }

    /// Number of application nodes between the root and the hole.
    pub fn depth(&self) -> usize {
        match self {
            Context::Hole => 0,
            Context::ApplyLeft(c, _) | Context::ApplyRight(_, c) => 1 + c.depth(),
        }
    }

    /// Number of application spines enclosing the hole: `h a [ ] b` has
    /// spine depth 1, `s (f [ ])` has 2.
    pub fn spine_depth(&self) -> usize {
        match self {
            Context::Hole => 0,
            Context::ApplyRight(_, c) => 1 + c.spine_depth(),
            Context::ApplyLeft(c, _) if matches!(**c, Context::Hole) => 1,
            Context::ApplyLeft(c, _) => c.spine_depth(),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marked = self.fill(&Expr::Sym(Name::from(HOLE_TEXT)));
        write!(f, "{marked}")
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
