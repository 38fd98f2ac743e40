//! Safe extensions, the hat transformation and generated distinguishers.
//!
//! A distinguisher for a partial pattern `t` is a family of fresh unary
//! functions `g_s`, one per distinct subpattern `s` of `t`, such that
//! `hat(t) ∈ ⟦g_t e⟧` exactly when `t ∈ ⟦e⟧`. Since `hat(t)` is total, the
//! context `g_t [ ]` turns membership in a denotation into an observation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{observe, Observation, ObservationKind};
use crate::calculus::{Calculus, DenotationSet, SearchBudget};
use crate::error::{Error, Result};
use crate::syntax::{
    fo_shape, sort_for_display, Context, Expr, Name, Pattern, Program, ProgramFlags, ProgramRule,
    Signature, SymbolKind, BOTTOM_TEXT,
};

/// Function symbols defined by `rules`.
pub fn defs(rules: &[ProgramRule]) -> BTreeSet<Name> {
    rules.iter().map(|r| r.function.clone()).collect()
}

/// Function symbols occurring in `e`.
pub fn fs(e: &Expr, sig: &Signature) -> BTreeSet<Name> {
    e.symbols()
        .into_iter()
        .filter(|s| sig.is_function(s))
        .collect()
}

/// Function symbols occurring anywhere in the rules of `p`.
pub fn fs_program(p: &Program) -> BTreeSet<Name> {
    let sig = p.signature();
    let mut out = BTreeSet::new();
    for r in p.rules() {
        out.insert(r.function.clone());
        for e in r.params.iter().chain(std::iter::once(&r.rhs)) {
            out.extend(fs(e, sig));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SafetyError {
    pub symbol: String,
    pub reason: String,
}

impl fmt::Display for SafetyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.symbol, self.reason)
    }
}

impl std::error::Error for SafetyError {}

/// A base program together with rules for fresh functions only.
#[derive(Clone, Debug)]
pub struct SafeExtension {
    pub base: Program,
    pub extension: Program,
    pub merged: Program,
}

/// Checks that `ext` defines no function of `base` or of the protected
/// expressions, and merges the two programs.
pub fn safe_extend(
    base: &Program,
    ext: &Program,
    protected: &[Expr],
) -> std::result::Result<SafeExtension, SafetyError> {
    let sig = base
        .signature()
        .merge(ext.signature())
        .map_err(|e| SafetyError {
            symbol: match &e {
                crate::error::SignatureError::Clash { name, .. } => name.clone(),
                crate::error::SignatureError::BadName(n) => n.clone(),
            },
            reason: e.to_string(),
        })?;
    let mut taken = fs_program(base);
    taken.extend(defs(base.rules()));
    for e in protected {
        taken.extend(fs(e, &sig));
    }
    if let Some(f) = defs(ext.rules()).intersection(&taken).next() {
        let reason = if base.has_rules_for(f) {
            "already defined by the base program"
        } else if protected.iter().any(|e| e.symbols().contains(f)) {
            "occurs in a protected expression"
        } else {
            "occurs in the base program"
        };
        return Err(SafetyError {
            symbol: f.to_string(),
            reason: reason.into(),
        });
    }
    let ext_fo = ext
        .rules()
        .iter()
        .all(|r| r.params.iter().all(|p| fo_shape(p, &sig)));
    let flags = ProgramFlags {
        extra_variables_allowed: base.flags().extra_variables_allowed
            || ext.flags().extra_variables_allowed,
        left_fo_required: base.flags().left_fo_required && ext_fo,
    };
    let rules: Vec<ProgramRule> = base.rules().iter().chain(ext.rules()).cloned().collect();
    let merged = Program::new(sig, rules, flags).map_err(|e| SafetyError {
        symbol: String::new(),
        reason: e.to_string(),
    })?;
    Ok(SafeExtension {
        base: base.clone(),
        extension: ext.clone(),
        merged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub base: DenotationSet,
    pub merged: DenotationSet,
    /// Elements over the merged program missing over the base.
    pub gained: Vec<Pattern>,
    /// Elements over the base program missing over the merged one.
    pub lost: Vec<Pattern>,
    /// The merged program has extra variables, where a difference is a
    /// known phenomenon rather than a fault.
    pub expected: bool,
}

impl InvarianceReport {
    pub fn equal(&self) -> bool {
        self.gained.is_empty() && self.lost.is_empty()
    }

    /// Both sides were computed without hitting a bound.
    pub fn conclusive(&self) -> bool {
        self.base.complete_at_bound() && self.merged.complete_at_bound()
    }
}

/// Compares `⟦e⟧` over the base and the merged program.
pub fn safe_extension_invariance_check(
    se: &SafeExtension,
    e: &Expr,
    budget: SearchBudget,
) -> InvarianceReport {
    let base = Calculus::new(&se.base, budget).denote(e);
    let merged = Calculus::new(&se.merged, budget).denote(e);
    let gained = merged
        .elements()
        .into_iter()
        .filter(|t| !base.contains(t))
        .collect();
    let lost = base
        .elements()
        .into_iter()
        .filter(|t| !merged.contains(t))
        .collect();
    InvarianceReport {
        base,
        merged,
        gained,
        lost,
        expected: se.merged.has_extra_variables(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    /// `⊥` becomes the constant `bot`; everything else is kept.
    #[default]
    HO,
    /// Additionally every `h t1 .. tm` becomes `h_m t1 .. tm` with a fresh
    /// constructor `h_m`, giving a first-order pattern.
    FO,
}

/// Fresh-name bookkeeping shared by [`hat`] and [`gen_distinguisher`].
struct Namer<'a> {
    avoid: &'a BTreeSet<Name>,
    chosen: BTreeMap<String, Name>,
}

impl Namer<'_> {
    fn get(&mut self, base: String) -> Name {
        if let Some(n) = self.chosen.get(&base) {
            return n.clone();
        }
        let mut candidate = base.clone();
        while self.avoid.contains(candidate.as_str())
            || self.chosen.values().any(|n| **n == *candidate)
        {
            candidate.insert(0, '#');
        }
        let name: Name = Arc::from(candidate);
        self.chosen.insert(base, name.clone());
        name
    }
}

fn fo_name(h: &str, m: usize) -> String {
    format!("{h}_{m}")
}

fn hat_with(
    t: &Expr,
    variant: Variant,
    namer: &mut Namer<'_>,
    ctors: &mut BTreeMap<Name, usize>,
) -> Expr {
    match t {
        Expr::Var(_) => t.clone(),
        Expr::Bottom => {
            let bot = namer.get("bot".into());
            ctors.insert(bot.clone(), 0);
            Expr::Sym(bot)
        }
        _ => {
            let (head, args) = t.spine();
            let args: Vec<Expr> = args
                .into_iter()
                .map(|a| hat_with(a, variant, namer, ctors))
                .collect();
            let head = match (variant, head) {
                (Variant::FO, Expr::Sym(h)) => {
                    let name = namer.get(fo_name(h, args.len()));
                    ctors.insert(name.clone(), args.len());
                    Expr::Sym(name)
                }
                _ => head.clone(),
            };
            Expr::apply_all(head, args)
        }
    }
}

/// `t̂`: a total pattern standing for the partial pattern `t`.
pub fn hat(t: &Expr, variant: Variant) -> Expr {
    let avoid = BTreeSet::new();
    let mut namer = Namer {
        avoid: &avoid,
        chosen: BTreeMap::new(),
    };
    hat_with(t, variant, &mut namer, &mut BTreeMap::new())
}

/// The generated rules for one target pattern.
#[derive(Clone, Debug, Serialize)]
pub struct Distinguisher {
    pub target: Pattern,
    pub hat: Expr,
    /// `g_t`, the function to wrap around expressions.
    pub entry: Name,
    pub rules: Vec<ProgramRule>,
    /// Fresh unary functions, one per distinct subpattern.
    pub functions: Vec<Name>,
    /// Fresh constructors (`bot`, and `h_m` in the FO variant) with arities.
    pub constructors: Vec<(Name, usize)>,
    pub variant: Variant,
}

impl Distinguisher {
    /// `g_t [ ]`.
    pub fn context(&self) -> Context {
        Context::apply_right(Expr::Sym(self.entry.clone()), Context::Hole)
    }

    /// The rules as a program over `base`'s signature plus the fresh symbols.
    pub fn extension(&self, base: &Program) -> Result<Program> {
        let mut sig = base.signature().clone();
        for f in &self.functions {
            sig.declare(f, SymbolKind::Function, 1)?;
        }
        for (c, ar) in &self.constructors {
            sig.declare(c, SymbolKind::Constructor, *ar)?;
        }
        Program::new(sig, self.rules.clone(), ProgramFlags::default())
    }

    /// The extension in program file syntax.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for (c, ar) in &self.constructors {
            out.push_str(&format!("constructor {c}/{ar}\n"));
        }
        for f in &self.functions {
            out.push_str(&format!("function {f}/1\n"));
        }
        for r in &self.rules {
            out.push_str(&format!("{r}\n"));
        }
        out
    }
}

/// Turns a printed pattern into the identifier alphabet.
fn mangle(s: &Expr) -> String {
    let text = s.to_string().replace(BOTTOM_TEXT, "bot");
    let body: String = text
        .chars()
        .map(|c| match c {
            ' ' => '_',
            '(' => '{',
            ')' => '}',
            c => c,
        })
        .collect();
    if matches!(s, Expr::App(..)) {
        format!("g_{{{body}}}")
    } else {
        format!("g_{body}")
    }
}

/// Builds the `g_s` rules for every distinct subpattern `s` of `t`:
///
/// * `g_X U -> U`
/// * `g_⊥ X -> bot`
/// * `g_(h t1 .. tm) (h X1 .. Xm) -> h (g_t1 X1) .. (g_tm Xm)`, with `h_m` as
///   the right-hand head in the FO variant.
///
/// Generated names avoid `avoid`, prefixing `#` on collision.
pub fn gen_distinguisher(t: &Pattern, variant: Variant, avoid: &BTreeSet<Name>) -> Distinguisher {
    let mut namer = Namer {
        avoid,
        chosen: BTreeMap::new(),
    };
    let mut ctors = BTreeMap::new();
    let hat_t = hat_with(t, variant, &mut namer, &mut ctors);

    let mut order: Vec<Expr> = Vec::new();
    fn collect(s: &Expr, order: &mut Vec<Expr>) {
        if order.contains(s) {
            return;
        }
        order.push(s.clone());
        for a in s.spine().1 {
            collect(a, order);
        }
    }
    collect(t, &mut order);
    let names: BTreeMap<Expr, Name> = order
        .iter()
        .map(|s| (s.clone(), namer.get(mangle(s))))
        .collect();

    let var = |s: &str| Expr::var(s);
    let rules: Vec<ProgramRule> = order
        .iter()
        .map(|s| {
            let g = names[s].clone();
            match s {
                Expr::Var(_) => ProgramRule {
                    function: g,
                    params: vec![var("U")],
                    rhs: var("U"),
                },
                Expr::Bottom => ProgramRule {
                    function: g,
                    params: vec![var("X")],
                    rhs: Expr::Sym(namer.get("bot".into())),
                },
                _ => {
                    let (head, args) = s.spine();
                    let xs: Vec<Expr> = (1..=args.len()).map(|i| var(&format!("X{i}"))).collect();
                    let param = Expr::apply_all(head.clone(), xs.iter().cloned());
                    let rhs_head = match (variant, head) {
                        (Variant::FO, Expr::Sym(h)) => Expr::Sym(namer.get(fo_name(h, args.len()))),
                        _ => head.clone(),
                    };
                    let rhs_args = args
                        .iter()
                        .zip(&xs)
                        .map(|(a, x)| Expr::app(Expr::Sym(names[*a].clone()), x.clone()));
                    ProgramRule {
                        function: g,
                        params: vec![param],
                        rhs: Expr::apply_all(rhs_head, rhs_args),
                    }
                }
            }
        })
        .collect();

    Distinguisher {
        target: t.clone(),
        hat: hat_t,
        entry: names[t.expr()].clone(),
        functions: order.iter().map(|s| names[s].clone()).collect(),
        constructors: ctors.into_iter().collect(),
        rules,
        variant,
    }
}

/// A constructive separation of two expressions by the context `g_t [ ]`.
#[derive(Clone, Debug, Serialize)]
pub struct DistinguishReport {
    /// In the denotation of exactly one side.
    pub witness: Pattern,
    /// Whether the witness belongs to the left expression.
    pub in_left: bool,
    pub distinguisher: Distinguisher,
    pub context: Context,
    /// Observations of `g_t e` and `g_t e'` over the extended program.
    pub left: Observation,
    pub right: Observation,
    /// `hat(t)` is observed on the witness side and provably absent on the
    /// other.
    pub verified: bool,
    pub extension_source: String,
}

/// Finds `t` in one denotation but not the other (total elements first,
/// then smallest, then the left side), then builds and checks the distinguishing extension.
pub fn distinguish(
    p: &Program,
    e: &Expr,
    e2: &Expr,
    budget: SearchBudget,
    variant: Variant,
) -> Result<Option<DistinguishReport>> {
    let mut calc = Calculus::new(p, budget);
    let d1 = calc.denote(e);
    let d2 = calc.denote(e2);

    let mut candidates: Vec<(Pattern, bool)> = Vec::new();
    if d2.complete_at_bound() {
        candidates.extend(
            d1.elements()
                .into_iter()
                .filter(|t| !d2.contains(t))
                .map(|t| (t, true)),
        );
    }
    if d1.complete_at_bound() {
        candidates.extend(
            d2.elements()
                .into_iter()
                .filter(|t| !d1.contains(t))
                .map(|t| (t, false)),
        );
    }
    candidates.sort_by(|(a, la), (b, lb)| {
        (!a.is_total(), a.size(), !la, a.expr()).cmp(&(!b.is_total(), b.size(), !lb, b.expr()))
    });
    let Some((witness, in_left)) = candidates.into_iter().next() else {
        return Ok(None);
    };

    let mut avoid: BTreeSet<Name> = p.signature().names().cloned().collect();
    avoid.extend(e.vars());
    avoid.extend(e2.vars());
    let dist = gen_distinguisher(&witness, variant, &avoid);
    let ext = dist.extension(p)?;
    let protected = [e.clone(), e2.clone()];
    let se =
        safe_extend(p, &ext, &protected).map_err(|err| Error::UnsafeExtension(err.to_string()))?;

    let wide = SearchBudget {
        max_or_depth: budget.max_or_depth + witness.height() as u32 + 2,
        ..budget
    };
    let kind = match variant {
        Variant::HO => ObservationKind::HO,
        Variant::FO => ObservationKind::FO,
    };
    let ctx = dist.context();
    let left = observe(&se.merged, &ctx.fill(e), kind, wide);
    let right = observe(&se.merged, &ctx.fill(e2), kind, wide);
    let (with, without) = if in_left {
        (&left, &right)
    } else {
        (&right, &left)
    };
    let verified = with.contains(&dist.hat) && without.exhausted && !without.contains(&dist.hat);

    Ok(Some(DistinguishReport {
        witness,
        in_left,
        extension_source: dist.to_source(),
        context: ctx,
        distinguisher: dist,
        left,
        right,
        verified,
    }))
}

/// Both sides of `t ∈ ⟦e⟧ ⟺ hat(t) ∈ ⟦g_t e⟧` for one triple.
#[derive(Clone, Debug, Serialize)]
pub struct RoundTrip {
    pub target: Pattern,
    pub hat: Expr,
    pub in_denotation: bool,
    pub hat_in_wrapped: bool,
    /// Each side is either positive or computed without hitting a bound.
    pub conclusive: bool,
    /// `hat(t)` is a first-order pattern over the extended signature.
    pub hat_is_fo: bool,
}

impl RoundTrip {
    pub fn holds(&self) -> bool {
        !self.conclusive || self.in_denotation == self.hat_in_wrapped
    }
}

/// Evaluates both sides of the distinguisher equivalence for `t` and `e`
/// over `p` extended with the rules for `g_t`.
pub fn distinguisher_round_trip(
    p: &Program,
    e: &Expr,
    t: &Pattern,
    variant: Variant,
    budget: SearchBudget,
) -> Result<RoundTrip> {
    let mut avoid: BTreeSet<Name> = p.signature().names().cloned().collect();
    avoid.extend(e.vars());
    let dist = gen_distinguisher(t, variant, &avoid);
    let ext = dist.extension(p)?;
    let se = safe_extend(p, &ext, std::slice::from_ref(e))
        .map_err(|err| Error::UnsafeExtension(err.to_string()))?;
    let d = Calculus::new(p, budget).denote(e);
    let wide = SearchBudget {
        max_or_depth: budget.max_or_depth + t.height() as u32 + 2,
        ..budget
    };
    let wrapped = Calculus::new(&se.merged, wide).denote(&dist.context().fill(e));
    let in_denotation = d.contains(t);
    let hat_in_wrapped = wrapped.contains(&dist.hat);
    let hat_is_fo = crate::syntax::is_fo_pattern(&dist.hat, se.merged.signature())?;
    Ok(RoundTrip {
        target: t.clone(),
        hat: dist.hat,
        in_denotation,
        hat_in_wrapped,
        conclusive: (in_denotation || d.complete_at_bound())
            && (hat_in_wrapped || wrapped.complete_at_bound()),
        hat_is_fo,
    })
}

/// Sorted display copy of a pattern list.
pub fn sorted(mut v: Vec<Pattern>) -> Vec<Pattern> {
    sort_for_display(&mut v);
    v
}
