use std::fmt;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::syntax::{pattern_shape, Expr, PSubstitution, Program, ProgramRule, SymbolKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ProofRule {
    B,
    RR,
    DC,
    OR,
}

impl fmt::Display for ProofRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The program rule and pattern substitution used by an OR node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: ProgramRule,
    pub theta: PSubstitution,
}

/// A derivation of `expr ⇝ value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub expr: Expr,
    pub value: Expr,
    pub rule: ProofRule,
    pub premises: Vec<ProofTree>,
    pub instance: Option<RuleInstance>,
}

impl ProofTree {
    pub fn leaf(expr: Expr, value: Expr, rule: ProofRule) -> Self {
        ProofTree {
            expr,
            value,
            rule,
            premises: Vec::new(),
            instance: None,
        }
    }

    pub fn depth(&self) -> usize {
        1 + self
            .premises
            .iter()
            .map(ProofTree::depth)
            .max()
            .unwrap_or(0)
    }

    /// OR nodes on the longest branch.
    pub fn or_depth(&self) -> usize {
        let below = self
            .premises
            .iter()
            .map(ProofTree::or_depth)
            .max()
            .unwrap_or(0);
        below + usize::from(self.rule == ProofRule::OR)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }

    fn render(&self, indent: usize, out: &mut String) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&format!("[{}] {} ~> {}", self.rule, self.expr, self.value));
        if let Some(inst) = &self.instance {
            out.push_str(&format!("   by {} with {:?}", inst.rule, inst.theta));
        }
        out.push('\n');
        for p in &self.premises {
            p.render(indent + 1, out);
        }
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

#[derive(Serialize)]
struct Conclusion<'a> {
    expr: &'a Expr,
    value: &'a Expr,
}

impl Serialize for ProofTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ProofTree", 5)?;
        st.serialize_field("rule", &self.rule)?;
        st.serialize_field(
            "conclusion",
            &Conclusion {
                expr: &self.expr,
                value: &self.value,
            },
        )?;
        st.serialize_field("program_rule", &self.instance.as_ref().map(|i| &i.rule))?;
        st.serialize_field("theta", &self.instance.as_ref().map(|i| &i.theta))?;
        st.serialize_field("premises", &self.premises)?;
        st.end()
    }
}

/// Where and why a proof tree fails to check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofError {
    /// Premise indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for ProofError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(f, "at node [{}]: {}", path.join("."), self.reason)
    }
}

impl std::error::Error for ProofError {}

/// Checks every node of a proof tree against its rule's side conditions.
pub struct ProofChecker<'p> {
    program: &'p Program,
    extra_variables: bool,
}

impl<'p> ProofChecker<'p> {
    pub fn new(program: &'p Program) -> Self {
        ProofChecker {
            program,
            extra_variables: program.flags().extra_variables_allowed,
        }
    }

    /// Whether OR nodes may bind variables that do not occur in the rule's
    /// parameters.
    pub fn extra_variables(mut self, allowed: bool) -> Self {
        self.extra_variables = allowed;
        self
    }

    pub fn check(&self, tree: &ProofTree) -> Result<(), ProofError> {
        let mut path = Vec::new();
        self.node(tree, &mut path)
    }

    fn node(&self, t: &ProofTree, path: &mut Vec<usize>) -> Result<(), ProofError> {
        let fail = |path: &Vec<usize>, reason: String| {
            Err(ProofError {
                path: path.clone(),
                reason,
            })
        };
        let sig = self.program.signature();

        if !pattern_shape(&t.value, sig) {
            return fail(path, format!("`{}` is not a partial pattern", t.value));
        }
        if t.rule != ProofRule::OR && t.instance.is_some() {
            return fail(path, format!("{} node carries a rule instance", t.rule));
        }

        match t.rule {
            ProofRule::B => {
                if !t.value.is_bottom() {
                    return fail(path, "B must conclude `_|_`".into());
                }
                if !t.premises.is_empty() {
                    return fail(path, "B has no premises".into());
                }
            }
            ProofRule::RR => {
                if t.expr.as_var().is_none() || t.expr != t.value {
                    return fail(path, "RR concludes `X ~> X` for a variable X".into());
                }
                if !t.premises.is_empty() {
                    return fail(path, "RR has no premises".into());
                }
            }
            ProofRule::DC => {
                let (head, args) = t.expr.spine();
                let (v_head, v_args) = t.value.spine();
                let head_ok = match head {
                    Expr::Sym(h) => sig.contains(h),
                    Expr::Bottom => args.is_empty(),
                    _ => false,
                };
                if !head_ok {
                    return fail(path, format!("DC head `{head}` is not a signature symbol"));
                }
                if v_head != head || v_args.len() != args.len() {
                    return fail(
                        path,
                        "DC conclusion must keep the head and argument count".into(),
                    );
                }
                if t.premises.len() != args.len() {
                    return fail(
                        path,
                        format!(
                            "DC needs {} premises, found {}",
                            args.len(),
                            t.premises.len()
                        ),
                    );
                }
                for (i, ((p, a), v)) in t.premises.iter().zip(&args).zip(&v_args).enumerate() {
                    if &p.expr != *a || &p.value != *v {
                        return fail(path, format!("premise {i} must conclude `{a} ~> {v}`"));
                    }
                }
            }
            ProofRule::OR => {
                let Some(inst) = &t.instance else {
                    return fail(path, "OR node without a rule instance".into());
                };
                if !self.program.rules().iter().any(|r| r.alpha_eq(&inst.rule)) {
                    return fail(path, format!("`{}` is not a program rule", inst.rule));
                }
                let (head, args) = t.expr.spine();
                let n = inst.rule.params.len();
                match head {
                    Expr::Sym(f) if *f == inst.rule.function => {}
                    _ => return fail(path, format!("OR head must be `{}`", inst.rule.function)),
                }
                if !matches!(sig.get(&inst.rule.function), Some(i) if i.kind == SymbolKind::Function)
                {
                    return fail(path, "OR head is not a function symbol".into());
                }
                if args.len() < n {
                    return fail(path, format!("OR needs at least {n} arguments"));
                }
                for (x, v) in inst.theta.iter() {
                    if !pattern_shape(v, sig) {
                        return fail(path, format!("theta({x}) = `{v}` is not a partial pattern"));
                    }
                }
                let params = inst.rule.param_vars();
                let rule_vars: std::collections::BTreeSet<_> =
                    params.iter().cloned().chain(inst.rule.rhs.vars()).collect();
                for x in inst.theta.domain() {
                    if !rule_vars.contains(x) {
                        return fail(
                            path,
                            format!("theta binds `{x}`, which is not a rule variable"),
                        );
                    }
                    if !self.extra_variables && !params.contains(x) {
                        return fail(path, format!("theta binds extra variable `{x}`"));
                    }
                }
                if t.premises.len() != n + 1 {
                    return fail(
                        path,
                        format!("OR needs {} premises, found {}", n + 1, t.premises.len()),
                    );
                }
                for (i, (p, a)) in inst.rule.params.iter().zip(&args[..n]).enumerate() {
                    let want = p.substitute(&inst.theta);
                    let prem = &t.premises[i];
                    if &prem.expr != *a || prem.value != want {
                        return fail(path, format!("premise {i} must conclude `{a} ~> {want}`"));
                    }
                }
                let body = Expr::apply_all(
                    inst.rule.rhs.substitute(&inst.theta),
                    args[n..].iter().map(|a| (*a).clone()),
                );
                let last = &t.premises[n];
                if last.expr != body || last.value != t.value {
                    return fail(
                        path,
                        format!("last premise must conclude `{body} ~> {}`", t.value),
                    );
                }
            }
        }

        for (i, p) in t.premises.iter().enumerate() {
            path.push(i);
            self.node(p, path)?;
            path.pop();
        }
        Ok(())
    }
}

/// `true` iff every node of `tree` instantiates its rule correctly for `p`.
pub fn check_proof(p: &Program, tree: &ProofTree) -> bool {
    ProofChecker::new(p).check(tree).is_ok()
}
