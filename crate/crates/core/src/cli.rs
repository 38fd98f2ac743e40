//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{
    check_compositionality, ext_equiv, observe, oracle_compare, ExtBound, ExtVerdict, Observation,
    ObservationKind, OracleOutcome,
};
use crate::calculus::{derive, Calculus, SearchBudget};
use crate::corpus::{corpus, CorpusConfig, CorpusEntry, Generator};
use crate::error::{Error, Result};
use crate::letrw::{random_trace, RewriteLimits};
use crate::parser::{
    parse_expr, parse_expr_with, parse_extension, parse_programs, ExprOptions, PRELUDE,
};
use crate::syntax::{Pattern, Program, ProgramFlags};
use crate::transforms::{
    distinguish, distinguisher_round_trip, safe_extend, safe_extension_invariance_check, Variant,
};

pub const PRELUDE_ENV: &str = "HOCRWL_PRELUDE";

#[derive(Parser, Debug)]
#[command(
    name = "hocrwl",
    version,
    about = "Semantics workbench for higher-order CRWL programs"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Program file; may be repeated, files are concatenated.
    #[arg(short, long = "program", global = true)]
    pub program: Vec<PathBuf>,
    /// Include the prelude defining `plus` (or the file named by HOCRWL_PRELUDE).
    #[arg(long, global = true)]
    pub prelude: bool,
    /// Allow variables on right-hand sides that do not occur on the left.
    #[arg(long, global = true)]
    pub extra_variables: bool,
    /// Require first-order rule parameters.
    #[arg(long, global = true)]
    pub left_fo: bool,
    /// Maximal OR-rule depth of derivations.
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub depth: u32,
    /// Atom cap for patterns enumerated for extra variables.
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub pattern_size: u64,
    /// Step bound for let-rewriting.
    #[arg(long, global = true, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, global = true)]
    pub json: bool,
    /// Print a derivation for this element (denote only).
    #[arg(long, global = true, value_name = "PATTERN")]
    pub emit_proof: Option<String>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derivable partial patterns of an expression.
    Denote { expr: String },
    /// Total values of an expression.
    Observe {
        expr: String,
        /// Keep first-order values only.
        #[arg(long)]
        fo: bool,
    },
    /// Compare denotations under all argument tuples of length N.
    ExtEquiv {
        left: String,
        right: String,
        n: usize,
        /// Atom cap for each argument.
        #[arg(long, default_value_t = 2)]
        arg_size: usize,
    },
    /// Build an extension and a context separating two expressions.
    Distinguish {
        left: String,
        right: String,
        /// Use first-order observations and constructors.
        #[arg(long)]
        fo: bool,
    },
    /// Run a property suite over the program or a generated corpus.
    Check {
        suite: Suite,
        /// Number of generated programs when no program is given.
        #[arg(long, default_value_t = 50)]
        programs: usize,
        /// Generated expressions per program.
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Extension file for the safe-ext suite.
        #[arg(long)]
        extension: Option<PathBuf>,
        /// Expression to check; may be repeated, replaces generated ones.
        #[arg(long = "expr")]
        exprs: Vec<String>,
    },
    /// A random let-rewriting derivation.
    Trace { expr: String },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Compositionality,
    Oracle,
    SafeExt,
    Hat,
}

impl RunConfig {
    pub fn flags(&self) -> ProgramFlags {
        ProgramFlags {
            extra_variables_allowed: self.extra_variables,
            left_fo_required: self.left_fo,
        }
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_or_depth: self.depth,
            max_pattern_size: self.pattern_size as usize,
            ..SearchBudget::default()
        }
    }

    pub fn limits(&self) -> RewriteLimits {
        RewriteLimits {
            max_steps: self.steps as usize,
            ..RewriteLimits::default()
        }
    }

    fn has_program(&self) -> bool {
        self.prelude || !self.program.is_empty()
    }

    pub fn load(&self) -> Result<Program> {
        let mut sources = Vec::new();
        if self.prelude {
            sources.push(match std::env::var_os(PRELUDE_ENV) {
                Some(path) => read(&PathBuf::from(path))?,
                None => PRELUDE.to_string(),
            });
        }
        for path in &self.program {
            sources.push(read(path)?);
        }
        let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
        parse_programs(&refs, self.flags())
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// What a command produced: text, a JSON document and the exit code.
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome {
            text,
            json,
            code: 0,
        }
    }
}

/// Runs one command, writing its output to `out`, and returns the exit code.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> std::io::Result<i32> {
    match execute(cli) {
        Ok(o) => {
            if cli.config.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&o.json)?)?;
            } else {
                write!(out, "{}", o.text)?;
            }
            Ok(o.code)
        }
        Err(e) => {
            if cli.config.json {
                let doc = json!({ "error": e.to_string() });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                writeln!(out, "error: {e}")?;
            }
            Ok(2)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = &cli.config;
    match &cli.command {
        Command::Denote { expr } => cmd_denote(cfg, expr),
        Command::Observe { expr, fo } => cmd_observe(cfg, expr, *fo),
        Command::ExtEquiv {
            left,
            right,
            n,
            arg_size,
        } => cmd_ext_equiv(cfg, left, right, *n, *arg_size),
        Command::Distinguish { left, right, fo } => cmd_distinguish(cfg, left, right, *fo),
        Command::Check {
            suite,
            programs,
            cases,
            extension,
            exprs,
        } => cmd_check(cfg, *suite, *programs, *cases, extension.as_ref(), exprs),
        Command::Trace { expr } => cmd_trace(cfg, expr),
    }
}

fn strings<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(ToString::to_string).collect()
}

pub fn cmd_denote(cfg: &RunConfig, expr: &str) -> Result<Outcome> {
    let p = cfg.load()?;
    let e = parse_expr(expr, p.signature())?;
    let d = Calculus::new(&p, cfg.budget()).denote(&e);
    let elements = strings(&d.elements());
    let mut text = format!(
        "{}\nbound: {}\ncomplete_at_bound: {}\n",
        elements.join(", "),
        d.bound(),
        d.complete_at_bound()
    );
    if d.is_truncated() {
        text.push_str("truncated: result limit reached\n");
    }
    let mut doc = json!({
        "expr": e.to_string(),
        "elements": elements,
        "maximal": strings(d.maximal()),
        "bound": d.bound(),
        "complete_at_bound": d.complete_at_bound(),
        "truncated": d.is_truncated(),
    });
    if let Some(t) = &cfg.emit_proof {
        let t = parse_expr_with(t, p.signature(), ExprOptions { allow_bottom: true })?;
        let Some(proof) = derive(&p, &e, &t, cfg.budget())? else {
            return Err(Error::NotDerivable {
                expr: e.to_string(),
                value: t.to_string(),
            });
        };
        text.push_str(&format!("proof of {e} -> {t}:\n{proof}"));
        doc["proof"] = serde_json::to_value(&proof).expect("proof trees serialize");
    }
    Ok(Outcome::ok(text, doc))
}

pub fn cmd_observe(cfg: &RunConfig, expr: &str, fo: bool) -> Result<Outcome> {
    let p = cfg.load()?;
    let e = parse_expr(expr, p.signature())?;
    let kind = if fo {
        ObservationKind::FO
    } else {
        ObservationKind::HO
    };
    let o = observe(&p, &e, kind, cfg.budget());
    let mut text = format!("{o}\n");
    if !o.exhausted {
        text.push_str("incomplete: bound reached\n");
    }
    let doc = json!({
        "expr": e.to_string(),
        "kind": if fo { "FO" } else { "HO" },
        "values": strings(&o.values),
        "exhausted": o.exhausted,
    });
    Ok(Outcome::ok(text, doc))
}

pub fn cmd_ext_equiv(
    cfg: &RunConfig,
    left: &str,
    right: &str,
    n: usize,
    arg_size: usize,
) -> Result<Outcome> {
    let p = cfg.load()?;
    let e = parse_expr(left, p.signature())?;
    let e2 = parse_expr(right, p.signature())?;
    let bound = ExtBound {
        budget: cfg.budget(),
        max_arg_size: arg_size,
        ..ExtBound::default()
    };
    let v = ext_equiv(&p, &e, &e2, n, bound);
    let mut text = format!("{v}\n");
    match &v {
        ExtVerdict::EquivalentAtBound {
            tuples,
            inconclusive,
            grid_truncated,
        } => {
            text.push_str(&format!(
                "bounded result, not a proof: {tuples} argument tuples, {inconclusive} inconclusive{}\n",
                if *grid_truncated { ", tuple grid truncated" } else { "" }
            ));
        }
        ExtVerdict::Distinguished { value, in_left, .. } => {
            let side = if *in_left { "left" } else { "right" };
            text.push_str(&format!("{value} is derivable for the {side} side only\n"));
        }
    }
    let doc = serde_json::to_value(&v).expect("verdicts serialize");
    Ok(Outcome::ok(text, doc))
}

pub fn cmd_distinguish(cfg: &RunConfig, left: &str, right: &str, fo: bool) -> Result<Outcome> {
    let p = cfg.load()?;
    let e = parse_expr(left, p.signature())?;
    let e2 = parse_expr(right, p.signature())?;
    let variant = if fo { Variant::FO } else { Variant::HO };
    let Some(r) = distinguish(&p, &e, &e2, cfg.budget(), variant)? else {
        let doc = json!({ "found": false });
        return Ok(Outcome::ok("no difference found at bound\n".into(), doc));
    };
    let side = if r.in_left { "left" } else { "right" };
    let text = format!(
        "witness: {} ({side} only)\ncontext: {}\nobserved left: {}\nobserved right: {}\nverified: {}\nextension:\n{}",
        r.witness,
        r.context,
        listing(&r.left),
        listing(&r.right),
        r.verified,
        r.extension_source
    );
    let doc = json!({
        "found": true,
        "witness": r.witness.to_string(),
        "in_left": r.in_left,
        "context": r.context.to_string(),
        "hat": r.distinguisher.hat.to_string(),
        "left": strings(&r.left.values),
        "right": strings(&r.right.values),
        "verified": r.verified,
        "extension": r.extension_source,
    });
    let code = if r.verified { 0 } else { 1 };
    Ok(Outcome {
        text,
        json: doc,
        code,
    })
}

fn listing(o: &Observation) -> String {
    if o.values.is_empty() {
        "(none)".into()
    } else {
        o.to_string()
    }
}

pub fn cmd_trace(cfg: &RunConfig, expr: &str) -> Result<Outcome> {
    let p = cfg.load()?;
    let e = parse_expr(expr, p.signature())?;
    let t = random_trace(&p, &e, cfg.seed, cfg.steps as usize)?;
    let doc = serde_json::to_value(&t).expect("traces serialize");
    Ok(Outcome::ok(t.to_string(), doc))
}

/// Tally of a property suite.
#[derive(Default)]
struct Tally {
    passed: usize,
    inconclusive: usize,
    failures: Vec<String>,
}

impl Tally {
    fn outcome(self, suite: Suite, expected: bool) -> Outcome {
        let failed = self.failures.len();
        let status = match (failed, expected) {
            (0, _) => "pass",
            (_, true) => "violation (expected: extra variables)",
            _ => "FAIL",
        };
        let mut text = format!(
            "{suite:?}: {status}: {} passed, {failed} failed, {} inconclusive\n",
            self.passed, self.inconclusive
        );
        for f in self.failures.iter().take(10) {
            text.push_str(&format!("  {f}\n"));
        }
        let doc = json!({
            "suite": format!("{suite:?}"),
            "status": status,
            "passed": self.passed,
            "failed": failed,
            "inconclusive": self.inconclusive,
            "failures": self.failures,
        });
        Outcome {
            text,
            json: doc,
            code: if failed == 0 || expected { 0 } else { 1 },
        }
    }
}

fn check_entries(
    cfg: &RunConfig,
    programs: usize,
    cases: usize,
    exprs: &[String],
) -> Result<Vec<CorpusEntry>> {
    if !cfg.has_program() {
        let corpus_cfg = CorpusConfig {
            programs,
            exprs_per_program: cases,
            ..CorpusConfig::default()
        };
        return Ok(corpus(cfg.seed, &corpus_cfg));
    }
    let program = cfg.load()?;
    let exprs = if exprs.is_empty() {
        let mut g = Generator::new(cfg.seed);
        (0..cases)
            .map(|_| g.query(program.signature(), CorpusConfig::default().max_expr_size))
            .collect()
    } else {
        exprs
            .iter()
            .map(|s| parse_expr(s, program.signature()))
            .collect::<Result<_>>()?
    };
    Ok(vec![CorpusEntry { program, exprs }])
}

pub fn cmd_check(
    cfg: &RunConfig,
    suite: Suite,
    programs: usize,
    cases: usize,
    extension: Option<&PathBuf>,
    exprs: &[String],
) -> Result<Outcome> {
    let entries = check_entries(cfg, programs, cases, exprs)?;
    let budget = cfg.budget();
    let mut g = Generator::new(cfg.seed.wrapping_add(1));
    let mut tally = Tally::default();
    let extra = entries.iter().any(|en| en.program.has_extra_variables());
    match suite {
        Suite::Compositionality => {
            for en in &entries {
                for e in &en.exprs {
                    let c = g.context(en.program.signature(), 3);
                    let r = check_compositionality(&en.program, e, &c, budget);
                    if r.verdict.holds() {
                        tally.passed += 1;
                    } else {
                        tally
                            .failures
                            .push(format!("C = {c}, e = {e}: {:?}", r.verdict));
                    }
                }
            }
        }
        Suite::Oracle => {
            if extra {
                let text =
                    "Oracle: skipped (expected: let-rewriting is undefined with extra variables)\n";
                let doc =
                    json!({ "suite": "Oracle", "status": "skipped", "reason": "extra variables" });
                return Ok(Outcome::ok(text.into(), doc));
            }
            for en in &entries {
                for e in &en.exprs {
                    match oracle_compare(&en.program, e, budget, cfg.limits())? {
                        OracleOutcome::Agree { .. } => tally.passed += 1,
                        OracleOutcome::Inconclusive => tally.inconclusive += 1,
                        OracleOutcome::Mismatch {
                            calculus,
                            rewriting,
                        } => tally.failures.push(format!(
                            "e = {e}: calculus [{}], rewriting [{}]",
                            strings(&calculus).join(", "),
                            strings(&rewriting).join(", ")
                        )),
                    }
                }
            }
        }
        Suite::SafeExt => {
            for en in &entries {
                let exts = match extension {
                    Some(path) => vec![parse_extension(&read(path)?, &en.program, cfg.flags())?],
                    None => {
                        let n = if cfg.has_program() { cases } else { 1 };
                        (0..n)
                            .map(|_| g.extension(&en.program, &CorpusConfig::default()))
                            .collect()
                    }
                };
                for ext in &exts {
                    let se = match safe_extend(&en.program, ext, &en.exprs) {
                        Ok(se) => se,
                        Err(err) => {
                            tally.failures.push(format!("extension rejected: {err}"));
                            continue;
                        }
                    };
                    for e in &en.exprs {
                        let r = safe_extension_invariance_check(&se, e, budget);
                        if r.equal() {
                            tally.passed += 1;
                        } else if !r.conclusive() && !se.merged.has_extra_variables() {
                            tally.inconclusive += 1;
                        } else {
                            tally.failures.push(format!(
                                "e = {e}: gained [{}], lost [{}]",
                                strings(&r.gained).join(", "),
                                strings(&r.lost).join(", ")
                            ));
                        }
                    }
                }
            }
        }
        Suite::Hat => {
            for en in &entries {
                let sig = en.program.signature();
                for e in &en.exprs {
                    let d = Calculus::new(&en.program, budget).denote(e);
                    let mut targets: Vec<Pattern> = d.maximal().to_vec();
                    let t = g.pattern(sig, 3);
                    targets.push(Pattern::new(t, sig)?);
                    for t in &targets {
                        for v in [Variant::HO, Variant::FO] {
                            let r = distinguisher_round_trip(&en.program, e, t, v, budget)?;
                            if !r.conclusive {
                                tally.inconclusive += 1;
                            } else if r.holds() && (v == Variant::HO || r.hat_is_fo) {
                                tally.passed += 1;
                            } else {
                                tally
                                    .failures
                                    .push(format!("e = {e}, t = {t}, {v:?}: {r:?}"));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(tally.outcome(suite, extra && suite == Suite::SafeExt))
}
