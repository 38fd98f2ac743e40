//! Surface syntax: curried application, `+` as sugar for `plus`, `--`
//! comments, one rule per line and optional `constructor c/n` /
//! `function f/n` header lines.

use std::collections::BTreeMap;

use crate::error::{ParseError, Result};
use crate::syntax::{
    Context, Expr, Name, Program, ProgramFlags, ProgramRule, Signature, SymbolKind, HOLE_TEXT,
};

/// The symbol `+` desugars to.
pub const PLUS: &str = "plus";

/// Standard definition of `plus` over `0` and `s`.
pub const PRELUDE: &str = include_str!("../programs/prelude.crwl");

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    Arrow,
    Plus,
    Slash,
    Bottom,
    Hole,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '{' | '}' | '#')
}

fn lex_line(text: &str, line: usize) -> std::result::Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let mut push = |tok| out.push(Token { tok, line, column });
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => break,
            '-' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Arrow);
                i += 2;
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
            }
            '/' => {
                push(Tok::Slash);
                i += 1;
            }
            '⊥' => {
                push(Tok::Bottom);
                i += 1;
            }
            '_' if chars[i..].starts_with(&['_', '|', '_']) => {
                push(Tok::Bottom);
                i += 3;
            }
            '[' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] == ' ' {
                    j += 1;
                }
                if chars.get(j) != Some(&']') {
                    return Err(err(line, column, "expected `]` closing a hole"));
                }
                push(Tok::Hole);
                i = j + 1;
            }
            c if c.is_ascii_uppercase() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '\''))
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Var(word),
                    line,
                    column,
                });
            }
            c if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '#' => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    line,
                    column,
                });
            }
            other => return Err(err(line, column, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// Options for [`parse_expr_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExprOptions {
    /// Accept `_|_` in the input (testing only; programs never allow it).
    pub allow_bottom: bool,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    sig: Option<&'a Signature>,
    allow_bottom: bool,
    allow_hole: bool,
    holes: usize,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token], end: (usize, usize)) -> Self {
        Parser {
            toks,
            pos: 0,
            sig: None,
            allow_bottom: false,
            allow_hole: false,
            holes: 0,
            end,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.app()?;
        while matches!(self.peek(), Some(Token { tok: Tok::Plus, .. })) {
            let (line, col) = self.here();
            self.pos += 1;
            let rhs = self.app()?;
            if let Some(sig) = self.sig {
                if !sig.contains(PLUS) {
                    return Err(err(
                        line,
                        col,
                        format!("`+` needs a declared `{PLUS}` (try the prelude)"),
                    ));
                }
            }
            lhs = Expr::apply_all(Expr::sym(PLUS), [lhs, rhs]);
        }
        Ok(lhs)
    }

    fn app(&mut self) -> std::result::Result<Expr, ParseError> {
        let (line, col) = self.here();
        let mut e = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            e = Expr::app(e, a);
        }
        if let Some(sig) = self.sig {
            let (head, args) = e.spine();
            if let Expr::Sym(name) = head {
                if let Some(info) = sig.get(name) {
                    if info.kind == SymbolKind::Constructor && args.len() > info.arity {
                        return Err(err(
                            line,
                            col,
                            format!(
                                "constructor `{name}` has arity {} but is applied to {} arguments",
                                info.arity,
                                args.len()
                            ),
                        ));
                    }
                }
            }
        }
        Ok(e)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek().map(|t| &t.tok),
            Some(Tok::Ident(_) | Tok::Var(_) | Tok::LParen | Tok::Bottom | Tok::Hole)
        )
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        let Some(t) = self.peek().cloned() else {
            let (l, c) = self.end;
            return Err(err(l, c, "unexpected end of input"));
        };
        self.pos += 1;
        match t.tok {
            Tok::Ident(name) => {
                if let Some(sig) = self.sig {
                    if !sig.contains(&name) {
                        return Err(err(t.line, t.column, format!("undeclared symbol `{name}`")));
                    }
                }
                Ok(Expr::Sym(Name::from(name.as_str())))
            }
            Tok::Var(name) => Ok(Expr::Var(Name::from(name.as_str()))),
            Tok::Bottom if self.allow_bottom => Ok(Expr::Bottom),
            Tok::Bottom => Err(err(t.line, t.column, "`_|_` is not allowed here")),
            Tok::Hole if self.allow_hole => {
                self.holes += 1;
                Ok(Expr::Sym(Name::from(HOLE_TEXT)))
            }
            Tok::Hole => Err(err(
                t.line,
                t.column,
                "a hole `[ ]` is only allowed in contexts",
            )),
            Tok::LParen => {
                let e = self.expr()?;
                match self.peek() {
                    Some(Token {
                        tok: Tok::RParen, ..
                    }) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => {
                        let (l, c) = self.here();
                        Err(err(l, c, "expected `)`"))
                    }
                }
            }
            other => Err(err(
                t.line,
                t.column,
                format!("unexpected {}", describe(&other)),
            )),
        }
    }

    fn finish(&self) -> std::result::Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(err(
                t.line,
                t.column,
                format!("unexpected {}", describe(&t.tok)),
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Bottom => "`_|_`".into(),
        Tok::Hole => "`[ ]`".into(),
    }
}

fn end_of(text: &str, line: usize) -> (usize, usize) {
    (line, text.chars().count() + 1)
}

/// Parses an expression over `sig`; free variables are allowed.
pub fn parse_expr(src: &str, sig: &Signature) -> Result<Expr> {
    parse_expr_with(src, sig, ExprOptions::default())
}

pub fn parse_expr_with(src: &str, sig: &Signature, opts: ExprOptions) -> Result<Expr> {
    let (toks, end) = lex_all(src)?;
    let mut p = Parser::new(&toks, end);
    p.sig = Some(sig);
    p.allow_bottom = opts.allow_bottom;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a one-hole context such as `fdouble [ ] 0`.
pub fn parse_context(src: &str, sig: &Signature) -> Result<Context> {
    let (toks, end) = lex_all(src)?;
    let mut p = Parser::new(&toks, end);
    p.sig = Some(sig);
    p.allow_hole = true;
    let e = p.expr()?;
    p.finish()?;
    if p.holes != 1 {
        return Err(err(
            1,
            1,
            format!("a context needs exactly one hole, found {}", p.holes),
        )
        .into());
    }
    Ok(context_of(&e).expect("exactly one hole"))
}

fn context_of(e: &Expr) -> Option<Context> {
    match e {
        Expr::Sym(s) if s.as_ref() == HOLE_TEXT => Some(Context::Hole),
        Expr::App(f, a) => {
            if let Some(c) = context_of(f) {
                Some(Context::apply_left(c, (**a).clone()))
            } else {
                context_of(a).map(|c| Context::apply_right((**f).clone(), c))
            }
        }
        _ => None,
    }
}

fn lex_all(src: &str) -> std::result::Result<(Vec<Token>, (usize, usize)), ParseError> {
    let mut toks = Vec::new();
    let mut end = (1, 1);
    for (i, line) in src.lines().enumerate() {
        toks.extend(lex_line(line, i + 1)?);
        end = end_of(line, i + 1);
    }
    Ok((toks, end))
}

/// Renders an expression with minimal parentheses; inverse of [`parse_expr`].
pub fn print_expr(e: &Expr) -> String {
    e.to_string()
}

/// A program file before signature inference.
#[derive(Clone, Debug, Default)]
pub struct SourceProgram {
    pub declarations: Vec<Declaration>,
    pub rules: Vec<SourceRule>,
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub line: usize,
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

#[derive(Clone, Debug)]
pub struct SourceRule {
    pub line: usize,
    pub lhs: Expr,
    pub rhs: Expr,
}

/// Splits a program text into header declarations and rule lines.
pub fn parse_source(src: &str) -> Result<SourceProgram> {
    let mut out = SourceProgram::default();
    for (i, text) in src.lines().enumerate() {
        let line = i + 1;
        let toks = lex_line(text, line)?;
        if toks.is_empty() {
            continue;
        }
        if let Some(decl) = header_line(&toks)? {
            out.declarations.push(decl);
            continue;
        }
        let mut depth = 0i32;
        let mut arrows = Vec::new();
        for (k, t) in toks.iter().enumerate() {
            match t.tok {
                Tok::LParen => depth += 1,
                Tok::RParen => depth -= 1,
                Tok::Arrow if depth == 0 => arrows.push(k),
                _ => {}
            }
        }
        if arrows.len() != 1 {
            return Err(err(
                line,
                1,
                format!(
                    "a rule needs exactly one top-level `->`, found {}",
                    arrows.len()
                ),
            )
            .into());
        }
        let split = arrows[0];
        let lhs = parse_side(&toks[..split], (toks[split].line, toks[split].column))?;
        let rhs = parse_side(&toks[split + 1..], end_of(text, line))?;
        if !matches!(lhs.head(), Expr::Sym(_)) {
            return Err(err(
                line,
                toks[0].column,
                "the left side of a rule must start with a function symbol",
            )
            .into());
        }
        out.rules.push(SourceRule { line, lhs, rhs });
    }
    Ok(out)
}

fn parse_side(toks: &[Token], end: (usize, usize)) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser::new(toks, end);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

fn header_line(toks: &[Token]) -> std::result::Result<Option<Declaration>, ParseError> {
    let kind = match toks.first().map(|t| &t.tok) {
        Some(Tok::Ident(k)) if k == "constructor" => SymbolKind::Constructor,
        Some(Tok::Ident(k)) if k == "function" => SymbolKind::Function,
        _ => return Ok(None),
    };
    if toks.iter().any(|t| t.tok == Tok::Arrow) {
        return Ok(None);
    }
    let first = &toks[0];
    match toks {
        [_, Token {
            tok: Tok::Ident(name),
            ..
        }, Token {
            tok: Tok::Slash, ..
        }, Token {
            tok: Tok::Ident(n),
            line,
            column,
        }] => {
            let arity = n
                .parse::<usize>()
                .map_err(|_| err(*line, *column, format!("`{n}` is not an arity")))?;
            Ok(Some(Declaration {
                line: first.line,
                name: name.clone(),
                kind,
                arity,
            }))
        }
        _ => Err(err(
            first.line,
            first.column,
            "expected `constructor NAME/ARITY` or `function NAME/ARITY`",
        )),
    }
}

/// Parses and validates a program. Signature inference: rule heads are
/// functions (arity = parameter count); every other symbol is a
/// constructor whose arity is the longest application observed. Header
/// declarations override inference.
pub fn parse_program(src: &str, flags: ProgramFlags) -> Result<Program> {
    parse_programs(&[src], flags)
}

/// Parses several sources (e.g. the prelude and a user file) as one program.
pub fn parse_programs(srcs: &[&str], flags: ProgramFlags) -> Result<Program> {
    let mut merged = SourceProgram::default();
    for src in srcs {
        let part = parse_source(src)?;
        merged.declarations.extend(part.declarations);
        merged.rules.extend(part.rules);
    }
    build_program(&merged, flags)
}

/// Parses extension rules against the signature of `base`. The result holds
/// only the extension's rules, over the base signature plus any new symbols.
pub fn parse_extension(src: &str, base: &Program, flags: ProgramFlags) -> Result<Program> {
    let mut part = parse_source(src)?;
    let inherited = base.signature().iter().map(|(name, info)| Declaration {
        line: 0,
        name: name.to_string(),
        kind: info.kind,
        arity: info.arity,
    });
    part.declarations.splice(0..0, inherited);
    build_program(&part, flags)
}

pub fn build_program(src: &SourceProgram, flags: ProgramFlags) -> Result<Program> {
    let mut declared: BTreeMap<String, (SymbolKind, usize)> = BTreeMap::new();
    for d in &src.declarations {
        if let Some(old) = declared.insert(d.name.clone(), (d.kind, d.arity)) {
            if old != (d.kind, d.arity) {
                return Err(err(
                    d.line,
                    1,
                    format!("conflicting declarations for `{}`", d.name),
                )
                .into());
            }
        }
    }

    let mut functions: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &src.rules {
        let (head, args) = r.lhs.spine();
        let Expr::Sym(name) = head else {
            unreachable!("checked in parse_source")
        };
        match functions.get(name.as_ref()) {
            Some(&(arity, first_line))
                if arity != args.len() && !declared.contains_key(name.as_ref()) =>
            {
                return Err(err(
                    r.line,
                    1,
                    format!(
                        "`{name}` defined with {} parameters here but {arity} on line {first_line}",
                        args.len()
                    ),
                )
                .into());
            }
            Some(_) => {}
            None => {
                functions.insert(name.to_string(), (args.len(), r.line));
            }
        }
    }

    let mut applied: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &src.rules {
        let (_, params) = r.lhs.spine();
        for e in params.into_iter().chain(std::iter::once(&r.rhs)) {
            observe_applications(e, r.line, &mut applied);
        }
    }

    let mut sig = Signature::new();
    for (name, (kind, arity)) in &declared {
        sig.declare(name, *kind, *arity)?;
    }
    for (name, (arity, _)) in &functions {
        if !declared.contains_key(name) {
            sig.declare(name, SymbolKind::Function, *arity)?;
        }
    }
    for (name, (max_args, line)) in &applied {
        if functions.contains_key(name) {
            continue;
        }
        match declared.get(name) {
            Some((SymbolKind::Constructor, arity)) if max_args > arity => {
                return Err(err(
                    *line,
                    1,
                    format!("constructor `{name}` has arity {arity} but is applied to {max_args} arguments"),
                )
                .into());
            }
            Some(_) => {}
            None => sig.declare(name, SymbolKind::Constructor, *max_args)?,
        }
    }

    let rules = src
        .rules
        .iter()
        .map(|r| {
            let (head, params) = r.lhs.spine();
            let Expr::Sym(name) = head else {
                unreachable!()
            };
            ProgramRule {
                function: name.clone(),
                params: params.into_iter().cloned().collect(),
                rhs: r.rhs.clone(),
            }
        })
        .collect();
    Program::new(sig, rules, flags)
}

fn observe_applications(e: &Expr, line: usize, out: &mut BTreeMap<String, (usize, usize)>) {
    let (head, args) = e.spine();
    if let Expr::Sym(name) = head {
        let entry = out.entry(name.to_string()).or_insert((args.len(), line));
        if args.len() > entry.0 {
            *entry = (args.len(), line);
        }
    }
    for a in args {
        observe_applications(a, line, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::syntax::DiagnosticKind;

    const EX1: &str = include_str!("../programs/ex1.crwl");

    fn ex1() -> Program {
        parse_programs(&[PRELUDE, EX1], ProgramFlags::default()).unwrap()
    }

    #[test]
    fn ex1_signature() {
        let p = ex1();
        let sig = p.signature();
        for (f, n) in [
            ("g", 1),
            ("h", 1),
            ("f", 0),
            ("f'", 1),
            ("fadd", 3),
            ("fdouble", 1),
            ("plus", 2),
        ] {
            assert!(sig.is_function(f), "{f}");
            assert_eq!(sig.arity(f), Some(n), "{f}");
        }
        assert!(sig.is_constructor("0"));
        assert_eq!(sig.arity("s"), Some(1));
    }

    #[test]
    fn ex1_is_left_fo() {
        let strict = ProgramFlags {
            left_fo_required: true,
            ..Default::default()
        };
        parse_programs(&[PRELUDE, EX1], strict).unwrap();
    }

    #[test]
    fn extra_variable_program_is_rejected() {
        let e = parse_program("f X -> Y X", ProgramFlags::default()).unwrap_err();
        match e {
            Error::InvalidProgram(d) => {
                assert_eq!(d[0].kind, DiagnosticKind::ExtraVariable { var: "Y".into() })
            }
            other => panic!("unexpected {other:?}"),
        }
        parse_program("f X -> Y X", ProgramFlags::extra_variables()).unwrap();
    }

    #[test]
    fn empty_program() {
        let p = parse_program("", ProgramFlags::default()).unwrap();
        assert!(p.rules().is_empty());
        assert!(p.signature().is_empty());
    }

    #[test]
    fn expression_parsing() {
        let p = ex1();
        let sig = p.signature();
        let e = parse_expr("fdouble f 0", sig).unwrap();
        assert_eq!(
            e,
            Expr::app(
                Expr::app(Expr::sym("fdouble"), Expr::sym("f")),
                Expr::sym("0")
            )
        );
        let e = parse_expr("(F X) + (G X)", sig).unwrap();
        assert_eq!(e.to_string(), "plus (F X) (G X)");
        let err = parse_expr("s 0 0", sig).unwrap_err();
        assert!(err.to_string().contains("arity 1"), "{err}");
        let err = parse_expr("zzz", sig).unwrap_err();
        assert!(err.to_string().contains("undeclared"), "{err}");
    }

    #[test]
    fn bottom_only_behind_flag() {
        let p = ex1();
        assert!(parse_expr("s _|_", p.signature()).is_err());
        let e =
            parse_expr_with("s _|_", p.signature(), ExprOptions { allow_bottom: true }).unwrap();
        assert_eq!(e, Expr::app(Expr::sym("s"), Expr::Bottom));
        assert!(parse_program("f -> _|_", ProgramFlags::default()).is_err());
    }

    #[test]
    fn headers_override_inference() {
        let src = "constructor c/2\nfunction g/1\nf X -> c X";
        let p = parse_program(src, ProgramFlags::default()).unwrap();
        assert_eq!(p.signature().arity("c"), Some(2));
        assert!(p.signature().is_function("g"));
        assert!(parse_program("constructor c/0\nf X -> c X", ProgramFlags::default()).is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_program("f X -> (s X", ProgramFlags::default()).unwrap_err();
        match e {
            Error::Parse(pe) => assert_eq!(pe.line, 1),
            other => panic!("{other:?}"),
        }
        let e = parse_program("\nf -> g -> h", ProgramFlags::default()).unwrap_err();
        match e {
            Error::Parse(pe) => assert_eq!(pe.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn printing_rules_reparses_identically() {
        let p = ex1();
        let printed = p.to_source();
        let again = parse_program(&printed, ProgramFlags::default()).unwrap();
        assert_eq!(again.rules(), p.rules());
        assert_eq!(again.signature(), p.signature());
    }

    #[test]
    fn contexts_parse() {
        let p = ex1();
        let c = parse_context("fdouble [ ] 0", p.signature()).unwrap();
        assert_eq!(c.fill(&Expr::sym("f")).to_string(), "fdouble f 0");
        assert!(parse_context("fdouble f 0", p.signature()).is_err());
    }
}
