//! Text formats: local expressions, choreography files, and hand-written
//! process networks.
//!
//! Local expressions are s-expressions: `42`, `-1`, `true`, `"text"`, `()`,
//! variables, `(prim arg ...)` and `(let x bound body)`.
//!
//! A choreography file is a sequence of lines:
//!
//! ```text
//! # comment
//! let f(x) = (add x 1)          # user primitive
//! input Alice = 42              # value returned by (const-input) at Alice
//! x <- Alice |> (const-input)   # local step (also `▷`)
//! y <- Alice => Bob <> (f x)    # communication (also `⇒`, `◇`)
//! Alice |> (show y) : int       # optional binder and type annotation
//! ```
//!
//! A raw network file lists one process per role, for networks that are not
//! the projection of any choreography:
//!
//! ```text
//! role Alice:
//!   x <- recv Bob int
//!   send Bob 1
//! role Bob:
//!   y <- locally (add 1 2)
//!   send Alice y
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use effchor_core::choreography::ElabError;
use effchor_core::local::{infer_result, RegistryError};
use effchor_core::process::{Process, ProcessOp};
use effchor_core::{Arity, Choreo, LocalTerm, Loc, PrimitiveRegistry, Program, Statement, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, message: message.into() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Int(i64),
    Str(String),
    Ident(String),
    /// `<-` or `←`
    Bind,
    /// `|>` or `▷`
    Local,
    /// `=>` or `⇒`
    Comm,
    /// `<>` or `◇`
    Diamond,
    Colon,
    Eq,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Bind => f.write_str("`<-`"),
            Tok::Local => f.write_str("`|>`"),
            Tok::Comm => f.write_str("`=>`"),
            Tok::Diamond => f.write_str("`<>`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Comma => f.write_str("`,`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || "-_'?!*+/.".contains(c)
}

/// Tokenizes one line; `#` starts a comment outside string literals.
fn tokenize_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let mut push = |tok, len: usize, i: &mut usize| {
            out.push(Token { tok, line, col });
            *i += len;
        };
        match c {
            _ if c.is_whitespace() => i += 1,
            '#' => break,
            '(' => push(Tok::LParen, 1, &mut i),
            ')' => push(Tok::RParen, 1, &mut i),
            ':' => push(Tok::Colon, 1, &mut i),
            ',' => push(Tok::Comma, 1, &mut i),
            '←' => push(Tok::Bind, 1, &mut i),
            '▷' => push(Tok::Local, 1, &mut i),
            '⇒' => push(Tok::Comm, 1, &mut i),
            '◇' => push(Tok::Diamond, 1, &mut i),
            '<' if next == Some('-') => push(Tok::Bind, 2, &mut i),
            '<' if next == Some('>') => push(Tok::Diamond, 2, &mut i),
            '|' if next == Some('>') => push(Tok::Local, 2, &mut i),
            '=' if next == Some('>') => push(Tok::Comm, 2, &mut i),
            '=' => push(Tok::Eq, 1, &mut i),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return err(line, col, "unterminated string literal"),
                        Some('"') => break,
                        Some('\\') => {
                            let esc = match chars.get(j + 1) {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('\\') => '\\',
                                Some('"') => '"',
                                _ => return err(line, j + 1, "unknown escape sequence"),
                            };
                            s.push(esc);
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                push(Tok::Str(s), j + 1 - i, &mut i);
            }
            _ if c.is_ascii_digit() || (c == '-' && next.is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while chars.get(j).is_some_and(char::is_ascii_digit) {
                    j += 1;
                }
                let lit: String = chars[i..j].iter().collect();
                if chars.get(j).copied().is_some_and(is_ident_char) {
                    return err(line, col, format!("malformed number starting `{lit}`"));
                }
                let n = lit.parse::<i64>().or_else(|_| err(line, col, format!("integer `{lit}` out of range")))?;
                push(Tok::Int(n), j - i, &mut i);
            }
            _ if is_ident_char(c) => {
                let mut j = i + 1;
                while chars.get(j).copied().is_some_and(is_ident_char) {
                    j += 1;
                }
                push(Tok::Ident(chars[i..j].iter().collect()), j - i, &mut i);
            }
            _ => return err(line, col, format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Sexp {
    Int(i64),
    Str(String),
    Sym(String),
    List(Vec<(Sexp, Pos)>),
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

/// A cursor over the tokens of one logical unit (a line, or a whole
/// standalone expression).
struct Tokens {
    toks: Vec<Token>,
    i: usize,
    /// Where to report "unexpected end".
    end: Pos,
}

impl Tokens {
    fn new(toks: Vec<Token>, end: Pos) -> Self {
        Tokens { toks, i: 0, end }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map_or(self.end, |t| Pos { line: t.line, col: t.col })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.i).cloned();
        self.i += usize::from(t.is_some());
        t
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let p = self.pos();
        err(p.line, p.col, message)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.fail(format!("expected {wanted}, found {t}")),
            None => self.fail(format!("expected {wanted}, found end of line")),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok((s, pos))
            }
            _ => self.unexpected(what),
        }
    }

    fn loc(&mut self) -> Result<Loc, ParseError> {
        Ok(Loc::new(self.ident("a location name")?.0))
    }

    fn sexp(&mut self) -> Result<(Sexp, Pos), ParseError> {
        let pos = self.pos();
        let Some(t) = self.next() else {
            return self.unexpected("an expression");
        };
        let s = match t.tok {
            Tok::Int(n) => Sexp::Int(n),
            Tok::Str(s) => Sexp::Str(s),
            Tok::Ident(s) => Sexp::Sym(s),
            Tok::LParen => {
                let mut items = Vec::new();
                while !self.eat(&Tok::RParen) {
                    if self.at_end() {
                        return err(pos.line, pos.col, "unclosed `(`");
                    }
                    items.push(self.sexp()?);
                }
                Sexp::List(items)
            }
            other => return err(pos.line, pos.col, format!("expected an expression, found {other}")),
        };
        Ok((s, pos))
    }

    fn expr(&mut self) -> Result<LocalTerm, ParseError> {
        let (s, pos) = self.sexp()?;
        to_term(&s, pos)
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let (s, pos) = self.sexp()?;
        to_value(&s, pos)
    }

    /// An optional `: type` suffix.
    fn annotation(&mut self) -> Result<Option<Arity>, ParseError> {
        if !self.eat(&Tok::Colon) {
            return Ok(None);
        }
        self.type_name().map(Some)
    }

    fn type_name(&mut self) -> Result<Arity, ParseError> {
        let (name, pos) = self.ident("a type (unit, bool, int, string, value)")?;
        Arity::from_name(&name).map_or_else(|| err(pos.line, pos.col, format!("unknown type `{name}`")), Ok)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            self.unexpected("end of line")
        }
    }
}

const KEYWORDS: &[&str] = &["let", "input", "role", "locally", "send", "recv"];

fn to_term(s: &Sexp, pos: Pos) -> Result<LocalTerm, ParseError> {
    Ok(match s {
        Sexp::Int(n) => LocalTerm::lit(*n),
        Sexp::Str(text) => LocalTerm::lit(Value::str(text.as_str())),
        Sexp::Sym(b) if b == "true" || b == "false" => LocalTerm::lit(b == "true"),
        Sexp::Sym(x) => LocalTerm::var(x.as_str()),
        Sexp::List(items) => match &items[..] {
            [] => LocalTerm::lit(Value::Unit),
            [(Sexp::Sym(kw), _), rest @ ..] if kw == "let" => match rest {
                [(Sexp::Sym(x), _), (bound, bp), (body, bodyp)] => {
                    LocalTerm::let_in(x.as_str(), to_term(bound, *bp)?, to_term(body, *bodyp)?)
                }
                _ => return err(pos.line, pos.col, "`let` takes a name, a bound expression and a body"),
            },
            [(Sexp::Sym(f), _), args @ ..] => LocalTerm::app(
                f.as_str(),
                args.iter().map(|(a, p)| to_term(a, *p)).collect::<Result<Vec<_>, _>>()?,
            ),
            [(_, p), ..] => return err(p.line, p.col, "expected a primitive name"),
        },
    })
}

fn to_value(s: &Sexp, pos: Pos) -> Result<Value, ParseError> {
    Ok(match s {
        Sexp::Int(n) => Value::Int(*n),
        Sexp::Str(text) => Value::str(text.as_str()),
        Sexp::Sym(b) if b == "true" || b == "false" => Value::Bool(b == "true"),
        Sexp::Sym(x) => return err(pos.line, pos.col, format!("expected a value, found `{x}`")),
        Sexp::List(items) => match &items[..] {
            [] => Value::Unit,
            [(Sexp::Sym(kw), _), (a, ap), (b, bp)] if kw == "pair" => Value::pair(to_value(a, *ap)?, to_value(b, *bp)?),
            [(Sexp::Sym(kw), _), rest @ ..] if kw == "list" => {
                Value::List(rest.iter().map(|(v, p)| to_value(v, *p)).collect::<Result<_, _>>()?)
            }
            _ => return err(pos.line, pos.col, "expected a value: literal, (), (pair a b) or (list ...)"),
        },
    })
}

fn tokenize_all(src: &str) -> Result<Tokens, ParseError> {
    let mut toks = Vec::new();
    let mut end = Pos { line: 1, col: 1 };
    for (i, text) in src.lines().enumerate() {
        toks.extend(tokenize_line(text, i + 1)?);
        end = Pos { line: i + 1, col: text.chars().count() + 1 };
    }
    Ok(Tokens::new(toks, end))
}

/// Parses a standalone local expression, which may span several lines.
pub fn parse_local_term(src: &str) -> Result<LocalTerm, ParseError> {
    let mut t = tokenize_all(src)?;
    let e = t.expr()?;
    t.finish()?;
    Ok(e)
}

pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let mut t = tokenize_all(src)?;
    let v = t.value()?;
    t.finish()?;
    Ok(v)
}

/// The lines of a file with comments and blanks removed, tokenized.
fn logical_lines(src: &str) -> Result<Vec<(usize, Tokens)>, ParseError> {
    let mut out = Vec::new();
    for (i, text) in src.lines().enumerate() {
        let toks = tokenize_line(text, i + 1)?;
        if !toks.is_empty() {
            out.push((i + 1, Tokens::new(toks, Pos { line: i + 1, col: text.chars().count() + 1 })));
        }
    }
    Ok(out)
}

fn is_preamble(t: &Tokens) -> bool {
    matches!((t.peek(), t.peek_at(1), t.peek_at(2)),
        (Some(Tok::Ident(kw)), Some(Tok::Ident(_)), Some(Tok::LParen)) if kw == "let")
        || matches!((t.peek(), t.peek_at(1), t.peek_at(2)),
        (Some(Tok::Ident(kw)), Some(Tok::Ident(_)), Some(Tok::Eq)) if kw == "input")
}

/// Handles `let f(x, y) = (expr)` and `input Loc = value`, extending `reg`.
fn preamble(t: &mut Tokens, line: usize, reg: PrimitiveRegistry) -> Result<PrimitiveRegistry, ParseError> {
    let (kw, _) = t.ident("`let` or `input`")?;
    if kw == "input" {
        let at = t.loc()?;
        t.expect(&Tok::Eq)?;
        let v = t.value()?;
        t.finish()?;
        return Ok(reg.with_input(at, v));
    }
    let (name, name_pos) = t.ident("a primitive name")?;
    t.expect(&Tok::LParen)?;
    let mut params = Vec::new();
    if !t.eat(&Tok::RParen) {
        loop {
            params.push(t.ident("a parameter name")?.0);
            if t.eat(&Tok::RParen) {
                break;
            }
            t.expect(&Tok::Comma)?;
        }
    }
    t.expect(&Tok::Eq)?;
    let body = t.expr()?;
    t.finish()?;
    reg.define(&name, params, body).map_err(|e| {
        let message = match e {
            RegistryError::DuplicatePrimitive(n) => format!("primitive `{n}` is already defined"),
            other => other.to_string(),
        };
        ParseError { line, col: name_pos.col, message }
    })
}

/// An optional `x <-` prefix.
fn binder(t: &mut Tokens) -> Result<Option<String>, ParseError> {
    if matches!((t.peek(), t.peek_at(1)), (Some(Tok::Ident(_)), Some(Tok::Bind))) {
        let (x, pos) = t.ident("a variable")?;
        if KEYWORDS.contains(&x.as_str()) {
            return err(pos.line, pos.col, format!("`{x}` is a keyword"));
        }
        t.expect(&Tok::Bind)?;
        return Ok(Some(x));
    }
    Ok(None)
}

/// A parsed choreography file, before elaboration.
#[derive(Clone, Debug)]
pub struct ChoreoFile {
    pub registry: PrimitiveRegistry,
    pub program: Program,
    /// Source line of each statement.
    pub lines: Vec<usize>,
}

impl ChoreoFile {
    /// Scope-checks the statements and builds the choreography.
    pub fn elaborate(&self) -> Result<Choreo, ParseError> {
        self.program.elaborate(&self.registry).map_err(|e| {
            let (stmt, message) = match e {
                ElabError::UnboundVariable { line, name } => (line, format!("unbound variable `{name}`")),
                ElabError::WrongOwner { line, name, owner, sender } => {
                    (line, format!("`{name}` lives at {owner}, but this computation runs at {sender}"))
                }
                ElabError::UnknownPrimitive { line, name } => (line, format!("unknown primitive `{name}`")),
            };
            ParseError { line: self.lines[stmt - 1], col: 1, message }
        })
    }
}

pub fn parse_choreo_file(src: &str) -> Result<ChoreoFile, ParseError> {
    let mut registry = PrimitiveRegistry::new();
    let mut statements = Vec::new();
    let mut lines = Vec::new();
    for (line, mut t) in logical_lines(src)? {
        if is_preamble(&t) {
            registry = preamble(&mut t, line, registry)?;
            continue;
        }
        let bind = binder(&mut t)?;
        let sender = t.loc()?;
        let receiver = if t.eat(&Tok::Local) {
            sender.clone()
        } else if t.eat(&Tok::Comm) {
            let r = t.loc()?;
            if !t.eat(&Tok::Diamond) {
                t.eat(&Tok::Local);
            }
            r
        } else {
            return t.unexpected("`|>` or `=>`");
        };
        let expr = t.expr()?;
        let ty = t.annotation()?;
        t.finish()?;
        statements.push(Statement { bind, sender, receiver, expr, ty });
        lines.push(line);
    }
    Ok(ChoreoFile { registry, program: Program { statements }, lines })
}

/// Parses and elaborates a choreography file in one go.
pub fn load_choreography(src: &str) -> Result<(Choreo, PrimitiveRegistry), ParseError> {
    let file = parse_choreo_file(src)?;
    Ok((file.elaborate()?, file.registry))
}

#[derive(Clone, Debug)]
enum Payload {
    Lit(Value),
    Var(String),
}

#[derive(Clone, Debug)]
enum RawStmt {
    Locally { bind: Option<String>, expr: LocalTerm, ty: Arity },
    Send { to: Loc, payload: Payload },
    Recv { bind: Option<String>, from: Loc, ty: Arity },
}

/// A hand-written network of processes.
#[derive(Clone, Debug)]
pub struct RawNetwork {
    pub registry: PrimitiveRegistry,
    pub processes: BTreeMap<Loc, Process>,
}

pub fn parse_raw_network(src: &str) -> Result<RawNetwork, ParseError> {
    let mut registry = PrimitiveRegistry::new();
    let mut roles: Vec<(Loc, Vec<RawStmt>, BTreeMap<String, Arity>)> = Vec::new();
    for (line, mut t) in logical_lines(src)? {
        if is_preamble(&t) {
            registry = preamble(&mut t, line, registry)?;
            continue;
        }
        if matches!(t.peek(), Some(Tok::Ident(kw)) if kw == "role") && !matches!(t.peek_at(1), Some(Tok::Bind)) {
            t.next();
            let at = t.loc()?;
            t.expect(&Tok::Colon)?;
            t.finish()?;
            if roles.iter().any(|(l, _, _)| *l == at) {
                return err(line, 1, format!("role {at} is declared twice"));
            }
            roles.push((at, Vec::new(), BTreeMap::new()));
            continue;
        }
        let Some((_, stmts, scope)) = roles.last_mut() else {
            return err(line, 1, "expected `role <name>:` before the first operation");
        };
        let bind = binder(&mut t)?;
        let (op, op_pos) = t.ident("`locally`, `send` or `recv`")?;
        let stmt = match op.as_str() {
            "locally" => {
                let expr_pos = t.pos();
                let expr = t.expr()?;
                if let Some(x) = expr.free_vars().into_iter().find(|x| !scope.contains_key(x)) {
                    return err(expr_pos.line, expr_pos.col, format!("unbound variable `{x}`"));
                }
                let ty = match t.annotation()? {
                    Some(ty) => ty,
                    None => infer_result(&expr, scope, &registry),
                };
                RawStmt::Locally { bind: bind.clone(), expr, ty }
            }
            "recv" => {
                let from = t.loc()?;
                t.eat(&Tok::Colon);
                let ty = if t.at_end() { Arity::Value } else { t.type_name()? };
                RawStmt::Recv { bind: bind.clone(), from, ty }
            }
            "send" => {
                if bind.is_some() {
                    return err(op_pos.line, op_pos.col, "`send` has no result to bind");
                }
                let to = t.loc()?;
                let payload_pos = t.pos();
                let payload = match t.peek() {
                    Some(Tok::Ident(x)) if x != "true" && x != "false" => {
                        let x = x.clone();
                        t.next();
                        if !scope.contains_key(&x) {
                            return err(payload_pos.line, payload_pos.col, format!("unbound variable `{x}`"));
                        }
                        Payload::Var(x)
                    }
                    _ => Payload::Lit(t.value()?),
                };
                RawStmt::Send { to, payload }
            }
            other => return err(op_pos.line, op_pos.col, format!("unknown operation `{other}`")),
        };
        t.finish()?;
        match &stmt {
            RawStmt::Locally { bind: Some(x), ty, .. } | RawStmt::Recv { bind: Some(x), ty, .. } => {
                scope.insert(x.clone(), *ty);
            }
            _ => {}
        }
        stmts.push(stmt);
    }
    let processes = roles
        .into_iter()
        .map(|(l, stmts, _)| (l, build_process(Arc::from(stmts), 0, BTreeMap::new(), Value::Unit)))
        .collect();
    Ok(RawNetwork { registry, processes })
}

fn build_process(stmts: Arc<[RawStmt]>, i: usize, env: BTreeMap<String, Value>, last: Value) -> Process {
    let Some(st) = stmts.get(i) else {
        return Term::Leaf(last);
    };
    let (op, bind) = match st {
        RawStmt::Locally { bind, expr, ty } => {
            let term = env.iter().fold(expr.clone(), |t, (x, v)| t.substitute(x, v));
            (ProcessOp::Locally { term, ty: *ty }, bind.clone())
        }
        RawStmt::Send { to, payload } => {
            let payload = match payload {
                Payload::Lit(v) => v.clone(),
                Payload::Var(x) => env[x].clone(),
            };
            (ProcessOp::Send { to: to.clone(), payload }, None)
        }
        RawStmt::Recv { bind, from, ty } => (ProcessOp::Recv { from: from.clone(), expected: *ty }, bind.clone()),
    };
    Term::node(op, move |v| {
        let mut env = env.clone();
        if let Some(x) = &bind {
            env.insert(x.clone(), v.clone());
        }
        build_process(Arc::clone(&stmts), i + 1, env, v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_terms() {
        assert_eq!(parse_local_term("(add 2 3)").unwrap(), LocalTerm::app("add", [LocalTerm::lit(2), LocalTerm::lit(3)]));
        assert_eq!(
            parse_local_term("(let x 2\n  (mul x x))").unwrap(),
            LocalTerm::let_in("x", LocalTerm::lit(2), LocalTerm::app("mul", [LocalTerm::var("x"), LocalTerm::var("x")]))
        );
        assert_eq!(parse_local_term("-7").unwrap(), LocalTerm::lit(-7));
        assert_eq!(parse_local_term("()").unwrap(), LocalTerm::lit(Value::Unit));
        assert_eq!(parse_local_term("\"a \\\"b\\\"\"").unwrap(), LocalTerm::lit(Value::str("a \"b\"")));
        assert_eq!(parse_local_term("(const-input)").unwrap(), LocalTerm::app("const-input", []));
    }

    #[test]
    fn printing_round_trips() {
        for src in ["(add x (sub 1 -2))", "(let y (pair true \"s\") (fst y))", "(show ())"] {
            let t = parse_local_term(src).unwrap();
            assert_eq!(parse_local_term(&t.to_string()).unwrap(), t);
        }
    }

    #[test]
    fn error_positions() {
        let e = parse_local_term("(add 1\n  (mul 2 3)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = parse_local_term("(add 1 $)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        let e = parse_local_term("(let x 1)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = parse_local_term("(1 2)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));
        let e = parse_local_term("1 2").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
        assert!(parse_local_term("99999999999999999999").is_err());
        assert!(parse_local_term("12ab").is_err());
    }

    #[test]
    fn values() {
        assert_eq!(parse_value("(pair 1 (list true ()))").unwrap(), Value::pair(Value::Int(1), Value::List(vec![Value::Bool(true), Value::Unit])));
        assert!(parse_value("x").is_err());
    }

    #[test]
    fn choreography_files() {
        let src = "\
# the pipeline
let f(x) = (add x 1)
input Alice = 42
x <- Alice |> (const-input)
y ← Alice ⇒ Bob ◇ (f x)
z <- Bob => Carol <> (add y 1) : int
Bob ▷ (show y)
";
        let file = parse_choreo_file(src).unwrap();
        assert_eq!(file.lines, vec![4, 5, 6, 7]);
        assert_eq!(file.program.statements[2].ty, Some(Arity::Int));
        assert_eq!(file.registry.input(&Loc::new("Alice")), Some(&Value::Int(42)));
        let c = file.elaborate().unwrap();
        assert_eq!(c.locations().len(), 3);
    }

    #[test]
    fn choreography_errors() {
        let e = parse_choreo_file("x <- Alice |> (add 1 2)\ny <- Alice => Bob <> (add x z)\n").unwrap().elaborate().unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("`z`"));
        let e = parse_choreo_file("x <- Alice |> 1\ny <- Bob |> (add x 1)").unwrap().elaborate().unwrap_err();
        assert!(e.message.contains("lives at Alice"));
        let e = parse_choreo_file("\n\nx <- Alice -> Bob (add 1 2)").unwrap_err();
        assert_eq!((e.line, e.col), (3, 13));
        let e = parse_choreo_file("let f(x) = (add x y)").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_choreo_file("Alice |> (add 1 2) : number").unwrap_err();
        assert_eq!((e.line, e.col), (1, 22));
    }

    #[test]
    fn raw_networks() {
        let net = parse_raw_network(
            "role A:\n  x <- recv B int\n  send B x\nrole B:\n  y <- locally (add 1 2)\n  send A y\n  recv A\n",
        )
        .unwrap();
        assert_eq!(net.processes.len(), 2);
        let a = &net.processes[&Loc::new("A")];
        assert_eq!(a.head(), Some(&ProcessOp::Recv { from: Loc::new("B"), expected: Arity::Int }));
        let a2 = a.resume(Value::Int(3)).unwrap();
        assert_eq!(a2.head(), Some(&ProcessOp::Send { to: Loc::new("B"), payload: Value::Int(3) }));
        let b = &net.processes[&Loc::new("B")];
        assert_eq!(b.head(), Some(&ProcessOp::Locally { term: parse_local_term("(add 1 2)").unwrap(), ty: Arity::Int }));

        assert_eq!(parse_raw_network("send A 1").unwrap_err().line, 1);
        assert!(parse_raw_network("role A:\n send B z").is_err());
        assert!(parse_raw_network("role A:\n x <- send B 1").is_err());
        assert!(parse_raw_network("role A:\nrole A:").is_err());
    }
}
