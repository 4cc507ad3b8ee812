//! Surface syntax: a hand-written lexer and recursive-descent parser, and a
//! minimal-parenthesis printer.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor ("*" factor)*
//! factor := rational ["*" factor] | "1" | "E(" var "," var ")" | "P" int "(" var ")"
//!         | "[" var ("=" | "!=") var "]" | "sum" var ":" expr
//!         | "agg" "@" name var (":" | "|" "E(" var "," var ")" ":") expr
//!         | "@" name "(" expr ("," expr)* ")" | "(" expr ")" | "-" factor
//! ```
//!
//! A bare `1` is the constant `One`; any other literal (including `1/1`) is a
//! coefficient that scales the factor after it. `sum` and `agg` bodies extend
//! as far right as possible.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{CmpOp, Expr, Var};
use crate::num::Rat;

/// Byte range `[start, end)` in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    Unexpected { found: String, expected: &'static str },
    UnclosedDelimiter(char),
    BadNumber,
    ZeroVariable,
    ZeroLabel,
    UnknownFunction(String),
    UnknownAggregation(String),
    /// Guard `E(x_i, x_j)` whose second variable is not the bound one.
    GuardMismatch,
    /// Guarded aggregation body mentions a variable other than the bound one.
    GuardBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = self.span;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::Unexpected { found, expected } => write!(f, "expected {expected}, found {found}"),
            ParseErrorKind::UnclosedDelimiter(c) => write!(f, "unclosed {c:?}"),
            ParseErrorKind::BadNumber => f.write_str("malformed number"),
            ParseErrorKind::ZeroVariable => f.write_str("variable indices start at 1"),
            ParseErrorKind::ZeroLabel => f.write_str("label indices start at 1"),
            ParseErrorKind::UnknownFunction(n) => write!(f, "unknown function @{n}"),
            ParseErrorKind::UnknownAggregation(n) => write!(f, "unknown aggregation @{n}"),
            ParseErrorKind::GuardMismatch => f.write_str("guard must be E(x_i, x_j) with x_j the bound variable"),
            ParseErrorKind::GuardBody => f.write_str("guarded aggregation body may only mention the bound variable"),
        }?;
        write!(f, " at {}..{}", at.start, at.end)
    }
}

/// Names the parser accepts after `@`.
pub trait NameScope {
    fn has_function(&self, name: &str) -> bool;
    fn has_aggregation(&self, name: &str) -> bool;
}

pub const BUILTIN_FUNCTIONS: &[&str] = &["relu", "sign", "identity", "recip_sqrt_plus1", "recip_sqrt", "recip", "log1p"];
pub const BUILTIN_AGGREGATIONS: &[&str] = &["sum", "max", "min", "mean", "stdv"];

/// Only the built-in functions and aggregations.
pub struct Builtins;

impl NameScope for Builtins {
    fn has_function(&self, name: &str) -> bool {
        BUILTIN_FUNCTIONS.contains(&name)
    }
    fn has_aggregation(&self, name: &str) -> bool {
        BUILTIN_AGGREGATIONS.contains(&name)
    }
}

/// Accepts every name; useful when functions are registered after parsing.
pub struct AnyName;

impl NameScope for AnyName {
    fn has_function(&self, _: &str) -> bool {
        true
    }
    fn has_aggregation(&self, _: &str) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(String),
    Dec(String),
    Ident(String),
    At,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Pipe,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Neq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(s) | Tok::Dec(s) => format!("number {s}"),
            Tok::Ident(s) => format!("{s:?}"),
            Tok::Eof => "end of input".to_string(),
            t => format!("{:?}", t.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::At => "@",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Pipe => "|",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            _ => "",
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                i += 1;
                if !(i < b.len() && b[i].is_ascii_digit()) {
                    return Err(ParseError { kind: ParseErrorKind::BadNumber, span: SourceSpan { start, end: i } });
                }
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Dec(src[start..i].to_string())
            } else {
                Tok::Int(src[start..i].to_string())
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                b'@' => Tok::At,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'[' => Tok::LBrack,
                b']' => Tok::RBrack,
                b',' => Tok::Comma,
                b':' => Tok::Colon,
                b'|' => Tok::Pipe,
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'=' => Tok::Eq,
                b'!' if b.get(i) == Some(&b'=') => {
                    i += 1;
                    Tok::Neq
                }
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    let end = start + ch.len_utf8();
                    return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), span: SourceSpan { start, end } });
                }
            }
        };
        out.push((tok, SourceSpan { start, end: i }));
    }
    out.push((Tok::Eof, SourceSpan { start: src.len(), end: src.len() }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    names: &'a dyn NameScope,
}

type PResult<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Unexpected { found: self.peek().describe(), expected },
            span: self.span(),
        }
    }

    fn expect(&mut self, t: Tok, expected: &'static str) -> PResult<SourceSpan> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    /// Expects the closing delimiter of a group opened at `open`.
    fn close(&mut self, t: Tok, open: SourceSpan, ch: char) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else if *self.peek() == Tok::Eof {
            Err(ParseError { kind: ParseErrorKind::UnclosedDelimiter(ch), span: SourceSpan { start: open.start, end: self.span().end } })
        } else {
            Err(self.unexpected(t.text()))
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = Expr::add(acc, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = Expr::sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = Expr::mul(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn var(&mut self) -> PResult<Var> {
        let sp = self.span();
        if let Tok::Ident(s) = self.peek() {
            if let Some(d) = s.strip_prefix('x') {
                if !d.is_empty() && d.bytes().all(|c| c.is_ascii_digit()) {
                    let v: Var = d.parse().map_err(|_| ParseError { kind: ParseErrorKind::BadNumber, span: sp })?;
                    if v == 0 {
                        return Err(ParseError { kind: ParseErrorKind::ZeroVariable, span: sp });
                    }
                    self.bump();
                    return Ok(v);
                }
            }
        }
        Err(self.unexpected("a variable like x1"))
    }

    fn name(&mut self) -> PResult<(String, SourceSpan)> {
        self.expect(Tok::At, "'@'")?;
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().1)),
            _ => Err(self.unexpected("a name")),
        }
    }

    fn coefficient(&mut self, neg: bool) -> PResult<Rat> {
        let (t, sp) = self.bump();
        let bad = |sp: SourceSpan| ParseError { kind: ParseErrorKind::BadNumber, span: sp };
        let mut r: Rat = match &t {
            Tok::Int(s) => {
                if *self.peek() == Tok::Slash {
                    self.bump();
                    match self.peek().clone() {
                        Tok::Int(q) => {
                            let dsp = self.bump().1;
                            format!("{s}/{q}").parse().map_err(|_| bad(dsp))?
                        }
                        _ => return Err(self.unexpected("a denominator")),
                    }
                } else {
                    s.parse().map_err(|_| bad(sp))?
                }
            }
            Tok::Dec(s) => s.parse().map_err(|_| bad(sp))?,
            _ => unreachable!(),
        };
        if neg {
            r = -r;
        }
        Ok(r)
    }

    fn scaled(&mut self, c: Rat) -> PResult<Expr> {
        if *self.peek() == Tok::Star {
            self.bump();
            Ok(Expr::scale(c, self.factor()?))
        } else {
            Ok(Expr::constant(c))
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(s) if s == "1" && self.toks[self.pos + 1].0 != Tok::Slash => {
                self.bump();
                Ok(Expr::One)
            }
            Tok::Int(_) | Tok::Dec(_) => {
                let c = self.coefficient(false)?;
                self.scaled(c)
            }
            Tok::Minus => {
                self.bump();
                if matches!(self.peek(), Tok::Int(_) | Tok::Dec(_)) {
                    let c = self.coefficient(true)?;
                    self.scaled(c)
                } else {
                    Ok(Expr::scale(Rat::from_int(-1), self.factor()?))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.close(Tok::RParen, sp, '(')?;
                Ok(e)
            }
            Tok::LBrack => {
                self.bump();
                let i = self.var()?;
                let op = match self.peek() {
                    Tok::Eq => CmpOp::Eq,
                    Tok::Neq => CmpOp::Neq,
                    _ => return Err(self.unexpected("'=' or '!='")),
                };
                self.bump();
                let j = self.var()?;
                self.close(Tok::RBrack, sp, '[')?;
                Ok(Expr::EqPred(i, j, op))
            }
            Tok::At => {
                let (name, nsp) = self.name()?;
                if !self.names.has_function(&name) {
                    return Err(ParseError { kind: ParseErrorKind::UnknownFunction(name), span: nsp });
                }
                let open = self.expect(Tok::LParen, "'('")?;
                let mut args = alloc::vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.close(Tok::RParen, open, '(')?;
                Ok(Expr::Apply(name, args))
            }
            Tok::Ident(id) => self.ident_factor(&id, sp),
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn edge_args(&mut self) -> PResult<(Var, Var)> {
        let open = self.expect(Tok::LParen, "'('")?;
        let i = self.var()?;
        self.expect(Tok::Comma, "','")?;
        let j = self.var()?;
        self.close(Tok::RParen, open, '(')?;
        Ok((i, j))
    }

    fn ident_factor(&mut self, id: &str, sp: SourceSpan) -> PResult<Expr> {
        match id {
            "E" => {
                self.bump();
                let (i, j) = self.edge_args()?;
                Ok(Expr::EdgePred(i, j))
            }
            "sum" => {
                self.bump();
                let v = self.var()?;
                self.expect(Tok::Colon, "':'")?;
                Ok(Expr::sum(v, self.expr()?))
            }
            "agg" => {
                self.bump();
                let (name, nsp) = self.name()?;
                if !self.names.has_aggregation(&name) {
                    return Err(ParseError { kind: ParseErrorKind::UnknownAggregation(name), span: nsp });
                }
                let v = self.var()?;
                match self.peek() {
                    Tok::Colon => {
                        self.bump();
                        Ok(Expr::agg(&name, v, self.expr()?))
                    }
                    Tok::Pipe => {
                        self.bump();
                        let gsp = self.span();
                        match self.peek() {
                            Tok::Ident(e) if e == "E" => {
                                self.bump();
                            }
                            _ => return Err(self.unexpected("a guard E(x_i, x_j)")),
                        }
                        let (i, j) = self.edge_args()?;
                        if j != v || i == v {
                            return Err(ParseError { kind: ParseErrorKind::GuardMismatch, span: SourceSpan { start: gsp.start, end: self.toks[self.pos - 1].1.end } });
                        }
                        self.expect(Tok::Colon, "':'")?;
                        let bsp = self.span();
                        let body = self.expr()?;
                        Expr::guarded(&name, i, v, body).map_err(|_| ParseError {
                            kind: ParseErrorKind::GuardBody,
                            span: SourceSpan { start: bsp.start, end: self.span().start },
                        })
                    }
                    _ => Err(self.unexpected("':' or '|'")),
                }
            }
            _ if id.len() > 1 && id.starts_with('P') && id[1..].bytes().all(|c| c.is_ascii_digit()) => {
                self.bump();
                let s: u32 = id[1..].parse().map_err(|_| ParseError { kind: ParseErrorKind::BadNumber, span: sp })?;
                if s == 0 {
                    return Err(ParseError { kind: ParseErrorKind::ZeroLabel, span: sp });
                }
                let open = self.expect(Tok::LParen, "'('")?;
                let i = self.var()?;
                self.close(Tok::RParen, open, '(')?;
                Ok(Expr::LabelPred(s, i))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

/// Parses with the built-in function and aggregation names.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &Builtins)
}

pub fn parse_with(src: &str, names: &dyn NameScope) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Expr,
    Term,
    Factor,
}

/// Prints `e` with the fewest parentheses that parse back to the same tree.
pub fn render(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, Level::Expr, true, &mut s);
    s
}

fn coef_text(c: &Rat) -> String {
    if c.is_one() {
        "1/1".to_string()
    } else {
        c.to_string()
    }
}

fn write_expr(e: &Expr, lvl: Level, tail: bool, out: &mut String) {
    let paren = |out: &mut String, f: &dyn Fn(&mut String)| {
        out.push('(');
        f(out);
        out.push(')');
    };
    match e {
        Expr::One => out.push('1'),
        Expr::EqPred(i, j, op) => {
            let o = if *op == CmpOp::Eq { "=" } else { "!=" };
            out.push_str(&format!("[x{i}{o}x{j}]"));
        }
        Expr::EdgePred(i, j) => out.push_str(&format!("E(x{i},x{j})")),
        Expr::LabelPred(s, i) => out.push_str(&format!("P{s}(x{i})")),
        Expr::Add(a, b) => {
            if lvl > Level::Expr {
                paren(out, &|o| write_expr(e, Level::Expr, true, o));
                return;
            }
            write_expr(a, Level::Expr, false, out);
            match &**b {
                Expr::Scale(c, inner) if *c == Rat::from_int(-1) => {
                    out.push_str(" - ");
                    write_expr(inner, Level::Term, tail, out);
                }
                _ => {
                    out.push_str(" + ");
                    write_expr(b, Level::Term, tail, out);
                }
            }
        }
        Expr::Product(a, b) => {
            if lvl > Level::Term {
                paren(out, &|o| write_expr(e, Level::Expr, true, o));
                return;
            }
            write_expr(a, Level::Term, false, out);
            out.push_str(" * ");
            write_expr(b, Level::Factor, tail, out);
        }
        Expr::Scale(c, inner) => {
            out.push_str(&coef_text(c));
            out.push_str(" * ");
            write_expr(inner, Level::Factor, tail, out);
        }
        Expr::Apply(name, args) => {
            out.push('@');
            out.push_str(name);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(a, Level::Expr, true, out);
            }
            out.push(')');
        }
        Expr::SumAgg(..) | Expr::UncondAgg(..) | Expr::GuardedAgg(..) => {
            if !tail {
                paren(out, &|o| write_expr(e, Level::Expr, true, o));
                return;
            }
            let body = match e {
                Expr::SumAgg(v, body) => {
                    out.push_str(&format!("sum x{v} : "));
                    body
                }
                Expr::UncondAgg(n, v, body) => {
                    out.push_str(&format!("agg @{n} x{v} : "));
                    body
                }
                Expr::GuardedAgg(n, i, j, body) => {
                    out.push_str(&format!("agg @{n} x{j} | E(x{i},x{j}) : "));
                    body
                }
                _ => unreachable!(),
            };
            write_expr(body, Level::Expr, true, out);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_guarded_sum() {
        let e = parse("sum x2 : E(x1,x2) * P1(x2)").unwrap();
        assert_eq!(e, Expr::sum(2, Expr::mul(Expr::edge(1, 2), Expr::label(1, 2))));
    }

    #[test]
    fn renders_scale_of_one() {
        let e = Expr::scale(Rat::new(3, 2).unwrap(), Expr::One);
        assert_eq!(render(&e), "3/2 * 1");
        assert_eq!(parse("3/2 * 1").unwrap(), e);
        assert_eq!(render(&Expr::edge(1, 2)), "E(x1,x2)");
    }

    #[test]
    fn unclosed_bracket_span() {
        let err = parse("[x1=x2").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnclosedDelimiter('['));
        assert_eq!(err.span, SourceSpan { start: 0, end: 6 });
    }

    #[test]
    fn zero_variable_rejected() {
        let err = parse("P1(x0)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ZeroVariable);
        assert_eq!(err.span, SourceSpan { start: 3, end: 5 });
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(parse("@nope(1)").unwrap_err().kind, ParseErrorKind::UnknownFunction(_)));
        assert!(matches!(parse("agg @median x2 : 1").unwrap_err().kind, ParseErrorKind::UnknownAggregation(_)));
        assert!(parse_with("@nope(1)", &AnyName).is_ok());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.1 * 1").unwrap(), Expr::constant(Rat::new(1, 10).unwrap()));
    }

    #[test]
    fn subtraction_is_sugar() {
        let e = parse("P1(x1) - E(x1,x2)").unwrap();
        assert_eq!(e, Expr::sub(Expr::label(1, 1), Expr::edge(1, 2)));
        assert_eq!(render(&e), "P1(x1) - E(x1,x2)");
    }

    #[test]
    fn sum_body_extends_right() {
        let e = parse("sum x2 : E(x1,x2) * P1(x2) + 1").unwrap();
        assert!(matches!(e, Expr::SumAgg(2, _)));
        let p = Expr::mul(Expr::sum(2, Expr::edge(1, 2)), Expr::label(1, 1));
        assert_eq!(render(&p), "(sum x2 : E(x1,x2)) * P1(x1)");
        assert_eq!(parse(&render(&p)).unwrap(), p);
    }

    #[test]
    fn guarded_agg_round_trip() {
        let e = parse("agg @max x2 | E(x1,x2) : P1(x2)").unwrap();
        assert!(matches!(e, Expr::GuardedAgg(..)));
        assert_eq!(parse(&render(&e)).unwrap(), e);
        assert_eq!(parse("agg @max x2 | E(x1,x3) : P1(x2)").unwrap_err().kind, ParseErrorKind::GuardMismatch);
        assert_eq!(parse("agg @max x2 | E(x1,x2) : P1(x1)").unwrap_err().kind, ParseErrorKind::GuardBody);
    }

    #[test]
    fn unit_coefficient_is_not_one() {
        let e = Expr::scale(Rat::one(), Expr::edge(1, 2));
        assert_eq!(render(&e), "1/1 * E(x1,x2)");
        assert_eq!(parse(&render(&e)).unwrap(), e);
        assert_eq!(parse("1 * E(x1,x2)").unwrap(), Expr::mul(Expr::One, Expr::edge(1, 2)));
    }
}
