//! Recursive-descent parser for the expression grammar (see `docs/grammar.md`).

use std::collections::HashMap;

use num_bigint::BigInt;

use super::poly::Q;
use super::symbol::{OpaqueFunc, Symbol, SymbolKind};
use super::{Expr, ExprError};

/// Names visible to the parser: symbols, declared functions and macros.
#[derive(Clone, Debug, Default)]
pub struct Context {
    symbols: HashMap<String, Symbol>,
    functions: HashMap<String, OpaqueFunc>,
    macros: HashMap<String, Expr>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<Symbol, ExprError> {
        if self.functions.contains_key(name) || self.macros.contains_key(name) {
            return Err(ExprError::NameInUse(name.to_string()));
        }
        let s = Symbol::new(name, kind)?;
        self.symbols.insert(name.to_string(), s);
        Ok(s)
    }

    pub fn add_symbol(&mut self, s: Symbol) {
        self.symbols.insert(s.name(), s);
    }

    pub fn declare_function(&mut self, name: &str, slots: &[&str]) -> Result<OpaqueFunc, ExprError> {
        if self.symbols.contains_key(name) || self.macros.contains_key(name) {
            return Err(ExprError::NameInUse(name.to_string()));
        }
        let f = OpaqueFunc::declare(name, slots)?;
        self.functions.insert(name.to_string(), f);
        Ok(f)
    }

    pub fn add_function(&mut self, f: OpaqueFunc) {
        self.functions.insert(f.name(), f);
    }

    /// Binds `name` to an expression; later uses expand to it.
    pub fn define(&mut self, name: &str, value: Expr) -> Result<(), ExprError> {
        if !super::valid_identifier(name) {
            return Err(ExprError::InvalidName(name.to_string()));
        }
        if self.symbols.contains_key(name) || self.functions.contains_key(name) {
            return Err(ExprError::NameInUse(name.to_string()));
        }
        self.macros.insert(name.to_string(), value);
        Ok(())
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.symbols.get(name).copied()
    }

    pub fn function(&self, name: &str) -> Option<OpaqueFunc> {
        self.functions.get(name).copied()
    }

    pub fn macro_value(&self, name: &str) -> Option<&Expr> {
        self.macros.get(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols.values().copied()
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        parse_expr(text, self)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            d if d.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Int(text[start..i].parse().unwrap()), start));
                continue;
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            other => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    ctx: &'a Context,
}

/// Parses `text` against the names in `ctx`.
pub fn parse_expr(text: &str, ctx: &Context) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        ctx,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected {}", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("number `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::End => "end of input".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ExprError {
        ExprError::Syntax { pos: self.pos(), msg }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ExprError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", describe(&t), describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    let pos = self.pos();
                    self.bump();
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(ExprError::Syntax {
                            pos,
                            msg: "division by zero".into(),
                        });
                    }
                    acc = acc.checked_div(&d)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        let n = match self.bump() {
            Tok::Int(n) => n,
            t => {
                return Err(ExprError::Syntax {
                    pos,
                    msg: format!("expected integer exponent, found {}", describe(&t)),
                })
            }
        };
        let n: i32 = i32::try_from(n).map_err(|_| ExprError::Syntax {
            pos,
            msg: "exponent too large".into(),
        })?;
        let n = if neg { -n } else { n };
        if n < 0 && base.is_zero() {
            return Err(ExprError::Syntax {
                pos,
                msg: "division by zero".into(),
            });
        }
        base.pow(n)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::constant(Q::from_integer(n))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.application(&name, pos)
                } else {
                    self.name(&name, pos)
                }
            }
            t => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected {}", describe(&t)),
            }),
        }
    }

    fn name(&self, name: &str, pos: usize) -> Result<Expr, ExprError> {
        if let Some(e) = self.ctx.macros.get(name) {
            return Ok(e.clone());
        }
        if let Some(s) = self.ctx.symbols.get(name) {
            return Ok(s.expr());
        }
        Err(ExprError::UnknownSymbol {
            name: name.to_string(),
            pos,
        })
    }

    fn args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn application(&mut self, ident: &str, pos: usize) -> Result<Expr, ExprError> {
        if ident == "D" && !self.ctx.functions.contains_key("D") {
            return self.derivative(pos);
        }
        let (fname, tag) = match ident.split_once('_') {
            Some((f, t)) => (f, t),
            None => (ident, ""),
        };
        let Some(&func) = self.ctx.functions.get(fname) else {
            return Err(ExprError::UnknownFunction {
                name: ident.to_string(),
                pos,
            });
        };
        let slots = func.slots();
        let deriv = split_tag(tag, &slots).ok_or_else(|| ExprError::Syntax {
            pos,
            msg: format!("cannot read `{tag}` as derivatives in slots {}", slots.join(",")),
        })?;
        let args = self.args()?;
        func.apply_derivative(deriv, args)
    }

    /// `D(expr, sym)` or `D(expr, sym, sym, ...)`.
    fn derivative(&mut self, pos: usize) -> Result<Expr, ExprError> {
        let args = self.args()?;
        if args.len() < 2 {
            return Err(ExprError::Syntax {
                pos,
                msg: "D needs an expression and at least one symbol".into(),
            });
        }
        let mut e = args[0].clone();
        for a in &args[1..] {
            let s = a.as_symbol().ok_or_else(|| ExprError::Syntax {
                pos,
                msg: format!("D differentiates by symbols, not `{a}`"),
            })?;
            e = e.differentiate(s);
        }
        Ok(e)
    }
}

/// Splits a derivative tag into per-slot counts, e.g. `"pxp"` over
/// `["x","u","p"]` gives `[1,0,2]`.
fn split_tag(tag: &str, slots: &[String]) -> Option<Vec<u32>> {
    fn go(rest: &str, slots: &[String], counts: &mut Vec<u32>) -> bool {
        if rest.is_empty() {
            return true;
        }
        for (k, s) in slots.iter().enumerate() {
            if let Some(r) = rest.strip_prefix(s.as_str()) {
                counts[k] += 1;
                if go(r, slots, counts) {
                    return true;
                }
                counts[k] -= 1;
            }
        }
        false
    }
    let mut counts = vec![0; slots.len()];
    go(tag, slots, &mut counts).then_some(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        let mut c = Context::new();
        for n in ["px", "pu", "pp"] {
            c.declare(n, SymbolKind::Coordinate).unwrap();
        }
        c.declare_function("Lpx", &["px", "pu", "pp"]).unwrap();
        c
    }

    #[test]
    fn tag_split() {
        let slots: Vec<String> = ["x", "u", "p"].iter().map(|s| s.to_string()).collect();
        assert_eq!(split_tag("pxp", &slots), Some(vec![1, 0, 2]));
        assert_eq!(split_tag("q", &slots), None);
        let long: Vec<String> = ["ab", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert!(split_tag("aab", &long).is_some());
    }

    #[test]
    fn errors_carry_position() {
        let c = ctx();
        match c.parse("px + * pu") {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match c.parse("px + zz") {
            Err(ExprError::UnknownSymbol { name, pos }) => {
                assert_eq!((name.as_str(), pos), ("zz", 5))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.parse("px/(pu-pu)"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn mixed_partials_are_one_value() {
        let c = ctx();
        let a = c.parse("Lpx_pxpu(px,pu,pp)").unwrap();
        let b = c.parse("Lpx_pupx(px,pu,pp)").unwrap();
        assert_eq!(a, b);
        assert!((a - b).is_zero());
    }
}
