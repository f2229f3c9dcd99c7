//! Expression grammar:
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := unary (('*' unary) | ('/' number))*
//! unary   := '-' unary | postfix
//! postfix := primary ("'" | '^' integer)*
//! primary := number | variable | '(' expr ')'
//! ```
//!
//! Variables are `x1..xg`, with `x`, `y`, `z` accepted as aliases for the
//! first three. A postfix `'` is the involution; in symmetric contexts it is a
//! no-op. Numbers are decimal (`0.25`, `1e-3`) and may be divided by further
//! literals (`3/4`).

use num_traits::{One, Zero};

use super::{Letter, NcPoly, VariableContext};
use crate::error::{Error, Result};
use crate::rat::{parse_rational, rat, Rat};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rat),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Prime,
    LParen,
    RParen,
    End,
}

pub fn parse(text: &str, ctx: VariableContext) -> Result<NcPoly> {
    let toks = lex(text, ctx)?;
    let mut p = Parser { toks, pos: 0, ctx };
    let out = p.expr()?;
    match p.peek() {
        Tok::End => Ok(out),
        _ => Err(Error::parse(p.offset(), "unexpected trailing input")),
    }
}

fn lex(text: &str, ctx: VariableContext) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'\'' => Tok::Prime,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                // exponent part, only when followed by digits
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let lit = &text[i..j];
                let v = parse_rational(lit).ok_or_else(|| Error::parse(i, format!("bad number '{lit}'")))?;
                i = j;
                out.push((Tok::Num(v), start));
                continue;
            }
            b'x' | b'y' | b'z' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let index = if j > i + 1 {
                    if c != b'x' {
                        return Err(Error::parse(i, "only x takes an index"));
                    }
                    let k: usize = text[i + 1..j].parse().map_err(|_| Error::parse(i, "bad variable index"))?;
                    if k == 0 {
                        return Err(Error::parse(i, "variables are numbered from 1"));
                    }
                    k
                } else {
                    if ctx.g() > 3 {
                        return Err(Error::parse(i, "aliases x, y, z are only available for g <= 3"));
                    }
                    (c - b'x') as usize + 1
                };
                if index > ctx.g() {
                    return Err(Error::VariableOutOfRange { index, g: ctx.g() });
                }
                i = j;
                out.push((Tok::Var(index - 1), start));
                continue;
            }
            _ => return Err(Error::parse(i, format!("unexpected character '{}'", c as char))),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: VariableContext,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<NcPoly> {
        let mut acc = match self.peek() {
            Tok::Plus => {
                self.bump();
                self.term()?
            }
            Tok::Minus => {
                self.bump();
                -self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NcPoly> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    let at = self.offset();
                    match self.bump() {
                        Tok::Num(d) if !d.is_zero() => acc = acc.scale(&(Rat::one() / d)),
                        Tok::Num(_) => return Err(Error::parse(at, "division by zero")),
                        _ => return Err(Error::parse(at, "only division by a number literal is allowed")),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<NcPoly> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<NcPoly> {
        let mut base = self.primary()?;
        loop {
            match self.peek() {
                Tok::Prime => {
                    self.bump();
                    base = base.involution();
                }
                Tok::Caret => {
                    self.bump();
                    let at = self.offset();
                    match self.bump() {
                        Tok::Num(k) if k.is_integer() && k >= rat(1) => {
                            let k: usize =
                                k.to_integer().try_into().map_err(|_| Error::parse(at, "exponent too large"))?;
                            if k > 64 {
                                return Err(Error::parse(at, "exponent too large"));
                            }
                            base = base.pow(k);
                        }
                        _ => return Err(Error::parse(at, "exponent must be a positive integer")),
                    }
                }
                _ => return Ok(base),
            }
        }
    }

    fn primary(&mut self) -> Result<NcPoly> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(c) => Ok(NcPoly::constant(self.ctx, c)),
            Tok::Var(v) => Ok(NcPoly::letter(self.ctx, Letter::new(v, false))),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.offset();
                match self.bump() {
                    Tok::RParen => Ok(inner),
                    _ => Err(Error::parse(close, "expected ')'")),
                }
            }
            Tok::End => Err(Error::parse(at, "unexpected end of input")),
            t => Err(Error::parse(at, format!("unexpected token {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::Word;
    use crate::rat::{rat, ratio};

    #[test]
    fn parses_running_example() {
        let ctx = VariableContext::symmetric(2);
        let p = parse("4 - x1 - x2 - (2*x1^2 + x1*x2 + x2*x1 + 2*x2^2)", ctx).unwrap();
        let expect = [
            (vec![], 4),
            (vec![0], -1),
            (vec![1], -1),
            (vec![0, 0], -2),
            (vec![0, 1], -1),
            (vec![1, 0], -1),
            (vec![1, 1], -2),
        ];
        assert_eq!(p.num_terms(), expect.len());
        for (w, c) in expect {
            assert_eq!(p.coeff(&Word::from_vars(&w)), rat(c));
        }
        // the x, y aliases give the same polynomial
        assert_eq!(parse("4 - x - y - (2*x^2 + x*y + y*x + 2*y^2)", ctx).unwrap(), p);
    }

    #[test]
    fn zero_and_free_square() {
        assert!(parse("0", VariableContext::symmetric(1)).unwrap().is_zero());
        let p = parse("x1'*x1", VariableContext::free(1)).unwrap();
        let w = Word::new(vec![Letter::new(0, true), Letter::new(0, false)]);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff(&w), rat(1));
    }

    #[test]
    fn star_collapses_in_symmetric_context() {
        let ctx = VariableContext::symmetric(2);
        assert_eq!(parse("x1'*x2'", ctx).unwrap(), parse("x1*x2", ctx).unwrap());
        // involution of a product reverses it
        assert_eq!(parse("(x1*x2)'", ctx).unwrap(), parse("x2*x1", ctx).unwrap());
    }

    #[test]
    fn rational_and_decimal_literals() {
        let ctx = VariableContext::symmetric(1);
        let p = parse("3/4*x + 0.25 - 1e-1", ctx).unwrap();
        assert_eq!(p.coeff(&Word::from_vars(&[0])), ratio(3, 4));
        assert_eq!(p.coeff(&Word::empty()), ratio(3, 20));
    }

    #[test]
    fn errors_carry_positions() {
        let ctx = VariableContext::symmetric(2);
        match parse("x1 + * x2", ctx) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x3", ctx), Err(Error::VariableOutOfRange { index: 3, g: 2 })));
        assert!(matches!(parse("(x1", ctx), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1^0", ctx), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1 x2", ctx), Err(Error::Parse { .. })));
        assert!(matches!(parse("x1/x2", ctx), Err(Error::Parse { .. })));
    }

    #[test]
    fn format_then_parse_is_stable() {
        let ctx = VariableContext::free(2);
        let p = parse("-3/4*x1'^2*x2 + x2*x1 - 7 + 2*(x1*x1')^2", ctx).unwrap();
        let q = parse(&p.to_string(), ctx).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_string(), p.to_string());
    }
}
