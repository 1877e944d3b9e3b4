//! Text format for polynomials.
//!
//! ```text
//! poly   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := number ['/' number] | ('x' | 'X') digits ['^' number]
//! number := (digits ['.' [digits]] | '.' digits) [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! Variables are `x1, x2, ...` (1-based). An exponent must be a
//! non-negative integer. Whitespace is ignored between tokens. Numbers are
//! read exactly as rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::{Exponents, SparsePolynomial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1
            }
            b'/' => {
                out.push((i, Tok::Slash));
                i += 1
            }
            b'^' => {
                out.push((i, Tok::Caret));
                i += 1
            }
            b'x' | b'X' => {
                let start = i;
                i += 1;
                let d0 = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if d0 == i {
                    return Err(err(start, "variable name must be x followed by an index"));
                }
                let idx: usize = text[d0..i].parse().map_err(|_| err(d0, "variable index too large"))?;
                if idx == 0 {
                    return Err(err(d0, "variable indices start at 1"));
                }
                out.push((start, Tok::Var(idx - 1)));
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                let (num, next) = lex_number(text, i)?;
                out.push((start, Tok::Num(num)));
                i = next;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character {ch:?}")));
            }
        }
    }
    Ok(out)
}

fn lex_number(text: &str, start: usize) -> Result<(BigRational, usize)> {
    let bytes = text.as_bytes();
    let mut i = start;
    let mut digits = String::new();
    let mut frac_len: i64 = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        digits.push(bytes[i] as char);
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            digits.push(bytes[i] as char);
            frac_len += 1;
            i += 1;
        }
    }
    if digits.is_empty() {
        return Err(err(start, "malformed number"));
    }
    let mut exp10: i64 = -frac_len;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let e0 = i;
        i += 1;
        let mut sign = 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            if bytes[i] == b'-' {
                sign = -1;
            }
            i += 1;
        }
        let d0 = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if d0 == i {
            return Err(err(e0, "malformed exponent"));
        }
        let e: i64 = text[d0..i].parse().map_err(|_| err(d0, "exponent too large"))?;
        if e > 400 {
            return Err(err(d0, "exponent too large"));
        }
        exp10 += sign * e;
    }
    let mantissa: BigInt = digits.parse().map_err(|_| err(start, "malformed number"))?;
    let ten = BigInt::from(10u32);
    let value = if exp10 >= 0 {
        BigRational::from_integer(mantissa * Pow::pow(&ten, exp10 as u64))
    } else {
        BigRational::new(mantissa, Pow::pow(&ten, (-exp10) as u64))
    };
    Ok((value, i))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn term(&mut self) -> Result<(BigRational, Vec<(usize, u32)>)> {
        let mut coeff = BigRational::one();
        let mut powers = Vec::new();
        loop {
            let pos = self.pos();
            match self.next() {
                Some(Tok::Num(n)) => {
                    let mut n = n;
                    if self.peek() == Some(&Tok::Slash) {
                        self.next();
                        let dpos = self.pos();
                        match self.next() {
                            Some(Tok::Num(d)) if !d.is_zero() => n /= d,
                            Some(Tok::Num(_)) => return Err(err(dpos, "division by zero")),
                            _ => return Err(err(dpos, "expected a number after '/'")),
                        }
                    }
                    coeff *= n;
                }
                Some(Tok::Var(v)) => {
                    let mut e = 1u32;
                    if self.peek() == Some(&Tok::Caret) {
                        self.next();
                        let epos = self.pos();
                        match self.next() {
                            Some(Tok::Num(n)) if n.is_integer() => {
                                let k = n.to_integer();
                                e = u32::try_from(&k).map_err(|_| err(epos, "exponent out of range"))?;
                            }
                            _ => return Err(err(epos, "expected a non-negative integer exponent")),
                        }
                    }
                    powers.push((v, e));
                }
                _ => return Err(err(pos, "expected a number or a variable")),
            }
            if self.peek() == Some(&Tok::Star) {
                self.next();
            } else {
                break;
            }
        }
        Ok((coeff, powers))
    }
}

pub(super) fn parse(text: &str, num_vars: Option<usize>) -> Result<SparsePolynomial> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(err(0, "empty polynomial"));
    }
    let mut p = Parser { toks, at: 0, end: text.len() };
    let mut raw = Vec::new();
    let mut sign = BigRational::one();
    match p.peek() {
        Some(Tok::Minus) => {
            p.next();
            sign = -sign;
        }
        Some(Tok::Plus) => {
            p.next();
        }
        _ => {}
    }
    loop {
        let (c, powers) = p.term()?;
        raw.push((sign.clone() * c, powers));
        match p.next() {
            None => break,
            Some(Tok::Plus) => sign = BigRational::one(),
            Some(Tok::Minus) => sign = -BigRational::one(),
            Some(_) => return Err(err(p.toks[p.at - 1].0, "expected '+', '-' or '*'")),
        }
    }
    let used = raw.iter().flat_map(|(_, ps)| ps.iter().map(|&(v, _)| v + 1)).max().unwrap_or(0);
    let n = match num_vars {
        Some(n) if n < used => {
            return Err(err(0, format!("polynomial uses x{used} but only {n} variables were declared")))
        }
        Some(n) => n,
        None => used.max(1),
    };
    let terms = raw.into_iter().map(|(c, ps)| {
        let mut e: Exponents = vec![0; n];
        for (v, k) in ps {
            e[v] += k;
        }
        (c, e)
    });
    SparsePolynomial::from_rational_terms(n, terms)
}
