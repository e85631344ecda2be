//! Parsers for field descriptors (`Q`, `F7`, `Q[i]/(i^2+1)`), polynomial
//! expressions (`x^5-x`, `(x-1)*(x+2)*x`) and field-element expressions.

use crate::error::KrError;
use crate::field::{FElem, Field};
use crate::poly::Poly;
use crate::potential::Potential;

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Lexer<'a> {
        Lexer { s: s.as_bytes(), pos: 0 }
    }

    fn next(&mut self) -> Result<Tok, KrError> {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.s.len() {
            return Ok(Tok::End);
        }
        let c = self.s[self.pos];
        self.pos += 1;
        Ok(match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                let start = self.pos - 1;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                Tok::Num(txt.parse().map_err(|_| {
                    KrError::Parse(format!("integer literal too large at {start}"))
                })?)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos - 1;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(std::str::from_utf8(&self.s[start..self.pos]).unwrap().into())
            }
            _ => {
                return Err(KrError::Parse(format!(
                    "unexpected character '{}' at {}",
                    c as char,
                    self.pos - 1
                )))
            }
        })
    }
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    field: &'a Field,
    var: &'a str,
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> &Tok {
        self.toks.get(self.pos).unwrap_or(&Tok::End)
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Poly, KrError> {
        let mut acc = if *self.peek() == Tok::Minus {
            self.bump();
            self.term()?.neg(self.field)
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.add(self.field, &t);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.sub(self.field, &t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, KrError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let t = self.factor()?;
                    acc = acc.mul(self.field, &t);
                }
                Tok::Slash => {
                    self.bump();
                    let t = self.factor()?;
                    if t.deg() != Some(0) {
                        return Err(KrError::Parse("division by a non-constant".into()));
                    }
                    let inv = self
                        .field
                        .inv(&t.c[0])
                        .ok_or_else(|| KrError::Parse("division by zero".into()))?;
                    acc = acc.scale(self.field, &inv);
                }
                // implicit multiplication like 2x or 3(x+1)
                Tok::Ident(_) | Tok::LParen | Tok::Num(_) => {
                    let t = self.factor()?;
                    acc = acc.mul(self.field, &t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Poly, KrError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            match self.bump() {
                Tok::Num(e) if e >= 0 => Ok(base.pow(self.field, e as u32)),
                _ => Err(KrError::Parse("exponent must be a nonnegative integer".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, KrError> {
        match self.bump() {
            Tok::Num(k) => Ok(Poly::constant(self.field, self.field.from_i64(k))),
            Tok::Minus => Ok(self.atom()?.neg(self.field)),
            Tok::Ident(name) if name == self.var => Ok(Poly::x(self.field)),
            Tok::Ident(name) => match resolve_generator(self.field, &name) {
                Some(e) => Ok(Poly::constant(self.field, e)),
                None => Err(KrError::Parse(format!("unknown symbol '{name}'"))),
            },
            Tok::LParen => {
                let e = self.expr()?;
                if self.bump() != Tok::RParen {
                    return Err(KrError::Parse("expected ')'".into()));
                }
                Ok(e)
            }
            t => Err(KrError::Parse(format!("unexpected token {t:?}"))),
        }
    }
}

/// Generator of any level of the tower, lifted into the full field.
fn resolve_generator(field: &Field, name: &str) -> Option<FElem> {
    match field {
        Field::Ext { base, gen, .. } => {
            if gen == name {
                field.gen_elem()
            } else {
                resolve_generator(base, name).map(|e| field.lift(&e))
            }
        }
        _ => None,
    }
}

/// Polynomial in `var` with coefficients in `field`.
pub fn parse_poly(text: &str, field: &Field, var: &str) -> Result<Poly, KrError> {
    let mut lx = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let t = lx.next()?;
        if t == Tok::End {
            break;
        }
        toks.push(t);
    }
    let mut p = ExprParser { toks, pos: 0, field, var };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(KrError::Parse("trailing input".into()));
    }
    Ok(e)
}

/// Constant expression in the field (roots like `i`, `-1`, `1/2`).
pub fn parse_elem(text: &str, field: &Field) -> Result<FElem, KrError> {
    let p = parse_poly(text, field, "\u{0}")?;
    match p.deg() {
        None => Ok(field.zero()),
        Some(0) => Ok(p.c[0].clone()),
        _ => Err(KrError::Parse("expected a constant expression".into())),
    }
}

/// `Q`, `F<p>`, or extensions `<base>[g]/(minpoly in g)`, left to right.
pub fn parse_field(text: &str) -> Result<Field, KrError> {
    let text = text.trim();
    let (mut field, mut rest) = if let Some(r) = text.strip_prefix('Q') {
        (Field::Q, r)
    } else if let Some(r) = text.strip_prefix('F') {
        let digits: String = r.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(KrError::Parse("expected a prime after 'F'".into()));
        }
        let p: u64 = digits.parse().map_err(|_| KrError::Parse("prime too large".into()))?;
        (Field::prime(p).map_err(KrError::Parse)?, &r[digits.len()..])
    } else {
        return Err(KrError::Parse(format!("unknown field '{text}'")));
    };
    while !rest.is_empty() {
        let r = rest
            .strip_prefix('[')
            .ok_or_else(|| KrError::Parse("expected '[' in field extension".into()))?;
        let close = r.find(']').ok_or_else(|| KrError::Parse("expected ']'".into()))?;
        let gen = r[..close].trim().to_string();
        // bare [i] defaults to the Gaussian extension
        if gen == "i" && !r[close + 1..].starts_with("/(") {
            let mp = parse_poly("i^2+1", &field, &gen)?;
            field = Field::extension(field, &gen, mp.c).map_err(KrError::Parse)?;
            rest = &r[close + 1..];
            continue;
        }
        let r = r[close + 1..]
            .strip_prefix("/(")
            .ok_or_else(|| KrError::Parse("expected '/(' after generator".into()))?;
        let close = matching_paren(r)?;
        let mp_text = &r[..close];
        let mp = parse_poly(mp_text, &field, &gen)?;
        if !mp.is_monic(&field) {
            return Err(KrError::Parse("extension min-poly must be monic".into()));
        }
        field = Field::extension(field, &gen, mp.c).map_err(KrError::Parse)?;
        rest = &r[close + 1..];
    }
    Ok(field)
}

fn matching_paren(s: &str) -> Result<usize, KrError> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                if depth == 0 {
                    return Ok(i);
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    Err(KrError::Parse("unbalanced parentheses in field descriptor".into()))
}

/// Monic potential in `x` over the field.
pub fn parse_potential(text: &str, field: &Field) -> Result<Potential, KrError> {
    let p = parse_poly(text, field, "x")?;
    Potential::new(field.clone(), p).map_err(KrError::Parse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potentials() {
        let f = Field::Q;
        let w = parse_potential("x^5-x", &f).unwrap();
        assert_eq!(w.n, 5);
        assert!(w.is_separable());
        let w2 = parse_potential("(x-1)*(x+2)*x", &f).unwrap();
        assert_eq!(w2.n, 3);
        assert_eq!(w2.roots.len(), 3);
        let w3 = parse_potential("x^3+x+1", &f).unwrap();
        assert!(w3.roots.is_empty());
        assert!(parse_potential("2*x^2", &f).is_err()); // not monic
    }

    #[test]
    fn fields() {
        assert_eq!(parse_field("Q").unwrap(), Field::Q);
        assert_eq!(parse_field("F7").unwrap(), Field::Fp(7));
        assert!(parse_field("F6").is_err());
        let qi = parse_field("Q[i]/(i^2+1)").unwrap();
        assert_eq!(qi.name(), "Q[i]/(i^2+1)");
        let i = parse_elem("i", &qi).unwrap();
        assert_eq!(qi.mul(&i, &i), qi.from_i64(-1));
    }

    #[test]
    fn elements() {
        let f = Field::Q;
        assert_eq!(parse_elem("-1/2", &f).unwrap(), f.from_rat(-1, 2));
        let qi = parse_field("Q[i]/(i^2+1)").unwrap();
        let z = parse_elem("2*i-1", &qi).unwrap();
        assert_eq!(qi.fmt_elem(&z), "-1+2*i");
    }

    #[test]
    fn roots_over_extension() {
        let qi = parse_field("Q[i]/(i^2+1)").unwrap();
        let w = parse_potential("x^5-x", &qi).unwrap();
        assert_eq!(w.roots.len(), 5);
    }
}
