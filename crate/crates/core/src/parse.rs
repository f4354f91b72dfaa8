//! Expression parser for tower elements, symbols and tensor classes.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' exponent)?
//! atom   := INT | NAME | 'g' | '(' expr ')' | 'O' '(' NAME ('^' exponent)? ')'
//! ```

use crate::error::{Error, Result};
use crate::tower::{Elem, Tower, GEN_NAME};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    offset: usize,
    tower: &'a Tower,
    level: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.offset + self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<i64>() {
            Ok(n) => Ok(n),
            Err(_) => {
                self.pos = start;
                self.err("integer literal out of range")
            }
        }
    }

    fn name(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn exponent(&mut self) -> Result<i64> {
        if self.eat(b'(') {
            let e = self.exponent()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if self.eat(b'-') {
            return Ok(-self.int()?);
        }
        self.int()
    }

    fn expr(&mut self) -> Result<Elem> {
        let t = self.tower;
        let k = self.level;
        let mut acc = if self.eat(b'-') {
            let v = self.term()?;
            t.neg(k, &v)
        } else {
            self.term()?
        };
        loop {
            if self.eat(b'+') {
                let v = self.term()?;
                acc = t.add(k, &acc, &v);
            } else if self.eat(b'-') {
                let v = self.term()?;
                acc = t.sub(k, &acc, &v);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Elem> {
        let t = self.tower;
        let k = self.level;
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                let v = self.factor()?;
                acc = t.mul(k, &acc, &v);
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let v = self.factor()?;
                acc = t.div(k, &acc, &v).map_err(|e| self.locate(e, at))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn locate(&self, e: Error, at: usize) -> Error {
        match e {
            Error::DivisionByZero => {
                Error::Parse { pos: self.offset + at, msg: "division by zero".into() }
            }
            other => other,
        }
    }

    fn factor(&mut self) -> Result<Elem> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let at = self.pos;
            let e = self.exponent()?;
            return self.tower.pow(self.level, &base, e).map_err(|err| self.locate(err, at));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Elem> {
        let t = self.tower;
        let k = self.level;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.int()?;
                Ok(t.from_int(k, n))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.name();
                if name == "O" && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let var = self.name();
                    let j = self.var_index(&var, at)?;
                    let n = if self.eat(b'^') { self.exponent()? } else { 1 };
                    self.expect(b')')?;
                    return Ok(t.big_o(k, j, n));
                }
                if name == GEN_NAME {
                    let x = if t.fq().degree() == 1 {
                        // X is the root of the linear modulus
                        t.fq().from_int(-(t.fq().modulus()[0] as i64))
                    } else {
                        crate::gf::FFElem(t.p())
                    };
                    return Ok(t.constant(k, x));
                }
                let j = self.var_index(&name, at)?;
                Ok(t.var(k, j))
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }

    fn var_index(&self, name: &str, at: usize) -> Result<usize> {
        let j = self
            .tower
            .var_names()
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Parse {
                pos: self.offset + at,
                msg: format!("unknown variable {name:?}"),
            })?
            + 1;
        if j > self.level {
            return Err(Error::Parse {
                pos: self.offset + at,
                msg: format!("variable {name:?} does not live at level {}", self.level),
            });
        }
        Ok(j)
    }
}

fn parse_at(tower: &Tower, level: usize, src: &str, offset: usize) -> Result<Elem> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, offset, tower, level };
    let v = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(v)
}

/// Parses an element of level `level`.
pub fn parse_elem(tower: &Tower, level: usize, src: &str) -> Result<Elem> {
    parse_at(tower, level, src, 0)
}

/// Splits at top-level occurrences of `sep` (outside parentheses/braces).
fn split_top(src: &str, sep: &str) -> Vec<(usize, String)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut depth, mut start, mut i) = (0i32, 0usize, 0usize);
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'{' if !src[i..].starts_with(sep) => depth += 1,
            b')' | b'}' => depth -= 1,
            _ => {}
        }
        if depth == 0 && src[i..].starts_with(sep) {
            out.push((start, src[start..i].to_string()));
            i += sep.len();
            start = i;
            continue;
        }
        i += 1;
    }
    out.push((start, src[start..].to_string()));
    out
}

/// Parses a formal symbol sum such as `{1+t, u} - 2*{t, u}`.
pub fn parse_symbol_sum(tower: &Tower, level: usize, src: &str) -> Result<Vec<(i64, Vec<Elem>)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let ws = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    loop {
        ws(&mut i);
        if i >= bytes.len() {
            break;
        }
        let mut sign = 1i64;
        if !out.is_empty() || bytes[i] == b'-' || bytes[i] == b'+' {
            match bytes.get(i) {
                Some(b'+') => i += 1,
                Some(b'-') => {
                    sign = -1;
                    i += 1
                }
                _ => return Err(Error::Parse { pos: i, msg: "expected '+' or '-'".into() }),
            }
            ws(&mut i);
        }
        let mut mult = 1i64;
        if i < bytes.len() && bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            mult = src[start..i]
                .parse()
                .map_err(|_| Error::Parse { pos: start, msg: "bad multiplier".into() })?;
            ws(&mut i);
            if i < bytes.len() && bytes[i] == b'*' {
                i += 1;
                ws(&mut i);
            }
        }
        if i >= bytes.len() || bytes[i] != b'{' {
            return Err(Error::Parse { pos: i, msg: "expected '{'".into() });
        }
        let open = i;
        let mut depth = 0;
        let mut close = None;
        for (j, &c) in bytes.iter().enumerate().skip(open) {
            match c {
                b'{' | b'(' => depth += 1,
                b'}' | b')' => {
                    depth -= 1;
                    if depth == 0 {
                        if c != b'}' {
                            return Err(Error::Parse { pos: j, msg: "unbalanced brackets".into() });
                        }
                        close = Some(j);
                        break;
                    }
                }
                _ => {}
            }
        }
        let close = close.ok_or(Error::Parse { pos: open, msg: "unterminated symbol".into() })?;
        let inner = &src[open + 1..close];
        let mut entries = Vec::new();
        for (off, part) in split_top(inner, ",") {
            let e = parse_at(tower, level, &part, open + 1 + off)?;
            if e.is_exact_zero() {
                return Err(Error::Parse { pos: open + 1 + off, msg: "symbol entry is zero".into() });
            }
            entries.push(e);
        }
        out.push((sign * mult, entries));
        i = close + 1;
    }
    if out.is_empty() {
        return Err(Error::Parse { pos: 0, msg: "empty symbol expression".into() });
    }
    Ok(out)
}

/// Parses a tensor `w (x) b_1 (x) ... (x) b_r` into its factors.
pub fn parse_tensor(tower: &Tower, level: usize, src: &str) -> Result<Vec<Elem>> {
    split_top(src, "(x)")
        .into_iter()
        .map(|(off, part)| parse_at(tower, level, &part, off))
        .collect()
}
