//! Bracketed-list text form of a box: `[[x1, y1, z1], ..., [x8, y8, z8]]`.
//!
//! Output uses 6 fractional digits, no exponent and `", "` separators.
//! Input accepts arbitrary whitespace and plain decimals (optional sign,
//! optional fraction, no exponent).

use super::OrientedBox;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

pub fn format_box<T: Scalar>(b: &OrientedBox<T>) -> String {
    let triples: Vec<String> = b
        .corners()
        .iter()
        .map(|c| {
            let v: Vec<String> = c.iter().map(|x| format_decimal(x.to_f64_lossy())).collect();
            format!("[{}]", v.join(", "))
        })
        .collect();
    format!("[{}]", triples.join(", "))
}

fn format_decimal(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-')
        .bytes()
        .all(|c| c == b'0' || c == b'.')
    {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn parse_box<T: Scalar>(text: &str) -> Result<OrientedBox<T>> {
    let corners = Parser {
        s: text.as_bytes(),
        pos: 0,
    }
    .document()?;
    OrientedBox::from_corners(corners.map(|c| c.map(T::lit)))
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn document(mut self) -> Result<[Vec3<f64>; 8]> {
        self.expect(b'[')?;
        let mut triples = Vec::with_capacity(8);
        loop {
            triples.push(self.triple()?);
            if triples.len() > 8 {
                return Err(self.error("more than 8 corners"));
            }
            if self.eat(b',') {
                continue;
            }
            self.expect(b']')?;
            break;
        }
        self.skip_ws();
        if self.pos != self.s.len() {
            return Err(self.error("trailing characters"));
        }
        let n = triples.len();
        triples
            .try_into()
            .map_err(|_| Error::parse(format!("expected 8 corners, found {n}")))
    }

    fn triple(&mut self) -> Result<Vec3<f64>> {
        self.expect(b'[')?;
        let x = self.number()?;
        self.expect(b',')?;
        let y = self.number()?;
        self.expect(b',')?;
        let z = self.number()?;
        self.expect(b']')?;
        Ok([x, y, z])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let int_digits = self.digits();
        let mut frac_digits = 0;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            frac_digits = self.digits();
        }
        if int_digits == 0 && frac_digits == 0 {
            return Err(self.error("expected a decimal number"));
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| self.error("bad number"))?;
        if !value.is_finite() {
            return Err(self.error("number out of range"));
        }
        Ok(value)
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
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
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn error(&self, msg: impl std::fmt::Display) -> Error {
        Error::parse(format!("{msg} at byte {}", self.pos))
    }
}
