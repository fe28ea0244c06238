// SPDX-License-Identifier: Apache-2.0

//! Token cursor shared by the LEF, DEF and ISPD readers.

use super::FormatError;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub line: usize,
}

/// Splits on whitespace, treating `;`, `(` and `)` as tokens of their own,
/// `"..."` as a single token (quotes dropped) and `#` as a line comment.
pub(crate) fn tokenize(text: &str, split_parens: bool) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' => {
                let start = i + 1;
                let l = line;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\n' {
                        line += 1;
                    }
                    i += 1;
                }
                out.push(Token {
                    text: &text[start..i.min(bytes.len())],
                    line: l,
                });
                i += 1;
            }
            b';' => {
                out.push(Token {
                    text: &text[i..i + 1],
                    line,
                });
                i += 1;
            }
            b'(' | b')' if split_parens => {
                out.push(Token {
                    text: &text[i..i + 1],
                    line,
                });
                i += 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i];
                    if c.is_ascii_whitespace() || c == b';' || c == b'"' || (split_parens && (c == b'(' || c == b')')) {
                        break;
                    }
                    i += 1;
                }
                out.push(Token {
                    text: &text[start..i],
                    line,
                });
            }
        }
    }
    out
}

pub(crate) struct Cursor<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(text: &'a str, split_parens: bool) -> Self {
        Cursor {
            toks: tokenize(text, split_parens),
            pos: 0,
        }
    }

    pub fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    pub fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::Syntax {
            line: self.line(),
            msg: msg.into(),
        }
    }

    pub fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.text)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn next(&mut self) -> Result<&'a str, FormatError> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t.text)
    }

    /// Steps back over the last consumed token.
    pub fn back(&mut self) {
        self.pos = self.pos.saturating_sub(1);
    }

    pub fn eat(&mut self, tok: &str) -> bool {
        if self.peek().is_some_and(|t| t.eq_ignore_ascii_case(tok)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &str) -> Result<(), FormatError> {
        let line = self.line();
        let t = self.next()?;
        if t.eq_ignore_ascii_case(tok) {
            Ok(())
        } else {
            Err(FormatError::Syntax {
                line,
                msg: format!("expected `{tok}`, found `{t}`"),
            })
        }
    }

    pub fn next_i64(&mut self) -> Result<i64, FormatError> {
        let line = self.line();
        let t = self.next()?;
        t.parse().map_err(|_| FormatError::Syntax {
            line,
            msg: format!("expected integer, found `{t}`"),
        })
    }

    pub fn next_usize(&mut self) -> Result<usize, FormatError> {
        let line = self.line();
        let t = self.next()?;
        t.parse().map_err(|_| FormatError::Syntax {
            line,
            msg: format!("expected non-negative integer, found `{t}`"),
        })
    }

    /// Skips to just past the next `;`.
    pub fn skip_statement(&mut self) -> Result<(), FormatError> {
        loop {
            if self.next()? == ";" {
                return Ok(());
            }
        }
    }

    /// Skips to just past `END <name>`.
    pub fn skip_block(&mut self, name: &str) -> Result<(), FormatError> {
        loop {
            let t = self.next()?;
            if t.eq_ignore_ascii_case("END") && self.peek().is_some_and(|n| n == name) {
                self.pos += 1;
                return Ok(());
            }
        }
    }
}

/// Exact decimal value `mantissa / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Decimal {
    mantissa: i128,
    scale: u32,
}

impl Decimal {
    pub fn parse(s: &str) -> Option<Decimal> {
        let (body, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (neg, body) = match body.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, body.strip_prefix('+').unwrap_or(body)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        if int.len() + frac.len() > 30 {
            return None;
        }
        let digits = format!("{int}{frac}");
        let mut mantissa: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        let mut scale = frac.len() as i32 - exp;
        while scale < 0 {
            mantissa = mantissa.checked_mul(10)?;
            scale += 1;
        }
        if scale > 30 {
            return None;
        }
        if neg {
            mantissa = -mantissa;
        }
        Some(Decimal {
            mantissa,
            scale: scale as u32,
        })
    }

    /// `self * factor^power` if the result is an integer.
    pub fn scaled_exact(&self, factor: i64, power: u32) -> Option<i64> {
        let mut v = self.mantissa;
        for _ in 0..power {
            v = v.checked_mul(factor as i128)?;
        }
        let div = 10i128.checked_pow(self.scale)?;
        if v % div != 0 {
            return None;
        }
        i64::try_from(v / div).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_scaling() {
        let d = Decimal::parse("0.02").unwrap();
        assert_eq!(d.scaled_exact(2000, 2), Some(80_000));
        assert_eq!(Decimal::parse("0.19").unwrap().scaled_exact(2000, 1), Some(380));
        assert_eq!(Decimal::parse("0.0001").unwrap().scaled_exact(2000, 1), None);
        assert_eq!(Decimal::parse("-1.5").unwrap().scaled_exact(1000, 1), Some(-1500));
        assert_eq!(Decimal::parse("2e-3").unwrap().scaled_exact(1000, 1), Some(2));
        assert_eq!(Decimal::parse("."), None);
        assert_eq!(Decimal::parse("1x"), None);
    }

    #[test]
    fn tokens_split_punctuation() {
        let t: Vec<&str> = tokenize("A (1 2);# c\n\"q s\"", true).iter().map(|t| t.text).collect();
        assert_eq!(t, vec!["A", "(", "1", "2", ")", ";", "q s"]);
    }
}
