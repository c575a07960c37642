use std::fmt;

use crate::base::{write_tuple, BaseResidue};
use crate::error::{Error, Result};

/// A coset (f, λ)Γ_γ encoded as the class of λ in Λ/Λ_γ together with the
/// sums of f over the translated cosets `base + q`, q ∈ E, reduced mod p.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetState {
    pub base: BaseResidue,
    pub sums: Vec<Vec<u64>>,
}

impl fmt::Display for CosetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|(", self.base)?;
        for (i, v) in self.sums.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_tuple(f, v.iter())?;
        }
        f.write_str(")")
    }
}

/// A point of a window: one coset state per level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowState(pub Vec<CosetState>);

impl fmt::Display for WindowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    column_offset: usize,
}

impl Cursor<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::parse(1, self.column_offset + self.pos + 1, msg)
    }

    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.text[start..self.pos].parse().map_err(|_| {
            self.pos = start;
            self.err("expected nonnegative integer")
        })
    }

    fn tuple(&mut self) -> Result<Vec<u64>> {
        self.expect(b'(')?;
        let mut out = vec![self.number()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn state(&mut self) -> Result<CosetState> {
        let base = BaseResidue(self.tuple()?);
        self.expect(b'|')?;
        self.expect(b'(')?;
        let mut sums = vec![self.tuple()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            sums.push(self.tuple()?);
        }
        self.expect(b')')?;
        Ok(CosetState { base, sums })
    }
}

impl CosetState {
    /// Parses `base|(v_1,...,v_l)`. Ranges are checked by the owning level.
    pub fn parse(text: &str) -> Result<CosetState> {
        WindowState::parse(text).and_then(|w| match <[CosetState; 1]>::try_from(w.0) {
            Ok([s]) => Ok(s),
            Err(_) => Err(Error::parse(1, 1, "expected a single level state")),
        })
    }
}

impl WindowState {
    /// Parses level states separated by `/`.
    pub fn parse(text: &str) -> Result<WindowState> {
        let mut cur = Cursor {
            text: text.trim(),
            pos: 0,
            column_offset: text.len() - text.trim_start().len(),
        };
        let mut out = vec![cur.state()?];
        while cur.peek() == Some(b'/') {
            cur.pos += 1;
            out.push(cur.state()?);
        }
        if cur.pos != cur.text.len() {
            return Err(cur.err("trailing input"));
        }
        Ok(WindowState(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms() {
        let s = CosetState {
            base: BaseResidue(vec![1]),
            sums: vec![vec![1], vec![0]],
        };
        assert_eq!(s.to_string(), "(1)|((1),(0))");
        assert_eq!(CosetState::parse("(1)|((1),(0))").unwrap(), s);
        let w = WindowState(vec![s.clone(), s.clone()]);
        assert_eq!(w.to_string(), "(1)|((1),(0))/(1)|((1),(0))");
        assert_eq!(WindowState::parse(&w.to_string()).unwrap(), w);
        let e = WindowState::parse("(1)|((1),(0)x").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 13, .. }), "{e:?}");
        assert!(CosetState::parse(&w.to_string()).is_err());
    }
}
