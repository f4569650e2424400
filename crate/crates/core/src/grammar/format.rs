//! The `.bnf` text format.
//!
//! ```text
//! # comment
//! start: stmt
//! stmt: stmt "; " stmt | "skip"
//!     | "L = " numexpr
//! num: <digits+>
//! ```
//!
//! One rule per line; a line starting with `|` continues the previous rule.
//! Terminals are double-quoted with `\"`, `\\`, `\n`, `\t` and `\r` escapes.
//! `""` on its own spells the empty alternative; a bare `name:` declares a
//! rule with no alternatives.

use std::fmt;

use super::{CharClass, Grammar, Symbol, START};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

fn err(line: usize, column: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError { line, column, message: message.into() }
}

pub(crate) fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders `g` with the `start` rule first, then the remaining rules in
/// insertion order.
pub fn serialize(g: &Grammar) -> String {
    let mut out = String::new();
    let names = g
        .nonterminals()
        .filter(|n| *n == START)
        .chain(g.nonterminals().filter(|n| *n != START));
    for name in names {
        let alts = g.alternatives(name).unwrap_or_default();
        out.push_str(name);
        out.push(':');
        for (i, alt) in alts.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { " | " });
            if alt.is_empty() {
                out.push_str("\"\"");
            }
            for (j, sym) in alt.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&sym.to_string());
            }
        }
        out.push('\n');
    }
    out
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t' || c == '\r') {
            self.pos += 1;
        }
        if self.peek() == Some('#') {
            self.pos = self.chars.len();
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => self.pos += 1,
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn quoted(&mut self) -> Result<String, SyntaxError> {
        let open = self.col();
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(err(self.line, open, "unterminated string")),
                Some('"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    let at = self.col();
                    self.pos += 1;
                    let c = match self.peek() {
                        Some('"') => '"',
                        Some('\\') => '\\',
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        _ => return Err(err(self.line, at, "unknown escape")),
                    };
                    out.push(c);
                    self.pos += 1;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn class(&mut self) -> Result<CharClass, SyntaxError> {
        let at = self.col();
        let start = self.pos;
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == '>' {
                let spelled: String = self.chars[start..self.pos].iter().collect();
                return CharClass::from_spelling(&spelled)
                    .ok_or_else(|| err(self.line, at, format!("unknown character class {spelled}")));
            }
        }
        Err(err(self.line, at, "unterminated character class"))
    }

    /// Parses `alt ( "|" alt )*` up to end of line.
    fn alternatives(
        &mut self,
        refs: &mut Vec<(String, usize, usize)>,
    ) -> Result<Vec<Vec<Symbol>>, SyntaxError> {
        let mut alts = Vec::new();
        let mut current = Vec::new();
        let mut saw_symbol = false;
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('|') => {
                    if !saw_symbol {
                        return Err(err(self.line, self.col(), "empty alternative (write \"\")"));
                    }
                    alts.push(std::mem::take(&mut current));
                    saw_symbol = false;
                    self.pos += 1;
                }
                Some('"') => {
                    let t = self.quoted()?;
                    if !t.is_empty() {
                        current.push(Symbol::Terminal(t));
                    }
                    saw_symbol = true;
                }
                Some('<') => {
                    current.push(Symbol::Class(self.class()?));
                    saw_symbol = true;
                }
                Some(_) => {
                    let col = self.col();
                    let Some(name) = self.ident() else {
                        return Err(err(self.line, col, format!("unexpected character {:?}", self.peek().unwrap())));
                    };
                    refs.push((name.clone(), self.line, col));
                    current.push(Symbol::NonTerminal(name));
                    saw_symbol = true;
                }
            }
        }
        if saw_symbol {
            alts.push(current);
        } else if !alts.is_empty() {
            return Err(err(self.line, self.col(), "trailing `|`"));
        }
        Ok(alts)
    }
}

/// Parses grammar text. The result always has a `start` rule and no
/// undefined non-terminal references.
pub fn parse_grammar_file(text: &str) -> Result<Grammar, SyntaxError> {
    let mut g = Grammar::new();
    let mut refs: Vec<(String, usize, usize)> = Vec::new();
    let mut current: Option<String> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let mut cur = Cursor { chars: raw.chars().collect(), pos: 0, line: line_no };
        cur.skip_ws();
        match cur.peek() {
            None => continue,
            Some('|') => {
                let Some(name) = current.clone() else {
                    return Err(err(line_no, cur.col(), "continuation line without a rule"));
                };
                cur.pos += 1;
                let alts = cur.alternatives(&mut refs)?;
                if alts.is_empty() {
                    return Err(err(line_no, cur.col(), "empty alternative (write \"\")"));
                }
                for alt in alts {
                    g.add(&name, alt);
                }
            }
            Some(_) => {
                let col = cur.col();
                let name = cur
                    .ident()
                    .ok_or_else(|| err(line_no, col, "expected rule name"))?;
                cur.skip_ws();
                if cur.peek() != Some(':') {
                    return Err(err(line_no, cur.col(), "expected `:` after rule name"));
                }
                cur.pos += 1;
                g.declare(&name);
                for alt in cur.alternatives(&mut refs)? {
                    g.add(&name, alt);
                }
                current = Some(name);
            }
        }
    }
    if !g.contains(START) {
        return Err(err(last_line.max(1), 1, "grammar has no `start` rule"));
    }
    if let Some((name, line, column)) = refs.into_iter().find(|(n, _, _)| !g.contains(n)) {
        return Err(err(line, column, format!("undefined non-terminal `{name}`")));
    }
    Ok(g)
}
