//! Context-free grammars: the value type, the `.bnf` text format, an Earley
//! recognizer, a bounded random sampler, induction from parse trees and
//! lexical generalization of terminals.

mod earley;
mod format;
mod induce;
mod lexical;
mod sample;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use indexmap::IndexMap;

pub use earley::{earley_accepts, Recognizer};
pub use format::{parse_grammar_file, serialize, SyntaxError};
pub use induce::induce_grammar;
pub use lexical::{expand_tokens, LexicalOptions};

pub use sample::{sample_from_grammar, Sampler, DEFAULT_MAX_DEPTH, MAX_SAMPLE_LEN};

/// Name of the mandatory start rule.
pub const START: &str = "start";

/// Character classes a terminal can be generalized to. Each matches a
/// non-empty run of characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharClass {
    /// `[0-9]+`
    Digits1Plus,
    /// One or more alphabetic characters.
    Letters1Plus,
    /// `[A-Za-z0-9_]+` (alphabetic is Unicode-aware).
    AlnumUnderscore1Plus,
    /// Printable, non-whitespace ASCII.
    AnyPrintable1Plus,
}

impl CharClass {
    pub const ALL: [CharClass; 4] = [
        CharClass::Digits1Plus,
        CharClass::Letters1Plus,
        CharClass::AlnumUnderscore1Plus,
        CharClass::AnyPrintable1Plus,
    ];

    pub fn matches(self, c: char) -> bool {
        match self {
            CharClass::Digits1Plus => c.is_ascii_digit(),
            CharClass::Letters1Plus => c.is_alphabetic(),
            CharClass::AlnumUnderscore1Plus => c.is_alphabetic() || c.is_ascii_digit() || c == '_',
            CharClass::AnyPrintable1Plus => c.is_ascii_graphic(),
        }
    }

    pub fn matches_str(self, s: &str) -> bool {
        !s.is_empty() && s.chars().all(|c| self.matches(c))
    }

    /// Spelling in grammar files.
    pub fn spelling(self) -> &'static str {
        match self {
            CharClass::Digits1Plus => "<digits+>",
            CharClass::Letters1Plus => "<letters+>",
            CharClass::AlnumUnderscore1Plus => "<alnum_+>",
            CharClass::AnyPrintable1Plus => "<print+>",
        }
    }

    pub fn from_spelling(s: &str) -> Option<CharClass> {
        CharClass::ALL.into_iter().find(|c| c.spelling() == s)
    }

    /// Characters the sampler draws from.
    pub(crate) fn alphabet(self) -> &'static [u8] {
        match self {
            CharClass::Digits1Plus => b"0123456789",
            CharClass::Letters1Plus => b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ",
            CharClass::AlnumUnderscore1Plus => {
                b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
            }
            CharClass::AnyPrintable1Plus => {
                b"!#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[]^_`abcdefghijklmnopqrstuvwxyz{|}~"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(String),
    NonTerminal(String),
    Class(CharClass),
}

impl Symbol {
    pub fn t(s: impl Into<String>) -> Symbol {
        Symbol::Terminal(s.into())
    }

    pub fn nt(s: impl Into<String>) -> Symbol {
        Symbol::NonTerminal(s.into())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(t) => f.write_str(&format::quote(t)),
            Symbol::NonTerminal(n) => f.write_str(n),
            Symbol::Class(c) => f.write_str(c.spelling()),
        }
    }
}

pub type Alternative = Vec<Symbol>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar has no `start` rule")]
    MissingStart,
    #[error("non-terminal `{0}` is referenced but has no rule")]
    Undefined(String),
    #[error("non-terminal `{0}` has no finite derivation")]
    NonTerminating(String),
    #[error("empty terminal in rule `{0}`")]
    EmptyTerminal(String),
}

/// A context-free grammar whose start symbol is always [`START`].
///
/// Rules keep insertion order so serialization is stable; alternatives of a
/// rule are duplicate-free and keep first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grammar {
    rules: IndexMap<String, Vec<Alternative>>,
}

impl Grammar {
    pub fn new() -> Self {
        Grammar::default()
    }

    pub fn start(&self) -> &str {
        START
    }

    /// Adds `name -> alt` unless already present. Returns whether it was new.
    pub fn add(&mut self, name: &str, alt: Alternative) -> bool {
        let alts = self.rules.entry(name.to_string()).or_default();
        if alts.contains(&alt) {
            false
        } else {
            alts.push(alt);
            true
        }
    }

    /// Ensures a (possibly empty) rule entry exists for `name`.
    pub fn declare(&mut self, name: &str) {
        self.rules.entry(name.to_string()).or_default();
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &[Alternative])> {
        self.rules.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn alternatives(&self, name: &str) -> Option<&[Alternative]> {
        self.rules.get(name).map(|v| v.as_slice())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rules.contains_key(name)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(|k| k.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Replaces every alternative of every rule with `f(alt)`, deduplicating.
    pub fn map_alternatives(&self, mut f: impl FnMut(&str, &Alternative) -> Alternative) -> Grammar {
        let mut out = Grammar::new();
        for (name, alts) in &self.rules {
            out.declare(name);
            for alt in alts {
                let mapped = f(name, alt);
                out.add(name, mapped);
            }
        }
        out
    }

    /// Distinct terminal strings and character classes on right-hand sides.
    pub fn terminals(&self) -> BTreeSet<Symbol> {
        self.rules
            .values()
            .flatten()
            .flatten()
            .filter(|s| !matches!(s, Symbol::NonTerminal(_)))
            .cloned()
            .collect()
    }

    /// Checks the structural invariants: `start` exists, every referenced
    /// non-terminal has a rule, no empty terminal.
    pub fn validate(&self) -> Result<(), GrammarError> {
        if !self.rules.contains_key(START) {
            return Err(GrammarError::MissingStart);
        }
        for (name, alts) in &self.rules {
            for sym in alts.iter().flatten() {
                match sym {
                    Symbol::NonTerminal(n) if !self.rules.contains_key(n) => {
                        return Err(GrammarError::Undefined(n.clone()))
                    }
                    Symbol::Terminal(t) if t.is_empty() => {
                        return Err(GrammarError::EmptyTerminal(name.clone()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Non-terminals reachable from `start`.
    pub fn reachable(&self) -> HashSet<&str> {
        let mut seen = HashSet::new();
        let mut stack = vec![START];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(alts) = self.rules.get(n) {
                for sym in alts.iter().flatten() {
                    if let Symbol::NonTerminal(m) = sym {
                        if let Some((k, _)) = self.rules.get_key_value(m.as_str()) {
                            stack.push(k.as_str());
                        }
                    }
                }
            }
        }
        seen
    }
}
