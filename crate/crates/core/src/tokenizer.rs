//! Character-class pretokenization and oracle-guided whitespace pruning.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::oracle::{OracleClient, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenClass {
    Letters,
    Digits,
    Whitespace,
    Punct,
}

impl TokenClass {
    pub fn of(c: char) -> TokenClass {
        if c.is_alphabetic() {
            TokenClass::Letters
        } else if c.is_ascii_digit() {
            TokenClass::Digits
        } else if matches!(c, ' ' | '\t' | '\n' | '\r') {
            TokenClass::Whitespace
        } else {
            TokenClass::Punct
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
}

impl Token {
    pub fn is_whitespace(&self) -> bool {
        self.class == TokenClass::Whitespace
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// The tokens of one seed program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
    pub source_id: String,
}

impl TokenSeq {
    pub fn new(source_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        TokenSeq { tokens, source_id: source_id.into() }
    }

    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizerOptions {
    /// Emit every digit as its own token instead of merging digit runs.
    pub split_digit_runs: bool,
}

/// Splits `text` into maximal letter runs, maximal digit runs, and
/// single-character whitespace and punctuation tokens.
pub fn pretokenize(text: &str) -> Vec<Token> {
    pretokenize_with(text, TokenizerOptions::default())
}

pub fn pretokenize_with(text: &str, opts: TokenizerOptions) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    for c in text.chars() {
        let class = TokenClass::of(c);
        let merges = match class {
            TokenClass::Letters => true,
            TokenClass::Digits => !opts.split_digit_runs,
            _ => false,
        };
        match tokens.last_mut() {
            Some(last) if merges && last.class == class => last.text.push(c),
            _ => tokens.push(Token { text: c.to_string(), class }),
        }
    }
    tokens
}

/// Drops whitespace tokens one at a time, left to right, keeping each
/// removal the oracle still accepts. Single pass; one query per whitespace
/// token at most.
pub fn remove_redundant_whitespace(
    seq: &TokenSeq,
    oracle: &OracleClient,
) -> Result<TokenSeq, OracleError> {
    let original = seq.text();
    if !oracle.accepts(&original)? {
        return Err(OracleError::SeedRejected(seq.source_id.clone()));
    }
    let mut tokens = seq.tokens.clone();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].is_whitespace() {
            let candidate: String = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t.text.as_str())
                .collect();
            if oracle.accepts(&candidate)? {
                tokens.remove(i);
                continue;
            }
        }
        i += 1;
    }
    // Removing a whitespace token may leave two letter (or digit) runs
    // adjacent; re-tokenize so runs stay maximal.
    let text: String = tokens.iter().map(|t| t.text.as_str()).collect();
    let mut pruned = TokenSeq::new(seq.source_id.clone(), tokens);
    if pretokenize(&text).len() != pruned.len() {
        pruned.tokens = pretokenize(&text);
    }
    Ok(pruned)
}
