//! Generalizes literal terminals to character classes when the oracle
//! agrees.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{CharClass, Grammar, Symbol};
use crate::oracle::{OracleClient, OracleError};
use crate::tokenizer::TokenClass;
use crate::tree::{Node, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexicalOptions {
    /// Strings checked per rung.
    pub samples: usize,
    /// Also try [`CharClass::AnyPrintable1Plus`] as the top rung.
    pub any_printable: bool,
}

impl Default for LexicalOptions {
    fn default() -> Self {
        LexicalOptions { samples: 50, any_printable: false }
    }
}

fn ladder(text: &str, opts: &LexicalOptions) -> Vec<CharClass> {
    let mut chars = text.chars();
    let Some(first) = chars.next() else { return Vec::new() };
    let class = TokenClass::of(first);
    if !text.chars().all(|c| TokenClass::of(c) == class) {
        return Vec::new();
    }
    let mut rungs = match class {
        TokenClass::Digits => vec![CharClass::Digits1Plus, CharClass::AlnumUnderscore1Plus],
        TokenClass::Letters if text.chars().all(|c| c.is_ascii_alphabetic()) => {
            vec![CharClass::Letters1Plus, CharClass::AlnumUnderscore1Plus]
        }
        _ => return Vec::new(),
    };
    if opts.any_printable {
        rungs.push(CharClass::AnyPrintable1Plus);
    }
    rungs
}

fn random_member<R: Rng + ?Sized>(class: CharClass, avoid: &str, rng: &mut R) -> String {
    let alphabet = class.alphabet();
    loop {
        let len = rng.gen_range(1..=3);
        let s: String = (0..len).map(|_| *alphabet.choose(rng).unwrap() as char).collect();
        if s != avoid {
            return s;
        }
    }
}

/// Leaf texts of one tree with their positions, for substitution.
fn leaves(node: &Node, out: &mut Vec<String>) {
    if node.is_leaf() {
        out.push(node.label.clone());
    } else {
        for c in &node.children {
            leaves(c, out);
        }
    }
}

/// Strings from the trees with one occurrence of `text` swapped for a random
/// member of `class`.
fn rung_samples<R: Rng + ?Sized>(
    trees: &[Vec<String>],
    text: &str,
    class: CharClass,
    n: usize,
    rng: &mut R,
) -> Vec<String> {
    let occurrences: Vec<(usize, usize)> = trees
        .iter()
        .enumerate()
        .flat_map(|(t, ls)| ls.iter().enumerate().filter(|(_, l)| *l == text).map(move |(i, _)| (t, i)))
        .collect();
    if occurrences.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < n && attempts < n * 4 {
        attempts += 1;
        let &(t, i) = occurrences.choose(rng).unwrap();
        let replacement = random_member(class, text, rng);
        let s: String = trees[t]
            .iter()
            .enumerate()
            .map(|(j, l)| if j == i { replacement.as_str() } else { l.as_str() })
            .collect();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Climbs the class ladder for every letter-run or digit-run terminal of
/// `g` and substitutes the highest rung whose samples the oracle accepts
/// in full. Samples are the tree yields with one occurrence of the terminal
/// replaced by a random class member.
pub fn expand_tokens<R: Rng + ?Sized>(
    trees: &[ParseTree],
    g: &Grammar,
    oracle: &OracleClient,
    opts: &LexicalOptions,
    rng: &mut R,
) -> Result<Grammar, OracleError> {
    let leaf_lists: Vec<Vec<String>> = trees
        .iter()
        .map(|t| {
            let mut v = Vec::new();
            leaves(&t.root, &mut v);
            v
        })
        .collect();
    let mut chosen: BTreeMap<String, CharClass> = BTreeMap::new();
    for sym in g.terminals() {
        let Symbol::Terminal(text) = sym else { continue };
        let mut best = None;
        for class in ladder(&text, opts) {
            let samples = rung_samples(&leaf_lists, &text, class, opts.samples, rng);
            if samples.is_empty() || !oracle.accepts_all(&samples)? {
                break;
            }
            best = Some(class);
        }
        if let Some(class) = best {
            log::debug!("lexical: {text:?} -> {}", class.spelling());
            chosen.insert(text, class);
        }
    }
    if chosen.is_empty() {
        return Ok(g.clone());
    }
    Ok(g.map_alternatives(|_, alt| {
        alt.iter()
            .map(|s| match s {
                Symbol::Terminal(t) => chosen.get(t).map_or_else(|| s.clone(), |c| Symbol::Class(*c)),
                _ => s.clone(),
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{earley_accepts, induce_grammar, parse_grammar_file, sample_from_grammar};
    use crate::oracle::Acceptor;
    use crate::tokenizer::{pretokenize, TokenSeq};
    use crate::tree::create_naive_trees;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trees(seeds: &[&str]) -> Vec<ParseTree> {
        let seqs: Vec<TokenSeq> = seeds.iter().map(|s| TokenSeq::new(*s, pretokenize(s))).collect();
        create_naive_trees(&seqs, "stmt").unwrap().trees
    }

    #[test]
    fn digits_generalize_when_numerals_are_free() {
        let golden = parse_grammar_file("start: \"x=\" <digits+>\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&golden));
        let ts = trees(&["x=12"]);
        let g = induce_grammar(&ts);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let out = expand_tokens(&ts, &g, &oracle, &LexicalOptions::default(), &mut rng).unwrap();
        assert!(out.terminals().contains(&Symbol::Class(CharClass::Digits1Plus)));
        // "x" is a keyword here and must stay literal
        assert!(out.terminals().contains(&Symbol::t("x")));
        assert!(earley_accepts(&out, "x=9071"));
        assert!(!earley_accepts(&out, "x=a1"));
    }

    #[test]
    fn fixed_literals_stay() {
        let golden = parse_grammar_file("start: \"x=\" \"12\"\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&golden));
        let ts = trees(&["x=12"]);
        let g = induce_grammar(&ts);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let out = expand_tokens(&ts, &g, &oracle, &LexicalOptions::default(), &mut rng).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn identifiers_climb_to_alnum() {
        let golden = parse_grammar_file("start: \"let \" <alnum_+>\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&golden));
        let ts = trees(&["let foo"]);
        let g = induce_grammar(&ts);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = expand_tokens(&ts, &g, &oracle, &LexicalOptions::default(), &mut rng).unwrap();
        assert!(out.terminals().contains(&Symbol::Class(CharClass::AlnumUnderscore1Plus)));
        assert!(out.terminals().contains(&Symbol::t("let")));
    }

    #[test]
    fn expansion_is_monotone() {
        let golden = parse_grammar_file("start: \"x=\" <digits+> | \"y=\" \"7\"\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&golden));
        let ts = trees(&["x=12", "y=7", "x=3"]);
        let g = induce_grammar(&ts);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = expand_tokens(&ts, &g, &oracle, &LexicalOptions::default(), &mut rng).unwrap();
        for s in sample_from_grammar(&g, 50, 10, &mut rng).unwrap() {
            assert!(earley_accepts(&out, &s), "{s}");
        }
    }

    #[test]
    fn no_terminals_no_change() {
        let g = Grammar::new();
        let oracle = OracleClient::new(Acceptor::from_fn(|_| true));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = expand_tokens(&[], &g, &oracle, &LexicalOptions::default(), &mut rng).unwrap();
        assert_eq!(out, g);
        assert_eq!(oracle.stats().calls_total, 0);
    }
}
