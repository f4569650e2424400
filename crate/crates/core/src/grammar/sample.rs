use std::collections::HashMap;

use rand::Rng;

use super::{Alternative, Grammar, GrammarError, Symbol, START};

pub const DEFAULT_MAX_DEPTH: usize = 40;
/// Output length after which expansion is forced as if past `max_depth`.
/// Uniform choice over several recursive alternatives can otherwise grow
/// exponentially with depth.
pub const MAX_SAMPLE_LEN: usize = 4096;

/// Random derivation sampler. Below `max_depth` alternatives are picked
/// uniformly; at or beyond it (or once the output passes
/// [`MAX_SAMPLE_LEN`] bytes) only alternatives of minimal derivation height
/// are used, which guarantees termination.
#[derive(Debug, Clone)]
pub struct Sampler<'g> {
    grammar: &'g Grammar,
    /// Indices of minimal-height alternatives per non-terminal.
    shortest: HashMap<&'g str, Vec<usize>>,
    max_depth: usize,
}

impl<'g> Sampler<'g> {
    pub fn new(grammar: &'g Grammar, max_depth: usize) -> Result<Self, GrammarError> {
        if !grammar.contains(START) {
            return Err(GrammarError::MissingStart);
        }
        let heights = heights(grammar);
        let reachable = grammar.reachable();
        for name in grammar.nonterminals().filter(|n| reachable.contains(n)) {
            if !heights.contains_key(name) {
                return Err(GrammarError::NonTerminating(name.to_string()));
            }
        }
        let mut shortest = HashMap::new();
        for (name, alts) in grammar.rules() {
            let Some(&h) = heights.get(name) else { continue };
            let idx: Vec<usize> = alts
                .iter()
                .enumerate()
                .filter(|(_, alt)| alt_height(alt, &heights) == Some(h))
                .map(|(i, _)| i)
                .collect();
            shortest.insert(name, idx);
        }
        Ok(Sampler { grammar, shortest, max_depth })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut out = String::new();
        self.expand(START, 0, rng, &mut out);
        out
    }

    /// Expands a single non-terminal.
    pub fn sample_from<R: Rng + ?Sized>(&self, name: &str, rng: &mut R) -> String {
        let mut out = String::new();
        self.expand(name, 0, rng, &mut out);
        out
    }

    fn expand<R: Rng + ?Sized>(&self, name: &str, depth: usize, rng: &mut R, out: &mut String) {
        let Some(alts) = self.grammar.alternatives(name) else { return };
        if alts.is_empty() {
            return;
        }
        let alt = if depth >= self.max_depth || out.len() > MAX_SAMPLE_LEN {
            let choices = &self.shortest[name];
            &alts[choices[rng.gen_range(0..choices.len())]]
        } else {
            &alts[rng.gen_range(0..alts.len())]
        };
        for sym in alt {
            match sym {
                Symbol::Terminal(t) => out.push_str(t),
                Symbol::NonTerminal(n) => self.expand(n, depth + 1, rng, out),
                Symbol::Class(c) => {
                    let alphabet = c.alphabet();
                    for _ in 0..rng.gen_range(1..=3) {
                        out.push(alphabet[rng.gen_range(0..alphabet.len())] as char);
                    }
                }
            }
        }
    }
}

fn alt_height(alt: &Alternative, heights: &HashMap<&str, usize>) -> Option<usize> {
    let mut h = 0;
    for sym in alt {
        if let Symbol::NonTerminal(n) = sym {
            h = h.max(*heights.get(n.as_str())?);
        }
    }
    Some(h + 1)
}

/// Minimal derivation height of each non-terminal that has a finite
/// derivation.
fn heights(g: &Grammar) -> HashMap<&str, usize> {
    let mut heights: HashMap<&str, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for (name, alts) in g.rules() {
            let best = alts.iter().filter_map(|a| alt_height(a, &heights)).min();
            if let Some(b) = best {
                if heights.get(name).is_none_or(|&cur| b < cur) {
                    heights.insert(name, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return heights;
        }
    }
}

/// Draws `n` strings from `g` (duplicates allowed).
pub fn sample_from_grammar<R: Rng + ?Sized>(
    g: &Grammar,
    n: usize,
    max_depth: usize,
    rng: &mut R,
) -> Result<Vec<String>, GrammarError> {
    let sampler = Sampler::new(g, max_depth)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grammar::{earley_accepts, parse_grammar_file};

    #[test]
    fn single_terminal_grammar() {
        let g = parse_grammar_file("start: \"a\"\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_from_grammar(&g, 5, 40, &mut rng).unwrap(), vec!["a"; 5]);
    }

    #[test]
    fn left_recursion_terminates() {
        let g = parse_grammar_file("start: expr\nexpr: expr \"+\" expr | \"n\"\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = sample_from_grammar(&g, 200, 6, &mut rng).unwrap();
        assert_eq!(out.len(), 200);
        for s in &out {
            assert!(earley_accepts(&g, s), "{s}");
            // depth 6 bounds the expansion tree to 2^7 leaves
            assert!(s.len() <= 2 * 128);
        }
    }

    #[test]
    fn branching_grammar_stays_bounded() {
        // three recursive alternatives out of four: uniform choice explodes
        let g = parse_grammar_file("start: s\ns: s s | s s s | s \"x\" s | \"x\"\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in sample_from_grammar(&g, 50, 40, &mut rng).unwrap() {
            assert!(s.len() < 2 * MAX_SAMPLE_LEN, "{}", s.len());
        }
    }

    #[test]
    fn non_terminating_rule_is_reported() {
        let g = parse_grammar_file("start: a\na: a \"x\"\n").unwrap();
        assert_eq!(
            Sampler::new(&g, 40).unwrap_err(),
            GrammarError::NonTerminating("start".into())
        );
    }

    #[test]
    fn while_samples_are_members() {
        let g = parse_grammar_file(include_str!("../../grammars/while.bnf")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in sample_from_grammar(&g, 300, 40, &mut rng).unwrap() {
            assert!(earley_accepts(&g, &s), "{s}");
        }
    }
}
