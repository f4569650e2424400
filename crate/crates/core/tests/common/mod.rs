//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use gram_forge::grammar::{Grammar, Symbol, START};
use rand::Rng;

/// Least fixpoint of the strings each non-terminal derives, truncated at
/// `max_len`; exact for the bounded language, cycles and empty rules
/// included.
pub fn bounded_language(g: &Grammar, max_len: usize) -> HashSet<String> {
    let mut sets: BTreeMap<&str, HashSet<String>> = g.nonterminals().map(|n| (n, HashSet::new())).collect();
    loop {
        let mut changed = false;
        for (name, alts) in g.rules() {
            for alt in alts {
                let mut acc: HashSet<String> = HashSet::from([String::new()]);
                for sym in alt {
                    let parts: Vec<String> = match sym {
                        Symbol::Terminal(t) => vec![t.clone()],
                        Symbol::NonTerminal(n) => sets[n.as_str()].iter().cloned().collect(),
                        other => panic!("unexpected symbol {other:?}"),
                    };
                    acc = acc
                        .iter()
                        .flat_map(|a| parts.iter().map(move |p| format!("{a}{p}")))
                        .filter(|s| s.len() <= max_len)
                        .collect();
                }
                let set = sets.get_mut(name).unwrap();
                for s in acc {
                    changed |= set.insert(s);
                }
            }
        }
        if !changed {
            return sets.remove(START).unwrap_or_default();
        }
    }
}

pub fn random_grammar<R: Rng>(rng: &mut R) -> Grammar {
    let n_nt = rng.gen_range(1..=5);
    let terminals = &["a", "b", "c"][..rng.gen_range(1..=3)];
    let names: Vec<String> = (0..n_nt).map(|i| format!("n{i}")).collect();
    let mut g = Grammar::new();
    g.add(START, vec![Symbol::nt(names[0].as_str())]);
    for name in &names {
        g.declare(name);
        for _ in 0..rng.gen_range(1..=3) {
            let alt = (0..rng.gen_range(0..=3))
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        Symbol::nt(names[rng.gen_range(0..n_nt)].as_str())
                    } else {
                        Symbol::t(terminals[rng.gen_range(0..terminals.len())])
                    }
                })
                .collect();
            g.add(name, alt);
        }
    }
    g
}

pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        frontier = frontier.iter().flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}"))).collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

