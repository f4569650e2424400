//! Character-level Earley recognizer.
//!
//! Terminals may span several characters and character classes match any
//! non-empty run of their characters, so an item can jump ahead more than one
//! position. Nullable non-terminals are handled by advancing over them at
//! prediction time (Aycock and Horspool).

use std::collections::{HashMap, HashSet};

use super::{CharClass, Grammar, Symbol, START};

#[derive(Debug, Clone)]
enum Atom {
    Lit(Vec<char>),
    Nt(usize),
    Class(CharClass),
}

#[derive(Debug, Clone)]
struct Production {
    lhs: usize,
    rhs: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: u32,
    dot: u32,
    origin: u32,
}

/// A grammar compiled for repeated membership queries.
#[derive(Debug, Clone)]
pub struct Recognizer {
    prods: Vec<Production>,
    by_lhs: Vec<Vec<usize>>,
    nullable: Vec<bool>,
    start: Option<usize>,
}

impl Recognizer {
    pub fn new(g: &Grammar) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for name in g.nonterminals() {
            let next = index.len();
            index.entry(name).or_insert(next);
        }
        let mut prods = Vec::new();
        let mut by_lhs = vec![Vec::new(); index.len()];
        for (name, alts) in g.rules() {
            let lhs = index[name];
            for alt in alts {
                let mut rhs = Vec::with_capacity(alt.len());
                let mut dangling = false;
                for sym in alt {
                    match sym {
                        Symbol::Terminal(t) if t.is_empty() => {}
                        Symbol::Terminal(t) => rhs.push(Atom::Lit(t.chars().collect())),
                        Symbol::Class(c) => rhs.push(Atom::Class(*c)),
                        Symbol::NonTerminal(n) => match index.get(n.as_str()) {
                            Some(&i) => rhs.push(Atom::Nt(i)),
                            None => dangling = true,
                        },
                    }
                }
                // A reference to an undefined non-terminal derives nothing.
                if !dangling {
                    by_lhs[lhs].push(prods.len());
                    prods.push(Production { lhs, rhs });
                }
            }
        }
        let mut nullable = vec![false; index.len()];
        loop {
            let mut changed = false;
            for p in &prods {
                if !nullable[p.lhs] && p.rhs.iter().all(|a| matches!(a, Atom::Nt(n) if nullable[*n])) {
                    nullable[p.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let start = index.get(START).copied();
        Recognizer { prods, by_lhs, nullable, start }
    }

    pub fn accepts(&self, input: &str) -> bool {
        let Some(start) = self.start else {
            return false;
        };
        let text: Vec<char> = input.chars().collect();
        let n = text.len();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];

        fn push(sets: &mut [Vec<Item>], seen: &mut [HashSet<Item>], at: usize, item: Item) {
            if seen[at].insert(item) {
                sets[at].push(item);
            }
        }

        for &p in &self.by_lhs[start] {
            push(&mut sets, &mut seen, 0, Item { prod: p as u32, dot: 0, origin: 0 });
        }

        for i in 0..=n {
            let mut k = 0;
            while k < sets[i].len() {
                let item = sets[i][k];
                k += 1;
                let prod = &self.prods[item.prod as usize];
                let dot = item.dot as usize;
                if dot == prod.rhs.len() {
                    let origin = item.origin as usize;
                    let lhs = prod.lhs;
                    let mut j = 0;
                    while j < sets[origin].len() {
                        let waiting = sets[origin][j];
                        j += 1;
                        let wp = &self.prods[waiting.prod as usize];
                        if matches!(wp.rhs.get(waiting.dot as usize), Some(Atom::Nt(b)) if *b == lhs) {
                            push(&mut sets, &mut seen, i, Item { dot: waiting.dot + 1, ..waiting });
                        }
                    }
                    continue;
                }
                match &prod.rhs[dot] {
                    Atom::Nt(b) => {
                        for &p in &self.by_lhs[*b] {
                            push(&mut sets, &mut seen, i, Item { prod: p as u32, dot: 0, origin: i as u32 });
                        }
                        if self.nullable[*b] {
                            push(&mut sets, &mut seen, i, Item { dot: item.dot + 1, ..item });
                        }
                    }
                    Atom::Lit(chars) => {
                        if text[i..].starts_with(chars) {
                            push(&mut sets, &mut seen, i + chars.len(), Item { dot: item.dot + 1, ..item });
                        }
                    }
                    Atom::Class(class) => {
                        let mut end = i;
                        while end < n && class.matches(text[end]) {
                            end += 1;
                            push(&mut sets, &mut seen, end, Item { dot: item.dot + 1, ..item });
                        }
                    }
                }
            }
        }
        sets[n].iter().any(|it| {
            let p = &self.prods[it.prod as usize];
            p.lhs == start && it.origin == 0 && it.dot as usize == p.rhs.len()
        })
    }
}

/// True iff `s` is in the language of `g`.
pub fn earley_accepts(g: &Grammar, s: &str) -> bool {
    Recognizer::new(g).accepts(s)
}
