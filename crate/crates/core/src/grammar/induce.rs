use super::{Grammar, Symbol, START};
use crate::tree::{Node, ParseTree};

/// Reads a grammar off parse trees: every internal node contributes
/// `label -> children`, and `start -> <root label>` ties the roots in.
pub fn induce_grammar(trees: &[ParseTree]) -> Grammar {
    let mut g = Grammar::new();
    g.declare(START);
    for t in trees {
        if t.root.is_leaf() {
            g.add(START, vec![Symbol::Terminal(t.root.label.clone())]);
            continue;
        }
        if t.root.label == START {
            add_node(&mut g, &t.root);
        } else {
            g.add(START, vec![Symbol::NonTerminal(t.root.label.clone())]);
            add_node(&mut g, &t.root);
        }
    }
    g
}

fn add_node(g: &mut Grammar, node: &Node) {
    let alt = node
        .children
        .iter()
        .map(|c| {
            if c.is_leaf() {
                Symbol::Terminal(c.label.clone())
            } else {
                Symbol::NonTerminal(c.label.clone())
            }
        })
        .collect::<Vec<_>>();
    // a unit self-loop adds nothing to the language
    if !(alt.len() == 1 && alt[0] == Symbol::NonTerminal(node.label.clone())) {
        g.add(&node.label, alt);
    }
    for c in node.children.iter().filter(|c| !c.is_leaf()) {
        add_node(g, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{earley_accepts, serialize};
    use crate::tokenizer::{pretokenize, TokenSeq};
    use crate::tree::{create_naive_trees, Sym};

    fn forest(seeds: &[&str]) -> crate::tree::ParseForest {
        let seqs: Vec<TokenSeq> =
            seeds.iter().map(|s| TokenSeq::new(*s, pretokenize(s))).collect();
        create_naive_trees(&seqs, "stmt").unwrap()
    }

    #[test]
    fn flat_tree() {
        let f = forest(&["skip"]);
        let g = induce_grammar(&f.trees);
        assert_eq!(serialize(&g), "start: stmt\nstmt: \"skip\"\n");
    }

    #[test]
    fn merged_bubble_gives_alternation() {
        // if a==b ... / if true ...
        let mut f = forest(&["if a==b", "if true"]);
        let seq: Vec<Sym> = ["a", "=", "=", "b"].iter().map(|s| Sym::T(s.to_string())).collect();
        f.apply_bubble(&seq, "t_new");
        f.relabel(&Sym::N("t_new".into()), "t1");
        f.relabel(&Sym::T("true".into()), "t1");
        let g = induce_grammar(&f.trees);
        let t1 = g.alternatives("t1").unwrap();
        assert_eq!(t1.len(), 2);
        assert_eq!(t1[0], ["a", "=", "=", "b"].iter().map(|s| Symbol::t(*s)).collect::<Vec<_>>());
        assert_eq!(t1[1], vec![Symbol::t("true")]);
        assert!(earley_accepts(&g, "if true"));
        assert!(earley_accepts(&g, "if a==b"));
    }

    #[test]
    fn duplicate_trees_dedupe() {
        let one = induce_grammar(&forest(&["a+b"]).trees);
        let two = induce_grammar(&forest(&["a+b", "a+b"]).trees);
        assert_eq!(one, two);
    }
}
