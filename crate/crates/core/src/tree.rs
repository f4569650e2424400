//! Parse trees over seed programs and the structural rewrites on them.
//!
//! Leaves carry token text; internal nodes carry a non-terminal label. A
//! node's [`Sym`] is what grammar induction and bubbling see: `T(text)` for
//! a leaf, `N(label)` for an internal node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::tokenizer::TokenSeq;

pub type NodeId = u32;

/// Opening and closing bracket pairs used for pre-structuring.
pub const BRACKETS: [(&str, &str); 3] = [("(", ")"), ("[", "]"), ("{", "}")];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sym {
    /// A bare terminal (leaf) with this text.
    T(String),
    /// An internal node with this label.
    N(String),
}

impl Sym {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Sym::T(_))
    }

    pub fn text(&self) -> &str {
        match self {
            Sym::T(s) | Sym::N(s) => s,
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::T(t) => f.write_str(&display_token(t)),
            Sym::N(n) => f.write_str(n),
        }
    }
}

/// Token text with whitespace spelled out, as shown in tree levels and
/// traces: space is `\s`, newline `\n`, tab `\t`, carriage return `\r`.
pub fn display_token(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        match c {
            ' ' => out.push_str("\\s"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub children: Vec<Node>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn sym(&self) -> Sym {
        if self.is_leaf() {
            Sym::T(self.label.clone())
        } else {
            Sym::N(self.label.clone())
        }
    }

    pub fn child_syms(&self) -> Vec<Sym> {
        self.children.iter().map(Node::sym).collect()
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(Node::leaf_count).sum()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Node)) {
        f(self);
        for c in &mut self.children {
            c.walk_mut(f);
        }
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }
}

/// In-order concatenation of the leaf texts under `node`.
pub fn yield_string(node: &Node) -> String {
    let mut out = String::new();
    push_yield(node, &mut out);
    out
}

fn push_yield(node: &Node, out: &mut String) {
    if node.is_leaf() {
        out.push_str(&node.label);
    } else {
        for c in &node.children {
            push_yield(c, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    pub source_id: String,
    pub root: Node,
}

impl ParseTree {
    pub fn yield_string(&self) -> String {
        yield_string(&self.root)
    }
}

/// One occurrence of a sibling span: children `start..=end` of
/// `parent_node_id` in tree `tree_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bubble {
    pub tree_id: usize,
    pub parent_node_id: NodeId,
    pub start_index: usize,
    pub end_index: usize,
    pub proposed_label: Option<String>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("seed `{0}` has no tokens")]
    EmptySeed(String),
}

/// The parse trees of all seeds plus the label and id counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseForest {
    pub trees: Vec<ParseTree>,
    pub start_label: String,
    next_id: NodeId,
    next_fresh: u64,
}

/// Where one node sits inside its tree's yield.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub tree: usize,
    pub start: usize,
    pub end: usize,
}

impl ParseForest {
    pub fn new(start_label: impl Into<String>) -> Self {
        ParseForest { trees: Vec::new(), start_label: start_label.into(), next_id: 0, next_fresh: 1 }
    }

    pub fn alloc_id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn leaf(&mut self, text: impl Into<String>) -> Node {
        Node { id: self.alloc_id(), label: text.into(), children: Vec::new() }
    }

    pub fn internal(&mut self, label: impl Into<String>, children: Vec<Node>) -> Node {
        Node { id: self.alloc_id(), label: label.into(), children }
    }

    /// A `t<k>` label not used by any node in the forest.
    pub fn fresh_label(&mut self) -> String {
        let used = self.labels();
        loop {
            let candidate = format!("t{}", self.next_fresh);
            self.next_fresh += 1;
            if !used.contains(&candidate) {
                return candidate;
            }
        }
    }

    /// Every internal-node label in the forest.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.trees {
            t.root.walk(&mut |n| {
                if !n.is_leaf() {
                    out.insert(n.label.clone());
                }
            });
        }
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        for t in &self.trees {
            t.root.walk(&mut |_| n += 1);
        }
        n
    }

    pub fn yields(&self) -> Vec<String> {
        self.trees.iter().map(ParseTree::yield_string).collect()
    }

    /// Classes that can take part in a merge: every internal label, plus
    /// every terminal that occurs with siblings (a terminal that is the only
    /// child of its parent is already covered by that parent).
    pub fn classes(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for t in &self.trees {
            t.root.walk(&mut |n| {
                if !n.is_leaf() {
                    out.insert(n.sym());
                    if n.children.len() > 1 {
                        for c in n.children.iter().filter(|c| c.is_leaf()) {
                            out.insert(c.sym());
                        }
                    }
                }
            });
        }
        out
    }

    /// Spans of every occurrence of `sym` (see [`classes`](Self::classes)
    /// for which terminal leaves count).
    pub fn spans(&self, sym: &Sym) -> Vec<Span> {
        let mut out = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            let mut offset = 0;
            collect_spans(&t.root, sym, ti, &mut offset, false, &mut out);
        }
        out
    }

    /// Wraps every non-overlapping, leftmost occurrence of `seq` among the
    /// children of any node under a new node labeled `label`. Spans covering
    /// all children of their parent are left alone. Returns the number of
    /// new nodes.
    pub fn apply_bubble(&mut self, seq: &[Sym], label: &str) -> usize {
        if seq.is_empty() {
            return 0;
        }
        let mut trees = std::mem::take(&mut self.trees);
        let mut count = 0;
        for t in &mut trees {
            count += self.bubble_node(&mut t.root, seq, label);
        }
        self.trees = trees;
        count
    }

    fn bubble_node(&mut self, node: &mut Node, seq: &[Sym], label: &str) -> usize {
        let mut count = 0;
        for c in &mut node.children {
            count += self.bubble_node(c, seq, label);
        }
        let n = node.children.len();
        if n <= seq.len() {
            return count;
        }
        let syms = node.child_syms();
        let mut i = 0;
        let mut starts = Vec::new();
        while i + seq.len() <= n {
            if syms[i..i + seq.len()] == *seq {
                starts.push(i);
                i += seq.len();
            } else {
                i += 1;
            }
        }
        if starts.is_empty() {
            return count;
        }
        let old = std::mem::take(&mut node.children);
        let mut rest = old.into_iter().enumerate().peekable();
        let mut out = Vec::with_capacity(n);
        let mut next_start = starts.iter().peekable();
        while let Some((idx, child)) = rest.next() {
            if next_start.peek() == Some(&&idx) {
                next_start.next();
                let mut group = vec![child];
                for _ in 1..seq.len() {
                    group.push(rest.next().expect("span within bounds").1);
                }
                out.push(self.internal(label, group));
                count += 1;
            } else {
                out.push(child);
            }
        }
        node.children = out;
        count
    }

    /// Renames the class `from` to `to`. Internal nodes are relabeled;
    /// terminal leaves that have siblings are wrapped in a new `to` node.
    pub fn relabel(&mut self, from: &Sym, to: &str) {
        let mut trees = std::mem::take(&mut self.trees);
        for t in &mut trees {
            match from {
                Sym::N(name) => t.root.walk_mut(&mut |n| {
                    if !n.is_leaf() && n.label == *name {
                        n.label = to.to_string();
                    }
                }),
                Sym::T(text) => self.wrap_leaves(&mut t.root, text, to),
            }
        }
        self.trees = trees;
    }

    fn wrap_leaves(&mut self, node: &mut Node, text: &str, label: &str) {
        let arity = node.children.len();
        for i in 0..arity {
            let child = &mut node.children[i];
            if child.is_leaf() {
                if arity > 1 && child.label == text {
                    let leaf = std::mem::replace(child, Node { id: 0, label: String::new(), children: vec![] });
                    node.children[i] = self.internal(label, vec![leaf]);
                }
            } else {
                self.wrap_leaves(child, text, label);
            }
        }
    }

    /// Applies the rule `label -> seq` wherever it matches, repeatedly,
    /// until no sibling span matches any more. Returns the number of new
    /// nodes. A unit rule is applied once: repeating it would only stack
    /// more single-child wrappers.
    pub fn apply_rule_everywhere(&mut self, seq: &[Sym], label: &str) -> usize {
        if seq.len() < 2 {
            if seq.first().is_some_and(|s| *s == Sym::N(label.to_string())) {
                return 0;
            }
            return self.apply_bubble(seq, label);
        }
        let mut total = 0;
        loop {
            let n = self.apply_bubble(seq, label);
            if n == 0 {
                return total;
            }
            total += n;
        }
    }

    /// All occurrences of `seq` as strict sibling sub-spans.
    pub fn find_occurrences(&self, seq: &[Sym]) -> Vec<Bubble> {
        let mut out = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            t.root.walk(&mut |n| {
                let syms = n.child_syms();
                if syms.len() <= seq.len() || seq.is_empty() {
                    return;
                }
                for i in 0..=syms.len() - seq.len() {
                    if syms[i..i + seq.len()] == *seq {
                        out.push(Bubble {
                            tree_id: ti,
                            parent_node_id: n.id,
                            start_index: i,
                            end_index: i + seq.len() - 1,
                            proposed_label: None,
                        });
                    }
                }
            });
        }
        out
    }

    /// Indented text dump, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.trees {
            let _ = writeln!(out, "# {}", t.source_id);
            dump_node(&t.root, 0, &mut out);
        }
        out
    }
}

fn dump_node(node: &Node, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    if node.is_leaf() {
        let _ = writeln!(out, "{indent}{:?}", node.label);
    } else {
        let _ = writeln!(out, "{indent}{}", node.label);
        for c in &node.children {
            dump_node(c, depth + 1, out);
        }
    }
}

fn collect_spans(node: &Node, sym: &Sym, tree: usize, offset: &mut usize, has_siblings: bool, out: &mut Vec<Span>) {
    let start = *offset;
    if node.is_leaf() {
        *offset += node.label.len();
        if has_siblings && matches!(sym, Sym::T(t) if *t == node.label) {
            out.push(Span { tree, start, end: *offset });
        }
        return;
    }
    let siblings = node.children.len() > 1;
    for c in &node.children {
        collect_spans(c, sym, tree, offset, siblings, out);
    }
    if matches!(sym, Sym::N(l) if *l == node.label) {
        out.push(Span { tree, start, end: *offset });
    }
}

/// One flat tree per token sequence: a root labeled `start_label` with one
/// leaf per token.
pub fn create_naive_trees(seqs: &[TokenSeq], start_label: &str) -> Result<ParseForest, TreeError> {
    let mut forest = ParseForest::new(start_label);
    for seq in seqs {
        if seq.is_empty() {
            return Err(TreeError::EmptySeed(seq.source_id.clone()));
        }
        let leaves: Vec<Node> = seq.tokens.iter().map(|t| forest.leaf(t.text.clone())).collect();
        let root = forest.internal(start_label, leaves);
        forest.trees.push(ParseTree { source_id: seq.source_id.clone(), root });
    }
    Ok(forest)
}

/// Moves every matched bracket pair and its contents under a fresh `t<k>`
/// node, innermost first. Brackets only match their own kind; unmatched
/// brackets stay where they are. Returns the new labels in creation order.
pub fn prestructure_brackets(forest: &mut ParseForest) -> Vec<String> {
    let mut labels = Vec::new();
    let mut trees = std::mem::take(&mut forest.trees);
    for t in &mut trees {
        let children = std::mem::take(&mut t.root.children);
        t.root.children = group_brackets(forest, children, &mut labels);
    }
    forest.trees = trees;
    labels
}

fn group_brackets(forest: &mut ParseForest, children: Vec<Node>, labels: &mut Vec<String>) -> Vec<Node> {
    // Each frame: index into BRACKETS of its opener (None for the base) and
    // the nodes collected so far.
    let mut frames: Vec<(Option<usize>, Vec<Node>)> = vec![(None, Vec::new())];
    for child in children {
        let opener = child.is_leaf().then(|| BRACKETS.iter().position(|(o, _)| *o == child.label)).flatten();
        let closer = child.is_leaf().then(|| BRACKETS.iter().position(|(_, c)| *c == child.label)).flatten();
        if let Some(kind) = opener {
            frames.push((Some(kind), vec![child]));
        } else if closer.is_some() && frames.last().unwrap().0 == closer {
            let (_, mut nodes) = frames.pop().unwrap();
            nodes.push(child);
            let label = forest.fresh_label();
            labels.push(label.clone());
            let group = forest.internal(label, nodes);
            frames.last_mut().unwrap().1.push(group);
        } else {
            frames.last_mut().unwrap().1.push(child);
        }
    }
    // Unclosed openers: splice their contents back into the parent frame.
    while frames.len() > 1 {
        let (_, nodes) = frames.pop().unwrap();
        frames.last_mut().unwrap().1.extend(nodes);
    }
    frames.pop().unwrap().1
}

/// Labels of each depth level, left to right, e.g. `["[stmt]", "[skip]"]`.
pub fn tree_levels(tree: &ParseTree) -> Vec<String> {
    let mut levels = Vec::new();
    let mut current: Vec<&Node> = vec![&tree.root];
    while !current.is_empty() {
        let names: Vec<String> = current
            .iter()
            .map(|n| if n.is_leaf() { display_token(&n.label) } else { n.label.clone() })
            .collect();
        levels.push(format!("[{}]", names.join(" ")));
        current = current.iter().flat_map(|n| n.children.iter()).collect();
    }
    levels
}

/// Number of distinct merge classes (internal labels plus sibling-bearing
/// terminals).
pub fn vocabulary_size(forest: &ParseForest) -> usize {
    forest.classes().len()
}

/// Production counts `label -> children` over the forest, for diagnostics.
pub fn production_counts(forest: &ParseForest) -> BTreeMap<(String, Vec<Sym>), usize> {
    let mut out = BTreeMap::new();
    for t in &forest.trees {
        t.root.walk(&mut |n| {
            if !n.is_leaf() {
                *out.entry((n.label.clone(), n.child_syms())).or_insert(0) += 1;
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{pretokenize, TokenSeq};
    use proptest::prelude::*;

    pub(crate) fn forest_of(seeds: &[&str]) -> ParseForest {
        let seqs: Vec<TokenSeq> = seeds
            .iter()
            .enumerate()
            .map(|(i, s)| TokenSeq::new(format!("s{i}"), pretokenize(s)))
            .collect();
        create_naive_trees(&seqs, "stmt").unwrap()
    }

    const IF_ELSE_SEED: &str = "if(a+b) c=d+e+f; else c=d;";

    #[test]
    fn naive_tree_is_flat() {
        let f = forest_of(&["skip"]);
        assert_eq!(f.trees[0].root.label, "stmt");
        assert_eq!(f.trees[0].root.child_syms(), vec![Sym::T("skip".into())]);
    }

    #[test]
    fn naive_tree_leaf_count_of_running_example() {
        // if ( a + b ) _ c = d + e + f ; _ else _ c = d ;
        let f = forest_of(&[IF_ELSE_SEED]);
        assert_eq!(f.trees[0].root.children.len(), 22);
        assert!(f.trees[0].root.children.iter().all(Node::is_leaf));
    }

    #[test]
    fn unit_rules_apply_once() {
        let mut f = forest_of(&["a+b"]);
        let a = vec![Sym::T("a".into())];
        assert_eq!(f.apply_rule_everywhere(&a, "x"), 1);
        let x = vec![Sym::N("x".into())];
        assert_eq!(f.apply_rule_everywhere(&x, "x"), 0);
        assert_eq!(f.apply_rule_everywhere(&x, "y"), 1);
        assert_eq!(f.trees[0].yield_string(), "a+b");
    }

    #[test]
    fn empty_inputs() {
        assert!(create_naive_trees(&[], "stmt").unwrap().trees.is_empty());
        let empty = TokenSeq::new("e", vec![]);
        assert_eq!(create_naive_trees(&[empty], "stmt"), Err(TreeError::EmptySeed("e".into())));
    }

    #[test]
    fn brackets_become_fresh_nodes() {
        let mut f = forest_of(&[IF_ELSE_SEED]);
        let labels = prestructure_brackets(&mut f);
        assert_eq!(labels, vec!["t1".to_string()]);
        let root = &f.trees[0].root;
        assert_eq!(root.children[1].label, "t1");
        assert_eq!(yield_string(&root.children[1]), "(a+b)");
        assert_eq!(f.trees[0].yield_string(), IF_ELSE_SEED);
        let levels = tree_levels(&f.trees[0]);
        assert_eq!(levels[0], "[stmt]");
        assert!(levels[1].starts_with("[if t1 \\s c = d"));
    }

    #[test]
    fn nested_and_mismatched_brackets() {
        let mut f = forest_of(&["((x))", "a+b", "(]x)", "{[}"]);
        let labels = prestructure_brackets(&mut f);
        let outer = &f.trees[0].root.children[0];
        assert_eq!(outer.children.len(), 3);
        assert!(!outer.children[1].is_leaf());
        assert_eq!(yield_string(&outer.children[1]), "(x)");
        assert!(f.trees[1].root.children.iter().all(Node::is_leaf));
        // `]` does not close `(`, the outer pair still matches
        assert_eq!(f.trees[2].root.children.len(), 1);
        // `{[}`: `}` cannot close `[`, nothing matches
        assert_eq!(f.trees[3].root.children.len(), 3);
        assert_eq!(labels.len(), 3);
        assert_eq!(f.yields(), vec!["((x))", "a+b", "(]x)", "{[}"]);
    }

    #[test]
    fn levels_of_trivial_trees() {
        let f = forest_of(&["skip"]);
        assert_eq!(tree_levels(&f.trees[0]), vec!["[stmt]", "[skip]"]);
        let single = ParseTree { source_id: "x".into(), root: Node { id: 0, label: "x".into(), children: vec![] } };
        assert_eq!(tree_levels(&single).len(), 1);
    }

    #[test]
    fn bubble_groups_leftmost_non_overlapping() {
        let mut f = forest_of(&["a+a+a+a"]);
        let seq = vec![Sym::T("a".into()), Sym::T("+".into()), Sym::T("a".into())];
        assert_eq!(f.apply_bubble(&seq, "e"), 2);
        assert_eq!(
            f.trees[0].root.child_syms(),
            vec![Sym::N("e".into()), Sym::T("+".into()), Sym::N("e".into())]
        );
        // full span of the root is not bubbled
        let full = vec![Sym::N("e".into()), Sym::T("+".into()), Sym::N("e".into())];
        assert_eq!(f.apply_bubble(&full, "x"), 0);
    }

    #[test]
    fn rule_application_left_folds() {
        let mut f = forest_of(&["c=e+e+e;"]);
        f.relabel(&Sym::T("e".into()), "expr");
        let seq = vec![Sym::N("expr".into()), Sym::T("+".into()), Sym::N("expr".into())];
        f.apply_rule_everywhere(&seq, "expr");
        let root = &f.trees[0].root;
        assert_eq!(root.children.len(), 4);
        let top = &root.children[2];
        assert_eq!(top.child_syms(), seq);
        assert_eq!(yield_string(&top.children[0]), "e+e");
        assert_eq!(f.trees[0].yield_string(), "c=e+e+e;");
    }

    #[test]
    fn relabel_wraps_terminals_with_siblings_only() {
        let mut f = forest_of(&["a+b", "a"]);
        f.relabel(&Sym::T("a".into()), "expr");
        assert_eq!(f.trees[0].root.children[0].label, "expr");
        // the lone `a` is the whole program; it is covered by the root
        assert!(f.trees[1].root.children[0].is_leaf());
        assert_eq!(f.spans(&Sym::N("expr".into())).len(), 1);
        assert!(f.spans(&Sym::T("a".into())).is_empty());
    }

    #[test]
    fn spans_locate_yields() {
        let mut f = forest_of(&["x(a+b)y"]);
        prestructure_brackets(&mut f);
        let spans = f.spans(&Sym::N("t1".into()));
        assert_eq!(spans, vec![Span { tree: 0, start: 1, end: 6 }]);
        assert_eq!(f.spans(&Sym::T("a".into())), vec![Span { tree: 0, start: 2, end: 3 }]);
    }

    #[test]
    fn fresh_labels_skip_used_names() {
        let mut f = forest_of(&["a b"]);
        f.relabel(&Sym::T("a".into()), "t1");
        assert_eq!(f.fresh_label(), "t2");
    }

    proptest! {
        #[test]
        fn rewrites_preserve_yield(s in "[ab+()]{1,16}", pick in 0usize..4) {
            let mut f = forest_of(&[&s]);
            prestructure_brackets(&mut f);
            prop_assert_eq!(f.trees[0].yield_string(), s.clone());
            let seqs = [
                vec![Sym::T("a".into()), Sym::T("+".into())],
                vec![Sym::T("b".into())],
                vec![Sym::T("(".into()), Sym::T("a".into())],
                vec![Sym::T("+".into()), Sym::T("b".into()), Sym::T("+".into())],
            ];
            f.apply_rule_everywhere(&seqs[pick], "x");
            f.relabel(&Sym::T("a".into()), "y");
            f.relabel(&Sym::N("x".into()), "y");
            prop_assert_eq!(f.trees[0].yield_string(), s);
            // internal nodes never end up childless
            let mut ok = true;
            f.trees[0].root.walk(&mut |n| if !n.is_leaf() { ok &= !n.children.is_empty() });
            prop_assert!(ok);
        }
    }
}
