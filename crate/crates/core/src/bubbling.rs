//! Oracle-checked restructuring: materialize a bubble, swap yields between
//! it and a partner class, and keep the merge only if every swapped string
//! is accepted.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::heuristics::ContextIndex;
use crate::oracle::{OracleClient, OracleError};
use crate::tree::{ParseForest, Sym, BRACKETS};

/// Default number of swapped strings checked per merge.
pub const DEFAULT_CAP: usize = 100;
/// Contexts per side considered before pairing.
pub const MAX_CONTEXTS: usize = 50;

/// One side of a merge: an existing class, or a sibling sequence to be
/// grouped under a new node first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Class(Sym),
    Seq(Vec<Sym>),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Class(s) => write!(f, "{s}"),
            Operand::Seq(seq) => {
                let parts: Vec<String> = seq.iter().map(Sym::to_string).collect();
                write!(f, "[{}]", parts.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeCandidate {
    pub bubble: Operand,
    pub partner: Operand,
}

impl MergeCandidate {
    pub fn new(bubble: Operand, partner: Operand) -> Self {
        MergeCandidate { bubble, partner }
    }
}

/// Result of an accepted merge.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub forest: ParseForest,
    /// Label both sides now carry.
    pub label: String,
    /// The two sides as they were just before relabeling.
    pub sides: (Sym, Sym),
}

/// Names the class produced by merging two others.
pub trait LabelNamer {
    /// A label for a class deriving both `yield_a` and `yield_b`. `taken`
    /// holds labels already used for unrelated classes. `None` falls back
    /// to a fresh `t<k>` label.
    fn name(&mut self, yield_a: &str, yield_b: &str, taken: &BTreeSet<String>) -> Option<String>;
}

/// `t` followed by digits: the machine-generated label shape.
pub fn is_fresh_label(label: &str) -> bool {
    label.len() > 1 && label.starts_with('t') && label[1..].bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CheckStats {
    pub checks: u64,
    pub accepts: u64,
}

/// Runs merge checks against one oracle with a seeded RNG.
pub struct Checker<'a> {
    pub oracle: &'a OracleClient,
    pub cap: usize,
    rng: ChaCha8Rng,
    namer: Option<&'a mut dyn LabelNamer>,
    trace: Option<&'a mut dyn Write>,
    pub stats: CheckStats,
}

impl<'a> Checker<'a> {
    pub fn new(oracle: &'a OracleClient, seed: u64) -> Self {
        Checker {
            oracle,
            cap: DEFAULT_CAP,
            rng: ChaCha8Rng::seed_from_u64(seed),
            namer: None,
            trace: None,
            stats: CheckStats::default(),
        }
    }

    pub fn with_namer(mut self, namer: &'a mut dyn LabelNamer) -> Self {
        self.namer = Some(namer);
        self
    }

    pub fn with_trace(mut self, out: &'a mut dyn Write) -> Self {
        self.trace = Some(out);
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn log(&mut self, bubble: &Operand, partner: &Operand, accepted: bool, queries: usize) {
        if let Some(out) = self.trace.as_mut() {
            let verdict = if accepted { "accept" } else { "reject" };
            let _ = writeln!(out, "{bubble}\t{partner}\t{verdict}\t{queries}");
        }
    }

    /// Checks one candidate. On `None` the input forest is untouched.
    pub fn check_bubble(
        &mut self,
        forest: &ParseForest,
        cand: &MergeCandidate,
    ) -> Result<Option<Accepted>, OracleError> {
        self.check_against(forest, &cand.bubble, std::slice::from_ref(&cand.partner))
    }

    /// Materializes `bubble` once and tries each partner in order, keeping
    /// the first accepted merge.
    pub fn check_against(
        &mut self,
        forest: &ParseForest,
        bubble: &Operand,
        partners: &[Operand],
    ) -> Result<Option<Accepted>, OracleError> {
        let mut base = forest.clone();
        let Some(a) = materialize(&mut base, bubble) else {
            return Ok(None);
        };
        for partner in partners {
            // class partners leave the forest as is; only sequences need a copy
            let mut f = Cow::Borrowed(&base);
            let b = match partner {
                Operand::Class(s) => (!f.spans(s).is_empty()).then(|| s.clone()),
                Operand::Seq(_) => materialize(f.to_mut(), partner),
            };
            let Some(b) = b else { continue };
            if a == b {
                continue;
            }
            self.stats.checks += 1;
            let strings = sample_swapped_strings(&f, &a, &b, self.cap, &mut self.rng);
            let before = self.oracle.stats().calls_total;
            let ok = self.oracle.accepts_all(&strings)?;
            let queries = (self.oracle.stats().calls_total - before) as usize;
            self.log(bubble, partner, ok, queries);
            if ok {
                self.stats.accepts += 1;
                let mut f = f.into_owned();
                let label = self.merged_label(&mut f, &a, &b);
                f.relabel(&a, &label);
                f.relabel(&b, &label);
                return Ok(Some(Accepted { forest: f, label, sides: (a, b) }));
            }
        }
        Ok(None)
    }

    fn merged_label(&mut self, f: &mut ParseForest, a: &Sym, b: &Sym) -> String {
        let start = f.start_label.clone();
        let descriptive = |s: &Sym| matches!(s, Sym::N(l) if !is_fresh_label(l));
        for s in [a, b] {
            if matches!(s, Sym::N(l) if *l == start) {
                return start;
            }
        }
        match (descriptive(a), descriptive(b)) {
            (true, true) => return a.text().min(b.text()).to_string(),
            (true, false) => return a.text().to_string(),
            (false, true) => return b.text().to_string(),
            _ => {}
        }
        if let Some(namer) = self.namer.as_mut() {
            let ya = first_yield(f, a);
            let yb = first_yield(f, b);
            let mut taken = f.labels();
            for s in [a, b] {
                if let Sym::N(l) = s {
                    taken.remove(l);
                }
            }
            taken.insert(crate::grammar::START.to_string());
            if let Some(name) = namer.name(&ya, &yb, &taken) {
                return name;
            }
        }
        // Keep an existing machine label if there is one.
        for s in [b, a] {
            if let Sym::N(l) = s {
                return l.clone();
            }
        }
        f.fresh_label()
    }

    /// Tries every fresh bracket label against every existing class, in
    /// label order then class order. Accepted merges take effect
    /// immediately.
    pub fn merge_all_valid(
        &mut self,
        forest: &ParseForest,
        bracket_labels: &[String],
    ) -> Result<ParseForest, OracleError> {
        let mut f = forest.clone();
        for original in bracket_labels {
            let mut current = original.clone();
            let mut tried: HashSet<Sym> = HashSet::new();
            loop {
                let me = Sym::N(current.clone());
                if f.spans(&me).is_empty() {
                    break;
                }
                let next = f.classes().into_iter().find(|c| *c != me && !tried.contains(c));
                let Some(other) = next else { break };
                tried.insert(other.clone());
                let cand = MergeCandidate::new(Operand::Class(me), Operand::Class(other));
                if let Some(acc) = self.check_bubble(&f, &cand)? {
                    f = acc.forest;
                    current = acc.label;
                    tried.insert(Sym::N(current.clone()));
                }
            }
        }
        Ok(f)
    }

    /// One pass over the within-bracket sequences. Each accepted sequence is
    /// then folded wherever it still occurs. Returns whether anything
    /// changed.
    pub fn bracket_round(&mut self, forest: &mut ParseForest) -> Result<bool, OracleError> {
        let mut changed = false;
        for seq in bracket_bubble_candidates(forest) {
            if forest.find_occurrences(&seq).is_empty() {
                continue;
            }
            let partners = partner_order(forest, &seq, &enclosing_labels(forest, &seq));
            if let Some(acc) = self.check_against(forest, &Operand::Seq(seq.clone()), &partners)? {
                *forest = acc.forest;
                let renamed: Vec<Sym> = seq.iter().map(|s| rename(s, &acc.sides, &acc.label)).collect();
                forest.apply_rule_everywhere(&renamed, &acc.label);
                changed = true;
            }
        }
        Ok(changed)
    }
}

fn rename(s: &Sym, sides: &(Sym, Sym), label: &str) -> Sym {
    if *s == sides.0 || *s == sides.1 {
        Sym::N(label.to_string())
    } else {
        s.clone()
    }
}

/// Groups the operand's occurrences (for sequences) and returns the class
/// symbol, or `None` if it does not occur.
fn materialize(f: &mut ParseForest, op: &Operand) -> Option<Sym> {
    match op {
        Operand::Class(s) => (!f.spans(s).is_empty()).then(|| s.clone()),
        Operand::Seq(seq) if seq.len() == 1 => materialize(f, &Operand::Class(seq[0].clone())),
        Operand::Seq(seq) => {
            let label = f.fresh_label();
            (f.apply_bubble(seq, &label) > 0).then_some(Sym::N(label))
        }
    }
}

fn first_yield(f: &ParseForest, s: &Sym) -> String {
    f.spans(s)
        .first()
        .map(|sp| f.trees[sp.tree].yield_string()[sp.start..sp.end].to_string())
        .unwrap_or_default()
}

/// Partners for a sequence bubble: `first` labels, then every class by
/// decreasing context similarity.
pub(crate) fn partner_order(forest: &ParseForest, seq: &[Sym], first: &[Sym]) -> Vec<Operand> {
    let index = ContextIndex::build(forest);
    let mut out: Vec<Operand> = first.iter().cloned().map(Operand::Class).collect();
    for (s, _) in index.rank_partners(seq) {
        let op = Operand::Class(s);
        if !out.contains(&op) {
            out.push(op);
        }
    }
    out
}

/// Labels of bracket nodes whose inside is exactly `seq`.
fn enclosing_labels(forest: &ParseForest, seq: &[Sym]) -> Vec<Sym> {
    let mut out = Vec::new();
    for t in &forest.trees {
        t.root.walk(&mut |n| {
            if let Some(inner) = bracket_inside(&n.child_syms()) {
                if inner == seq && !out.contains(&n.sym()) {
                    out.push(n.sym());
                }
            }
        });
    }
    out
}

fn bracket_inside(children: &[Sym]) -> Option<&[Sym]> {
    if children.len() < 3 {
        return None;
    }
    let (Sym::T(open), Sym::T(close)) = (&children[0], &children[children.len() - 1]) else {
        return None;
    };
    BRACKETS
        .iter()
        .any(|(o, c)| o == open && c == close)
        .then(|| &children[1..children.len() - 1])
}

/// Distinct sequences found strictly inside a matched bracket pair,
/// shortest first, then lexicographic. A single-symbol inside stands for
/// its class.
pub fn bracket_bubble_candidates(forest: &ParseForest) -> Vec<Vec<Sym>> {
    let mut set: BTreeSet<(usize, Vec<Sym>)> = BTreeSet::new();
    for t in &forest.trees {
        t.root.walk(&mut |n| {
            if let Some(inner) = bracket_inside(&n.child_syms()) {
                set.insert((inner.len(), inner.to_vec()));
            }
        });
    }
    set.into_iter().map(|(_, s)| s).collect()
}

/// One occurrence: byte range `start..end` of tree `tree`'s yield.
struct Context {
    tree: usize,
    start: usize,
    end: usize,
}

impl Context {
    fn own<'y>(&self, yields: &'y [String]) -> &'y str {
        &yields[self.tree][self.start..self.end]
    }
}

/// Occurrences of `s` with distinct (prefix, suffix) pairs.
fn contexts(forest: &ParseForest, yields: &[String], s: &Sym) -> Vec<Context> {
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut out = Vec::new();
    for sp in forest.spans(s) {
        let y = yields[sp.tree].as_str();
        if seen.insert((&y[..sp.start], &y[sp.end..])) {
            out.push(Context { tree: sp.tree, start: sp.start, end: sp.end });
        }
    }
    out
}

/// Strings obtained by placing yields of `b` into contexts of `a` and vice
/// versa. At most `cap` distinct strings, split evenly between the two
/// directions; strings equal to the original program are skipped.
pub fn sample_swapped_strings<R: rand::Rng + ?Sized>(
    forest: &ParseForest,
    a: &Sym,
    b: &Sym,
    cap: usize,
    rng: &mut R,
) -> Vec<String> {
    if cap == 0 {
        return Vec::new();
    }
    let yields = forest.yields();
    if a == b {
        let trees: BTreeSet<usize> = forest.spans(a).iter().map(|s| s.tree).collect();
        let mut out: Vec<String> = Vec::new();
        for t in trees {
            if !out.contains(&yields[t]) {
                out.push(yields[t].clone());
            }
        }
        out.truncate(cap);
        return out;
    }
    let mut ca = contexts(forest, &yields, a);
    let mut cb = contexts(forest, &yields, b);
    for c in [&mut ca, &mut cb] {
        if c.len() > MAX_CONTEXTS {
            c.shuffle(rng);
            c.truncate(MAX_CONTEXTS);
        }
    }
    let ya: BTreeSet<&str> = ca.iter().map(|c| c.own(&yields)).collect();
    let yb: BTreeSet<&str> = cb.iter().map(|c| c.own(&yields)).collect();
    let ya: Vec<&str> = ya.into_iter().collect();
    let yb: Vec<&str> = yb.into_iter().collect();

    let mut seen = HashSet::new();
    let first = swaps(&ca, &yb, &yields, cap / 2 + cap % 2, &mut seen, rng);
    let second = swaps(&cb, &ya, &yields, cap - first.len(), &mut seen, rng);
    let mut out = first;
    out.extend(second);
    if out.len() < cap {
        // the second direction may have left room for the first
        let more = swaps(&ca, &yb, &yields, cap - out.len(), &mut seen, rng);
        out.extend(more);
    }
    out
}

fn swaps<R: rand::Rng + ?Sized>(
    ctxs: &[Context],
    fillers: &[&str],
    yields: &[String],
    quota: usize,
    seen: &mut HashSet<String>,
    rng: &mut R,
) -> Vec<String> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let total = ctxs.len() * fillers.len();
    if total <= 4096 {
        for i in 0..ctxs.len() {
            for j in 0..fillers.len() {
                pairs.push((i, j));
            }
        }
        pairs.shuffle(rng);
    } else {
        for _ in 0..4096 {
            pairs.push((rng.gen_range(0..ctxs.len()), rng.gen_range(0..fillers.len())));
        }
    }
    let mut out = Vec::new();
    for (i, j) in pairs {
        if out.len() >= quota {
            break;
        }
        let c = &ctxs[i];
        let y = &yields[c.tree];
        let s = format!("{}{}{}", &y[..c.start], fillers[j], &y[c.end..]);
        if s == yields[c.tree] {
            continue;
        }
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar_file;
    use crate::oracle::Acceptor;
    use crate::tokenizer::{pretokenize, TokenSeq};
    use crate::tree::{create_naive_trees, prestructure_brackets};
    use proptest::prelude::*;

    fn forest_of(seeds: &[&str]) -> ParseForest {
        let seqs: Vec<TokenSeq> = seeds
            .iter()
            .enumerate()
            .map(|(i, s)| TokenSeq::new(format!("s{i}"), pretokenize(s)))
            .collect();
        create_naive_trees(&seqs, "stmt").unwrap()
    }

    fn t(s: &str) -> Sym {
        Sym::T(s.into())
    }

    fn seq(s: &str) -> Vec<Sym> {
        pretokenize(s).into_iter().map(|t| Sym::T(t.text)).collect()
    }

    fn cond_oracle() -> OracleClient {
        let g = parse_grammar_file(
            "start: \"if \" cond \" then skip\"\ncond: \"a==b\" | \"true\" | \"false\"\n",
        )
        .unwrap();
        OracleClient::new(Acceptor::grammar(&g))
    }

    #[test]
    fn swap_strings_cover_both_directions() {
        let mut f = forest_of(&["if a==b then skip;x", "y;if true then skip"]);
        f.apply_bubble(&seq("a==b"), "t9");
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let out = sample_swapped_strings(&f, &Sym::N("t9".into()), &t("true"), 100, &mut rng);
        assert!(out.contains(&"if true then skip;x".to_string()));
        assert!(out.contains(&"y;if a==b then skip".to_string()));
    }

    #[test]
    fn self_swap_and_zero_cap() {
        let f = forest_of(&["a+b", "c"]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_swapped_strings(&f, &t("a"), &t("a"), 100, &mut rng), vec!["a+b"]);
        assert!(sample_swapped_strings(&f, &t("a"), &t("b"), 0, &mut rng).is_empty());
    }

    #[test]
    fn condition_merge_is_accepted() {
        let f = forest_of(&["if a==b then skip", "if true then skip", "if false then skip"]);
        let oracle = cond_oracle();
        let mut checker = Checker::new(&oracle, 101);
        let cand = MergeCandidate::new(Operand::Seq(seq("a==b")), Operand::Class(t("true")));
        let acc = checker.check_bubble(&f, &cand).unwrap().expect("accepted");
        let g = crate::grammar::induce_grammar(&acc.forest.trees);
        let alts = g.alternatives(&acc.label).unwrap();
        assert!(alts.contains(&seq("a==b").iter().map(|s| crate::grammar::Symbol::t(s.text())).collect()));
        assert!(alts.contains(&vec![crate::grammar::Symbol::t("true")]));
    }

    #[test]
    fn bad_merge_is_rejected_and_forest_untouched() {
        let f = forest_of(&["if a==b then skip", "if true then skip"]);
        let before = f.dump();
        let oracle = cond_oracle();
        let mut checker = Checker::new(&oracle, 101);
        let cand = MergeCandidate::new(Operand::Seq(seq("if a")), Operand::Class(t("true")));
        assert!(checker.check_bubble(&f, &cand).unwrap().is_none());
        assert_eq!(f.dump(), before);
    }

    #[test]
    fn merge_all_valid_collects_expression_leaves() {
        // expressions: letters or parenthesized sums
        let g = parse_grammar_file(
            "start: stmt\nstmt: \"if\" e \" \" v \"=\" e \";\" | v \"=\" e \";\"\ne: \"(\" e \"+\" e \")\" | e \"+\" e | v\nv: \"a\" | \"b\" | \"c\" | \"d\"\n",
        )
        .unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&g));
        let mut f = forest_of(&["if(a+b) c=d+a;"]);
        let labels = prestructure_brackets(&mut f);
        let mut checker = Checker::new(&oracle, 101);
        let out = checker.merge_all_valid(&f, &labels).unwrap();
        let merged = out.labels();
        // the bracket class absorbed at least the leaves a and b
        let e = merged.iter().find(|l| *l != "stmt").unwrap().clone();
        let ys: BTreeSet<String> = out
            .spans(&Sym::N(e))
            .iter()
            .map(|s| out.trees[s.tree].yield_string()[s.start..s.end].to_string())
            .collect();
        assert!(ys.contains("(a+b)"));
        assert!(ys.contains("a"));
        assert!(ys.contains("b"));
    }

    #[test]
    fn merge_all_valid_without_brackets_is_identity() {
        let f = forest_of(&["a+b"]);
        let oracle = OracleClient::new(Acceptor::from_fn(|_| true));
        let mut checker = Checker::new(&oracle, 101);
        assert_eq!(checker.merge_all_valid(&f, &[]).unwrap(), f);
    }

    #[test]
    fn identical_bracket_nodes_share_a_label() {
        let oracle = OracleClient::new(Acceptor::from_fn(|s: &str| {
            s.split(' ').all(|p| {
                p.len() >= 3 && p.starts_with('(') && p.ends_with(')') && p[1..p.len() - 1].chars().all(|c| c.is_alphabetic())
            })
        }));
        let mut f = forest_of(&["(a) (a)"]);
        let labels = prestructure_brackets(&mut f);
        assert_eq!(labels.len(), 2);
        let mut checker = Checker::new(&oracle, 101);
        let out = checker.merge_all_valid(&f, &labels).unwrap();
        let root = &out.trees[0].root;
        assert_eq!(root.children[0].label, root.children[2].label);
    }

    #[test]
    fn bracket_candidates() {
        let mut f = forest_of(&["(a,(a))", "x"]);
        prestructure_brackets(&mut f);
        let c = bracket_bubble_candidates(&f);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], seq("a"));
        assert_eq!(c[1], seq("a,").into_iter().chain([Sym::N("t1".into())]).collect::<Vec<_>>());
        let plain = forest_of(&["a+b"]);
        assert!(bracket_bubble_candidates(&plain).is_empty());
    }

    #[test]
    fn fresh_label_shape() {
        assert!(is_fresh_label("t12"));
        assert!(!is_fresh_label("t"));
        assert!(!is_fresh_label("true"));
        assert!(!is_fresh_label("expr"));
    }

    proptest! {
        #[test]
        fn rejected_checks_roll_back_exactly(
            seeds in prop::collection::vec("[ab+()=;]{1,8}", 1..4),
            start in 0usize..4,
            len in 2usize..4,
        ) {
            let refs: Vec<&str> = seeds.iter().map(|s| s.as_str()).collect();
            let f = forest_of(&refs);
            let before = f.dump();
            let tokens = f.trees[0].root.child_syms();
            prop_assume!(start + len < tokens.len());
            let bubble = tokens[start..start + len].to_vec();
            let oracle = OracleClient::new(Acceptor::from_fn(|_| false));
            let mut checker = Checker::new(&oracle, 101);
            for partner in f.classes() {
                let cand = MergeCandidate::new(Operand::Seq(bubble.clone()), Operand::Class(partner));
                let r = checker.check_bubble(&f, &cand).unwrap();
                // an empty sample set is accepted vacuously; otherwise rejected
                if let Some(acc) = r {
                    prop_assert!(acc.forest.trees.iter().zip(&f.trees).all(|(a, b)| a.yield_string() == b.yield_string()));
                }
            }
            prop_assert_eq!(f.dump(), before);
        }

        #[test]
        fn accepted_merges_stay_consistent(seed in 0u64..50) {
            let g = parse_grammar_file(
                "start: s\ns: \"x=\" e \";\" | s s\ne: e \"+\" e | \"a\" | \"b\" | \"(\" e \")\"\n",
            ).unwrap();
            let oracle = OracleClient::new(Acceptor::grammar(&g));
            let f = forest_of(&["x=a+b;", "x=(a);x=b;", "x=b+(b+a);"]);
            for a in f.classes() {
                for b in f.classes() {
                    if a >= b { continue; }
                    let mut checker = Checker::new(&oracle, seed);
                    let cand = MergeCandidate::new(Operand::Class(a.clone()), Operand::Class(b.clone()));
                    if let Some(acc) = checker.check_bubble(&f, &cand).unwrap() {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        for s in sample_swapped_strings(&f, &a, &b, 100, &mut rng) {
                            prop_assert!(oracle.accepts(&s).unwrap());
                        }
                        prop_assert!(acc.forest.classes().len() <= f.classes().len());
                    }
                }
            }
        }
    }
}
