//! Deterministic bubble ranking by neighbor-context similarity, used once
//! the guided passes stop making progress.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::bubbling::{Checker, Operand};
use crate::oracle::OracleError;
use crate::tree::{Node, ParseForest, Sym};

/// Longest sibling sequence considered as a bubble.
pub const MAX_BUBBLE_LEN: usize = 12;
/// Default number of consecutive rejects before giving up.
pub const DEFAULT_BUDGET: usize = 500;

type Ctx = (String, String);
type Profile = HashMap<Ctx, usize>;

#[derive(Debug, Default)]
struct SeqInfo {
    contexts: Profile,
    frequency: usize,
    depth: usize,
}

/// Neighbor contexts of every class and every sibling n-gram.
#[derive(Debug, Default)]
pub struct ContextIndex {
    classes: BTreeMap<Sym, SeqInfo>,
    seqs: HashMap<Vec<Sym>, SeqInfo>,
}

fn key(node: &Node) -> String {
    node.sym().to_string()
}

impl ContextIndex {
    pub fn build(forest: &ParseForest) -> Self {
        let mut index = ContextIndex::default();
        for t in &forest.trees {
            let ctx = ("^".to_string(), "$".to_string());
            index.note_class(t.root.sym(), &ctx, 0);
            index.visit(&t.root, &ctx, 0);
        }
        index
    }

    fn note_class(&mut self, sym: Sym, ctx: &Ctx, depth: usize) {
        let info = self.classes.entry(sym).or_default();
        *info.contexts.entry(ctx.clone()).or_default() += 1;
        info.frequency += 1;
        info.depth = info.depth.max(depth);
    }

    fn visit(&mut self, node: &Node, ctx: &Ctx, depth: usize) {
        let n = node.children.len();
        let left = |i: usize| if i == 0 { ctx.0.clone() } else { key(&node.children[i - 1]) };
        let right = |j: usize| if j == n { ctx.1.clone() } else { key(&node.children[j]) };
        let syms = node.child_syms();
        for (i, c) in node.children.iter().enumerate() {
            let cctx = (left(i), right(i + 1));
            if !c.is_leaf() {
                self.note_class(c.sym(), &cctx, depth + 1);
                self.visit(c, &cctx, depth + 1);
            } else if n > 1 {
                self.note_class(c.sym(), &cctx, depth + 1);
            }
        }
        for len in 2..=MAX_BUBBLE_LEN.min(n.saturating_sub(1)) {
            for i in 0..=n - len {
                let info = self.seqs.entry(syms[i..i + len].to_vec()).or_default();
                *info.contexts.entry((left(i), right(i + len))).or_default() += 1;
                info.frequency += 1;
                info.depth = info.depth.max(depth + 1);
            }
        }
    }

    /// Multiset Jaccard similarity of two context profiles.
    fn jaccard(a: &Profile, b: &Profile) -> f64 {
        let mut inter = 0;
        let mut union = 0;
        for (k, &x) in a {
            let y = b.get(k).copied().unwrap_or(0);
            inter += x.min(y);
            union += x.max(y);
        }
        for (k, &y) in b {
            if !a.contains_key(k) {
                union += y;
            }
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    fn profile_of(&self, op: &[Sym]) -> Option<&SeqInfo> {
        if op.len() == 1 {
            self.classes.get(&op[0])
        } else {
            self.seqs.get(op)
        }
    }

    /// Every class, most similar to `seq` first; ties by frequency, then
    /// symbol order.
    pub fn rank_partners(&self, seq: &[Sym]) -> Vec<(Sym, f64)> {
        let empty = SeqInfo::default();
        let me = self.profile_of(seq).unwrap_or(&empty);
        let mut out: Vec<(Sym, f64, usize)> = self
            .classes
            .iter()
            .filter(|(s, _)| !(seq.len() == 1 && **s == seq[0]))
            .map(|(s, info)| (s.clone(), Self::jaccard(&me.contexts, &info.contexts), info.frequency))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then_with(|| a.0.cmp(&b.0)));
        out.into_iter().map(|(s, sim, _)| (s, sim)).collect()
    }
}

/// A bubble with its partners in try order and the ranking keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub bubble: Operand,
    pub partners: Vec<Operand>,
    pub similarity: f64,
    pub frequency: usize,
    pub depth: usize,
    pub len: usize,
}

fn compare(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then(b.frequency.cmp(&a.frequency))
        .then(b.depth.cmp(&a.depth))
        .then(a.len.cmp(&b.len))
        .then_with(|| a.bubble.cmp(&b.bubble))
}

/// Sibling n-grams (and existing classes) ranked by best partner
/// similarity, frequency, depth (deeper first), length (shorter first),
/// then symbol order.
pub fn rank_bubbles(forest: &ParseForest) -> Vec<RankedCandidate> {
    let index = ContextIndex::build(forest);
    let mut out = Vec::new();
    for (seq, info) in &index.seqs {
        // a sequence seen only once cannot generalize anything by itself
        // unless it can stand in for an existing class
        let partners = index.rank_partners(seq);
        let Some(best) = partners.first().map(|p| p.1) else { continue };
        out.push(RankedCandidate {
            bubble: Operand::Seq(seq.clone()),
            partners: partners.into_iter().map(|(s, _)| Operand::Class(s)).collect(),
            similarity: best,
            frequency: info.frequency,
            depth: info.depth,
            len: seq.len(),
        });
    }
    for (sym, info) in &index.classes {
        let partners: Vec<(Sym, f64)> = index
            .rank_partners(std::slice::from_ref(sym))
            .into_iter()
            .filter(|(s, _)| s > sym)
            .collect();
        let Some(best) = partners.first().map(|p| p.1) else { continue };
        out.push(RankedCandidate {
            bubble: Operand::Class(sym.clone()),
            partners: partners.into_iter().map(|(s, _)| Operand::Class(s)).collect(),
            similarity: best,
            frequency: info.frequency,
            depth: info.depth,
            len: 1,
        });
    }
    out.sort_by(compare);
    out
}

/// Walks the ranking, re-ranking after every accepted merge, until
/// `budget` candidates in a row are rejected or the list runs out.
pub fn refine_with_heuristics(
    checker: &mut Checker<'_>,
    forest: &ParseForest,
    budget: usize,
) -> Result<ParseForest, OracleError> {
    let mut f = forest.clone();
    if budget == 0 {
        return Ok(f);
    }
    'outer: loop {
        let mut rejects = 0;
        for cand in rank_bubbles(&f) {
            if rejects >= budget {
                break 'outer;
            }
            match checker.check_against(&f, &cand.bubble, &cand.partners)? {
                Some(acc) => {
                    log::debug!("heuristic merge {} -> {}", cand.bubble, acc.label);
                    f = acc.forest;
                    continue 'outer;
                }
                None => rejects += 1,
            }
        }
        break;
    }
    Ok(f)
}
