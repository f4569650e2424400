//! Hierarchical delta debugging over recovered trees: drop sibling nodes
//! level by level and keep every smaller tree that still passes a sampled
//! acceptance check.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{OracleClient, OracleError};
use crate::tree::{yield_string, Node, NodeId, ParseForest, ParseTree};

/// Strings checked per candidate tree.
pub const DEFAULT_SAMPLES: usize = 50;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// RNG seed for checking `tree`: the global seed mixed with the tree's
/// shape, so a check can be replayed exactly.
pub fn criterion_seed(seed: u64, tree: &ParseTree) -> u64 {
    let mut shape = String::new();
    shape_of(&tree.root, &mut shape);
    seed ^ fnv1a(shape.as_bytes())
}

fn shape_of(n: &Node, out: &mut String) {
    out.push_str(&n.label);
    if !n.is_leaf() {
        out.push('(');
        for c in &n.children {
            shape_of(c, out);
            out.push(',');
        }
        out.push(')');
    }
}

/// A labeled node occurrence: label, prefix, own yield, suffix.
struct Occ {
    label: String,
    prefix: String,
    own: String,
    suffix: String,
}

fn occurrences(root: &Node, out: &mut Vec<Occ>) {
    let full = yield_string(root);
    let mut offset = 0;
    collect(root, &full, &mut offset, out);
}

fn collect(n: &Node, full: &str, offset: &mut usize, out: &mut Vec<Occ>) {
    let start = *offset;
    if n.is_leaf() {
        *offset += n.label.len();
        return;
    }
    for c in &n.children {
        collect(c, full, offset, out);
    }
    out.push(Occ {
        label: n.label.clone(),
        prefix: full[..start].to_string(),
        own: full[start..*offset].to_string(),
        suffix: full[*offset..].to_string(),
    });
}

/// Checks `tree` against the oracle using `n` strings: its own yield, plus
/// swaps that put the tree's new node yields into contexts of the same
/// label elsewhere in `pool`, and pool yields into the tree's new
/// contexts.
pub fn passes_sample_criterion(
    pool: &ParseForest,
    tree: &ParseTree,
    oracle: &OracleClient,
    n: usize,
    seed: u64,
) -> Result<bool, OracleError> {
    if n == 0 {
        return Ok(true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(criterion_seed(seed, tree));
    let mut known = Vec::new();
    for t in &pool.trees {
        occurrences(&t.root, &mut known);
    }
    let mut mine = Vec::new();
    occurrences(&tree.root, &mut mine);

    let known_yields: HashSet<(&str, &str)> = known.iter().map(|o| (o.label.as_str(), o.own.as_str())).collect();
    let known_ctx: HashSet<(&str, &str, &str)> =
        known.iter().map(|o| (o.label.as_str(), o.prefix.as_str(), o.suffix.as_str())).collect();
    let new_yields: Vec<&Occ> =
        mine.iter().filter(|o| !known_yields.contains(&(o.label.as_str(), o.own.as_str()))).collect();
    let new_ctx: Vec<&Occ> = mine
        .iter()
        .filter(|o| !known_ctx.contains(&(o.label.as_str(), o.prefix.as_str(), o.suffix.as_str())))
        .collect();

    let mut strings = vec![tree.yield_string()];
    let mut seen: HashSet<String> = strings.iter().cloned().collect();
    let same_label = |label: &str| -> Vec<&Occ> { known.iter().filter(|o| o.label == label).collect() };
    let mut attempts = 0;
    while strings.len() < n && attempts < n * 10 && !(new_yields.is_empty() && new_ctx.is_empty()) {
        attempts += 1;
        let s = if !new_yields.is_empty() && (new_ctx.is_empty() || rng.gen_bool(0.5)) {
            let o = new_yields.choose(&mut rng).unwrap();
            let others = same_label(&o.label);
            let Some(host) = others.choose(&mut rng) else { continue };
            format!("{}{}{}", host.prefix, o.own, host.suffix)
        } else {
            let o = new_ctx.choose(&mut rng).unwrap();
            let others = same_label(&o.label);
            let Some(filler) = others.choose(&mut rng) else { continue };
            format!("{}{}{}", o.prefix, filler.own, o.suffix)
        };
        if seen.insert(s.clone()) {
            strings.push(s);
        }
    }
    oracle.accepts_all(&strings)
}

fn with_children(tree: &ParseTree, id: NodeId, keep: &[usize]) -> ParseTree {
    let mut t = tree.clone();
    let node = t.root.find_mut(id).expect("node in tree");
    let old = std::mem::take(&mut node.children);
    node.children = old.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, c)| c).collect();
    t
}

fn split(items: &[usize], n: usize) -> Vec<Vec<usize>> {
    let n = n.min(items.len());
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for k in 0..n {
        let end = start + (items.len() - start) / (n - k);
        out.push(items[start..end].to_vec());
        start = end;
    }
    out
}

struct Run<'a> {
    forest: &'a ParseForest,
    oracle: &'a OracleClient,
    seed: u64,
    samples: usize,
    seen: HashSet<String>,
    out: Vec<ParseTree>,
}

impl Run<'_> {
    /// `tree` with node `id` keeping only the children at `keep`, if that
    /// passes; passing trees are recorded.
    fn attempt(&mut self, tree: &ParseTree, id: NodeId, keep: &[usize], source: &str) -> Result<Option<ParseTree>, OracleError> {
        let cand = with_children(tree, id, keep);
        if !passes_sample_criterion(self.forest, &cand, self.oracle, self.samples, self.seed)? {
            return Ok(None);
        }
        let mut shape = String::new();
        shape_of(&cand.root, &mut shape);
        if self.seen.insert(shape) {
            let n = self.out.len();
            self.out.push(ParseTree { source_id: format!("{source}#hdd{n}"), root: cand.root.clone() });
        }
        Ok(Some(cand))
    }

    /// Classic ddmin over the children of `id`.
    fn ddmin(&mut self, tree: &mut ParseTree, id: NodeId, source: &str) -> Result<(), OracleError> {
        let arity = tree.root.find(id).map_or(0, |n| n.children.len());
        let mut items: Vec<usize> = (0..arity).collect();
        let mut granularity = 2;
        while items.len() >= 2 {
            let chunks = split(&items, granularity);
            let mut next = None;
            for chunk in &chunks {
                if let Some(cand) = self.attempt(tree, id, chunk, source)? {
                    next = Some((chunk.len(), cand, 2));
                    break;
                }
            }
            if next.is_none() && chunks.len() > 2 {
                for k in 0..chunks.len() {
                    let comp: Vec<usize> =
                        chunks.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, c)| c.clone()).collect();
                    if let Some(cand) = self.attempt(tree, id, &comp, source)? {
                        next = Some((comp.len(), cand, (granularity - 1).max(2)));
                        break;
                    }
                }
            }
            match next {
                Some((len, cand, g)) => {
                    // indices are relative to the node's current children
                    *tree = cand;
                    items = (0..len).collect();
                    granularity = g;
                }
                None => {
                    if granularity >= items.len() {
                        break;
                    }
                    granularity = (granularity * 2).min(items.len());
                }
            }
        }
        Ok(())
    }

    /// Removes contiguous runs of children that straddle ddmin's chunk
    /// boundaries (an optional clause such as `else <stmt>`). Shortest runs
    /// first; returns whether anything was removed.
    fn drop_runs(&mut self, tree: &mut ParseTree, id: NodeId, source: &str) -> Result<bool, OracleError> {
        let arity = tree.root.find(id).map_or(0, |n| n.children.len());
        for len in 2..arity {
            for start in 0..=arity - len {
                let keep: Vec<usize> = (0..arity).filter(|i| *i < start || *i >= start + len).collect();
                if let Some(cand) = self.attempt(tree, id, &keep, source)? {
                    *tree = cand;
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Runs HDD on every tree, root level first, one parent at a time. Returns
/// the original trees followed by every intermediate reduced tree that
/// passed the sample criterion.
pub fn hdd_decompose(
    forest: &ParseForest,
    oracle: &OracleClient,
    seed: u64,
    samples: usize,
) -> Result<Vec<ParseTree>, OracleError> {
    let mut run = Run { forest, oracle, seed, samples, seen: HashSet::new(), out: forest.trees.clone() };
    for t in &forest.trees {
        let mut shape = String::new();
        shape_of(&t.root, &mut shape);
        run.seen.insert(shape);
    }
    for original in &forest.trees {
        let before = run.out.len();
        let mut tree = original.clone();
        let mut queue = VecDeque::from([tree.root.id]);
        while let Some(id) = queue.pop_front() {
            // gentle removals first so the intermediate trees keep most of
            // their structure, then ddmin to a 1-minimal child list
            while run.drop_runs(&mut tree, id, &original.source_id)? {}
            run.ddmin(&mut tree, id, &original.source_id)?;
            if let Some(node) = tree.root.find(id) {
                queue.extend(node.children.iter().filter(|c| !c.is_leaf()).map(|c| c.id));
            }
        }
        log::debug!("hdd: {} kept {} reduced variants", original.source_id, run.out.len() - before);
    }
    Ok(run.out)
}
