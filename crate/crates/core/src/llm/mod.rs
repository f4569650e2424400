//! The LLM channel: bubble proposals, descriptive labels and a zero-shot
//! grammar baseline, behind a pluggable provider.
//!
//! Prompts are rendered from the templates in `prompts/`. Replies are
//! expected as JSON (or BNF for the zero-shot prompt) but parsed leniently;
//! anything that does not fit is dropped and logged.

mod http;
mod replay;
mod stub;
mod zero_shot;

use std::collections::{BTreeSet, HashSet};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bubbling::LabelNamer;
use crate::grammar::Grammar;
use crate::tree::{display_token, tree_levels, ParseForest, Sym};

pub use http::HttpProvider;
pub use replay::{RecordingProvider, ReplayProvider};
pub use stub::HeuristicStub;
pub use zero_shot::parse_bnf_reply;

/// Sampling temperature sent to live providers. Not configurable.
pub const TEMPERATURE: f64 = 0.0;
/// Sampling seed sent to live providers. Not configurable.
pub const SAMPLING_SEED: u64 = 101;
/// Most 1-bubbles kept from one reply.
pub const MAX_BUBBLES: usize = 20;
/// Longest accepted label.
pub const MAX_LABEL_LEN: usize = 20;

const LABEL_PROMPT: &str = include_str!("../../prompts/label.txt");
const ONE_BUBBLE_PROMPT: &str = include_str!("../../prompts/one_bubbles.txt");
const TWO_BUBBLE_PROMPT: &str = include_str!("../../prompts/two_bubbles.txt");
const ZERO_SHOT_PROMPT: &str = include_str!("../../prompts/zero_shot.txt");

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("provider failed: {0}")]
    Provider(String),
    #[error("no recorded reply for prompt {0}")]
    ReplayMiss(String),
    #[error("malformed reply: {0}")]
    MalformedReply(String),
    #[error("zero-shot inference needs at least one seed")]
    NoSeeds,
    #[error("replay store {path}: {reason}")]
    Store { path: String, reason: String },
}

/// Something that completes a prompt.
pub trait Provider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
    fn model_name(&self) -> &str;
}

/// Lowercase hex sha256 of a prompt, the replay-store key.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    One,
    Two,
}

/// Label sequences proposed as bubbles. For `Two` the list holds pairs:
/// entries `2i` and `2i + 1` belong together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BubbleProposal {
    pub kind: ProposalKind,
    pub labels: Vec<Vec<String>>,
}

impl BubbleProposal {
    pub fn empty(kind: ProposalKind) -> Self {
        BubbleProposal { kind, labels: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[String], &[String])> {
        self.labels.chunks_exact(2).map(|c| (c[0].as_slice(), c[1].as_slice()))
    }
}

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out: String = template
        .lines()
        .filter(|l| !l.starts_with(";;"))
        .map(|l| format!("{l}\n"))
        .collect();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// Level strings of every tree, trees separated by an empty string.
pub fn forest_levels(forest: &ParseForest) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in forest.trees.iter().enumerate() {
        if i > 0 {
            out.push(String::new());
        }
        out.extend(tree_levels(t));
    }
    out
}

/// Text between the first `{` and the last `}` as JSON, if it parses.
fn salvage_json(reply: &str) -> Option<Value> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    (start < end).then(|| serde_json::from_str(&reply[start..=end]).ok()).flatten()
}

fn group_of(v: &Value) -> Option<Vec<String>> {
    let items = v.as_array()?;
    let group: Option<Vec<String>> = items.iter().map(|x| x.as_str().map(str::to_string)).collect();
    group.filter(|g| !g.is_empty() && g.iter().all(|s| !s.is_empty()))
}

/// Parses a `{"bubbles": [...]}` reply: unique groups in reply order, capped
/// at [`MAX_BUBBLES`], then sorted by length.
pub fn parse_one_bubbles(reply: &str) -> BubbleProposal {
    let mut out = BubbleProposal::empty(ProposalKind::One);
    let Some(entries) = salvage_json(reply).and_then(|v| v.get("bubbles").and_then(Value::as_array).cloned()) else {
        if !reply.trim().is_empty() {
            log::warn!("1-bubble reply without a bubbles list");
        }
        return out;
    };
    let mut seen = HashSet::new();
    for e in &entries {
        match group_of(e) {
            Some(g) if seen.insert(g.clone()) => out.labels.push(g),
            Some(_) => {}
            None => log::warn!("dropping malformed bubble {e}"),
        }
    }
    out.labels.truncate(MAX_BUBBLES);
    out.labels.sort_by_key(Vec::len);
    out
}

/// Parses a `{"pairs": [[a, b], ...]}` reply. Entries that are not exactly
/// two valid groups are dropped.
pub fn parse_two_bubbles(reply: &str) -> BubbleProposal {
    let mut out = BubbleProposal::empty(ProposalKind::Two);
    let Some(entries) = salvage_json(reply).and_then(|v| v.get("pairs").and_then(Value::as_array).cloned()) else {
        return out;
    };
    let mut seen = HashSet::new();
    for e in &entries {
        let pair = e.as_array().filter(|p| p.len() == 2).and_then(|p| Some((group_of(&p[0])?, group_of(&p[1])?)));
        match pair {
            Some((a, b)) if a != b && seen.insert((a.clone(), b.clone())) => {
                out.labels.push(a);
                out.labels.push(b);
            }
            Some(_) => {}
            None => log::warn!("dropping unpaired or malformed entry {e}"),
        }
        if out.labels.len() >= 2 * MAX_BUBBLES {
            break;
        }
    }
    out
}

/// Turns a raw suggestion into `^[a-z][a-z0-9_]{0,19}$`, avoiding `taken`
/// and `start` with `_1`, `_2`, ... suffixes. `None` if nothing usable is
/// left.
pub fn sanitize_label(raw: &str, taken: &BTreeSet<String>) -> Option<String> {
    let mut s = String::new();
    for c in raw.trim().chars().flat_map(char::to_lowercase) {
        let c = if c.is_ascii_lowercase() || c.is_ascii_digit() { c } else { '_' };
        if !(c == '_' && (s.is_empty() || s.ends_with('_'))) {
            s.push(c);
        }
    }
    let s = s.trim_start_matches(|c: char| !c.is_ascii_lowercase());
    let mut base: String = s.chars().take(MAX_LABEL_LEN).collect();
    while base.ends_with('_') {
        base.pop();
    }
    if base.is_empty() {
        return None;
    }
    let free = |l: &str| l != crate::grammar::START && !taken.contains(l);
    if free(&base) {
        return Some(base);
    }
    (1..).map(|k| {
        let suffix = format!("_{k}");
        let keep = MAX_LABEL_LEN - suffix.len();
        let stem: String = base.chars().take(keep).collect();
        format!("{}{suffix}", stem.trim_end_matches('_'))
    })
    .find(|l| free(l))
}

/// The LLM-facing side of inference.
pub struct Guide {
    provider: Box<dyn Provider>,
    /// Label of the tree roots, mentioned in the label prompt.
    pub root_label: String,
}

impl Guide {
    pub fn new(provider: Box<dyn Provider>, root_label: impl Into<String>) -> Self {
        Guide { provider, root_label: root_label.into() }
    }

    pub fn provider(&self) -> &dyn Provider {
        self.provider.as_ref()
    }

    fn ask(&self, prompt: &str) -> Option<String> {
        match self.provider.complete(prompt) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("llm ({}): {e}", self.provider.model_name());
                None
            }
        }
    }

    pub fn one_bubble_prompt(levels: &[String], prior: Option<&str>) -> String {
        render(ONE_BUBBLE_PROMPT, &[("levels", &levels.join("\n")), ("prior", prior.unwrap_or(""))])
    }

    pub fn two_bubble_prompt(levels: &[String], prior: Option<&str>) -> String {
        render(TWO_BUBBLE_PROMPT, &[("levels", &levels.join("\n")), ("prior", prior.unwrap_or(""))])
    }

    /// Groups of adjacent nodes to bubble. Provider failures give an empty
    /// proposal.
    pub fn propose_1_bubbles(&self, levels: &[String], prior: Option<&str>) -> BubbleProposal {
        match self.ask(&Self::one_bubble_prompt(levels, prior)) {
            Some(r) => parse_one_bubbles(&r),
            None => BubbleProposal::empty(ProposalKind::One),
        }
    }

    /// Pairs of groups meant to merge with each other.
    pub fn propose_2_bubbles(&self, levels: &[String], prior: Option<&str>) -> BubbleProposal {
        match self.ask(&Self::two_bubble_prompt(levels, prior)) {
            Some(r) => parse_two_bubbles(&r),
            None => BubbleProposal::empty(ProposalKind::Two),
        }
    }

    pub fn label_prompt(&self, yield_a: &str, yield_b: &str, taken: &BTreeSet<String>) -> String {
        let pair = serde_json::to_string(&[yield_a, yield_b]).expect("strings serialize");
        let taken = taken.iter().cloned().collect::<Vec<_>>().join(", ");
        render(LABEL_PROMPT, &[("root", &self.root_label), ("taken", &taken), ("pair", &pair)])
    }

    /// A descriptive label for a class deriving both yields, or `None` when
    /// the provider fails or suggests nothing usable.
    pub fn suggest_label(&self, yield_a: &str, yield_b: &str, taken: &BTreeSet<String>) -> Option<String> {
        let reply = self.ask(&self.label_prompt(yield_a, yield_b, taken))?;
        let raw = match salvage_json(&reply) {
            Some(v) => v.get("label").and_then(Value::as_str).map(str::to_string)?,
            // a bare word is fine too
            None => reply.split_whitespace().next()?.to_string(),
        };
        sanitize_label(&raw, taken)
    }

    pub fn zero_shot_prompt(seeds: &[String]) -> String {
        let programs: String = seeds.iter().map(|s| format!("<program>{s}</program>\n")).collect();
        render(ZERO_SHOT_PROMPT, &[("programs", programs.trim_end())])
    }

    /// The zero-shot baseline: ask for a whole grammar at once.
    pub fn zero_shot_grammar(&self, seeds: &[String]) -> Result<Grammar, LlmError> {
        if seeds.is_empty() {
            return Err(LlmError::NoSeeds);
        }
        let reply = self.provider.complete(&Self::zero_shot_prompt(seeds))?;
        parse_bnf_reply(&reply)
    }
}

/// Adapts a [`Guide`] to the merge checker's naming hook.
pub struct LlmNamer<'g> {
    pub guide: &'g Guide,
}

impl LabelNamer for LlmNamer<'_> {
    fn name(&mut self, yield_a: &str, yield_b: &str, taken: &BTreeSet<String>) -> Option<String> {
        self.guide.suggest_label(yield_a, yield_b, taken)
    }
}

/// Every distinct symbol sequence in the forest whose displayed labels
/// equal `labels` and that occurs as adjacent siblings.
pub fn resolve_sequence(forest: &ParseForest, labels: &[String]) -> Vec<Vec<Sym>> {
    let mut out: Vec<Vec<Sym>> = Vec::new();
    if labels.is_empty() {
        return out;
    }
    let shown = |s: &Sym| match s {
        Sym::T(t) => display_token(t),
        Sym::N(n) => n.clone(),
    };
    for t in &forest.trees {
        t.root.walk(&mut |n| {
            if n.children.len() < labels.len() {
                return;
            }
            let syms = n.child_syms();
            for w in syms.windows(labels.len()) {
                if w.iter().zip(labels).all(|(s, l)| shown(s) == *l) && !out.iter().any(|o| o == w) {
                    out.push(w.to_vec());
                }
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{pretokenize, TokenSeq};
    use crate::tree::create_naive_trees;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    struct Fixed(String);
    impl Provider for Fixed {
        fn complete(&self, _: &str) -> Result<String, LlmError> {
            Ok(self.0.clone())
        }
        fn model_name(&self) -> &str {
            "fixed"
        }
    }

    struct Down;
    impl Provider for Down {
        fn complete(&self, _: &str) -> Result<String, LlmError> {
            Err(LlmError::Provider("connection refused".into()))
        }
        fn model_name(&self) -> &str {
            "down"
        }
    }

    #[test]
    fn one_bubbles_capped_and_sorted() {
        let groups: Vec<Vec<String>> = (0..25).map(|i| vec![format!("a{i}"); 1 + i % 3]).collect();
        let reply = serde_json::json!({ "bubbles": groups }).to_string();
        let p = parse_one_bubbles(&format!("Sure! here you go:\n{reply}\nthanks"));
        assert_eq!(p.labels.len(), 20);
        assert!(p.labels.windows(2).all(|w| w[0].len() <= w[1].len()));
        // the cap applies in reply order, before sorting
        assert!(p.labels.iter().all(|g| g[0] != "a20"));
    }

    #[test]
    fn one_bubbles_salvage() {
        let p = parse_one_bubbles(r#"{"bubbles": [["c","=","expr",";"], 7, [], ["x", 1], ["n","+"], ["n","+"]]}"#);
        assert_eq!(p.labels, vec![strs(&["n", "+"]), strs(&["c", "=", "expr", ";"])]);
        assert!(parse_one_bubbles(r#"{"bubbles": []}"#).is_empty());
        assert!(parse_one_bubbles("no json here").is_empty());
    }

    #[test]
    fn two_bubbles_keep_only_pairs() {
        let p = parse_two_bubbles(r#"{"pairs": [[["c","=","expr",";"],["skip",";"]], [["lonely"]], [["a"],["b"],["c"]]]}"#);
        assert_eq!(p.labels.len(), 2);
        let pairs: Vec<_> = p.pairs().collect();
        assert_eq!(pairs[0].1, strs(&["skip", ";"]).as_slice());
        assert!(parse_two_bubbles("").is_empty());
        assert!(parse_two_bubbles(r#"{"pairs": [[["x"]]]}"#).is_empty());
    }

    #[test]
    fn labels_from_provider() {
        let taken = BTreeSet::new();
        let g = Guide::new(Box::new(Fixed(r#"{"label": "numexpr"}"#.into())), "stmt");
        assert_eq!(g.suggest_label("(n+n)", "n", &taken).as_deref(), Some("numexpr"));
        let g = Guide::new(Box::new(Fixed("expr".into())), "stmt");
        assert_eq!(g.suggest_label("(a+b)", "a", &taken).as_deref(), Some("expr"));
        let g = Guide::new(Box::new(Down), "stmt");
        assert_eq!(g.suggest_label("(a+b)", "a", &taken), None);
        assert!(g.propose_1_bubbles(&strs(&["[stmt]"]), None).is_empty());
    }

    #[test]
    fn collisions_get_suffixes() {
        let taken: BTreeSet<String> = strs(&["expr", "expr_1"]).into_iter().collect();
        assert_eq!(sanitize_label("expr", &taken).as_deref(), Some("expr_2"));
        assert_eq!(sanitize_label("Start", &BTreeSet::new()).as_deref(), Some("start_1"));
        assert_eq!(sanitize_label("Bool Expr!", &taken).as_deref(), Some("bool_expr"));
        assert_eq!(sanitize_label("123", &taken), None);
        let long = "averyveryverylongnonterminalname";
        let t: BTreeSet<String> = [long[..20].to_string()].into_iter().collect();
        let l = sanitize_label(long, &t).unwrap();
        assert_eq!(l.len(), 20);
        assert!(l.ends_with("_1"));
    }

    #[test]
    fn prompts_carry_the_payload() {
        let p = Guide::one_bubble_prompt(&strs(&["[stmt]", "[c = d ;]"]), Some("[stmt]"));
        assert!(p.contains("<tree-levels>\n[stmt]\n[c = d ;]\n</tree-levels>"));
        assert!(p.contains("<prior-state>\n[stmt]\n</prior-state>"));
        assert!(!p.contains(";;"));
        let g = Guide::new(Box::new(Down), "stmt");
        let l = g.label_prompt("(n+n)", "n", &BTreeSet::new());
        assert!(l.contains(r#"<pair>["(n+n)","n"]</pair>"#));
        assert!(l.contains("has label stmt"));
        assert_ne!(prompt_key(&p), prompt_key(&l));
        assert_eq!(prompt_key("").len(), 64);
    }

    #[test]
    fn resolves_display_labels() {
        let seqs = vec![TokenSeq::new("s", pretokenize("c = d ;"))];
        let f = create_naive_trees(&seqs, "stmt").unwrap();
        let levels = forest_levels(&f);
        assert_eq!(levels, strs(&["[stmt]", r"[c \s = \s d \s ;]"]));
        let hits = resolve_sequence(&f, &strs(&["c", r"\s", "="]));
        assert_eq!(hits, vec![vec![Sym::T("c".into()), Sym::T(" ".into()), Sym::T("=".into())]]);
        assert!(resolve_sequence(&f, &strs(&["c", "="])).is_empty());
    }

    #[test]
    fn zero_shot_needs_seeds() {
        let g = Guide::new(Box::new(Down), "stmt");
        assert!(matches!(g.zero_shot_grammar(&[]), Err(LlmError::NoSeeds)));
    }

    proptest! {
        #[test]
        fn sanitized_labels_have_the_shape(raw in ".{0,40}", taken in proptest::collection::btree_set("[a-z]{1,4}", 0..6)) {
            if let Some(l) = sanitize_label(&raw, &taken) {
                let ok = l.len() <= MAX_LABEL_LEN
                    && l.starts_with(|c: char| c.is_ascii_lowercase())
                    && l.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
                prop_assert!(ok, "{}", l);
                prop_assert!(!taken.contains(&l) && l != "start");
            }
        }

        #[test]
        fn proposals_never_exceed_cap(n in 0usize..60) {
            let groups: Vec<Vec<String>> = (0..n).map(|i| vec![format!("g{i}")]).collect();
            let p = parse_one_bubbles(&serde_json::json!({ "bubbles": groups }).to_string());
            prop_assert!(p.labels.len() <= MAX_BUBBLES);
        }
    }
}
