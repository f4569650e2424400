//! End-to-end inference: seeds in, grammar out.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bubbling::{partner_order, CheckStats, Checker, Operand};
use crate::grammar::{expand_tokens, induce_grammar, Grammar, LexicalOptions};
use crate::hdd::{hdd_decompose, DEFAULT_SAMPLES};
use crate::heuristics::{refine_with_heuristics, DEFAULT_BUDGET};
use crate::llm::{forest_levels, resolve_sequence, Guide, LlmNamer};
use crate::oracle::{OracleClient, OracleError, OracleStats};
use crate::tokenizer::{pretokenize_with, remove_redundant_whitespace, Token, TokenSeq, TokenizerOptions};
use crate::tree::{create_naive_trees, prestructure_brackets, Node, ParseForest, ParseTree, Sym, TreeError};

/// Outer-loop rounds without any accepted merge before the guided phase
/// ends.
pub const IDLE_ROUNDS: usize = 5;

/// Which stages run, and their knobs. `Default` is the full pipeline.
#[derive(Debug, Clone)]
pub struct InferConfig {
    pub rng_seed: u64,
    pub root_label: String,
    pub ai_label: bool,
    pub bracket_bubbles: bool,
    pub llm_bubbles: bool,
    pub treevada: bool,
    pub hdd: bool,
    pub lexinfer: bool,
    pub tokenizer: TokenizerOptions,
    pub idle_rounds: usize,
    pub heuristic_budget: usize,
    pub hdd_samples: usize,
    pub lexical: LexicalOptions,
    /// Write a tree dump after each stage into this directory.
    pub dump_trees: Option<PathBuf>,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            rng_seed: 101,
            root_label: "stmt".into(),
            ai_label: true,
            bracket_bubbles: true,
            llm_bubbles: true,
            treevada: true,
            hdd: true,
            lexinfer: true,
            tokenizer: TokenizerOptions::default(),
            idle_rounds: IDLE_ROUNDS,
            heuristic_budget: DEFAULT_BUDGET,
            hdd_samples: DEFAULT_SAMPLES,
            lexical: LexicalOptions::default(),
            dump_trees: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error("no seed programs")]
    NoSeeds,
    #[error("stage {stage}: {source}")]
    Oracle {
        stage: &'static str,
        #[source]
        source: OracleError,
    },
    #[error("stage {stage}: {source}")]
    Tree {
        stage: &'static str,
        #[source]
        source: TreeError,
    },
    #[error("stage {stage}: {source}")]
    Io {
        stage: &'static str,
        #[source]
        source: std::io::Error,
    },
}

/// Counters gathered along the way.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InferStats {
    pub oracle_calls: u64,
    pub oracle_external_calls: u64,
    pub checks: u64,
    pub accepts: u64,
    pub guided_rounds: usize,
    pub hdd_variants: usize,
    pub runtime_s: f64,
    /// Seconds per stage, in run order.
    pub stages: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Inference {
    pub grammar: Grammar,
    /// Trees after the structuring stages (before HDD).
    pub forest: ParseForest,
    /// Every tree the grammar was read from.
    pub trees: Vec<ParseTree>,
    pub stats: InferStats,
}

/// A seed program with a name for diagnostics.
#[derive(Debug, Clone)]
pub struct Seed {
    pub id: String,
    pub text: String,
}

impl Seed {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Seed { id: id.into(), text: text.into() }
    }
}

struct Ctx<'a> {
    cfg: &'a InferConfig,
    clock: Instant,
    stage_clock: Instant,
    stats: InferStats,
}

impl Ctx<'_> {
    fn finish(&mut self, stage: &'static str, forest: Option<&ParseForest>) -> Result<(), InferError> {
        let now = Instant::now();
        self.stats.stages.push((stage.to_string(), (now - self.stage_clock).as_secs_f64()));
        self.stage_clock = now;
        log::info!("{stage} done");
        if let (Some(dir), Some(f)) = (&self.cfg.dump_trees, forest) {
            let io = |source| InferError::Io { stage, source };
            std::fs::create_dir_all(dir).map_err(io)?;
            let n = self.stats.stages.len();
            std::fs::write(dir.join(format!("{n:02}-{stage}.txt")), f.dump()).map_err(io)?;
        }
        Ok(())
    }
}

/// Runs the whole pipeline. `guide` may be `None` to run without any LLM
/// at all; `trace` receives one line per merge check.
pub fn run_infer(
    seeds: &[Seed],
    oracle: &OracleClient,
    guide: Option<&Guide>,
    cfg: &InferConfig,
    trace: Option<&mut dyn Write>,
) -> Result<Inference, InferError> {
    if seeds.is_empty() {
        return Err(InferError::NoSeeds);
    }
    let now = Instant::now();
    let mut ctx = Ctx { cfg, clock: now, stage_clock: now, stats: InferStats::default() };

    let originals: Vec<TokenSeq> =
        seeds.iter().map(|s| TokenSeq::new(s.id.clone(), pretokenize_with(&s.text, cfg.tokenizer))).collect();
    ctx.finish("pretokenize", None)?;

    let mut pruned = Vec::with_capacity(originals.len());
    for seq in &originals {
        let p = remove_redundant_whitespace(seq, oracle)
            .map_err(|source| InferError::Oracle { stage: "whitespace", source })?;
        pruned.push(p);
    }
    ctx.finish("whitespace", None)?;

    let mut forest = create_naive_trees(&pruned, &cfg.root_label)
        .map_err(|source| InferError::Tree { stage: "naive-trees", source })?;
    ctx.finish("naive-trees", Some(&forest))?;

    // bracket structure as a whole is what the bracket ablation removes
    let bracket_labels = if cfg.bracket_bubbles { prestructure_brackets(&mut forest) } else { Vec::new() };
    ctx.finish("prestructure", Some(&forest))?;

    let mut namer = guide.filter(|_| cfg.ai_label).map(|g| LlmNamer { guide: g });
    let mut checker = Checker::new(oracle, cfg.rng_seed);
    if let Some(n) = namer.as_mut() {
        checker = checker.with_namer(n);
    }
    if let Some(t) = trace {
        checker = checker.with_trace(t);
    }
    let oracle_err = |stage| move |source| InferError::Oracle { stage, source };

    forest = checker.merge_all_valid(&forest, &bracket_labels).map_err(oracle_err("merge-all-valid"))?;
    ctx.finish("merge-all-valid", Some(&forest))?;

    let llm = guide.filter(|_| cfg.llm_bubbles);
    if cfg.bracket_bubbles || llm.is_some() {
        let mut idle = 0;
        let mut prior: Option<String> = None;
        while idle < cfg.idle_rounds {
            ctx.stats.guided_rounds += 1;
            let mut changed = false;
            if cfg.bracket_bubbles {
                changed |= checker.bracket_round(&mut forest).map_err(oracle_err("bracket-bubbles"))?;
            }
            if let Some(g) = llm {
                let levels = forest_levels(&forest);
                let one = g.propose_1_bubbles(&levels, prior.as_deref());
                let mut one_changed = false;
                for group in &one.labels {
                    one_changed |= try_one_bubble(&mut checker, &mut forest, group).map_err(oracle_err("llm-1-bubbles"))?;
                }
                if !one_changed {
                    let levels_now = forest_levels(&forest);
                    let two = g.propose_2_bubbles(&levels_now, prior.as_deref());
                    for (a, b) in two.pairs() {
                        changed |= try_two_bubble(&mut checker, &mut forest, a, b).map_err(oracle_err("llm-2-bubbles"))?;
                    }
                }
                changed |= one_changed;
                prior = Some(levels.join("\n"));
            }
            idle = if changed { 0 } else { idle + 1 };
            log::debug!("guided round {} changed={changed}", ctx.stats.guided_rounds);
        }
    }
    ctx.finish("guided", Some(&forest))?;

    if cfg.treevada {
        forest = refine_with_heuristics(&mut checker, &forest, cfg.heuristic_budget).map_err(oracle_err("heuristics"))?;
        ctx.finish("heuristics", Some(&forest))?;
    }
    let check_stats: CheckStats = checker.stats;

    let mut trees = if cfg.hdd {
        hdd_decompose(&forest, oracle, cfg.rng_seed, cfg.hdd_samples).map_err(oracle_err("hdd"))?
    } else {
        forest.trees.clone()
    };
    ctx.stats.hdd_variants = trees.len() - forest.trees.len();
    ctx.finish("hdd", None)?;

    // Put pruned whitespace back so the grammar derives the seeds as given.
    let mut ids = forest.clone();
    for (i, (orig, p)) in originals.iter().zip(&pruned).enumerate() {
        if orig.len() != p.len() {
            trees.push(forest.trees[i].clone());
            trees[i] = reinsert_whitespace(&mut ids, &forest.trees[i], &orig.tokens)
                .unwrap_or_else(|| flat_tree(&mut ids, &cfg.root_label, orig));
        }
    }

    let mut grammar = induce_grammar(&trees);
    ctx.finish("induce", None)?;

    if cfg.lexinfer {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        grammar = expand_tokens(&trees, &grammar, oracle, &cfg.lexical, &mut rng).map_err(oracle_err("lexical"))?;
        ctx.finish("lexical", None)?;
    }

    let o: OracleStats = oracle.stats();
    ctx.stats.oracle_calls = o.calls_total;
    ctx.stats.oracle_external_calls = o.calls_external;
    ctx.stats.checks = check_stats.checks;
    ctx.stats.accepts = check_stats.accepts;
    ctx.stats.runtime_s = ctx.clock.elapsed().as_secs_f64();
    Ok(Inference { grammar, forest, trees, stats: ctx.stats })
}

/// Tries one LLM-proposed group against the existing classes; an accepted
/// sequence is then folded wherever else it occurs.
fn try_one_bubble(checker: &mut Checker<'_>, forest: &mut ParseForest, group: &[String]) -> Result<bool, OracleError> {
    let mut changed = false;
    for seq in resolve_sequence(forest, group) {
        if forest.find_occurrences(&seq).is_empty() {
            continue;
        }
        let partners = partner_order(forest, &seq, &[]);
        if let Some(acc) = checker.check_against(forest, &Operand::Seq(seq.clone()), &partners)? {
            log::debug!("llm 1-bubble {} -> {}", Operand::Seq(seq.clone()), acc.label);
            *forest = acc.forest;
            let renamed = rename_all(&seq, &acc.sides, &acc.label);
            forest.apply_rule_everywhere(&renamed, &acc.label);
            changed = true;
        }
    }
    Ok(changed)
}

fn try_two_bubble(
    checker: &mut Checker<'_>,
    forest: &mut ParseForest,
    a: &[String],
    b: &[String],
) -> Result<bool, OracleError> {
    for sa in resolve_sequence(forest, a) {
        for sb in resolve_sequence(forest, b) {
            let partner = Operand::Seq(sb.clone());
            if let Some(acc) = checker.check_against(forest, &Operand::Seq(sa.clone()), &[partner])? {
                log::debug!("llm 2-bubble {} / {} -> {}", Operand::Seq(sa.clone()), Operand::Seq(sb.clone()), acc.label);
                *forest = acc.forest;
                for s in [&sa, &sb] {
                    if s.len() > 1 {
                        let renamed = rename_all(s, &acc.sides, &acc.label);
                        forest.apply_rule_everywhere(&renamed, &acc.label);
                    }
                }
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn rename_all(seq: &[Sym], sides: &(Sym, Sym), label: &str) -> Vec<Sym> {
    seq.iter().map(|s| if *s == sides.0 || *s == sides.1 { Sym::N(label.to_string()) } else { s.clone() }).collect()
}

fn leaf_paths(node: &Node, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if node.is_leaf() {
        out.push(path.clone());
        return;
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        leaf_paths(c, path, out);
        path.pop();
    }
}

fn node_at<'n>(root: &'n mut Node, path: &[usize]) -> &'n mut Node {
    path.iter().fold(root, |n, &i| &mut n.children[i])
}

/// Re-inserts the whitespace tokens of `original` that are missing from
/// `tree`'s leaves. Each one goes between the largest subtrees that meet
/// at its position. `None` if the leaves do not line up with `original`.
pub fn reinsert_whitespace(ids: &mut ParseForest, tree: &ParseTree, original: &[Token]) -> Option<ParseTree> {
    let mut paths = Vec::new();
    leaf_paths(&tree.root, &mut Vec::new(), &mut paths);
    if tree.root.is_leaf() {
        return None;
    }
    let leaves: Vec<&str> = paths
        .iter()
        .map(|p| p.iter().fold(&tree.root, |n, &i| &n.children[i]).label.as_str())
        .collect();
    // before[k]: whitespace to put before leaf k; before[n]: trailing
    let mut before: Vec<Vec<String>> = vec![Vec::new(); leaves.len() + 1];
    let mut i = 0;
    for (k, leaf) in leaves.iter().enumerate() {
        while i < original.len() && original[i].text != *leaf {
            if !original[i].is_whitespace() {
                return None;
            }
            before[k].push(original[i].text.clone());
            i += 1;
        }
        if i == original.len() {
            return None;
        }
        i += 1;
    }
    for t in &original[i..] {
        if !t.is_whitespace() {
            return None;
        }
        before[leaves.len()].push(t.text.clone());
    }
    let mut out = tree.clone();
    for ws in before[leaves.len()].iter() {
        let leaf = ids.leaf(ws.clone());
        out.root.children.push(leaf);
    }
    for k in (0..leaves.len()).rev() {
        if before[k].is_empty() {
            continue;
        }
        let mut p = paths[k].clone();
        while p.len() > 1 && *p.last().unwrap() == 0 {
            p.pop();
        }
        let at = p.pop().unwrap();
        let parent = node_at(&mut out.root, &p);
        for ws in before[k].iter().rev() {
            let leaf = ids.leaf(ws.clone());
            parent.children.insert(at, leaf);
        }
    }
    Some(out)
}

fn flat_tree(ids: &mut ParseForest, root: &str, seq: &TokenSeq) -> ParseTree {
    let leaves = seq.tokens.iter().map(|t| ids.leaf(t.text.clone())).collect();
    ParseTree { source_id: seq.source_id.clone(), root: ids.internal(root, leaves) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{earley_accepts, parse_grammar_file};
    use crate::llm::HeuristicStub;
    use crate::oracle::Acceptor;
    use crate::tokenizer::pretokenize;

    fn seeds(v: &[&str]) -> Vec<Seed> {
        v.iter().enumerate().map(|(i, s)| Seed::new(format!("s{i}"), *s)).collect()
    }

    #[test]
    fn whitespace_goes_between_subtrees() {
        let mut f = ParseForest::new("stmt");
        let a = f.leaf("a");
        let eq = f.leaf("=");
        let b = f.leaf("b");
        let lhs = f.internal("lhs", vec![a, eq]);
        let root = f.internal("stmt", vec![lhs, b]);
        let tree = ParseTree { source_id: "s".into(), root };
        let orig = pretokenize(" a= b ");
        let out = reinsert_whitespace(&mut f, &tree, &orig).unwrap();
        assert_eq!(out.yield_string(), " a= b ");
        // the space before b sits at the root, not inside lhs
        let labels: Vec<&str> = out.root.children.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, [" ", "lhs", " ", "b", " "]);
        assert!(reinsert_whitespace(&mut f, &tree, &pretokenize("a=c")).is_none());
    }

    #[test]
    fn covers_seeds_with_optional_spaces() {
        let g = parse_grammar_file("start: s\ns: \"x\" sp \"=\" sp \"y\"\nsp: \" \" | \"\"\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&g));
        let s = seeds(&["x = y", "x=y"]);
        let inf = run_infer(&s, &oracle, None, &InferConfig::default(), None).unwrap();
        for seed in &s {
            assert!(earley_accepts(&inf.grammar, &seed.text), "{}", seed.text);
        }
    }

    #[test]
    fn empty_seed_list() {
        let oracle = OracleClient::new(Acceptor::from_fn(|_| true));
        assert!(matches!(run_infer(&[], &oracle, None, &InferConfig::default(), None), Err(InferError::NoSeeds)));
    }

    #[test]
    fn rejected_seed_names_the_stage() {
        let oracle = OracleClient::new(Acceptor::from_fn(|s| s == "a"));
        let err = run_infer(&seeds(&["a", "b"]), &oracle, None, &InferConfig::default(), None).unwrap_err();
        assert!(err.to_string().starts_with("stage whitespace"), "{err}");
    }

    #[test]
    fn small_expression_language() {
        let g = parse_grammar_file("start: e\ne: e \"+\" e | \"(\" e \")\" | \"a\" | \"b\"\n").unwrap();
        let oracle = OracleClient::new(Acceptor::grammar(&g));
        let guide = Guide::new(Box::new(HeuristicStub::default()), "stmt");
        let s = seeds(&["a+b", "(a)", "b+(a+b)"]);
        let dir = tempfile::tempdir().unwrap();
        let cfg = InferConfig { dump_trees: Some(dir.path().to_path_buf()), ..Default::default() };
        let mut trace = Vec::new();
        let inf = run_infer(&s, &oracle, Some(&guide), &cfg, Some(&mut trace)).unwrap();
        for t in ["a", "(b)", "a+a+a", "((a+b))+b"] {
            assert!(earley_accepts(&inf.grammar, t), "{t}");
        }
        assert!(!earley_accepts(&inf.grammar, "a+"));
        assert!(std::fs::read_dir(dir.path()).unwrap().count() >= 4);
        assert!(String::from_utf8(trace).unwrap().lines().all(|l| l.split('\t').count() == 4));
        assert!(inf.stats.oracle_calls > 0);
    }
}
