//! Records the replay store in `fixtures/while_replay.json`.
//!
//! No live model is needed: a scripted provider stands in for one. It
//! proposes the constructs a reader of the while language would point out
//! (assignments, loops, conditionals, comparisons, bracketed sums) by
//! matching category patterns against the tree levels, and names merged
//! classes after the golden non-terminal that derives both yields. Both the
//! LLM-guided and the `--no-llm-bubbles` configurations are recorded so
//! that either replays without misses.
//!
//! Run: cargo run --release --example record_fixture

use std::path::PathBuf;

use gram_forge::bench::{make_seeds, GoldenLanguage};
use gram_forge::grammar::{Grammar, Recognizer, Symbol, START};
use gram_forge::llm::{Guide, LlmError, Provider, RecordingProvider};
use gram_forge::oracle::OracleClient;
use gram_forge::pipeline::{run_infer, InferConfig, Seed};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Cat {
    Num,
    Bool,
    Stmt,
}

#[derive(Clone, Copy)]
enum El {
    Lit(&'static str),
    Slot(Cat),
}

use Cat::*;
use El::*;

const PATTERNS: &[&[El]] = &[
    &[Lit("("), Slot(Num), Lit("\\s"), Lit("+"), Lit("\\s"), Slot(Num), Lit(")")],
    &[Slot(Num), Lit("\\s"), Lit("="), Lit("="), Lit("\\s"), Slot(Num)],
    &[Lit("~"), Slot(Bool)],
    &[Slot(Bool), Lit("\\s"), Lit("&"), Lit("\\s"), Slot(Bool)],
    &[Lit("L"), Lit("\\s"), Lit("="), Lit("\\s"), Slot(Num)],
    &[Lit("while"), Lit("\\s"), Slot(Bool), Lit("\\s"), Lit("do"), Lit("\\s"), Slot(Stmt)],
    &[
        Lit("if"),
        Lit("\\s"),
        Slot(Bool),
        Lit("\\s"),
        Lit("then"),
        Lit("\\s"),
        Slot(Stmt),
        Lit("\\s"),
        Lit("else"),
        Lit("\\s"),
        Slot(Stmt),
    ],
    &[Slot(Stmt), Lit(";"), Lit("\\s"), Slot(Stmt)],
];

fn category(node: &str) -> Option<Cat> {
    // `stmt_1` and friends are classes the namer had to disambiguate
    let base = match node.rsplit_once('_') {
        Some((b, k)) if k.chars().all(|c| c.is_ascii_digit()) => b,
        _ => node,
    };
    match base {
        "n" | "L" | "numexpr" => Some(Num),
        "true" | "false" | "boolexpr" => Some(Bool),
        "skip" | "stmt" => Some(Stmt),
        _ => None,
    }
}

fn is_raw(node: &str) -> bool {
    matches!(node, "n" | "L" | "true" | "false" | "skip")
}

struct ScriptedExpert {
    golden: Grammar,
}

fn section<'a>(prompt: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let i = prompt.find(&open)? + open.len();
    let j = prompt[i..].find(&format!("</{tag}>"))? + i;
    Some(&prompt[i..j])
}

impl ScriptedExpert {
    fn bubbles(&self, levels: &str) -> String {
        let mut groups: Vec<Vec<&str>> = Vec::new();
        for line in levels.lines() {
            let Some(inner) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) else { continue };
            let nodes: Vec<&str> = inner.split(' ').collect();
            for pat in PATTERNS {
                for w in nodes.windows(pat.len()) {
                    let hit = w.iter().zip(pat.iter()).all(|(n, el)| match el {
                        Lit(l) => n == l,
                        Slot(c) => category(n) == Some(*c),
                    });
                    if hit && !groups.iter().any(|g| g.as_slice() == w) {
                        groups.push(w.to_vec());
                    }
                }
            }
        }
        // generalised proposals first: slots already filled by a
        // non-terminal beat raw leaves, and longer constructs beat shorter
        let raw = |g: &Vec<&str>| g.iter().filter(|n| is_raw(n)).count();
        groups.sort_by_key(|g| (raw(g), std::cmp::Reverse(g.len())));
        groups.truncate(20);
        serde_json::json!({ "bubbles": groups }).to_string()
    }

    /// Pairs up differently named classes that belong to one category.
    fn pairs(&self, levels: &str) -> String {
        let mut names: Vec<&str> = levels
            .lines()
            .filter_map(|l| l.strip_prefix('[').and_then(|l| l.strip_suffix(']')))
            .flat_map(|l| l.split(' '))
            .filter(|n| !is_raw(n) && category(n).is_some())
            .collect();
        names.sort_unstable();
        names.dedup();
        let mut pairs = Vec::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if category(a) == category(b) {
                    pairs.push([vec![*a], vec![*b]]);
                }
            }
        }
        serde_json::json!({ "pairs": pairs }).to_string()
    }

    fn label(&self, pair: &str) -> String {
        let yields: Vec<String> = serde_json::from_str(pair).unwrap_or_default();
        let name = ["numexpr", "boolexpr", "stmt"]
            .into_iter()
            .find(|nt| {
                // re-root the golden grammar at the candidate
                let g = self.golden.map_alternatives(|name, alt| {
                    if name == START { vec![Symbol::nt(*nt)] } else { alt.clone() }
                });
                let r = Recognizer::new(&g);
                yields.iter().all(|y| r.accepts(y))
            })
            .unwrap_or("fragment");
        serde_json::json!({ "label": name }).to_string()
    }
}

impl Provider for ScriptedExpert {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        match section(prompt, "task").map(str::trim) {
            Some("one-bubbles") => Ok(self.bubbles(section(prompt, "tree-levels").unwrap_or(""))),
            Some("two-bubbles") => Ok(self.pairs(section(prompt, "tree-levels").unwrap_or(""))),
            Some("label") => Ok(self.label(section(prompt, "pair").unwrap_or("[]"))),
            _ => Err(LlmError::Provider("unsupported prompt".into())),
        }
    }

    fn model_name(&self) -> &str {
        "scripted-expert"
    }
}

fn main() {
    let lang = GoldenLanguage::by_name("while").unwrap();
    let golden = lang.grammar();
    let seeds: Vec<Seed> = make_seeds(&golden, lang.seed_count, 101)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, s)| Seed::new(format!("{i:04}.txt"), s))
        .collect();
    let recorder = std::sync::Arc::new(RecordingProvider::new(ScriptedExpert { golden: golden.clone() }));
    let out = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/while_replay.json");
    for llm_bubbles in [true, false] {
        let oracle = OracleClient::new(lang.acceptor());
        let guide = Guide::new(Box::new(recorder.clone()), "stmt");
        let cfg = InferConfig { llm_bubbles, ..InferConfig::default() };
        let inf = run_infer(&seeds, &oracle, Some(&guide), &cfg, None).expect("inference runs");
        let c = gram_forge::metrics::complexity_metrics(&inf.grammar);
        println!("llm_bubbles={llm_bubbles}: nt={} mcc_total={}", c.nt, c.mcc_total);
        print!("{}", gram_forge::grammar::serialize(&inf.grammar));
    }
    let n = recorder.save(&out).expect("store written");
    println!("{n} recorded replies in {}", out.display());
}
