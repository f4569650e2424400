//! The LLM guide offline: the heuristic stub proposes bubbles and labels,
//! a recording wrapper captures every reply, and a replay provider serves
//! them back deterministically.
//!
//! Run: cargo run --example llm_guide

use std::collections::BTreeSet;
use std::sync::Arc;

use gram_forge::llm::{forest_levels, sanitize_label, Guide, HeuristicStub, RecordingProvider, ReplayProvider};
use gram_forge::tokenizer::{pretokenize, TokenSeq};
use gram_forge::tree::create_naive_trees;

fn main() {
    let seqs: Vec<TokenSeq> = ["L = n; skip", "L = L; L = n", "skip; skip"]
        .iter()
        .enumerate()
        .map(|(i, s)| TokenSeq::new(format!("s{i}"), pretokenize(s)))
        .collect();
    let forest = create_naive_trees(&seqs, "stmt").unwrap();
    let levels = forest_levels(&forest);
    println!("levels:\n{}", levels.join("\n"));

    let recorder = Arc::new(RecordingProvider::new(HeuristicStub::default()));
    let guide = Guide::new(Box::new(recorder.clone()), "stmt");
    let one = guide.propose_1_bubbles(&levels, None);
    println!("1-bubbles: {:?}", one.labels);
    let taken = BTreeSet::from(["stmt".to_string()]);
    println!("label for (n+n) ~ n: {:?}", guide.suggest_label("(n+n)", "n", &taken));

    let replay = Guide::new(Box::new(ReplayProvider::from_map(recorder.recorded())), "stmt");
    assert_eq!(replay.propose_1_bubbles(&levels, None), one);
    println!("replayed {} recorded replies identically", recorder.recorded().len());

    for raw in ["Numeric Expression", "9lives", "stmt", "  "] {
        println!("sanitize {raw:?} -> {:?}", sanitize_label(raw, &taken));
    }
}
