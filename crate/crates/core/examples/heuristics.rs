//! Ranking of merge candidates and the refinement loop that walks it.
//!
//! Run: cargo run --example heuristics

use gram_forge::bench::GoldenLanguage;
use gram_forge::bubbling::Checker;
use gram_forge::grammar::{induce_grammar, serialize};
use gram_forge::heuristics::{rank_bubbles, refine_with_heuristics};
use gram_forge::oracle::OracleClient;
use gram_forge::tokenizer::{pretokenize, TokenSeq};
use gram_forge::tree::create_naive_trees;

fn main() {
    let seeds = ["L = n", "L = (n + L)", "while true do L = n", "skip; L = L"];
    let seqs: Vec<TokenSeq> =
        seeds.iter().enumerate().map(|(i, s)| TokenSeq::new(format!("s{i}"), pretokenize(s))).collect();
    let forest = create_naive_trees(&seqs, "stmt").unwrap();
    for c in rank_bubbles(&forest).iter().take(8) {
        println!(
            "{:<24} sim={:.2} freq={} depth={} partners={}",
            c.bubble.to_string(),
            c.similarity,
            c.frequency,
            c.depth,
            c.partners.len()
        );
    }
    let oracle = OracleClient::new(GoldenLanguage::by_name("while").unwrap().acceptor());
    let mut checker = Checker::new(&oracle, 101);
    let refined = refine_with_heuristics(&mut checker, &forest, 100).unwrap();
    println!("accepted {} of {} checks", checker.stats.accepts, checker.stats.checks);
    print!("{}", serialize(&induce_grammar(&refined.trees)));
}
