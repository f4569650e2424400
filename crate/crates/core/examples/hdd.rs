//! Hierarchical delta debugging: every seed has an else branch, yet the
//! reduced trees show that the branch is optional.
//!
//! Run: cargo run --example hdd

use gram_forge::grammar::{induce_grammar, serialize};
use gram_forge::hdd::hdd_decompose;
use gram_forge::bench::GoldenLanguage;
use gram_forge::oracle::OracleClient;
use gram_forge::tokenizer::{pretokenize, TokenSeq};
use gram_forge::tree::{create_naive_trees, prestructure_brackets};

fn main() {
    let oracle = OracleClient::new(GoldenLanguage::by_name("ifelse").unwrap().acceptor());
    let seqs = vec![TokenSeq::new("seed", pretokenize("if(a+b) c=d+e+f; else c=d;"))];
    let mut forest = create_naive_trees(&seqs, "stmt").unwrap();
    prestructure_brackets(&mut forest);
    let trees = hdd_decompose(&forest, &oracle, 101, 50).unwrap();
    for t in &trees {
        println!("{:>3} leaves  {}", t.root.leaf_count(), t.yield_string());
    }
    print!("{}", serialize(&induce_grammar(&trees)));
}
