//! Pretokenization and whitespace pruning against a membership oracle.
//!
//! Run: cargo run --example tokenize

use gram_forge::bench::GoldenLanguage;
use gram_forge::oracle::OracleClient;
use gram_forge::tokenizer::{pretokenize, pretokenize_with, remove_redundant_whitespace, TokenSeq, TokenizerOptions};

fn main() {
    for text in ["myFooBar", "a==b1", "x = 1024;"] {
        let shown: Vec<String> = pretokenize(text).iter().map(|t| format!("{:?} {:?}", t.class, t.text)).collect();
        println!("{text:?} -> [{}]", shown.join(", "));
    }
    let split = pretokenize_with("1024", TokenizerOptions { split_digit_runs: true });
    println!("\"1024\" with split digit runs -> {} tokens", split.len());

    // spacing after the condition is optional in this language, the one
    // after `else` is not
    let oracle = OracleClient::new(GoldenLanguage::by_name("ifelse").unwrap().acceptor());
    let seed = TokenSeq::new("seed", pretokenize("if(a) b=1; else c=2;"));
    let pruned = remove_redundant_whitespace(&seed, &oracle).expect("seed is valid");
    println!("{:?} -> {:?} after {} oracle queries", seed.text(), pruned.text(), oracle.stats().calls_total);
}
