//! Precision, recall, F1 and the grammar complexity counts.
//!
//! Run: cargo run --example metrics

use gram_forge::bench::{make_test_set, GoldenLanguage};
use gram_forge::grammar::parse_grammar_file;
use gram_forge::metrics::{complexity_metrics, f1, precision, recall, EvalReport};
use gram_forge::oracle::OracleClient;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let lang = GoldenLanguage::by_name("while").unwrap();
    let oracle = OracleClient::new(lang.acceptor());
    let tests = make_test_set(&lang.grammar(), 100, 102).unwrap();
    // too general: any statement sequence of skips and loops over anything
    let loose = parse_grammar_file(
        "start: stmt\nstmt: \"skip\" | stmt \"; \" stmt | \"while \" x \" do \" stmt\nx: \"true\" | \"false\" | \"n\" | \"L\"\n",
    )
    .unwrap();
    for (name, g) in [("golden", lang.grammar()), ("loose", loose)] {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let p = precision(&g, &oracle, 1000, 40, &mut rng).unwrap();
        let r = recall(&g, &tests).unwrap();
        let report = EvalReport::new(p, r, oracle.stats().calls_total, complexity_metrics(&g), 0.0);
        println!("{name}: {}", serde_json::to_string(&report).unwrap());
    }
    println!("f1(0.25, 0.01) = {:.4}", f1(0.25, 0.01));
}
