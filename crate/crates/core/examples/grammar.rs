//! Grammar files, Earley membership and bounded random sampling.
//!
//! Run: cargo run --example grammar

use gram_forge::grammar::{parse_grammar_file, sample_from_grammar, serialize, Recognizer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ARITH: &str = r#"
# sums and products over numbers, with optional spaces
start: expr
expr: expr sp "+" sp expr | expr "*" expr | "(" expr ")" | <digits+>
sp: " " | ""
"#;

fn main() {
    let g = parse_grammar_file(ARITH).expect("grammar parses");
    print!("{}", serialize(&g));
    let rec = Recognizer::new(&g);
    for s in ["1 + 2*3", "(12+3)*4", "1 +", "+"] {
        println!("{s:?} -> {}", rec.accepts(s));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for s in sample_from_grammar(&g, 5, 6, &mut rng).unwrap() {
        println!("sample: {s}");
    }
    match parse_grammar_file("start: \"open") {
        Ok(_) => unreachable!(),
        Err(e) => println!("error: {e}"),
    }
}
