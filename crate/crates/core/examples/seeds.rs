//! Bundled golden languages and the seed / held-out set generators.
//!
//! Run: cargo run --example seeds

use gram_forge::bench::{make_seeds, make_test_set, BUNDLED};

fn main() {
    for lang in BUNDLED {
        let g = lang.grammar();
        let seeds = make_seeds(&g, lang.seed_count, 101).unwrap();
        let tests = make_test_set(&g, lang.test_count, 102).unwrap();
        let longest = seeds.iter().map(String::len).max().unwrap_or(0);
        println!("{:<10} {} seeds (longest {longest} bytes), {} tests", lang.name, seeds.len(), tests.len());
        println!("           e.g. {:?}", seeds[seeds.len() / 2]);
    }
    // asking for more distinct programs than a tiny language has fails
    let g = gram_forge::grammar::parse_grammar_file("start: \"a\" | \"b\"\n").unwrap();
    println!("{}", make_seeds(&g, 3, 101).unwrap_err());
}
