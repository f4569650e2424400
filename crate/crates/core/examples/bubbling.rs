//! One merge check: group the siblings `a==b` into a bubble and test
//! whether it is interchangeable with the leaf `true`.
//!
//! Run: cargo run --example bubbling

use gram_forge::bubbling::{Checker, MergeCandidate, Operand};
use gram_forge::grammar::{induce_grammar, parse_grammar_file, serialize};
use gram_forge::oracle::{Acceptor, OracleClient};
use gram_forge::tokenizer::{pretokenize, TokenSeq};
use gram_forge::tree::{create_naive_trees, Sym};

fn syms(text: &str) -> Vec<Sym> {
    pretokenize(text).into_iter().map(|t| Sym::T(t.text)).collect()
}

fn main() {
    let golden = parse_grammar_file("start: \"if \" cond \" then skip\"\ncond: \"a==b\" | \"true\" | \"false\"\n").unwrap();
    let oracle = OracleClient::new(Acceptor::grammar(&golden));
    let seqs: Vec<TokenSeq> = ["if a==b then skip", "if true then skip", "if false then skip"]
        .iter()
        .enumerate()
        .map(|(i, s)| TokenSeq::new(format!("s{i}"), pretokenize(s)))
        .collect();
    let forest = create_naive_trees(&seqs, "stmt").unwrap();

    let mut trace = Vec::new();
    let mut checker = Checker::new(&oracle, 101).with_trace(&mut trace);
    for (bubble, partner) in [("a==b", "true"), ("if a", "true")] {
        let cand = MergeCandidate::new(Operand::Seq(syms(bubble)), Operand::Class(Sym::T(partner.into())));
        match checker.check_bubble(&forest, &cand).unwrap() {
            Some(acc) => {
                println!("[{bubble}] ~ {partner}: accepted as {}", acc.label);
                print!("{}", serialize(&induce_grammar(&acc.forest.trees)));
            }
            None => println!("[{bubble}] ~ {partner}: rejected, forest untouched"),
        }
    }
    print!("trace:\n{}", String::from_utf8(trace).unwrap());
}
