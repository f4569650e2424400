//! End to end on the while language: generate seeds, infer a grammar with
//! the offline stub (or the recorded replay store with `replay`), then
//! score it against the golden acceptor.
//!
//! Run: cargo run --release --example infer_while [-- replay]

use std::path::PathBuf;

use gram_forge::bench::{make_seeds, make_test_set, GoldenLanguage};
use gram_forge::grammar::serialize;
use gram_forge::llm::{Guide, HeuristicStub, Provider, ReplayProvider};
use gram_forge::metrics::{complexity_metrics, f1, precision, recall};
use gram_forge::oracle::OracleClient;
use gram_forge::pipeline::{run_infer, InferConfig, Seed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let lang = GoldenLanguage::by_name("while").unwrap();
    let golden = lang.grammar();
    let seeds: Vec<Seed> = make_seeds(&golden, lang.seed_count, 101)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, s)| Seed::new(format!("{i:04}.txt"), s))
        .collect();
    let provider: Box<dyn Provider> = if std::env::args().any(|a| a == "replay") {
        let store = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/while_replay.json");
        Box::new(ReplayProvider::open(&store).expect("replay store"))
    } else {
        Box::new(HeuristicStub::default())
    };
    let guide = Guide::new(provider, "stmt");
    let oracle = OracleClient::new(lang.acceptor());
    let inf = run_infer(&seeds, &oracle, Some(&guide), &InferConfig::default(), None).expect("inference");
    print!("{}", serialize(&inf.grammar));
    for (stage, secs) in &inf.stats.stages {
        println!("  {stage:<16} {secs:6.2}s");
    }

    let scorer = OracleClient::new(lang.acceptor());
    let p = precision(&inf.grammar, &scorer, 1000, 40, &mut ChaCha8Rng::seed_from_u64(101)).unwrap();
    let r = recall(&inf.grammar, &make_test_set(&golden, 100, 102).unwrap()).unwrap();
    let c = complexity_metrics(&inf.grammar);
    println!(
        "p={p:.3} r={r:.3} f1={:.3} nt={} mcc_total={} oracle_calls={}",
        f1(p, r),
        c.nt,
        c.mcc_total,
        inf.stats.oracle_calls
    );
}
