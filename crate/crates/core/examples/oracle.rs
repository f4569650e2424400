//! Cached, metered membership queries: in-process grammar acceptor and an
//! external command speaking the exit-code protocol.
//!
//! Run: cargo run --example oracle

use std::time::Duration;

use gram_forge::bench::GoldenLanguage;
use gram_forge::oracle::{Acceptor, OracleClient};

fn main() {
    let lang = GoldenLanguage::by_name("while").unwrap();
    let client = OracleClient::new(lang.acceptor());
    for s in ["skip", "", "while true do skip", "skip", "skip"] {
        println!("{s:?}: {}", client.accepts(s).unwrap());
    }
    println!("stats: {:?}", client.stats());

    // any program works as an oracle: stdin in, exit status 0 means accept
    if let Some(acceptor) = Acceptor::command("grep -qx [0-9]*", Duration::from_secs(5)) {
        let numbers = OracleClient::new(acceptor);
        for s in ["123", "12a"] {
            match numbers.accepts(s) {
                Ok(v) => println!("grep oracle {s:?}: {v}"),
                Err(e) => println!("grep oracle unavailable: {e}"),
            }
        }
        println!("external calls: {}", numbers.stats().calls_external);
    }
}
