//! Property checks over the public API: membership, sampling, metrics,
//! oracle caching, whitespace pruning and end-to-end seed coverage.

use gram_forge::bench::{make_seeds, GoldenLanguage};
use gram_forge::grammar::{Grammar, Recognizer, Sampler, START};
use gram_forge::llm::{Guide, HeuristicStub};
use gram_forge::metrics::complexity_metrics;
use gram_forge::oracle::{Acceptor, OracleClient};
use gram_forge::pipeline::{run_infer, InferConfig, Seed};
use gram_forge::tokenizer::{pretokenize, remove_redundant_whitespace, TokenSeq};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{all_strings, bounded_language, random_grammar};

fn while_lang() -> &'static GoldenLanguage {
    GoldenLanguage::by_name("while").unwrap()
}

/// Rules in reverse order, each with its alternatives reversed; `start`
/// stays first so the file form remains valid.
fn reordered(g: &Grammar) -> Grammar {
    let mut out = Grammar::new();
    let mut rules: Vec<_> = g.rules().collect();
    rules.sort_by_key(|(name, _)| *name != START);
    rules[1..].reverse();
    for (name, alts) in rules {
        out.declare(name);
        for alt in alts.iter().rev() {
            out.add(name, alt.clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn earley_agrees_with_bounded_enumeration(seed in any::<u64>()) {
        let g = random_grammar(&mut ChaCha8Rng::seed_from_u64(seed));
        let lang = bounded_language(&g, 5);
        let rec = Recognizer::new(&g);
        for s in all_strings(&['a', 'b', 'c'], 5) {
            prop_assert_eq!(rec.accepts(&s), lang.contains(&s), "string {:?} in\n{:?}", s, g);
        }
    }

    #[test]
    fn samples_are_derivable(seed in any::<u64>()) {
        let g = random_grammar(&mut ChaCha8Rng::seed_from_u64(seed));
        // shallow depth keeps strings short enough for cubic parsing on
        // ambiguous grammars; rules that never terminate cannot be sampled
        if let Ok(sampler) = Sampler::new(&g, 8) {
            let rec = Recognizer::new(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for _ in 0..20 {
                let s = sampler.sample(&mut rng);
                prop_assert!(rec.accepts(&s), "{:?} not derivable", s);
            }
        }
    }

    #[test]
    fn complexity_ignores_rule_and_alternative_order(seed in any::<u64>()) {
        let g = random_grammar(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(complexity_metrics(&g), complexity_metrics(&reordered(&g)));
    }

    #[test]
    fn cache_is_transparent(queries in proptest::collection::vec("(skip|L = n|; |while true do |~|true| )*", 1..40)) {
        let golden = while_lang().grammar();
        let rec = Recognizer::new(&golden);
        let client = OracleClient::new(Acceptor::grammar(&golden));
        for q in &queries {
            prop_assert_eq!(client.accepts(q).unwrap(), rec.accepts(q));
        }
        // a second pass is answered from the cache with the same verdicts
        let before = client.stats();
        for q in &queries {
            prop_assert_eq!(client.accepts(q).unwrap(), rec.accepts(q));
        }
        let after = client.stats();
        prop_assert_eq!(after.calls_total, before.calls_total + queries.len() as u64);
        prop_assert_eq!(after.cache_size, before.cache_size);
        prop_assert!(after.calls_external <= after.calls_total);
    }

    #[test]
    fn pruned_whitespace_stays_accepted(seed in any::<u64>()) {
        let golden = while_lang().grammar();
        let sampler = Sampler::new(&golden, 6).unwrap();
        let text = sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let seq = TokenSeq::new("s", pretokenize(&text));
        let spaces = seq.tokens.iter().filter(|t| t.is_whitespace()).count() as u64;
        let oracle = OracleClient::new(Acceptor::grammar(&golden));
        let pruned = remove_redundant_whitespace(&seq, &oracle).unwrap();
        // one query validates the seed itself, the rest try removals
        prop_assert!(oracle.stats().calls_total - 1 <= spaces);
        prop_assert!(oracle.accepts(&pruned.text()).unwrap());
        prop_assert!(pruned.len() <= seq.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn inferred_grammar_covers_its_seeds(lang in prop::sample::select(vec!["lisp", "json"]), n in 2usize..8, seed in 0u64..1000) {
        let golden = GoldenLanguage::by_name(lang).unwrap();
        let seeds: Vec<Seed> = make_seeds(&golden.grammar(), n, seed)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, t)| Seed::new(format!("{i}"), t))
            .collect();
        let oracle = OracleClient::new(golden.acceptor());
        let guide = Guide::new(Box::new(HeuristicStub::default()), "stmt");
        let inf = run_infer(&seeds, &oracle, Some(&guide), &InferConfig::default(), None).unwrap();
        let rec = Recognizer::new(&inf.grammar);
        for s in &seeds {
            prop_assert!(rec.accepts(&s.text), "seed {:?} not derived", s.text);
        }
    }
}

#[test]
fn acceptor_agrees_with_the_decider() {
    let lang = while_lang();
    let golden = lang.grammar();
    let rec = Recognizer::new(&golden);
    let sampler = Sampler::new(&golden, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let oracle = OracleClient::new(lang.acceptor());
    let mut accepted = 0;
    for i in 0..10_000 {
        let mut s = sampler.sample(&mut rng);
        if i % 2 == 1 && !s.is_empty() {
            // mutate: drop one byte (all bundled terminals are ASCII)
            let at = rand::Rng::gen_range(&mut rng, 0..s.len());
            s.remove(at);
        }
        let verdict = oracle.accepts(&s).unwrap();
        assert_eq!(verdict, rec.accepts(&s), "{s:?}");
        accepted += usize::from(verdict);
    }
    // the mix really contains both kinds
    assert!(accepted > 5_000 && accepted < 10_000, "{accepted}");
}
