//! Bundled golden languages, seed and test-set generation, and the
//! stand-alone acceptor used as an external oracle.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grammar::{parse_grammar_file, Grammar, GrammarError, Recognizer, Sampler, SyntaxError, DEFAULT_MAX_DEPTH};
use crate::oracle::Acceptor;

/// Deepest stratum used when generating seeds.
pub const SEED_MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenLanguage {
    pub name: &'static str,
    pub source: &'static str,
    pub seed_count: usize,
    pub test_count: usize,
}

pub const BUNDLED: &[GoldenLanguage] = &[
    GoldenLanguage { name: "while", source: include_str!("../grammars/while.bnf"), seed_count: 25, test_count: 100 },
    GoldenLanguage {
        name: "while-num",
        source: include_str!("../grammars/while-num.bnf"),
        seed_count: 25,
        test_count: 100,
    },
    GoldenLanguage { name: "ifelse", source: include_str!("../grammars/ifelse.bnf"), seed_count: 12, test_count: 100 },
    GoldenLanguage { name: "json", source: include_str!("../grammars/json.bnf"), seed_count: 20, test_count: 100 },
    GoldenLanguage { name: "lisp", source: include_str!("../grammars/lisp.bnf"), seed_count: 20, test_count: 100 },
];

impl GoldenLanguage {
    pub fn by_name(name: &str) -> Option<&'static GoldenLanguage> {
        BUNDLED.iter().find(|l| l.name == name)
    }

    pub fn grammar(&self) -> Grammar {
        parse_grammar_file(self.source).expect("bundled grammars parse")
    }

    pub fn acceptor(&self) -> Acceptor {
        Acceptor::grammar(&self.grammar())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("only {found} distinct programs found, {wanted} requested")]
    InsufficientDiversity { wanted: usize, found: usize },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// `n` distinct programs from `g`. Draws cycle through derivation-depth
/// strata `0..=SEED_MAX_DEPTH` so short and long programs both appear; the
/// first draw is the minimal program.
pub fn make_seeds(g: &Grammar, n: usize, seed: u64) -> Result<Vec<String>, BenchError> {
    let samplers = (0..=SEED_MAX_DEPTH).map(|d| Sampler::new(g, d)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < n && attempts < n.max(1) * 500 {
        let s = samplers[attempts % samplers.len()].sample(&mut rng);
        attempts += 1;
        if !s.is_empty() && seen.insert(s.clone()) {
            out.push(s);
        }
    }
    if out.len() < n {
        return Err(BenchError::InsufficientDiversity { wanted: n, found: out.len() });
    }
    Ok(out)
}

/// `n` distinct held-out strings sampled at the default depth bound.
pub fn make_test_set(g: &Grammar, n: usize, seed: u64) -> Result<Vec<String>, BenchError> {
    let sampler = Sampler::new(g, DEFAULT_MAX_DEPTH)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < n && attempts < n.max(1) * 500 {
        attempts += 1;
        let s = sampler.sample(&mut rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    if out.len() < n {
        return Err(BenchError::InsufficientDiversity { wanted: n, found: out.len() });
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum AcceptorError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Syntax { path: String, source: SyntaxError },
}

pub fn load_grammar(path: &Path) -> Result<Grammar, AcceptorError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| AcceptorError::Io { path: path.display().to_string(), source })?;
    parse_grammar_file(&text).map_err(|source| AcceptorError::Syntax { path: path.display().to_string(), source })
}

/// Acceptor process body: exit code 0 if stdin is in the language of the
/// grammar at `grammar_file`, 1 if not, 2 if the grammar cannot be loaded.
pub fn golden_acceptor_main(grammar_file: &Path, input: &mut dyn Read) -> i32 {
    let g = match load_grammar(grammar_file) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let mut buf = String::new();
    if input.read_to_string(&mut buf).is_err() {
        return 1;
    }
    if Recognizer::new(&g).accepts(&buf) {
        0
    } else {
        1
    }
}
