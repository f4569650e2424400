//! Command-line front end. `main.rs` only forwards to [`main_with_args`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{golden_acceptor_main, load_grammar, make_seeds, make_test_set, GoldenLanguage};
use crate::grammar::{serialize, Grammar, LexicalOptions, DEFAULT_MAX_DEPTH};
use crate::llm::{Guide, HeuristicStub, HttpProvider, Provider, ReplayProvider};
use crate::metrics::{complexity_metrics, precision, recall, EvalReport};
use crate::oracle::{Acceptor, OracleClient, DEFAULT_TIMEOUT_MS};
use crate::pipeline::{run_infer, InferConfig, InferStats, Seed};
use crate::tokenizer::TokenizerOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gram-forge", version, about = "Infer a context-free grammar from seed programs and a membership oracle")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 101)]
    pub rng_seed: u64,
    /// Append one line per merge check to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Dump the parse trees after each stage into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub dump_trees: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer a grammar from a directory of seed programs.
    Infer(InferArgs),
    /// Precision, recall, F1 and size of a grammar, as JSON.
    Eval(EvalArgs),
    /// Size metrics of a grammar, as JSON.
    Stats(StatsArgs),
    /// Act as an acceptor: exit 0 iff stdin is in the grammar's language.
    OracleServe(ServeArgs),
    /// Write seed programs and a held-out test set for a bundled language.
    Seeds(SeedsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmKind {
    Http,
    Replay,
    Stub,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Acceptor command (input on stdin, exit 0 = accept). `builtin:NAME`
    /// and `grammar:FILE` run a bundled or given grammar in-process.
    #[arg(long, value_name = "CMD")]
    pub oracle: String,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    pub oracle_timeout_ms: u64,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Directory of seed programs, one per file.
    #[arg(long, value_name = "DIR")]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Where to write the grammar (stdout if absent).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write inference counters as JSON here.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LlmKind::Stub)]
    pub llm: LlmKind,
    #[arg(long, value_name = "NAME")]
    pub llm_model: Option<String>,
    /// JSON map from prompt sha256 to reply, for `--llm replay`.
    #[arg(long, value_name = "FILE")]
    pub replay_store: Option<PathBuf>,
    /// Merged classes get machine labels instead of LLM-suggested ones.
    #[arg(long)]
    pub no_ai_label: bool,
    #[arg(long)]
    pub no_hdd: bool,
    /// Ignore brackets: no pre-structuring and no within-bracket bubbles.
    #[arg(long)]
    pub no_bracket_bubbles: bool,
    /// Skip LLM 1- and 2-bubble proposals.
    #[arg(long)]
    pub no_llm_bubbles: bool,
    /// Skip the heuristic bubble ranking phase.
    #[arg(long)]
    pub no_treevada: bool,
    /// Keep literal tokens instead of generalizing to character classes.
    #[arg(long)]
    pub no_lexinfer: bool,
    /// Every digit is its own token.
    #[arg(long)]
    pub split_digit_runs: bool,
    /// Allow the any-printable rung in lexical inference.
    #[arg(long)]
    pub any_printable: bool,
    /// Ask the LLM for a whole grammar instead of inferring one.
    #[arg(long)]
    pub zero_shot: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub grammar: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Directory of held-out valid programs.
    #[arg(long, value_name = "DIR")]
    pub tests: PathBuf,
    /// Strings sampled from the grammar for precision.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Seed for precision sampling (defaults to --rng-seed).
    #[arg(long)]
    pub sample_seed: Option<u64>,
    /// Counters written by `infer --stats`, to report its oracle calls and
    /// runtime.
    #[arg(long, value_name = "FILE")]
    pub infer_stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    pub grammar: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Grammar file the acceptor decides membership for.
    #[arg(value_name = "GRAMMAR", conflicts_with = "lang", required_unless_present = "lang")]
    pub grammar: Option<PathBuf>,
    /// A bundled language instead of a grammar file.
    #[arg(long)]
    pub lang: Option<String>,
}

#[derive(Debug, Args)]
pub struct SeedsArgs {
    /// Bundled language: while, while-num, ifelse, json, lisp.
    #[arg(long)]
    pub lang: String,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Number of seeds (language default if absent).
    #[arg(long)]
    pub count: Option<usize>,
    /// Also write a held-out test set here.
    #[arg(long, value_name = "DIR")]
    pub tests_out: Option<PathBuf>,
    #[arg(long)]
    pub test_count: Option<usize>,
    /// Seed for seed generation (defaults to --rng-seed); the test set uses
    /// this plus one.
    #[arg(long)]
    pub sample_seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(String);

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError(e.to_string())
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gram-forge: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Infer(a) => infer(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Stats(a) => {
            let g = load_grammar(&a.grammar).map_err(fail)?;
            println!("{}", serde_json::to_string_pretty(&complexity_metrics(&g)).expect("serializes"));
            Ok(EXIT_OK)
        }
        Command::OracleServe(a) => serve(a),
        Command::Seeds(a) => seeds(cli, a),
    }
}

/// Resolves an `--oracle` value.
pub fn make_oracle(oracle: &str, timeout_ms: u64) -> Result<OracleClient, CliError> {
    let acceptor = if let Some(name) = oracle.strip_prefix("builtin:") {
        GoldenLanguage::by_name(name).ok_or_else(|| fail(format!("unknown bundled language `{name}`")))?.acceptor()
    } else if let Some(path) = oracle.strip_prefix("grammar:") {
        Acceptor::grammar(&load_grammar(Path::new(path)).map_err(fail)?)
    } else {
        Acceptor::command(oracle, Duration::from_millis(timeout_ms)).ok_or_else(|| fail("empty --oracle command"))?
    };
    Ok(OracleClient::new(acceptor))
}

/// Every regular file in `dir`, sorted by name, read verbatim.
pub fn read_program_dir(dir: &Path) -> Result<Vec<Seed>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| fail(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
            let id = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Seed::new(id, text))
        })
        .collect()
}

fn write_program_dir(dir: &Path, programs: &[String]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
    for (i, p) in programs.iter().enumerate() {
        let path = dir.join(format!("{i:04}.txt"));
        fs::write(&path, p).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn make_provider(a: &InferArgs) -> Result<Box<dyn Provider>, CliError> {
    Ok(match a.llm {
        LlmKind::Stub => Box::new(HeuristicStub::default()),
        LlmKind::Replay => {
            let path = a.replay_store.as_ref().ok_or_else(|| fail("--llm replay needs --replay-store"))?;
            Box::new(ReplayProvider::open(path).map_err(fail)?)
        }
        LlmKind::Http => Box::new(HttpProvider::from_env(a.llm_model.as_deref())),
    })
}

/// The pipeline configuration implied by the flags.
pub fn infer_config(cli: &Cli, a: &InferArgs) -> InferConfig {
    InferConfig {
        rng_seed: cli.rng_seed,
        ai_label: !a.no_ai_label,
        bracket_bubbles: !a.no_bracket_bubbles,
        llm_bubbles: !a.no_llm_bubbles,
        treevada: !a.no_treevada,
        hdd: !a.no_hdd,
        lexinfer: !a.no_lexinfer,
        tokenizer: TokenizerOptions { split_digit_runs: a.split_digit_runs },
        lexical: LexicalOptions { any_printable: a.any_printable, ..LexicalOptions::default() },
        dump_trees: cli.dump_trees.clone(),
        ..InferConfig::default()
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fail(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(fail),
    }
}

fn infer(cli: &Cli, a: &InferArgs) -> Result<i32, CliError> {
    let seeds = read_program_dir(&a.seeds)?;
    if seeds.is_empty() {
        return Err(fail(format!("no seed files in {}", a.seeds.display())));
    }
    let oracle = make_oracle(&a.oracle.oracle, a.oracle.oracle_timeout_ms)?;
    let cfg = infer_config(cli, a);
    let guide = Guide::new(make_provider(a)?, cfg.root_label.clone());
    let started = Instant::now();

    let (grammar, stats): (Grammar, InferStats) = if a.zero_shot {
        let texts: Vec<String> = seeds.iter().map(|s| s.text.clone()).collect();
        let g = guide.zero_shot_grammar(&texts).map_err(|e| fail(format!("stage zero-shot: {e}")))?;
        let g = if cfg.lexinfer {
            let trees = zero_shot_trees(&seeds, &cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            crate::grammar::expand_tokens(&trees, &g, &oracle, &cfg.lexical, &mut rng)
                .map_err(|e| fail(format!("stage lexical: {e}")))?
        } else {
            g
        };
        let o = oracle.stats();
        let stats = InferStats {
            oracle_calls: o.calls_total,
            oracle_external_calls: o.calls_external,
            runtime_s: started.elapsed().as_secs_f64(),
            ..InferStats::default()
        };
        (g, stats)
    } else {
        let mut trace_file = match &cli.trace {
            Some(p) => Some(io::BufWriter::new(fs::File::create(p).map_err(|e| fail(format!("{}: {e}", p.display())))?)),
            None => None,
        };
        let trace: Option<&mut dyn Write> = trace_file.as_mut().map(|w| w as &mut dyn Write);
        let inf = run_infer(&seeds, &oracle, Some(&guide), &cfg, trace).map_err(fail)?;
        if let Some(w) = trace_file.as_mut() {
            w.flush().map_err(fail)?;
        }
        (inf.grammar, inf.stats)
    };
    write_output(a.out.as_deref(), &serialize(&grammar))?;
    if let Some(p) = &a.stats {
        let text = serde_json::to_string_pretty(&stats).expect("serializes");
        fs::write(p, text + "\n").map_err(|e| fail(format!("{}: {e}", p.display())))?;
    }
    log::info!("{} oracle calls, {:.1}s", stats.oracle_calls, stats.runtime_s);
    Ok(EXIT_OK)
}

/// Flat seed trees, used as lexical-inference sample material for the
/// zero-shot grammar.
fn zero_shot_trees(seeds: &[Seed], cfg: &InferConfig) -> Vec<crate::tree::ParseTree> {
    let seqs: Vec<crate::tokenizer::TokenSeq> = seeds
        .iter()
        .filter(|s| !s.text.is_empty())
        .map(|s| crate::tokenizer::TokenSeq::new(s.id.clone(), crate::tokenizer::pretokenize_with(&s.text, cfg.tokenizer)))
        .collect();
    crate::tree::create_naive_trees(&seqs, &cfg.root_label).map(|f| f.trees).unwrap_or_default()
}

#[derive(serde::Deserialize)]
struct RecordedStats {
    oracle_calls: u64,
    runtime_s: f64,
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    let g = load_grammar(&a.grammar).map_err(fail)?;
    let oracle = make_oracle(&a.oracle.oracle, a.oracle.oracle_timeout_ms)?;
    let tests: Vec<String> = read_program_dir(&a.tests)?.into_iter().map(|s| s.text).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(a.sample_seed.unwrap_or(cli.rng_seed));
    let p = precision(&g, &oracle, a.samples, a.max_depth, &mut rng).map_err(fail)?;
    let r = recall(&g, &tests).map_err(fail)?;
    let (calls, runtime) = match &a.infer_stats {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            let s: RecordedStats = serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            (s.oracle_calls, s.runtime_s)
        }
        None => (oracle.stats().calls_total, started.elapsed().as_secs_f64()),
    };
    let report = EvalReport::new(p, r, calls, complexity_metrics(&g), runtime);
    println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
    Ok(EXIT_OK)
}

fn serve(a: &ServeArgs) -> Result<i32, CliError> {
    let mut stdin = io::stdin().lock();
    if let Some(name) = &a.lang {
        let lang = GoldenLanguage::by_name(name).ok_or_else(|| fail(format!("unknown bundled language `{name}`")))?;
        let mut buf = String::new();
        if io::Read::read_to_string(&mut stdin, &mut buf).is_err() {
            return Ok(EXIT_FAILURE);
        }
        let ok = crate::grammar::Recognizer::new(&lang.grammar()).accepts(&buf);
        return Ok(if ok { EXIT_OK } else { EXIT_FAILURE });
    }
    let path = a.grammar.as_ref().expect("clap enforces GRAMMAR or --lang");
    Ok(golden_acceptor_main(path, &mut stdin))
}

fn seeds(cli: &Cli, a: &SeedsArgs) -> Result<i32, CliError> {
    let lang = GoldenLanguage::by_name(&a.lang).ok_or_else(|| fail(format!("unknown bundled language `{}`", a.lang)))?;
    let g = lang.grammar();
    let seed = a.sample_seed.unwrap_or(cli.rng_seed);
    let programs = make_seeds(&g, a.count.unwrap_or(lang.seed_count), seed).map_err(fail)?;
    write_program_dir(&a.out, &programs)?;
    if let Some(dir) = &a.tests_out {
        let tests = make_test_set(&g, a.test_count.unwrap_or(lang.test_count), seed.wrapping_add(1)).map_err(fail)?;
        write_program_dir(dir, &tests)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        main_with_args(std::iter::once("gram-forge").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(code(&[]), EXIT_USAGE);
        assert_eq!(code(&["infer", "--seeds", "x"]), EXIT_USAGE);
        assert_eq!(code(&["infer", "--seeds", "x", "--oracle", "true", "--llm", "gpt"]), EXIT_USAGE);
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["gram-forge", "infer", "--seeds", "s", "--oracle", "builtin:while"]).unwrap();
        assert_eq!(cli.rng_seed, 101);
        let Command::Infer(a) = &cli.command else { panic!() };
        assert_eq!(a.oracle.oracle_timeout_ms, 10_000);
        assert_eq!(a.llm, LlmKind::Stub);
        let cfg = infer_config(&cli, a);
        assert!(cfg.hdd && cfg.treevada && cfg.bracket_bubbles && cfg.llm_bubbles && cfg.ai_label && cfg.lexinfer);
    }

    #[test]
    fn each_ablation_flag_flips_one_switch() {
        let base = ["gram-forge", "infer", "--seeds", "s", "--oracle", "true"];
        let flags = ["--no-ai-label", "--no-hdd", "--no-bracket-bubbles", "--no-llm-bubbles", "--no-treevada", "--no-lexinfer"];
        for (i, flag) in flags.iter().enumerate() {
            let cli = Cli::try_parse_from(base.iter().chain([flag])).unwrap();
            let Command::Infer(a) = &cli.command else { panic!() };
            let c = infer_config(&cli, a);
            let on = [c.ai_label, c.hdd, c.bracket_bubbles, c.llm_bubbles, c.treevada, c.lexinfer];
            for (j, v) in on.iter().enumerate() {
                assert_eq!(*v, i != j, "{flag}");
            }
        }
    }

    #[test]
    fn seeds_infer_eval_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
        assert_eq!(code(&["seeds", "--lang", "lisp", "--out", &d("seeds"), "--count", "6", "--tests-out", &d("tests"), "--test-count", "20"]), 0);
        assert_eq!(
            code(&["infer", "--seeds", &d("seeds"), "--oracle", "builtin:lisp", "--out", &d("g.bnf"), "--stats", &d("s.json"), "--no-hdd"]),
            0
        );
        assert_eq!(code(&["stats", "--grammar", &d("g.bnf")]), 0);
        assert_eq!(
            code(&["eval", "--grammar", &d("g.bnf"), "--oracle", "builtin:lisp", "--tests", &d("tests"), "--samples", "50", "--infer-stats", &d("s.json")]),
            0
        );
        fs::write(d("bad.bnf"), "start: \"unterminated\n").unwrap();
        assert_eq!(code(&["stats", "--grammar", &d("bad.bnf")]), EXIT_FAILURE);
        assert_eq!(code(&["infer", "--seeds", &d("nowhere"), "--oracle", "builtin:lisp"]), EXIT_FAILURE);
    }
}
