//! Precision, recall, F1 and grammar size metrics.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::grammar::{sample_from_grammar, Grammar, GrammarError, Recognizer, Symbol};
use crate::oracle::{OracleClient, OracleError};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("precision needs at least one sample")]
    ZeroSamples,
    #[error("recall needs a non-empty test set")]
    EmptyTestSet,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Fraction of `n` strings sampled from `g` that the oracle accepts.
/// Duplicate draws count once per draw.
pub fn precision<R: Rng + ?Sized>(
    g: &Grammar,
    oracle: &OracleClient,
    n: usize,
    max_depth: usize,
    rng: &mut R,
) -> Result<f64, MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroSamples);
    }
    let samples = sample_from_grammar(g, n, max_depth, rng)?;
    let mut ok = 0;
    for s in &samples {
        if oracle.accepts(s)? {
            ok += 1;
        }
    }
    Ok(ok as f64 / n as f64)
}

/// Fraction of `test_set` that `g` derives.
pub fn recall<S: AsRef<str>>(g: &Grammar, test_set: &[S]) -> Result<f64, MetricsError> {
    if test_set.is_empty() {
        return Err(MetricsError::EmptyTestSet);
    }
    let rec = Recognizer::new(g);
    let ok = test_set.iter().filter(|s| rec.accepts(s.as_ref())).count();
    Ok(ok as f64 / test_set.len() as f64)
}

/// Harmonic mean, defined as 0 when both inputs are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complexity {
    /// Distinct terminals, character classes included.
    pub t: usize,
    /// Non-terminals (rules).
    pub nt: usize,
    /// Symbols on right-hand sides per non-terminal.
    pub rhs: f64,
    /// Branch operators: `|` separators plus `+` closures of character
    /// classes.
    pub mcc_total: usize,
    pub mcc_avg: f64,
}

pub fn complexity_metrics(g: &Grammar) -> Complexity {
    let mut terminals: BTreeSet<&Symbol> = BTreeSet::new();
    let mut symbols = 0;
    let mut branches = 0;
    let mut nt = 0;
    for (_, alts) in g.rules() {
        nt += 1;
        branches += alts.len().saturating_sub(1);
        for sym in alts.iter().flatten() {
            symbols += 1;
            match sym {
                Symbol::NonTerminal(_) => {}
                Symbol::Class(_) => {
                    branches += 1;
                    terminals.insert(sym);
                }
                Symbol::Terminal(_) => {
                    terminals.insert(sym);
                }
            }
        }
    }
    let per = |x: usize| if nt == 0 { 0.0 } else { x as f64 / nt as f64 };
    Complexity { t: terminals.len(), nt, rhs: per(symbols), mcc_total: branches, mcc_avg: per(branches) }
}

/// The JSON object printed by `eval`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub oracle_calls: u64,
    pub t: usize,
    pub nt: usize,
    pub rhs: f64,
    pub mcc_total: usize,
    pub mcc_avg: f64,
    pub runtime_s: f64,
}

impl EvalReport {
    pub fn new(precision: f64, recall: f64, oracle_calls: u64, c: Complexity, runtime_s: f64) -> Self {
        EvalReport {
            precision,
            recall,
            f1: f1(precision, recall),
            oracle_calls,
            t: c.t,
            nt: c.nt,
            rhs: c.rhs,
            mcc_total: c.mcc_total,
            mcc_avg: c.mcc_avg,
            runtime_s,
        }
    }
}
