//! The membership oracle: a black-box acceptor behind a cache and call
//! counters.
//!
//! An external acceptor receives the candidate program on standard input and
//! accepts it by exiting with status 0. Queries that exceed the timeout count
//! as rejections but are tallied separately.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use sha2::{Digest, Sha256};
use wait_timeout::ChildExt;

use crate::grammar::{Grammar, Recognizer};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("cannot run oracle command `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: io::Error,
    },
    #[error("seed `{0}` is rejected by the oracle")]
    SeedRejected(String),
    #[error("oracle cache file {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct CommandAcceptor {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl CommandAcceptor {
    /// Splits a shell-like command line on whitespace (no quoting).
    pub fn from_command_line(line: &str, timeout: Duration) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(CommandAcceptor { program, args: parts.collect(), timeout })
    }

    fn describe(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn run(&self, input: &str) -> Result<Verdict, OracleError> {
        let spawn_err = |source| OracleError::Spawn { command: self.describe(), source };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(spawn_err)?;
        if let Some(mut stdin) = child.stdin.take() {
            // The acceptor may exit before reading everything.
            match stdin.write_all(input.as_bytes()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(spawn_err(e)),
                _ => {}
            }
        }
        match child.wait_timeout(self.timeout).map_err(spawn_err)? {
            Some(status) if status.success() => Ok(Verdict::Accept),
            Some(_) => Ok(Verdict::Reject),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                Ok(Verdict::Timeout)
            }
        }
    }
}

/// Something that decides membership.
#[derive(Clone)]
pub enum Acceptor {
    /// External program, one process per query.
    Command(CommandAcceptor),
    /// In-process Earley recognizer over a known grammar.
    Grammar(Arc<Recognizer>),
    /// Arbitrary in-process predicate.
    Func(Arc<dyn Fn(&str) -> bool + Send + Sync>),
}

impl fmt::Debug for Acceptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Acceptor::Command(c) => write!(f, "Command({})", c.describe()),
            Acceptor::Grammar(_) => f.write_str("Grammar(..)"),
            Acceptor::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl Acceptor {
    pub fn from_fn(f: impl Fn(&str) -> bool + Send + Sync + 'static) -> Self {
        Acceptor::Func(Arc::new(f))
    }

    pub fn grammar(g: &Grammar) -> Self {
        Acceptor::Grammar(Arc::new(Recognizer::new(g)))
    }

    pub fn command(line: &str, timeout: Duration) -> Option<Self> {
        CommandAcceptor::from_command_line(line, timeout).map(Acceptor::Command)
    }

    fn run(&self, input: &str) -> Result<Verdict, OracleError> {
        let accepted = match self {
            Acceptor::Command(c) => return c.run(input),
            Acceptor::Grammar(r) => r.accepts(input),
            Acceptor::Func(f) => f(input),
        };
        Ok(if accepted { Verdict::Accept } else { Verdict::Reject })
    }

    fn is_external(&self) -> bool {
        matches!(self, Acceptor::Command(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct OracleStats {
    pub calls_total: u64,
    pub calls_external: u64,
    pub cache_size: u64,
    pub timeouts: u64,
}

type Key = [u8; 32];

fn key(s: &str) -> Key {
    Sha256::digest(s.as_bytes()).into()
}

/// Cached, metered membership queries. Safe to share between threads.
#[derive(Debug)]
pub struct OracleClient {
    acceptor: Acceptor,
    cache: Mutex<HashMap<Key, bool>>,
    calls_total: AtomicU64,
    calls_external: AtomicU64,
    timeouts: AtomicU64,
    parallelism: usize,
}

impl OracleClient {
    pub fn new(acceptor: Acceptor) -> Self {
        let parallelism = if acceptor.is_external() {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            1
        };
        OracleClient {
            acceptor,
            cache: Mutex::new(HashMap::new()),
            calls_total: AtomicU64::new(0),
            calls_external: AtomicU64::new(0),
            timeouts: AtomicU64::new(0),
            parallelism,
        }
    }

    /// Upper bound on concurrently running acceptor processes in
    /// [`accepts_all`](Self::accepts_all).
    pub fn with_parallelism(mut self, n: usize) -> Self {
        self.parallelism = n.max(1);
        self
    }

    pub fn accepts(&self, s: &str) -> Result<bool, OracleError> {
        self.calls_total.fetch_add(1, Ordering::Relaxed);
        let k = key(s);
        if let Some(&hit) = self.cache.lock().unwrap().get(&k) {
            return Ok(hit);
        }
        self.calls_external.fetch_add(1, Ordering::Relaxed);
        let verdict = self.acceptor.run(s)?;
        if verdict == Verdict::Timeout {
            self.timeouts.fetch_add(1, Ordering::Relaxed);
            log::warn!("oracle timed out on a {}-byte input; counted as reject", s.len());
        }
        let accepted = verdict == Verdict::Accept;
        self.cache.lock().unwrap().insert(k, accepted);
        Ok(accepted)
    }

    /// True iff every string is accepted. Stops at the first rejection; with
    /// an external acceptor, queries run in batches of `parallelism`.
    pub fn accepts_all<S: AsRef<str> + Sync>(&self, strings: &[S]) -> Result<bool, OracleError> {
        if self.parallelism <= 1 {
            for s in strings {
                if !self.accepts(s.as_ref())? {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        for chunk in strings.chunks(self.parallelism) {
            let results: Vec<Result<bool, OracleError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|s| scope.spawn(move || self.accepts(s.as_ref())))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
            });
            for r in results {
                if !r? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn stats(&self) -> OracleStats {
        OracleStats {
            calls_total: self.calls_total.load(Ordering::Relaxed),
            calls_external: self.calls_external.load(Ordering::Relaxed),
            cache_size: self.cache.lock().unwrap().len() as u64,
            timeouts: self.timeouts.load(Ordering::Relaxed),
        }
    }

    /// Loads `sha256-hex<TAB>true|false` lines into the cache.
    pub fn load_cache(&self, path: &Path) -> Result<usize, OracleError> {
        let cache_err = |source| OracleError::Cache { path: path.to_path_buf(), source };
        let file = std::fs::File::open(path).map_err(cache_err)?;
        let mut cache = self.cache.lock().unwrap();
        let mut loaded = 0;
        for line in io::BufReader::new(file).lines() {
            let line = line.map_err(cache_err)?;
            let Some((hash, verdict)) = line.split_once('\t') else { continue };
            let mut k = [0u8; 32];
            if hex::decode_to_slice(hash, &mut k).is_err() {
                continue;
            }
            let v = match verdict.trim() {
                "true" => true,
                "false" => false,
                _ => continue,
            };
            cache.insert(k, v);
            loaded += 1;
        }
        Ok(loaded)
    }

    pub fn save_cache(&self, path: &Path) -> Result<(), OracleError> {
        let cache_err = |source| OracleError::Cache { path: path.to_path_buf(), source };
        let mut entries: Vec<(String, bool)> = self
            .cache
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (hex::encode(k), *v))
            .collect();
        entries.sort();
        let mut out = String::new();
        for (k, v) in entries {
            out.push_str(&format!("{k}\t{v}\n"));
        }
        std::fs::write(path, out).map_err(cache_err)
    }
}
