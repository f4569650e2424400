//! Black-box context-free grammar inference.
//!
//! Seed programs are tokenized, turned into flat parse trees and then
//! restructured step by step. Every restructuring is validated against a
//! membership oracle before it is kept. The final trees are read off as a
//! grammar.

pub mod bench;
pub mod bubbling;
pub mod cli;
pub mod grammar;
pub mod hdd;
pub mod llm;
pub mod heuristics;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod tokenizer;
pub mod tree;
