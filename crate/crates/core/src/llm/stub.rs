//! An offline provider that answers from the prompt text alone.

use std::collections::HashMap;

use super::{LlmError, Provider};

/// Frequency-based stand-in for a model: frequent sibling n-grams as
/// 1-bubbles, no 2-bubbles, first-letter labels, and a grammar that lists
/// the seeds for the zero-shot prompt.
#[derive(Debug, Clone)]
pub struct HeuristicStub {
    /// Most n-grams proposed per reply.
    pub k: usize,
}

impl Default for HeuristicStub {
    fn default() -> Self {
        HeuristicStub { k: super::MAX_BUBBLES }
    }
}

fn section<'a>(prompt: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let i = prompt.find(&open)? + open.len();
    let j = prompt[i..].find(&close)? + i;
    Some(&prompt[i..j])
}

impl HeuristicStub {
    fn bubbles(&self, levels: &str) -> String {
        let mut counts: HashMap<Vec<&str>, usize> = HashMap::new();
        for line in levels.lines() {
            let Some(inner) = line.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')) else { continue };
            let nodes: Vec<&str> = inner.split(' ').filter(|s| !s.is_empty()).collect();
            for n in 2..=4 {
                for w in nodes.windows(n) {
                    *counts.entry(w.to_vec()).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(Vec<&str>, usize)> = counts.into_iter().filter(|(_, c)| *c >= 2).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.len().cmp(&b.0.len())).then(a.0.cmp(&b.0)));
        ranked.truncate(self.k);
        let groups: Vec<Vec<&str>> = ranked.into_iter().map(|(g, _)| g).collect();
        serde_json::json!({ "bubbles": groups }).to_string()
    }

    fn label(pair: &str) -> String {
        let yields: Vec<String> = serde_json::from_str(pair).unwrap_or_default();
        let label: String = yields
            .iter()
            .filter_map(|y| y.chars().find(|c| c.is_ascii_alphabetic()))
            .map(|c| c.to_ascii_lowercase())
            .collect();
        serde_json::json!({ "label": label }).to_string()
    }

    fn zero_shot(prompt: &str) -> String {
        let mut alts = Vec::new();
        let mut rest = prompt;
        while let Some(p) = section(rest, "program") {
            alts.push(serde_json::to_string(p).expect("strings serialize"));
            rest = &rest[rest.find("</program>").unwrap() + 10..];
        }
        format!("<production-rules>\n<stmt> ::= {}\n</production-rules>", alts.join(" | "))
    }
}

impl Provider for HeuristicStub {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        match section(prompt, "task").map(str::trim) {
            Some("one-bubbles") => Ok(self.bubbles(section(prompt, "tree-levels").unwrap_or(""))),
            Some("two-bubbles") => Ok(r#"{"pairs": []}"#.to_string()),
            Some("label") => Ok(Self::label(section(prompt, "pair").unwrap_or("[]"))),
            Some("zero-shot") => Ok(Self::zero_shot(prompt)),
            _ => Err(LlmError::Provider("stub does not know this prompt".into())),
        }
    }

    fn model_name(&self) -> &str {
        "heuristic-stub"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::earley_accepts;
    use crate::llm::Guide;
    use std::collections::BTreeSet;

    #[test]
    fn frequent_ngrams() {
        let g = Guide::new(Box::new(HeuristicStub::default()), "stmt");
        let levels: Vec<String> = ["[stmt]", "[a + b ; a + c]"].iter().map(|s| s.to_string()).collect();
        let p = g.propose_1_bubbles(&levels, None);
        assert_eq!(p.labels, vec![vec!["a".to_string(), "+".to_string()]]);
        assert!(g.propose_2_bubbles(&levels, None).is_empty());
    }

    #[test]
    fn first_letter_labels() {
        let g = Guide::new(Box::new(HeuristicStub::default()), "stmt");
        assert_eq!(g.suggest_label("(n+n)", "n", &BTreeSet::new()).as_deref(), Some("nn"));
        assert_eq!(g.suggest_label("(1)", "2", &BTreeSet::new()), None);
    }

    #[test]
    fn zero_shot_lists_seeds() {
        let g = Guide::new(Box::new(HeuristicStub::default()), "stmt");
        let seeds = vec!["skip".to_string(), "L = \"n\"".to_string()];
        let gr = g.zero_shot_grammar(&seeds).unwrap();
        assert!(earley_accepts(&gr, "skip"));
        assert!(earley_accepts(&gr, "L = \"n\""));
        assert!(!earley_accepts(&gr, "L = n"));
    }
}
