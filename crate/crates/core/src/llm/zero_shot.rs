//! Lenient reading of LLM-written BNF.

use std::collections::HashSet;

use super::LlmError;
use crate::grammar::{Grammar, Symbol, START};

const OPEN: &str = "<production-rules>";
const CLOSE: &str = "</production-rules>";
const ROOT: &str = "stmt";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Quoted(String),
    Word(String),
    Angle(String),
    Bar,
}

fn lex(rhs: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = rhs.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                out.push(Tok::Bar);
            }
            '"' | '\'' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(format!("unterminated quote in `{rhs}`")),
                        Some(q) if q == c => break,
                        Some('\\') => match chars.next() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('s') => s.push(' '),
                            Some(e) => s.push(e),
                            None => return Err(format!("dangling escape in `{rhs}`")),
                        },
                        Some(x) => s.push(x),
                    }
                }
                out.push(Tok::Quoted(s));
            }
            '<' => {
                chars.next();
                let name: String = chars.by_ref().take_while(|&x| x != '>').collect();
                out.push(Tok::Angle(name.trim().to_string()));
            }
            _ => {
                let mut w = String::new();
                while let Some(&x) = chars.peek() {
                    if x.is_whitespace() || matches!(x, '|' | '"' | '\'' | '<') {
                        break;
                    }
                    w.push(x);
                    chars.next();
                }
                out.push(Tok::Word(w));
            }
        }
    }
    Ok(out)
}

fn split_rule(line: &str) -> Option<(&str, &str)> {
    ["::=", ":=", "->", ":"].iter().find_map(|sep| {
        let (lhs, rhs) = line.split_once(sep)?;
        let lhs = lhs.trim().trim_start_matches('<').trim_end_matches('>').trim();
        let ok = !lhs.is_empty() && lhs.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
        ok.then_some((lhs, rhs))
    })
}

/// Reads the rules between `<production-rules>` tags. Quoted strings are
/// terminals, names with a rule are non-terminals, other bare words are
/// terminals. Alternatives mentioning undefined names are dropped. The
/// result gets `start -> stmt` (or the first rule).
pub fn parse_bnf_reply(reply: &str) -> Result<Grammar, LlmError> {
    let body = reply
        .find(OPEN)
        .and_then(|i| {
            let rest = &reply[i + OPEN.len()..];
            rest.find(CLOSE).map(|j| &rest[..j])
        })
        .ok_or_else(|| LlmError::MalformedReply("missing <production-rules> tags".into()))?;

    let mut rules: Vec<(String, String)> = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let (Some(last), true) = (rules.last_mut(), line.starts_with('|')) {
            last.1.push(' ');
            last.1.push_str(line);
        } else if let Some((lhs, rhs)) = split_rule(line) {
            rules.push((lhs.to_string(), rhs.to_string()));
        } else {
            log::warn!("zero-shot: ignoring line `{line}`");
        }
    }
    if rules.is_empty() {
        return Err(LlmError::MalformedReply("no rules inside the tags".into()));
    }
    let defined: HashSet<&str> = rules.iter().map(|(l, _)| l.as_str()).collect();
    let mut g = Grammar::new();
    let root = if defined.contains(ROOT) { ROOT.to_string() } else { rules[0].0.clone() };
    g.add(START, vec![Symbol::nt(root.as_str())]);
    for (lhs, rhs) in &rules {
        g.declare(lhs);
        let toks = lex(rhs).map_err(LlmError::MalformedReply)?;
        for alt in toks.split(|t| *t == Tok::Bar) {
            let mut syms = Vec::new();
            let mut ok = true;
            for t in alt {
                match t {
                    Tok::Quoted(s) if s.is_empty() => {}
                    Tok::Quoted(s) => syms.push(Symbol::t(s.as_str())),
                    Tok::Word(w) | Tok::Angle(w) if defined.contains(w.as_str()) => syms.push(Symbol::nt(w.as_str())),
                    Tok::Angle(w) => {
                        log::warn!("zero-shot: undefined <{w}> in rule {lhs}");
                        ok = false;
                    }
                    Tok::Word(w) => syms.push(Symbol::t(w.as_str())),
                    Tok::Bar => unreachable!(),
                }
            }
            if ok {
                g.add(lhs, syms);
            }
        }
    }
    g.validate().map_err(|e| LlmError::MalformedReply(e.to_string()))?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::earley_accepts;

    #[test]
    fn reads_tagged_bnf() {
        let reply = r#"Here is the grammar:
<production-rules>
<stmt> ::= <assign> | "skip" | <stmt> " ; " <stmt>
<assign> ::= "L = " <expr>
<expr> ::= "n"
         | "L"
</production-rules>
Hope it helps."#;
        let g = parse_bnf_reply(reply).unwrap();
        assert!(earley_accepts(&g, "skip ; L = n"));
        assert!(earley_accepts(&g, "L = L"));
        assert!(!earley_accepts(&g, "L = "));
    }

    #[test]
    fn missing_tags() {
        assert!(matches!(parse_bnf_reply("<stmt> ::= \"skip\""), Err(LlmError::MalformedReply(_))));
        assert!(matches!(parse_bnf_reply("<production-rules></production-rules>"), Err(LlmError::MalformedReply(_))));
    }

    #[test]
    fn undefined_names_drop_their_alternative() {
        let g = parse_bnf_reply("<production-rules>\n<stmt> ::= <nowhere> | 'x'\n</production-rules>").unwrap();
        assert_eq!(g.alternatives("stmt").unwrap().len(), 1);
        assert!(earley_accepts(&g, "x"));
    }
}
