use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentObservation, ObservationView};
use crate::uncertainty::renormalize;

use super::TokenLogprobs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Whodunit,
    Commons,
}

impl EnvKind {
    pub fn of(obs: &AgentObservation) -> Self {
        match obs.view {
            ObservationView::Whodunit { .. } => EnvKind::Whodunit,
            ObservationView::Commons { .. } => EnvKind::Commons,
        }
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static regex"))
}

fn numeral() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"\d+(?:\.\d+)?")
}

fn character_field() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r#""character"\s*:\s*(\[[^\]]*\]|"[^"]*"|[^,}\n]*)"#)
}

fn thoughts_field() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r#""thoughts"\s*:\s*"((?:[^"\\]|\\.)*)""#)
}

fn character_mention() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(
        &RE,
        r"(?i)\b(?:characters?|suspects?)\s*(?:#|id|number)?\s*:?\s*\[?\s*(\d+(?:\s*(?:,|and|or|&)\s*\d+)*)",
    )
}

fn numerals_in(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    for m in numeral().find_iter(&text[range.clone()]) {
        out.push(range.start + m.start()..range.start + m.end());
    }
}

/// Byte ranges of the monitored numerals in `text`.
fn numeral_spans(text: &str, env: EnvKind) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    match env {
        EnvKind::Commons => numerals_in(text, 0..text.len(), &mut spans),
        EnvKind::Whodunit => {
            for c in character_field().captures_iter(text) {
                let g = c.get(1).expect("group");
                numerals_in(text, g.range(), &mut spans);
            }
            for c in thoughts_field().captures_iter(text) {
                let body = c.get(1).expect("group");
                for m in character_mention().captures_iter(body.as_str()) {
                    let g = m.get(1).expect("group");
                    numerals_in(text, body.start() + g.start()..body.start() + g.end(), &mut spans);
                }
            }
        }
    }
    spans
}

/// Probability vectors at every token overlapping a monitored numeral, in
/// token order. The token text is the concatenation of the token stream;
/// each top-k mass vector is renormalised to sum to one.
pub fn extract_positions(tokens: &[TokenLogprobs], env: EnvKind) -> Vec<Vec<f64>> {
    let text: String = tokens.iter().map(|t| t.token.as_str()).collect();
    let spans = numeral_spans(&text, env);
    if spans.is_empty() {
        return Vec::new();
    }
    let mut selected = BTreeSet::new();
    let mut offset = 0;
    for (i, t) in tokens.iter().enumerate() {
        let tok = offset..offset + t.token.len();
        offset = tok.end;
        if tok.is_empty() {
            continue;
        }
        if spans.iter().any(|s| s.start < tok.end && tok.start < s.end) {
            selected.insert(i);
        }
    }
    selected
        .into_iter()
        .filter_map(|i| {
            let t = &tokens[i];
            let mass: Vec<f64> = if t.top.is_empty() {
                vec![t.logprob.exp()]
            } else {
                t.top.iter().map(|a| a.logprob.exp()).collect()
            };
            renormalize(&mass)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::TopLogprob;
    use crate::uncertainty::entropy;
    use proptest::prelude::*;

    fn tok(s: &str, top: &[f64]) -> TokenLogprobs {
        TokenLogprobs {
            token: s.to_string(),
            logprob: top.first().map_or(0.0, |p| p.ln()),
            top: top
                .iter()
                .enumerate()
                .map(|(i, p)| TopLogprob {
                    token: format!("t{i}"),
                    logprob: p.ln(),
                })
                .collect(),
        }
    }

    #[test]
    fn character_field_is_selected() {
        let toks = vec![
            tok("{\"", &[1.0]),
            tok("action", &[1.0]),
            tok("\": ", &[1.0]),
            tok("3", &[0.9, 0.1]),
            tok(", \"", &[1.0]),
            tok("character", &[1.0]),
            tok("\": ", &[1.0]),
            tok("3", &[0.6, 0.2]),
            tok("}", &[1.0]),
        ];
        let p = extract_positions(&toks, EnvKind::Whodunit);
        assert_eq!(p.len(), 1);
        assert!((p[0][0] - 0.75).abs() < 1e-12);
        assert!((p[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multi_token_numerals_and_thought_mentions() {
        let toks = vec![
            tok("{\"thoughts\": \"Character ", &[1.0]),
            tok("1", &[0.5, 0.5]),
            tok("2", &[0.8, 0.2]),
            tok(" fits, not characters 4 and ", &[1.0]),
            tok("5", &[0.7, 0.3]),
            tok(". Turn 9.\", \"character\": [", &[1.0]),
            tok("12", &[0.4, 0.4]),
            tok("]}", &[1.0]),
        ];
        let p = extract_positions(&toks, EnvKind::Whodunit);
        // "1","2" (character 12), the token holding "4", "5", and "12" in the field;
        // "9" is not a character mention.
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], vec![0.5, 0.5]);
        assert_eq!(p[1], vec![0.8, 0.2]);
        assert_eq!(p[2], vec![1.0]);
    }

    #[test]
    fn no_numerals_gives_no_positions() {
        let toks = vec![tok("{\"message\": \"hello\"}", &[0.5])];
        assert!(extract_positions(&toks, EnvKind::Commons).is_empty());
        assert!(extract_positions(&toks, EnvKind::Whodunit).is_empty());
    }

    #[test]
    fn commons_selects_every_numeral() {
        let toks = vec![
            tok("{\"amount\": ", &[1.0]),
            tok("12", &[0.3, 0.5]),
            tok(".5}", &[0.2, 0.2]),
        ];
        assert_eq!(extract_positions(&toks, EnvKind::Commons).len(), 2);
    }

    #[test]
    fn partial_mass_is_renormalised() {
        let masses = [0.2, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.03, 0.02];
        let toks = vec![tok("{\"amount\": ", &[1.0]), tok("7", &masses)];
        let p = extract_positions(&toks, EnvKind::Commons);
        assert!((p[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0][0] - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_ln_k_and_pure(
            masses in proptest::collection::vec(proptest::collection::vec(1e-6f64..1.0, 1..=10), 1..6),
            gaps in proptest::collection::vec("[a-z ,]{0,6}", 6),
        ) {
            let mut toks = vec![tok("{\"amount\": \"", &[1.0])];
            for (i, m) in masses.iter().enumerate() {
                toks.push(tok(&format!("{}", i + 1), m));
                toks.push(tok(&format!(" {}", gaps[i].replace(char::is_numeric, "")), &[1.0]));
            }
            let a = extract_positions(&toks, EnvKind::Commons);
            prop_assert_eq!(a.clone(), extract_positions(&toks, EnvKind::Commons));
            prop_assert_eq!(a.len(), masses.len());
            for (p, m) in a.iter().zip(&masses) {
                let h = entropy(p).unwrap();
                prop_assert!(h <= (m.len() as f64).ln() + 1e-9);
            }
        }
    }
}
