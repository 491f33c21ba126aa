use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use crate::action::{Action, AsymAction, CommonsAction, SymAction};
use crate::agents::{AgentObservation, CommonsPhase, ObservationView};
use crate::game::{AttributeSchema, Role, SuspectId};

use super::LlmError;

fn bare_bool() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(:\s*)(True|False)\b"#).expect("static regex"))
}

fn line_comment() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?m)^(\s*"[^"]*"\s*:\s*[^"\n/]*?),?\s*//[^\n]*$"#).expect("static regex"))
}

fn digits() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("static regex"))
}

fn malformed(msg: impl Into<String>) -> LlmError {
    LlmError::MalformedGeneration(msg.into())
}

/// The JSON object between the first `{` and the last `}` of a generation.
/// Python-style `True`/`False` literals and trailing `//` comments are
/// tolerated.
pub fn extract_json(generation: &str) -> Result<Value, LlmError> {
    let start = generation.find('{').ok_or_else(|| malformed("no JSON object"))?;
    let end = generation
        .rfind('}')
        .filter(|&e| e > start)
        .ok_or_else(|| malformed("no JSON object"))?;
    let raw = &generation[start..=end];
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return Ok(v);
    }
    let cleaned = bare_bool().replace_all(raw, |c: &regex::Captures| format!("{}{}", &c[1], c[2].to_lowercase()));
    let cleaned = line_comment().replace_all(&cleaned, "$1,");
    let cleaned = cleaned.replace(",\n}", "\n}").replace(",}", "}");
    serde_json::from_str(&cleaned).map_err(|e| malformed(format!("invalid JSON: {e}")))
}

fn as_int(v: Option<&Value>, field: &str) -> Result<i64, LlmError> {
    let v = v.ok_or_else(|| malformed(format!("missing {field:?}")))?;
    match v {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
            .ok_or_else(|| malformed(format!("{field:?} is not an integer"))),
        Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| malformed(format!("{field:?} is not an integer"))),
        _ => Err(malformed(format!("{field:?} is not an integer"))),
    }
}

fn as_suspect(v: Option<&Value>, field: &str) -> Result<SuspectId, LlmError> {
    let n = as_int(v, field)?;
    SuspectId::try_from(n).map_err(|_| malformed(format!("{field:?} = {n} is not a character id")))
}

fn as_text(v: Option<&Value>, field: &str) -> Result<String, LlmError> {
    match v {
        Some(Value::String(s)) => Ok(s.trim().to_string()),
        Some(Value::Bool(b)) => Ok(b.to_string()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(malformed(format!("missing {field:?}"))),
    }
}

fn as_bool(v: Option<&Value>) -> Result<bool, LlmError> {
    match v {
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" => Ok(true),
            "false" | "no" => Ok(false),
            _ => Err(malformed("\"value\" is not a boolean")),
        },
        _ => Err(malformed("\"value\" is not a boolean")),
    }
}

fn as_amount(v: Option<&Value>) -> Result<f64, LlmError> {
    let x = match v {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => digits().find(s).and_then(|m| m.as_str().parse().ok()),
        _ => None,
    }
    .ok_or_else(|| malformed("\"amount\" is not a number"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(malformed(format!("amount {x} is negative")))
    }
}

fn suspect_list(v: Option<&Value>) -> Result<Vec<SuspectId>, LlmError> {
    let text = match v {
        Some(Value::Array(items)) => items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(malformed("missing \"character\" list")),
    };
    let mut ids: Vec<SuspectId> = digits()
        .find_iter(&text)
        .filter_map(|m| m.as_str().parse().ok())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Split `property-value`; values may themselves contain hyphens, so the
/// longest schema attribute that prefixes the text wins.
fn split_property_value(text: &str, schema: &AttributeSchema) -> Result<(String, String), LlmError> {
    let text = text.trim();
    let by_schema = schema
        .names()
        .filter(|n| text.len() > n.len() + 1 && text.starts_with(n) && text[n.len()..].starts_with('-'))
        .max_by_key(|n| n.len());
    if let Some(name) = by_schema {
        return Ok((name.to_string(), text[name.len() + 1..].trim().to_string()));
    }
    text.split_once('-')
        .map(|(p, v)| (p.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| malformed(format!("{text:?} is not property-value")))
}

/// Map a generation onto an action for the observing agent.
pub fn parse_action(generation: &str, obs: &AgentObservation) -> Result<Action, LlmError> {
    let json = extract_json(generation)?;
    let get = |k: &str| json.get(k);
    match (&obs.view, obs.role) {
        (ObservationView::Whodunit { .. }, Role::Accuser) => match as_int(get("action"), "action")? {
            1 => Ok(Action::Asym(AsymAction::RequestSpecific {
                target: as_suspect(get("character"), "character")?,
                property: as_text(get("property"), "property")?,
                value: as_text(get("value"), "value")?,
            })),
            2 => Ok(Action::Asym(AsymAction::RequestBroad)),
            3 => Ok(Action::Asym(AsymAction::Accuse {
                target: as_suspect(get("character"), "character")?,
            })),
            a => Err(malformed(format!("unknown accuser action {a}"))),
        },
        (ObservationView::Whodunit { schema, .. }, Role::Intel) => match as_int(get("action"), "action")? {
            1 => Ok(Action::Asym(AsymAction::Respond {
                answer: as_bool(get("value"))?,
            })),
            2 => {
                let (property, value) = split_property_value(&as_text(get("value"), "value")?, schema)?;
                Ok(Action::Asym(AsymAction::RespondBroad {
                    property,
                    value,
                    suspects: suspect_list(get("character"))?,
                }))
            }
            a => Err(malformed(format!("unknown intel action {a}"))),
        },
        (ObservationView::Whodunit { knowledge, .. }, Role::Player) => match as_int(get("action"), "action")? {
            1 => {
                let n = as_int(get("fact"), "fact")?;
                let (property, value) = usize::try_from(n - 1)
                    .ok()
                    .and_then(|i| knowledge.culprit_facts.get(i))
                    .ok_or_else(|| malformed(format!("fact {n} is not one of the agent's facts")))?
                    .clone();
                Ok(Action::Sym(SymAction::Share {
                    fact_index: (n - 1) as usize,
                    property,
                    value,
                }))
            }
            2 => Ok(Action::Sym(SymAction::Accuse {
                target: as_suspect(get("character"), "character")?,
            })),
            3 => Ok(Action::Sym(SymAction::Skip)),
            a => Err(malformed(format!("unknown player action {a}"))),
        },
        (
            ObservationView::Commons {
                phase: CommonsPhase::Harvest,
                ..
            },
            Role::Fisher,
        ) => Ok(Action::Commons(CommonsAction::Harvest {
            amount: as_amount(get("amount"))?,
        })),
        (
            ObservationView::Commons {
                phase: CommonsPhase::Discussion,
                ..
            },
            Role::Fisher,
        ) => {
            let text = as_text(get("message"), "message")?;
            let amounts = digits()
                .find_iter(&text)
                .filter_map(|m| m.as_str().parse().ok())
                .collect();
            Ok(Action::Commons(CommonsAction::Discuss { text, amounts }))
        }
        (_, role) => Err(LlmError::Config(format!("role {role} does not match the observation"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::generate_game;
    use crate::game::Variant;
    use crate::whodunit::WhodunitState;

    fn accuser_obs() -> AgentObservation {
        let spec = generate_game(Variant::Asymmetric, 10, 30, 1).unwrap();
        WhodunitState::asymmetric(spec).observation(0)
    }

    fn intel_obs() -> AgentObservation {
        let spec = generate_game(Variant::Asymmetric, 10, 30, 1).unwrap();
        WhodunitState::asymmetric(spec).observation(1)
    }

    #[test]
    fn accuser_broad_request_with_fenced_json() {
        let g = "```json{\n\"thoughts\": \"look for another\",\n\"action\": 2,\n\"character\": 0,\n\"property\": \"\",\n\"value\": \"\"\n}\n```\nI am asking.";
        assert_eq!(
            parse_action(g, &accuser_obs()).unwrap(),
            Action::Asym(AsymAction::RequestBroad)
        );
    }

    #[test]
    fn accuser_specific_and_accuse() {
        let g = r#"{"thoughts": "t", "action": 1, "character": 3, "property": "hat", "value": "brown"}"#;
        assert_eq!(
            parse_action(g, &accuser_obs()).unwrap(),
            Action::Asym(AsymAction::RequestSpecific {
                target: 3,
                property: "hat".into(),
                value: "brown".into()
            })
        );
        let g = r#"{"thoughts": "t", "action": 3, "character": "7"}"#;
        assert_eq!(
            parse_action(g, &accuser_obs()).unwrap(),
            Action::Asym(AsymAction::Accuse { target: 7 })
        );
    }

    #[test]
    fn missing_action_is_malformed() {
        let g = r#"{"thoughts": "t", "character": 3}"#;
        assert!(matches!(
            parse_action(g, &accuser_obs()),
            Err(LlmError::MalformedGeneration(_))
        ));
        assert!(matches!(
            parse_action("no json here", &accuser_obs()),
            Err(LlmError::MalformedGeneration(_))
        ));
    }

    #[test]
    fn intel_python_booleans_and_hyphenated_values() {
        let g = "{\"thoughts\": \"t\", \"action\": 1, \"value\": True}";
        assert_eq!(
            parse_action(g, &intel_obs()).unwrap(),
            Action::Asym(AsymAction::Respond { answer: true })
        );
        let g = r#"{"thoughts": "t", "action": 2, "value": "shirt-button-up", "character": "[4, 1, 1]"}"#;
        assert_eq!(
            parse_action(g, &intel_obs()).unwrap(),
            Action::Asym(AsymAction::RespondBroad {
                property: "shirt".into(),
                value: "button-up".into(),
                suspects: vec![1, 4]
            })
        );
        let g = r#"{"thoughts": "t", "action": 2, "value": "shirt_color-pink", "character": [2, 5]}"#;
        assert_eq!(
            parse_action(g, &intel_obs()).unwrap(),
            Action::Asym(AsymAction::RespondBroad {
                property: "shirt_color".into(),
                value: "pink".into(),
                suspects: vec![2, 5]
            })
        );
    }

    #[test]
    fn trailing_comments_are_tolerated() {
        let g = "{\n\"thoughts\": \"t\",\n\"action\": 2 // broad\n}";
        assert_eq!(
            parse_action(g, &accuser_obs()).unwrap(),
            Action::Asym(AsymAction::RequestBroad)
        );
    }
}
