use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::agents::{AgentObservation, CommonsPhase, ObservationView};
use crate::commons::{fisher_name, fmt_amount};
use crate::game::{AttributeSchema, Role, SuspectProfile};
use crate::whodunit::{ACCUSER_NAME, INTEL_NAME};

use super::LlmError;

const ASYM_ACCUSER_SYSTEM: &str = include_str!("../../assets/prompts/asym_accuser_system.txt");
const ASYM_INTEL_SYSTEM: &str = include_str!("../../assets/prompts/asym_intel_system.txt");
const ASYM_USER: &str = include_str!("../../assets/prompts/asym_user.txt");
const SYM_SYSTEM: &str = include_str!("../../assets/prompts/sym_system.txt");
const SYM_USER: &str = include_str!("../../assets/prompts/sym_user.txt");
const COMMONS_SYSTEM: &str = include_str!("../../assets/prompts/commons_system.txt");
const COMMONS_USER: &str = include_str!("../../assets/prompts/commons_user.txt");
pub const FORMAT_REMINDER: &str = include_str!("../../assets/prompts/format_reminder.txt");

const HARVEST_INSTRUCTION: &str = "It is time to fish. How many tons do you catch this round?";
const DISCUSSION_INSTRUCTION: &str = "It is time to talk. What do you say to the other fishers?";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Z][A-Z0-9_]*)\}").expect("static regex"))
}

/// Substitute every `{NAME}` placeholder. Unknown placeholders are an error
/// so a template change cannot silently leak braces into a prompt.
pub fn render_template(template: &str, values: &BTreeMap<&str, String>) -> Result<String, LlmError> {
    let mut missing = None;
    let out = placeholder().replace_all(template, |c: &regex::Captures| match values.get(&c[1]) {
        Some(v) => v.clone(),
        None => {
            missing.get_or_insert_with(|| c[1].to_string());
            String::new()
        }
    });
    match missing {
        Some(name) => Err(LlmError::Config(format!("no value for placeholder {{{name}}}"))),
        None => Ok(out.trim_end().to_string()),
    }
}

fn attribute_list(schema: &AttributeSchema) -> String {
    schema.names().collect::<Vec<_>>().join(", ")
}

fn suspect_information(table: &[SuspectProfile], schema: &AttributeSchema) -> String {
    table
        .iter()
        .map(|s| format!("Character {}: {}", s.id, s.describe(schema)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Build the system and user prompts for the acting agent.
pub fn render_prompts(obs: &AgentObservation) -> Result<RenderedPrompt, LlmError> {
    let channel = obs.rendered_channel().join("\n");
    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    v.insert("NAME", obs.agent.clone());
    match &obs.view {
        ObservationView::Whodunit {
            knowledge,
            n_suspects,
            schema,
            agent_names,
        } => {
            v.insert("TURN_COUNT", obs.turn_index.to_string());
            v.insert("MAX_TURN_COUNT", obs.turn_limit.to_string());
            v.insert("CHARACTER_ATTRIBUTES", attribute_list(schema));
            v.insert("SUSPECT_NUM", n_suspects.to_string());
            let table = knowledge.suspect_table.as_deref().unwrap_or(&[]);
            v.insert("SUSPECT_INFORMATION", suspect_information(table, schema));
            let (system, user) = match obs.role {
                Role::Accuser => {
                    v.insert("PARTNER_NAME", INTEL_NAME.to_string());
                    let description = knowledge
                        .culprit_facts
                        .iter()
                        .map(|(p, val)| format!("{p}: {val}"))
                        .collect::<Vec<_>>()
                        .join(", ");
                    v.insert("WINNER_DESCRIPTION", description);
                    v.insert("COMMUNICATION_CHANNEL", channel);
                    (ASYM_ACCUSER_SYSTEM, ASYM_USER)
                }
                Role::Intel => {
                    v.insert("PARTNER_NAME", ACCUSER_NAME.to_string());
                    v.insert("COMMUNICATION_CHANNEL", channel);
                    (ASYM_INTEL_SYSTEM, ASYM_USER)
                }
                Role::Player => {
                    v.insert("AGENT_COUNT", agent_names.len().to_string());
                    v.insert("AGENT_NAMES", agent_names.join(", "));
                    let facts = knowledge
                        .culprit_facts
                        .iter()
                        .enumerate()
                        .map(|(i, (p, val))| format!("{}. {p}: {val}", i + 1))
                        .collect::<Vec<_>>()
                        .join("\n");
                    v.insert("FACTS", facts);
                    v.insert("COMM_CHANNEL", channel);
                    (SYM_SYSTEM, SYM_USER)
                }
                Role::Fisher => return Err(LlmError::Config("fisher role in a deduction game".into())),
            };
            Ok(RenderedPrompt {
                system: render_template(system, &v)?,
                user: render_template(user, &v)?,
            })
        }
        ObservationView::Commons {
            stock,
            r0,
            gamma,
            round,
            max_rounds,
            n_agents,
            phase,
        } => {
            v.insert("AGENT_COUNT", n_agents.to_string());
            v.insert(
                "AGENT_NAMES",
                (0..*n_agents).map(fisher_name).collect::<Vec<_>>().join(", "),
            );
            v.insert("R0", fmt_amount(*r0));
            v.insert("GAMMA", fmt_amount(*gamma));
            v.insert("MAX_ROUNDS", max_rounds.to_string());
            v.insert("ROUND", round.to_string());
            v.insert("STOCK", fmt_amount(*stock));
            v.insert(
                "COMM_CHANNEL",
                if channel.is_empty() {
                    "(nothing yet)".into()
                } else {
                    channel
                },
            );
            v.insert(
                "PHASE_INSTRUCTION",
                match phase {
                    CommonsPhase::Harvest => HARVEST_INSTRUCTION,
                    CommonsPhase::Discussion => DISCUSSION_INSTRUCTION,
                }
                .to_string(),
            );
            Ok(RenderedPrompt {
                system: render_template(COMMONS_SYSTEM, &v)?,
                user: render_template(COMMONS_USER, &v)?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commons::{CommonsConfig, CommonsState};
    use crate::game::{generate_game, Variant};
    use crate::whodunit::WhodunitState;

    fn no_placeholders(s: &str) -> bool {
        !placeholder().is_match(s)
    }

    #[test]
    fn asymmetric_prompts_are_filled() {
        let spec = generate_game(Variant::Asymmetric, 10, 30, 4).unwrap();
        let culprit = spec.culprit().describe(&spec.schema);
        let state = WhodunitState::asymmetric(spec);
        let a = render_prompts(&state.observation(0)).unwrap();
        assert!(no_placeholders(&a.system) && no_placeholders(&a.user));
        assert!(a.system.starts_with("**Introduction:**\n- Your name is Beth"));
        assert!(a.system.contains("identified by numbers 1 to 10"));
        assert!(a.system.ends_with(&culprit));
        assert!(a
            .user
            .ends_with("The current turn is 1 out of 30\nIt’s your turn. What would you do?"));
        let i = render_prompts(&state.observation(1)).unwrap();
        assert!(i.system.contains("Your name is Alex"));
        assert!(i.system.contains("Character 10: "));
    }

    #[test]
    fn symmetric_prompts_list_private_facts() {
        let spec = generate_game(Variant::Symmetric, 8, 40, 2).unwrap();
        let state = WhodunitState::symmetric(spec, 4, 3, 9).unwrap();
        let obs = state.observation(2);
        let p = render_prompts(&obs).unwrap();
        assert!(no_placeholders(&p.system) && no_placeholders(&p.user));
        assert!(p.system.contains("There are 4 players in total"));
        let (prop, val) = &obs.knowledge().unwrap().culprit_facts[0];
        assert!(p.user.contains(&format!("1. {prop}: {val}")));
    }

    #[test]
    fn commons_prompts_are_filled() {
        let state = CommonsState::new(CommonsConfig::new(100.0, 5)).unwrap();
        let p = render_prompts(&state.observation(0, CommonsPhase::Harvest)).unwrap();
        assert!(no_placeholders(&p.system) && no_placeholders(&p.user));
        assert!(p.user.contains("holds 100 tons"));
        assert!(p.user.ends_with(HARVEST_INSTRUCTION));
    }

    #[test]
    fn unknown_placeholder_is_rejected() {
        let v = BTreeMap::from([("NAME", "x".to_string())]);
        assert_eq!(render_template("{NAME}!", &v).unwrap(), "x!");
        assert!(render_template("{NAME} {OTHER}", &v).is_err());
        assert_eq!(render_template("{\"a\": 1}", &v).unwrap(), "{\"a\": 1}");
    }
}
