use std::sync::Arc;

use crate::agents::{AgentBackend, AgentDecision, AgentObservation, BackendError};

use super::{extract_positions, parse_action, render_prompts, EnvKind, LlmClient, LlmError, FORMAT_REMINDER};

/// Agent backed by a chat-completions model. A generation that does not
/// parse is retried once with a format reminder appended to the user
/// prompt; a second failure yields a malformed decision.
pub struct LlmAgent {
    client: Arc<LlmClient>,
}

impl LlmAgent {
    pub fn new(client: Arc<LlmClient>) -> Self {
        Self { client }
    }

    fn run(&self, obs: &AgentObservation, temperature: Option<f64>) -> Result<AgentDecision, BackendError> {
        let prompt = render_prompts(obs).map_err(|e| BackendError::Unsupported(e.to_string()))?;
        let env = EnvKind::of(obs);
        let mut user = prompt.user.clone();
        let mut last = None;
        for _ in 0..2 {
            let completion = self
                .client
                .complete_with_logprobs(&prompt.system, &user, temperature)
                .map_err(|e| BackendError::Api(e.to_string()))?;
            let positions = extract_positions(&completion.tokens, env);
            match parse_action(&completion.generation, obs) {
                Ok(action) => return Ok(AgentDecision::new(action, completion.generation, positions)),
                Err(LlmError::MalformedGeneration(_)) => {
                    last = Some(AgentDecision::malformed(completion.generation, positions));
                    user = format!("{}\n\n{}", prompt.user, FORMAT_REMINDER.trim_end());
                }
                Err(e) => return Err(BackendError::Unsupported(e.to_string())),
            }
        }
        Ok(last.expect("two attempts were made"))
    }
}

impl AgentBackend for LlmAgent {
    fn decide(&mut self, observation: &AgentObservation) -> Result<AgentDecision, BackendError> {
        self.run(observation, None)
    }

    fn resample(
        &mut self,
        observation: &AgentObservation,
        temperature: Option<f64>,
    ) -> Result<AgentDecision, BackendError> {
        self.run(observation, temperature)
    }
}
