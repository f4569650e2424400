//! Chat-completion over HTTP.

use std::time::Duration;

use serde_json::{json, Value};

use super::{LlmError, Provider, SAMPLING_SEED, TEMPERATURE};

/// Env var holding the endpoint URL.
pub const URL_VAR: &str = "GRAM_FORGE_LLM_URL";
/// Env var holding the bearer token.
pub const KEY_VAR: &str = "GRAM_FORGE_API_KEY";
pub const DEFAULT_URL: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

/// POSTs `{model, temperature, seed, messages}` and reads
/// `choices[0].message.content` from the reply.
pub struct HttpProvider {
    agent: ureq::Agent,
    url: String,
    key: Option<String>,
    model: String,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(300))).build();
        HttpProvider { agent: config.into(), url: url.into(), key, model: model.into() }
    }

    /// Endpoint and key from the environment.
    pub fn from_env(model: Option<&str>) -> Self {
        let url = std::env::var(URL_VAR).unwrap_or_else(|_| DEFAULT_URL.to_string());
        Self::new(url, std::env::var(KEY_VAR).ok(), model.unwrap_or(DEFAULT_MODEL))
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model,
            "temperature": TEMPERATURE,
            "seed": SAMPLING_SEED,
            "messages": [{ "role": "user", "content": prompt }],
        })
    }
}

impl Provider for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut req = self.agent.post(&self.url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(self.request_body(prompt)).map_err(|e| LlmError::Provider(e.to_string()))?;
        let body: Value = resp.body_mut().read_json().map_err(|e| LlmError::Provider(e.to_string()))?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::MalformedReply("no choices[0].message.content".into()))
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}
