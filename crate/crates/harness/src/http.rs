//! Chat-completion backend over HTTP.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tamp_core::llm::{LlmBackend, LlmError, PromptBundle};

pub const API_KEY_ENV: &str = "LLM3_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_attempts: u32,
    /// First retry delay; doubles per attempt.
    pub base_delay_ms: u64,
    pub timeout_s: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4-turbo".into(),
            temperature: 0.7,
            max_attempts: 3,
            base_delay_ms: 1000,
            timeout_s: 120,
        }
    }
}

pub struct HttpBackend {
    settings: HttpSettings,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(settings.timeout_s)))
            .build()
            .into();
        Self {
            settings,
            api_key,
            agent,
        }
    }

    /// Reads the key from `LLM3_API_KEY`.
    pub fn from_env(settings: HttpSettings) -> Self {
        Self::new(settings, std::env::var(API_KEY_ENV).ok())
    }

    fn request_body(&self, prompt: &PromptBundle) -> Value {
        json!({
            "model": self.settings.model,
            "temperature": self.settings.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_message},
                {"role": "user", "content": prompt.user_message},
            ],
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.settings.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Attempt::Retry(format!("request failed: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(format!("reading body: {e}")))?;
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(Attempt::Retry(format!("HTTP {status}: {text}"))),
            _ => return Err(Attempt::Fatal(format!("HTTP {status}: {text}"))),
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| Attempt::Fatal(format!("response is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| Attempt::Fatal("response has no choices[0].message.content".into()))
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LlmBackend for HttpBackend {
    fn complete(&mut self, prompt: &PromptBundle) -> Result<String, LlmError> {
        let body = self.request_body(prompt);
        let attempts = self.settings.max_attempts.max(1);
        let mut last = String::new();
        for i in 0..attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(msg)) => return Err(LlmError::Backend(msg)),
                Err(Attempt::Retry(msg)) => last = msg,
            }
            if i + 1 < attempts {
                thread::sleep(Duration::from_millis(self.settings.base_delay_ms << i));
            }
        }
        Err(LlmError::Transport(format!("giving up after {attempts} attempts: {last}")))
    }
}
