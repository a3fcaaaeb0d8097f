//! Ways to get a reply for a prompt: a live HTTP endpoint or a replayed
//! transcript.

use std::collections::VecDeque;
use std::path::Path;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::transcript::{parse_entries, read_entries, Entry};
use super::{Role, VlmConfig, VlmError};

#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub index: u64,
    pub role: Role,
    pub prompt: &'a str,
    /// PNG bytes.
    pub images: &'a [Vec<u8>],
}

pub trait Transport {
    fn send(&mut self, req: &ChatRequest<'_>) -> Result<String, VlmError>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, req: &ChatRequest<'_>) -> Result<String, VlmError> {
        (**self).send(req)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, req: &ChatRequest<'_>) -> Result<String, VlmError> {
        (**self).send(req)
    }
}

/// Chat-completions request body: one user message with the prompt text
/// followed by the images as base64 data URLs.
pub fn request_body(model: &str, temperature: f64, req: &ChatRequest<'_>) -> Value {
    let mut content = vec![json!({"type": "text", "text": req.prompt})];
    for png in req.images {
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{b64}")}
        }));
    }
    json!({
        "model": model,
        "temperature": temperature,
        "messages": [{"role": "user", "content": content}],
    })
}

/// Assistant text from a chat-completions response body.
pub fn response_text(body: &Value) -> Result<String, VlmError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(String::from)
        .ok_or_else(|| VlmError::Transport("response has no choices[0].message.content".into()))
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    key: String,
}

impl HttpTransport {
    /// Reads the API key from the configured variable; fails naming it when
    /// it is unset.
    pub fn new(config: &VlmConfig) -> Result<Self, VlmError> {
        config.validate()?;
        let key = config.api_key()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| VlmError::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            temperature: config.temperature,
            key,
        })
    }
}

impl Transport for HttpTransport {
    fn send(&mut self, req: &ChatRequest<'_>) -> Result<String, VlmError> {
        let body = request_body(&self.model, self.temperature, req);
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    VlmError::Transport(format!("request {} timed out", req.index))
                } else {
                    VlmError::Transport(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| VlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            let head = text.chars().take(300).collect::<String>();
            return Err(VlmError::Transport(format!("HTTP {status}: {head}")));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| VlmError::Transport(format!("response is not JSON: {e}")))?;
        response_text(&v)
    }
}

/// Answers from a recorded transcript, in order. Each request's role must
/// match the recorded entry's role.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    replies: VecDeque<Entry>,
    origin: String,
}

impl ReplayTransport {
    pub fn new(entries: Vec<Entry>, origin: &str) -> Self {
        ReplayTransport {
            replies: entries.into_iter().filter(|e| e.response.is_some()).collect(),
            origin: origin.into(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, VlmError> {
        Ok(ReplayTransport::new(read_entries(path)?, &path.display().to_string()))
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self, VlmError> {
        Ok(ReplayTransport::new(parse_entries(text, origin)?, origin))
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, req: &ChatRequest<'_>) -> Result<String, VlmError> {
        let e = self
            .replies
            .pop_front()
            .ok_or_else(|| VlmError::Transport(format!("{}: no reply left for request {}", self.origin, req.index)))?;
        if e.role != req.role {
            return Err(VlmError::Transport(format!(
                "{}: request {} is {} but the transcript has {}",
                self.origin, req.index, req.role, e.role
            )));
        }
        Ok(e.response.expect("filtered on construction"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_carries_text_then_images() {
        let imgs = vec![vec![0x89, b'P', b'N', b'G']];
        let req = ChatRequest {
            index: 0,
            role: Role::Judge,
            prompt: "look",
            images: &imgs,
        };
        let b = request_body("m", 0.0, &req);
        assert_eq!(b["messages"][0]["content"][0]["text"], "look");
        let url = b["messages"][0]["content"][1]["image_url"]["url"].as_str().unwrap();
        assert!(url.starts_with("data:image/png;base64,iVBORw"));
    }

    #[test]
    fn replay_checks_roles_and_runs_out() {
        let text = r#"{"index":0,"role":"generate","response":"a"}
{"index":1,"role":"judge","response":"b"}"#;
        let mut t = ReplayTransport::from_text(text, "inline").unwrap();
        let req = |role| ChatRequest {
            index: 0,
            role,
            prompt: "",
            images: &[],
        };
        assert_eq!(t.send(&req(Role::Generate)).unwrap(), "a");
        assert!(t.send(&req(Role::Worker)).is_err());
        assert!(t.send(&req(Role::Judge)).is_err());
    }

    #[test]
    fn missing_content_is_a_transport_error() {
        assert!(response_text(&json!({"choices": []})).is_err());
        assert_eq!(
            response_text(&json!({"choices": [{"message": {"content": "hi"}}]})).unwrap(),
            "hi"
        );
    }
}
