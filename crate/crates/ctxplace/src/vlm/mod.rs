//! Client for a hosted multimodal chat endpoint playing the generate,
//! worker and judge roles.
//!
//! Prompts come from the plain-text templates in `prompts/`; placeholders
//! are written `{{name}}` and must all be bound before a request is sent.
//! Replies are JSON objects in schemas of our own (the templates spell
//! them out). A reply that does not parse is retried with a repair prompt
//! up to `max_retries` times. Every request is appended to the run's
//! [`Transcript`].

use std::fmt::Write as _;

use ctxplace_core::judge::{Delta, Verdict, Violation, ViolationCode};
use ctxplace_core::math::wrap_360;
use ctxplace_core::scene::fmt_vec;
use ctxplace_core::vac::{cue_text, render_four_views, render_top_view, Preset};
use ctxplace_core::{Scene, Vec3};
use serde::{Deserialize, Serialize};

use crate::raster::drawing_to_png;

pub mod stub;
pub mod transcript;
pub mod transport;

pub use transcript::{Entry, Transcript};
pub use transport::{ChatRequest, HttpTransport, ReplayTransport, Transport};

pub const GENERATE_TEMPLATE: &str = include_str!("../../prompts/generate.txt");
pub const WORKER_TEMPLATE: &str = include_str!("../../prompts/worker.txt");
pub const JUDGE_TEMPLATE: &str = include_str!("../../prompts/judge.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../../prompts/repair.txt");

#[derive(Debug, thiserror::Error)]
pub enum VlmError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("{role} reply unusable after {attempts} attempt(s): {message}")]
    Protocol {
        role: Role,
        message: String,
        /// Last raw reply.
        raw: String,
        attempts: u32,
    },
    #[error("transcript {path}: {message}")]
    Transcript { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Generate,
    Worker,
    Judge,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Generate => "generate",
            Role::Worker => "worker",
            Role::Judge => "judge",
        }
    }

    fn template(self) -> &'static str {
        match self {
            Role::Generate => GENERATE_TEMPLATE,
            Role::Worker => WORKER_TEMPLATE,
            Role::Judge => JUDGE_TEMPLATE,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VlmConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
}

impl Default for VlmConfig {
    fn default() -> Self {
        VlmConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120.0,
            max_retries: 2,
            temperature: 0.0,
        }
    }
}

impl VlmConfig {
    pub fn from_toml(text: &str) -> Result<Self, VlmError> {
        let c: VlmConfig = toml::from_str(text).map_err(|e| VlmError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), VlmError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(VlmError::Config("timeout_secs must be positive".into()));
        }
        if self.endpoint.is_empty() || self.model.is_empty() || self.api_key_env.is_empty() {
            return Err(VlmError::Config("endpoint, model and api_key_env must be set".into()));
        }
        Ok(())
    }

    /// The API key from the configured environment variable.
    pub fn api_key(&self) -> Result<String, VlmError> {
        match std::env::var(&self.api_key_env) {
            Ok(k) if !k.is_empty() => Ok(k),
            _ => Err(VlmError::Config(format!(
                "environment variable {} is not set; it must hold the API key",
                self.api_key_env
            ))),
        }
    }
}

/// A role prompt ready to send.
#[derive(Debug, Clone, PartialEq)]
pub struct RolePrompt {
    pub role: Role,
    pub text: String,
    /// PNG images attached after the text.
    pub images: Vec<Vec<u8>>,
}

/// Fills `{{name}}` placeholders. Fails if any placeholder is left unbound.
pub fn bind(template: &str, values: &[(&str, &str)]) -> Result<String, VlmError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find("{{") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        let j = after
            .find("}}")
            .ok_or_else(|| VlmError::Config("unterminated placeholder in template".into()))?;
        let name = &after[..j];
        let v = values
            .iter()
            .find(|(k, _)| *k == name)
            .ok_or_else(|| VlmError::Config(format!("placeholder {{{{{name}}}}} is not bound")))?;
        out.push_str(v.1);
        rest = &after[j + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    New,
    Move,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::New => "new",
            Action::Move => "move",
        }
    }
}

/// Parsed generate reply.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generated {
    pub action: Action,
    /// Asset id for `new`, object id for `move`.
    pub target: String,
    #[serde(default)]
    pub related: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkerReply {
    position: [f64; 3],
    yaw: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaReply {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    yaw: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViolationReply {
    code: String,
    #[serde(default)]
    subjects: Vec<String>,
    #[serde(default)]
    magnitude: f64,
    #[serde(default)]
    delta: Option<DeltaReply>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgeReply {
    pass: bool,
    #[serde(default)]
    violations: Vec<ViolationReply>,
}

/// The outermost `{...}` span of a reply, tolerating code fences and
/// surrounding prose.
fn json_span(raw: &str) -> Result<&str, String> {
    match (raw.find('{'), raw.rfind('}')) {
        (Some(a), Some(b)) if a < b => Ok(&raw[a..=b]),
        _ => Err("no JSON object in reply".into()),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(raw: &str) -> Result<T, String> {
    serde_json::from_str(json_span(raw)?).map_err(|e| e.to_string())
}

pub fn parse_generate(raw: &str) -> Result<Generated, String> {
    let g: Generated = parse_json(raw)?;
    if g.target.trim().is_empty() {
        return Err("target is empty".into());
    }
    Ok(g)
}

/// Position and yaw from a worker reply; yaw normalized to `[0, 360)`.
pub fn parse_worker(raw: &str) -> Result<(Vec3, f64), String> {
    let w: WorkerReply = parse_json(raw)?;
    let p = Vec3::from(w.position);
    if !p.is_finite() || !w.yaw.is_finite() {
        return Err("non-finite transform".into());
    }
    Ok((p, wrap_360(w.yaw)))
}

/// Verdict from a judge reply. The energy field is left at zero.
pub fn parse_judge(raw: &str) -> Result<Verdict, String> {
    let j: JudgeReply = parse_json(raw)?;
    let mut violations = Vec::new();
    for v in j.violations {
        let code = ViolationCode::parse(&v.code).ok_or_else(|| format!("unknown violation code {}", v.code))?;
        let delta = v.delta.map(|d| Delta {
            translation: Vec3::from(d.translation),
            yaw: d.yaw,
        });
        if !v.magnitude.is_finite() || delta.is_some_and(|d| !d.translation.is_finite() || !d.yaw.is_finite()) {
            return Err("non-finite number in violation".into());
        }
        violations.push(Violation {
            code,
            subjects: v.subjects,
            magnitude: v.magnitude,
            suggested_delta: delta,
        });
    }
    Ok(Verdict {
        pass: j.pass,
        violations,
        energy: Default::default(),
    })
}

fn catalog_text(scene: &Scene) -> String {
    let mut out = String::new();
    for a in &scene.catalog {
        let _ = write!(
            out,
            "asset {} half_extents={} front={}",
            a.asset_id,
            fmt_vec(a.half_extents),
            fmt_vec(a.front_axis)
        );
        if !a.tags.is_empty() {
            let _ = write!(out, " tags={}", a.tags.join(","));
        }
        for (k, v) in &a.anchors {
            let _ = write!(out, " anchor:{k}={}", fmt_vec(*v));
        }
        out.push('\n');
    }
    out
}

fn or_none(s: &str) -> &str {
    if s.trim().is_empty() {
        "(none)"
    } else {
        s
    }
}

/// Text cues and rendered views for `preset`.
pub fn cues(scene: &Scene, target: &str, related: &[&str], preset: Preset) -> Result<(String, Vec<Vec<u8>>), crate::Error> {
    let opts = preset.options();
    let text = cue_text(scene, target, related, &opts)?;
    let mut images = Vec::new();
    if opts.four_views {
        for d in render_four_views(scene, target, related, &opts)? {
            images.push(drawing_to_png(&d)?);
        }
    }
    if opts.top_view {
        images.push(drawing_to_png(&render_top_view(scene, target, &opts))?);
    }
    Ok((text, images))
}

/// One pipeline run's connection to the model. Not shared between runs.
pub struct Client<T> {
    transport: T,
    config: VlmConfig,
    transcript: Transcript,
}

impl<T: Transport> Client<T> {
    pub fn new(transport: T, config: VlmConfig, transcript: Transcript) -> Self {
        Client {
            transport,
            config,
            transcript,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    fn exchange<R>(&mut self, prompt: RolePrompt, parse: impl Fn(&str) -> Result<R, String>) -> Result<R, crate::Error> {
        let mut text = prompt.text.clone();
        let mut attempt = 0;
        loop {
            let index = self.transcript.next_index();
            let req = ChatRequest {
                index,
                role: prompt.role,
                prompt: &text,
                images: &prompt.images,
            };
            let reply = self.transport.send(&req);
            let mut entry = Entry::new(index, prompt.role, attempt, &text, &prompt.images);
            match &reply {
                Ok(r) => entry.response = Some(r.clone()),
                Err(e) => entry.error = Some(e.to_string()),
            }
            self.transcript.append(entry)?;
            let raw = reply?;
            match parse(&raw) {
                Ok(v) => return Ok(v),
                Err(message) if attempt >= self.config.max_retries => {
                    return Err(VlmError::Protocol {
                        role: prompt.role,
                        message,
                        raw,
                        attempts: attempt + 1,
                    }
                    .into())
                }
                Err(message) => {
                    attempt += 1;
                    text = bind(
                        REPAIR_TEMPLATE,
                        &[("error", &message), ("raw", &raw), ("request", &prompt.text)],
                    )?;
                }
            }
        }
    }

    pub fn generate_step(&mut self, instruction: &str, scene: &Scene) -> Result<Generated, crate::Error> {
        let text = bind(
            GENERATE_TEMPLATE,
            &[
                ("instruction", instruction),
                ("catalog", &catalog_text(scene)),
                ("snapshot", &scene.snapshot_text()),
            ],
        )?;
        let prompt = RolePrompt {
            role: Role::Generate,
            text,
            images: Vec::new(),
        };
        self.exchange(prompt, parse_generate)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn worker_step(
        &mut self,
        instruction: &str,
        scene: &Scene,
        target: &str,
        related: &[&str],
        preset: Preset,
        feedback: Option<&str>,
    ) -> Result<(Vec3, f64), crate::Error> {
        let (cue, images) = cues(scene, target, related, preset)?;
        let text = bind(
            Role::Worker.template(),
            &[
                ("instruction", instruction),
                ("target", target),
                ("related", or_none(&related.join(", "))),
                ("snapshot", &scene.snapshot_text()),
                ("cues", or_none(&cue)),
                ("feedback", feedback.unwrap_or("")),
            ],
        )?;
        let prompt = RolePrompt {
            role: Role::Worker,
            text,
            images,
        };
        self.exchange(prompt, parse_worker)
    }

    pub fn judge_step(
        &mut self,
        instruction: &str,
        scene: &Scene,
        target: &str,
        related: &[&str],
        preset: Preset,
    ) -> Result<Verdict, crate::Error> {
        let (cue, images) = cues(scene, target, related, preset)?;
        let codes = ViolationCode::ALL
            .iter()
            .map(|c| format!("\"{}\"", c.as_str()))
            .collect::<Vec<_>>()
            .join(", ");
        let text = bind(
            Role::Judge.template(),
            &[
                ("instruction", instruction),
                ("target", target),
                ("related", or_none(&related.join(", "))),
                ("snapshot", &scene.snapshot_text()),
                ("cues", or_none(&cue)),
                ("codes", &codes),
            ],
        )?;
        let prompt = RolePrompt {
            role: Role::Judge,
            text,
            images,
        };
        self.exchange(prompt, parse_judge)
    }
}
