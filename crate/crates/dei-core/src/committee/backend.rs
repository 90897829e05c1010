//! Scoring backends: the deterministic scripted mock and the
//! chat-completion HTTP client.

use std::collections::HashMap;
use std::time::Duration;

use async_trait::async_trait;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::derived_rng;
use crate::types::CandidateKey;

/// Environment variable consulted for the HTTP backend credential when the
/// spec does not name another one.
pub const DEFAULT_CREDENTIAL_ENV: &str = "DEI_BACKEND_API_KEY";

const DEFAULT_TIMEOUT_SECS: u64 = 120;
const DEFAULT_MAX_IN_FLIGHT: usize = 8;
const TRANSPORT_ATTEMPTS: u32 = 3;

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}
fn default_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

/// Identifies the (instance, candidate, vote, attempt) a completion belongs
/// to. The mock backend derives its random stream from this, so results are
/// independent of concurrency schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTag {
    pub instance_id: String,
    pub candidate: CandidateKey,
    pub vote_index: u32,
    pub attempt: u32,
}

/// One completion request.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    /// Seed derived from the run seed and the vote tag; forwarded to
    /// backends that support seeding.
    pub seed: u64,
    pub model: String,
    pub tag: VoteTag,
}

/// One completion reply.
#[derive(Debug, Clone)]
pub struct CompletionResponse {
    pub content: String,
    /// Free-form transport metadata (model id, retry count, ...).
    pub metadata: String,
}

/// A scoring backend able to answer one prompt with one reply.
#[async_trait]
pub trait ScoreBackend: Send + Sync {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, String>;

    /// Human-readable backend label for logs and records.
    fn label(&self) -> String;
}

/// A scripted score for one candidate: the mock replies with this value for
/// every vote on that candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedScore {
    pub instance_id: String,
    pub agent_id: String,
    pub run_index: u32,
    pub score: u8,
}

/// Backend selection and transport limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    /// Deterministic in-process mock. Scores come from the scripted table,
    /// else `default_score`, else a seed-derived uniform draw from 1..=10.
    #[serde(rename = "scripted-mock", alias = "mock")]
    ScriptedMock {
        #[serde(default)]
        scores: Vec<ScriptedScore>,
        /// Reply template; `{score}` is substituted. The default emits the
        /// five explanation sections and a final score line.
        #[serde(default)]
        template: Option<String>,
        #[serde(default)]
        default_score: Option<u8>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
    /// Chat-completion-style HTTP endpoint.
    HttpChat {
        endpoint: String,
        /// Environment variable holding the bearer credential.
        #[serde(default)]
        credential_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::ScriptedMock {
            scores: Vec::new(),
            template: None,
            default_score: None,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

impl BackendSpec {
    pub fn max_in_flight(&self) -> usize {
        match self {
            BackendSpec::ScriptedMock { max_in_flight, .. }
            | BackendSpec::HttpChat { max_in_flight, .. } => (*max_in_flight).max(1),
        }
    }

    /// Instantiates the backend this spec describes.
    pub fn build(&self) -> Result<Box<dyn ScoreBackend>, String> {
        match self {
            BackendSpec::ScriptedMock {
                scores,
                template,
                default_score,
                ..
            } => Ok(Box::new(MockBackend::new(
                scores.clone(),
                template.clone(),
                *default_score,
            ))),
            BackendSpec::HttpChat {
                endpoint,
                credential_env,
                timeout_secs,
                ..
            } => {
                let env_name = credential_env
                    .clone()
                    .unwrap_or_else(|| DEFAULT_CREDENTIAL_ENV.to_string());
                let credential = std::env::var(&env_name).ok();
                Ok(Box::new(HttpChatBackend::new(
                    endpoint.clone(),
                    credential,
                    Duration::from_secs(*timeout_secs),
                )?))
            }
        }
    }
}

const DEFAULT_MOCK_TEMPLATE: &str = "\
Issue explanation: the issue describes a defect in the reported behavior.
Context explanation: the provided spans cover the code involved in the defect.
Location explanation: the patch edits a plausible location for the defect.
Patch explanation: the change plausibly addresses the reported behavior.
Conflict detection: no conflict with the provided spans was detected.
Score: {score}";

/// Deterministic mock backend.
pub struct MockBackend {
    scores: HashMap<(String, String, u32), u8>,
    template: String,
    default_score: Option<u8>,
}

impl MockBackend {
    pub fn new(
        scripted: Vec<ScriptedScore>,
        template: Option<String>,
        default_score: Option<u8>,
    ) -> Self {
        let scores = scripted
            .into_iter()
            .map(|s| ((s.instance_id, s.agent_id, s.run_index), s.score))
            .collect();
        Self {
            scores,
            template: template.unwrap_or_else(|| DEFAULT_MOCK_TEMPLATE.to_string()),
            default_score,
        }
    }
}

#[async_trait]
impl ScoreBackend for MockBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, String> {
        let tag = &request.tag;
        let score = self
            .scores
            .get(&(
                tag.instance_id.clone(),
                tag.candidate.agent_id.clone(),
                tag.candidate.run_index,
            ))
            .copied()
            .or(self.default_score)
            .unwrap_or_else(|| {
                let mut rng = derived_rng(request.seed, &["mock-score"]);
                rng.random_range(1..=10)
            });
        let content = self.template.replace("{score}", &score.to_string());
        Ok(CompletionResponse {
            content,
            metadata: "backend=scripted-mock".to_string(),
        })
    }

    fn label(&self) -> String {
        "scripted-mock".to_string()
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: String,
}

/// Chat-completion HTTP backend. Sends
/// `{model, messages: [{role, content}], temperature, seed}` and reads the
/// first choice's message content.
pub struct HttpChatBackend {
    endpoint: String,
    credential: Option<String>,
    client: reqwest::Client,
}

impl HttpChatBackend {
    pub fn new(
        endpoint: String,
        credential: Option<String>,
        timeout: Duration,
    ) -> Result<Self, String> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| format!("failed to build http client: {e}"))?;
        Ok(Self {
            endpoint,
            credential,
            client,
        })
    }

    async fn try_once(&self, request: &CompletionRequest) -> Result<CompletionResponse, String> {
        let body = ChatRequest {
            model: &request.model,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            seed: Some(request.seed),
        };
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(credential) = &self.credential {
            builder = builder.bearer_auth(credential);
        }
        let response = builder.send().await.map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            return Err(format!("backend returned {status}: {text}"));
        }
        let parsed: ChatResponse = response
            .json()
            .await
            .map_err(|e| format!("unreadable backend response: {e}"))?;
        let content = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| "backend response has no choices".to_string())?;
        Ok(CompletionResponse {
            content,
            metadata: format!("backend=http-chat;endpoint={}", self.endpoint),
        })
    }
}

#[async_trait]
impl ScoreBackend for HttpChatBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, String> {
        let mut last_err = String::new();
        for attempt in 0..TRANSPORT_ATTEMPTS {
            match self.try_once(request).await {
                Ok(response) => return Ok(response),
                Err(err) => last_err = err,
            }
            if attempt + 1 < TRANSPORT_ATTEMPTS {
                tokio::time::sleep(Duration::from_millis(250 * u64::from(attempt + 1))).await;
            }
        }
        Err(format!("{last_err} (after {TRANSPORT_ATTEMPTS} attempts)"))
    }

    fn label(&self) -> String {
        format!("http-chat:{}", self.endpoint)
    }
}
