//! Chat-completion provider abstraction.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::TraceHandle;

/// Which pipeline role a prompt serves. Recorded on every trace call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleTag {
    Generate,
    SelfCritique,
    Refine,
    CrossScore,
    Complexity,
    InsightExtract,
    FinalAnswer,
    Judge,
}

impl std::fmt::Display for RoleTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RoleTag::Generate => "generate",
            RoleTag::SelfCritique => "self_critique",
            RoleTag::Refine => "refine",
            RoleTag::CrossScore => "cross_score",
            RoleTag::Complexity => "complexity",
            RoleTag::InsightExtract => "insight_extract",
            RoleTag::FinalAnswer => "final_answer",
            RoleTag::Judge => "judge",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for RoleTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generate" => Ok(RoleTag::Generate),
            "self_critique" => Ok(RoleTag::SelfCritique),
            "refine" => Ok(RoleTag::Refine),
            "cross_score" => Ok(RoleTag::CrossScore),
            "complexity" => Ok(RoleTag::Complexity),
            "insight_extract" => Ok(RoleTag::InsightExtract),
            "final_answer" => Ok(RoleTag::FinalAnswer),
            "judge" => Ok(RoleTag::Judge),
            other => Err(Error::invalid_argument(format!("unknown role tag {other:?}"))),
        }
    }
}

/// One prompt sent to a provider.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptRequest {
    pub role: RoleTag,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Forwarded to backends that support deterministic sampling.
    pub seed: Option<u64>,
}

impl PromptRequest {
    /// Defaults: temperature 0.7, 2048 max output tokens.
    pub fn new(role: RoleTag, prompt: impl Into<String>) -> Self {
        PromptRequest {
            role,
            prompt: prompt.into(),
            temperature: 0.7,
            max_tokens: 2048,
            seed: None,
        }
    }
}

/// Token usage reported by the backend; zeros when unknown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A provider response plus its usage record.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
    pub latency: Duration,
}

/// A chat-completion backend.
///
/// Implementations must tolerate concurrent in-flight requests; the scripted
/// provider serializes rule matching internally.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &PromptRequest) -> Result<Completion>;

    fn name(&self) -> &str {
        "provider"
    }
}

/// Provider wrapper that appends one trace call record per round trip.
///
/// Errors are recorded as trace warnings before propagating, so an aborted
/// episode still leaves a diagnosable partial trace.
pub struct TracingProvider {
    inner: Arc<dyn ChatProvider>,
    trace: TraceHandle,
}

impl TracingProvider {
    pub fn new(inner: Arc<dyn ChatProvider>, trace: TraceHandle) -> Self {
        TracingProvider { inner, trace }
    }
}

impl ChatProvider for TracingProvider {
    fn complete(&self, request: &PromptRequest) -> Result<Completion> {
        let start = Instant::now();
        match self.inner.complete(request) {
            Ok(completion) => {
                self.trace.record_call(
                    request.role,
                    &request.prompt,
                    &completion.text,
                    completion.latency.as_millis() as u64,
                );
                Ok(completion)
            }
            Err(err) => {
                self.trace.warn(format!(
                    "provider error on {} call after {}ms: {err}",
                    request.role,
                    start.elapsed().as_millis()
                ));
                Err(err)
            }
        }
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
