//! Deterministic rule-based provider used by tests and golden traces.

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gateway::provider::{ChatProvider, Completion, PromptRequest, RoleTag, Usage};

/// One response rule. Rules match in declaration order; the first rule whose
/// role and substring pattern both match (absent means "any") wins.
#[derive(Debug, Clone)]
pub struct ScriptedRule {
    pub role: Option<RoleTag>,
    pub pattern: Option<String>,
    pub response: String,
    pub consume_once: bool,
}

impl ScriptedRule {
    pub fn new(role: RoleTag, response: impl Into<String>) -> Self {
        ScriptedRule {
            role: Some(role),
            pattern: None,
            response: response.into(),
            consume_once: false,
        }
    }

    pub fn with_pattern(mut self, pattern: impl Into<String>) -> Self {
        self.pattern = Some(pattern.into());
        self
    }

    pub fn once(mut self) -> Self {
        self.consume_once = true;
        self
    }

    /// Catch-all rule; every script file must end with one.
    pub fn fallback(response: impl Into<String>) -> Self {
        ScriptedRule {
            role: None,
            pattern: None,
            response: response.into(),
            consume_once: false,
        }
    }

    fn matches(&self, request: &PromptRequest) -> bool {
        if let Some(role) = self.role {
            if role != request.role {
                return false;
            }
        }
        if let Some(pattern) = &self.pattern {
            if !request.prompt.contains(pattern.as_str()) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Deserialize)]
struct ScriptFile {
    #[serde(rename = "rule")]
    rules: Vec<ScriptRuleFile>,
}

#[derive(Debug, Deserialize)]
struct ScriptRuleFile {
    role: Option<String>,
    pattern: Option<String>,
    response: String,
    #[serde(default)]
    consume_once: bool,
}

/// Deterministic stand-in for an LLM. Matching is serialized internally so
/// consume-once ordering survives concurrent callers.
pub struct ScriptedProvider {
    rules: Mutex<Vec<(ScriptedRule, bool)>>,
}

impl ScriptedProvider {
    pub fn from_rules(rules: Vec<ScriptedRule>) -> Self {
        ScriptedProvider {
            rules: Mutex::new(rules.into_iter().map(|r| (r, false)).collect()),
        }
    }

    /// Load a TOML rule list. The file must contain a catch-all fallback rule
    /// (no role, no pattern) so that every request gets a response.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ScriptFile =
            toml::from_str(text).map_err(|e| Error::Serialization(format!("script file: {e}")))?;
        let mut rules = Vec::with_capacity(file.rules.len());
        for raw in file.rules {
            let role = match raw.role {
                Some(name) => Some(name.parse::<RoleTag>()?),
                None => None,
            };
            rules.push(ScriptedRule {
                role,
                pattern: raw.pattern,
                response: raw.response,
                consume_once: raw.consume_once,
            });
        }
        if !rules.iter().any(|r| r.role.is_none() && r.pattern.is_none()) {
            return Err(Error::invalid_argument(
                "script must contain a fallback rule with no role and no pattern",
            ));
        }
        Ok(Self::from_rules(rules))
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &PromptRequest) -> Result<Completion> {
        let mut rules = self.rules.lock().expect("script lock poisoned");
        for (rule, consumed) in rules.iter_mut() {
            if *consumed || !rule.matches(request) {
                continue;
            }
            if rule.consume_once {
                *consumed = true;
            }
            return Ok(Completion {
                text: rule.response.clone(),
                usage: Usage::default(),
                latency: Duration::ZERO,
            });
        }
        Err(Error::invalid_state(format!(
            "no scripted rule matched a {} request",
            request.role
        )))
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
