//! OpenAI-compatible chat-completions client.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::gateway::provider::{ChatProvider, Completion, PromptRequest, Usage};

/// Connection settings for an OpenAI-compatible endpoint.
#[derive(Debug, Clone)]
pub struct ProviderConfig {
    /// Base URL, e.g. `http://localhost:11434/v1`. Requests go to
    /// `<base>/chat/completions` unless the path already ends there.
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key: Option<String>,
    pub request_timeout: Duration,
    /// Extra attempts after the first on transport failure.
    pub max_retries: u32,
}

impl ProviderConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Result<Self> {
        let endpoint_url = endpoint_url.into();
        url::Url::parse(&endpoint_url)
            .map_err(|e| Error::invalid_argument(format!("endpoint_url: {e}")))?;
        Ok(ProviderConfig {
            endpoint_url,
            model_name: model_name.into(),
            api_key: None,
            request_timeout: Duration::from_secs(120),
            max_retries: 2,
        })
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.request_timeout = timeout;
        self
    }

    pub fn with_max_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<UsageBody>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: MessageBody,
}

#[derive(Debug, Deserialize)]
struct MessageBody {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct UsageBody {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

/// Blocking HTTP provider. Retries transport failures up to
/// `max_retries` extra attempts before reporting the endpoint unavailable.
pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
        let base = config.endpoint_url.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(HttpProvider { config, client, url })
    }

    fn attempt(&self, request: &PromptRequest) -> Result<Completion> {
        let mut body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }

        let mut builder = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }

        let start = Instant::now();
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                Error::Timeout(self.config.request_timeout)
            } else {
                Error::ProviderUnavailable(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(Error::ProviderUnavailable(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| Error::ProviderUnavailable(format!("malformed response: {e}")))?;
        let text = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| Error::ProviderUnavailable("response had no message content".into()))?;
        let usage = parsed
            .usage
            .map(|u| Usage {
                prompt_tokens: u.prompt_tokens.unwrap_or(0),
                completion_tokens: u.completion_tokens.unwrap_or(0),
            })
            .unwrap_or_default();
        Ok(Completion {
            text,
            usage,
            latency: start.elapsed(),
        })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &PromptRequest) -> Result<Completion> {
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for _ in 0..attempts {
            match self.attempt(request) {
                Ok(completion) => return Ok(completion),
                Err(err @ (Error::ProviderUnavailable(_) | Error::Timeout(_))) => last = Some(err),
                Err(other) => return Err(other),
            }
        }
        match last {
            Some(Error::Timeout(d)) => Err(Error::Timeout(d)),
            Some(Error::ProviderUnavailable(msg)) => Err(Error::ProviderUnavailable(format!(
                "after {attempts} attempts: {msg}"
            ))),
            _ => Err(Error::ProviderUnavailable(format!(
                "after {attempts} attempts"
            ))),
        }
    }

    fn name(&self) -> &str {
        &self.config.model_name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::provider::RoleTag;

    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        // Port 1 on localhost refuses connections immediately.
        let config = ProviderConfig::new("http://127.0.0.1:1/v1", "test-model")
            .unwrap()
            .with_max_retries(2)
            .with_timeout(Duration::from_secs(2));
        let provider = HttpProvider::new(config).unwrap();
        let err = provider
            .complete(&PromptRequest::new(RoleTag::Generate, "hello"))
            .unwrap_err();
        match err {
            Error::ProviderUnavailable(msg) => assert!(msg.contains("after 3 attempts"), "{msg}"),
            other => panic!("expected ProviderUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn invalid_endpoint_url_rejected() {
        assert!(ProviderConfig::new("not a url", "m").is_err());
    }

    #[test]
    fn speaks_openai_chat_completions() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 16384];
            let mut request = Vec::new();
            // read until the JSON body closes; requests here are small
            loop {
                let n = stream.read(&mut buf).unwrap();
                request.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&request);
                if text.contains("\r\n\r\n") && text.trim_end().ends_with('}') {
                    break;
                }
            }
            let request = String::from_utf8_lossy(&request).to_string();
            let body = r#"{"choices":[{"message":{"role":"assistant","content":"complexity: 2"}}],"usage":{"prompt_tokens":12,"completion_tokens":4}}"#;
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            stream.write_all(response.as_bytes()).unwrap();
            request
        });

        let config = ProviderConfig::new(format!("http://127.0.0.1:{port}/v1"), "test-model")
            .unwrap()
            .with_api_key(Some("sk-test".into()))
            .with_max_retries(0);
        let provider = HttpProvider::new(config).unwrap();
        let mut request = PromptRequest::new(RoleTag::Complexity, "rate this");
        request.seed = Some(7);
        let completion = provider.complete(&request).unwrap();
        assert_eq!(completion.text, "complexity: 2");
        assert_eq!(completion.usage.prompt_tokens, 12);

        let raw = server.join().unwrap();
        assert!(raw.starts_with("POST /v1/chat/completions"));
        assert!(raw.contains("authorization: Bearer sk-test") || raw.contains("Authorization: Bearer sk-test"));
        assert!(raw.contains("\"model\":\"test-model\""));
        assert!(raw.contains("\"seed\":7"));
        assert!(raw.contains("rate this"));
    }

    #[test]
    fn url_join_avoids_double_suffix() {
        let config = ProviderConfig::new("http://x.test/v1/chat/completions", "m").unwrap();
        let provider = HttpProvider::new(config).unwrap();
        assert_eq!(provider.url, "http://x.test/v1/chat/completions");
        let config = ProviderConfig::new("http://x.test/v1/", "m").unwrap();
        let provider = HttpProvider::new(config).unwrap();
        assert_eq!(provider.url, "http://x.test/v1/chat/completions");
    }
}
