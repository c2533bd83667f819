//! Chat-completion provider abstraction, prompt construction, and response
//! parsing for every LLM role in the pipeline.

pub mod http;
pub mod parse;
pub mod prompts;
pub mod provider;
pub mod scripted;
pub mod templates;

pub use http::{HttpProvider, ProviderConfig};
pub use provider::{ChatProvider, Completion, PromptRequest, RoleTag, TracingProvider, Usage};
pub use scripted::{ScriptedProvider, ScriptedRule};
pub use templates::PromptTemplates;
