//! Prompt templates with named `{placeholder}` substitution.
//!
//! Defaults are compiled in; a template directory can override any of them
//! (one `.txt` file per template name) so prompts are editable without a
//! rebuild.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

macro_rules! default_templates {
    ($($name:literal),+ $(,)?) => {
        [$(($name, include_str!(concat!("../../templates/", $name, ".txt")))),+]
    };
}

const DEFAULTS: [(&str, &str); 20] = default_templates![
    "complexity",
    "generate",
    "self_critique",
    "refine",
    "cross_score",
    "final_answer",
    "insight_extract",
    "failure_extract",
    "react_thought",
    "react_action",
    "react_observation",
    "react_answer",
    "reflexion_attempt",
    "reflexion_eval",
    "reflexion_reflect",
    "self_refine_initial",
    "self_refine_feedback",
    "self_refine_rewrite",
    "judge_math",
    "judge_creative",
];

/// Named prompt templates.
#[derive(Debug, Clone)]
pub struct PromptTemplates {
    templates: BTreeMap<String, String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            templates: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl PromptTemplates {
    /// Defaults overlaid with every `*.txt` file in `dir` (file stem = name).
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut templates = Self::default();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let body = std::fs::read_to_string(&path)?;
            templates.templates.insert(stem.to_string(), body);
        }
        Ok(templates)
    }

    pub fn get(&self, name: &str) -> Result<&str> {
        self.templates
            .get(name)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::not_found(format!("template {name:?}")))
    }

    /// Render a template, replacing each `{key}` with its value.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String> {
        let mut text = self.get(name)?.to_string();
        for (key, value) in vars {
            text = text.replace(&format!("{{{key}}}"), value);
        }
        Ok(text)
    }
}

/// Format a list as numbered lines; "(none)" when empty.
pub fn numbered_list(items: &[String]) -> String {
    if items.is_empty() {
        return "(none)".to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| format!("{}. {}", i + 1, item))
        .collect::<Vec<_>>()
        .join("\n")
}
