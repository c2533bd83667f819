//! Cross-problem reflexion memory.
//!
//! Bounded FIFO queues of insight and failure texts, best-path records, and
//! an iteration counter. The memory is read once at episode start, written
//! once at episode end, and persisted as human-readable TOML so learning
//! survives process restarts.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_bullets;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag};
use crate::gateway::templates::PromptTemplates;
use crate::model::{NodeId, Problem, ReasoningTree};
use crate::trace::TraceHandle;

/// FIFO capacity of each queue.
pub const MEMORY_CAPACITY: usize = 10;

/// Nodes at or above this combined score feed insight extraction.
pub const INSIGHT_THRESHOLD: f64 = 0.8;
/// Nodes below this combined score feed failure extraction.
pub const FAILURE_THRESHOLD: f64 = 0.4;

/// At most this many insight/failure strings are stored per episode.
const EXTRACT_LIMIT: usize = 2;

pub const MEMORY_SCHEMA_VERSION: u32 = 1;

/// One recorded solution chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPathRecord {
    pub problem_id: String,
    pub node_ids: Vec<NodeId>,
    pub final_score: f64,
    /// Short prompt-injectable description of the winning chain.
    pub summary: String,
}

/// Snapshot of memory contents handed to prompt builders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryContext {
    pub insight_list: Vec<String>,
    pub failure_constraints: Vec<String>,
    pub strategy_references: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MemoryFile {
    schema_version: u32,
    iteration_counter: u64,
    insights: Vec<String>,
    failures: Vec<String>,
    #[serde(default)]
    best_paths: Vec<BestPathRecord>,
}

/// Persistent cross-problem memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReflexionMemory {
    insights: VecDeque<String>,
    failures: VecDeque<String>,
    best_paths: Vec<BestPathRecord>,
    iteration_counter: u64,
}

impl ReflexionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insights(&self) -> impl Iterator<Item = &str> {
        self.insights.iter().map(|s| s.as_str())
    }

    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.failures.iter().map(|s| s.as_str())
    }

    pub fn best_paths(&self) -> &[BestPathRecord] {
        &self.best_paths
    }

    pub fn iteration_counter(&self) -> u64 {
        self.iteration_counter
    }

    /// Append an insight, evicting the oldest entry past capacity.
    /// Empty text is ignored; returns whether the push happened.
    pub fn push_insight(&mut self, text: impl Into<String>) -> bool {
        Self::push_bounded(&mut self.insights, text.into())
    }

    /// Append a failure pattern; same contract as [`Self::push_insight`].
    pub fn push_failure(&mut self, text: impl Into<String>) -> bool {
        Self::push_bounded(&mut self.failures, text.into())
    }

    fn push_bounded(queue: &mut VecDeque<String>, text: String) -> bool {
        if text.trim().is_empty() {
            return false;
        }
        queue.push_back(text);
        while queue.len() > MEMORY_CAPACITY {
            queue.pop_front();
        }
        true
    }

    /// FIFO snapshot of both queues plus up to 3 most recent best-path
    /// references, all verbatim.
    pub fn retrieval_context(&self) -> MemoryContext {
        let recent_paths = self
            .best_paths
            .iter()
            .rev()
            .take(3)
            .map(|p| p.summary.clone())
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        MemoryContext {
            insight_list: self.insights.iter().cloned().collect(),
            failure_constraints: self.failures.iter().cloned().collect(),
            strategy_references: recent_paths,
        }
    }

    /// Distill an episode into memory.
    ///
    /// One extraction call summarizes nodes scoring >= [`INSIGHT_THRESHOLD`]
    /// into at most 2 insights, and one summarizes nodes below
    /// [`FAILURE_THRESHOLD`] into at most 2 failure patterns; either call is
    /// skipped when its node set is empty. The best path and the episode's
    /// iteration count are recorded. A provider failure skips the whole
    /// update (with a trace warning) and leaves prior state untouched.
    #[allow(clippy::too_many_arguments)]
    pub fn record_episode(
        &mut self,
        tree: &ReasoningTree,
        problem: &Problem,
        best_path: &[NodeId],
        best_score: f64,
        iterations: u64,
        provider: &dyn ChatProvider,
        templates: &PromptTemplates,
        trace: &TraceHandle,
    ) -> Result<()> {
        let high: Vec<&str> = tree
            .iter()
            .filter(|n| n.combined_score.map(|s| s >= INSIGHT_THRESHOLD).unwrap_or(false))
            .map(|n| n.thought.as_str())
            .collect();
        let low: Vec<&str> = tree
            .iter()
            .filter(|n| n.combined_score.map(|s| s < FAILURE_THRESHOLD).unwrap_or(false))
            .map(|n| n.thought.as_str())
            .collect();

        // Run both extraction calls before mutating anything, so a provider
        // failure cannot leave the memory half-updated.
        let extract = |role_nodes: &[&str], template: &str| -> Result<Vec<String>> {
            if role_nodes.is_empty() {
                return Ok(Vec::new());
            }
            let listing = role_nodes
                .iter()
                .map(|t| format!("- {t}"))
                .collect::<Vec<_>>()
                .join("\n");
            let prompt = templates.render(
                template,
                &[("problem", problem.statement.as_str()), ("nodes", listing.as_str())],
            )?;
            let completion =
                provider.complete(&PromptRequest::new(RoleTag::InsightExtract, prompt))?;
            let mut lines = parse_bullets(&completion.text, EXTRACT_LIMIT);
            if lines.is_empty() {
                // Unformatted but non-empty output still carries signal.
                let text = completion.text.trim();
                if !text.is_empty() {
                    lines.push(text.lines().next().unwrap_or(text).trim().to_string());
                }
            }
            Ok(lines)
        };

        let extracted = (|| -> Result<(Vec<String>, Vec<String>)> {
            Ok((
                extract(&high, "insight_extract")?,
                extract(&low, "failure_extract")?,
            ))
        })();

        let (new_insights, new_failures) = match extracted {
            Ok(pair) => pair,
            Err(err) => {
                trace.warn(format!("memory update skipped after provider error: {err}"));
                return Ok(());
            }
        };

        for insight in new_insights {
            if !self.push_insight(insight) {
                trace.warn("empty insight ignored");
            }
        }
        for failure in new_failures {
            if !self.push_failure(failure) {
                trace.warn("empty failure pattern ignored");
            }
        }

        if !best_path.is_empty() {
            let summary = Self::path_summary(tree, problem, best_path, best_score);
            self.best_paths.push(BestPathRecord {
                problem_id: problem.id.clone(),
                node_ids: best_path.to_vec(),
                final_score: best_score,
                summary,
            });
        }
        self.iteration_counter += iterations;
        Ok(())
    }

    fn path_summary(
        tree: &ReasoningTree,
        problem: &Problem,
        best_path: &[NodeId],
        best_score: f64,
    ) -> String {
        let last_thought = best_path
            .last()
            .and_then(|id| tree.get(id))
            .map(|n| n.thought.as_str())
            .unwrap_or("");
        let mut snippet: String = last_thought.chars().take(240).collect();
        if last_thought.chars().count() > 240 {
            snippet.push_str("...");
        }
        format!("{} (score {:.2}): {}", problem.id, best_score, snippet)
    }

    /// Write the memory file (versioned TOML).
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = MemoryFile {
            schema_version: MEMORY_SCHEMA_VERSION,
            iteration_counter: self.iteration_counter,
            insights: self.insights.iter().cloned().collect(),
            failures: self.failures.iter().cloned().collect(),
            best_paths: self.best_paths.clone(),
        };
        let text = toml::to_string_pretty(&file).map_err(|e| Error::Serialization(e.to_string()))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load a memory file; a missing file yields an empty memory.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        Self::load(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: MemoryFile =
            toml::from_str(&text).map_err(|e| Error::Serialization(format!("memory file: {e}")))?;
        if file.schema_version != MEMORY_SCHEMA_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported memory schema version {}",
                file.schema_version
            )));
        }
        Ok(ReflexionMemory {
            insights: file.insights.into(),
            failures: file.failures.into(),
            best_paths: file.best_paths,
            iteration_counter: file.iteration_counter,
        })
    }
}
