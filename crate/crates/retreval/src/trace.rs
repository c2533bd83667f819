//! Replayable episode traces.
//!
//! A [`RunTrace`] records every prompt, response, score, pruning decision and
//! convergence event of one episode. The export omits wall-clock timing, so
//! two identical scripted runs serialize to identical bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::RoleTag;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Why an episode stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedReason {
    MaxDepth,
    Plateau,
    HighConfidence,
    IterationLimit,
}

impl std::fmt::Display for ConvergedReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConvergedReason::MaxDepth => "max_depth",
            ConvergedReason::Plateau => "plateau",
            ConvergedReason::HighConfidence => "high_confidence",
            ConvergedReason::IterationLimit => "iteration_limit",
        };
        write!(f, "{s}")
    }
}

/// One recorded event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEntry {
    /// A provider round trip. `latency_ms` is kept in memory for diagnostics
    /// but excluded from the export so traces stay byte-stable.
    Call {
        seq: u32,
        role: RoleTag,
        prompt: String,
        response: String,
        #[serde(skip_serializing, default)]
        latency_ms: u64,
    },
    Warning {
        message: String,
    },
    NodeScored {
        node: String,
        local: f64,
        cross: f64,
        combined: f64,
    },
    LevelPruned {
        depth: u32,
        retained: Vec<String>,
        pruned: Vec<String>,
    },
    Converged {
        reason: ConvergedReason,
        iteration: u32,
    },
    Note {
        message: String,
    },
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub schema_version: u32,
    pub problem_id: String,
    pub method: String,
    pub entries: Vec<TraceEntry>,
}

impl RunTrace {
    pub fn new(problem_id: impl Into<String>, method: impl Into<String>) -> Self {
        RunTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            problem_id: problem_id.into(),
            method: method.into(),
            entries: Vec::new(),
        }
    }

    pub fn calls(&self) -> impl Iterator<Item = (&RoleTag, &str, &str)> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Call {
                role,
                prompt,
                response,
                ..
            } => Some((role, prompt.as_str(), response.as_str())),
            _ => None,
        })
    }

    pub fn call_count(&self) -> usize {
        self.calls().count()
    }

    pub fn calls_by_role(&self) -> BTreeMap<String, u64> {
        let mut tally = BTreeMap::new();
        for (role, _, _) in self.calls() {
            *tally.entry(role.to_string()).or_insert(0) += 1;
        }
        tally
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                TraceEntry::Warning { message } => Some(message.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Deterministic structured-text export.
    pub fn export(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<RunTrace> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Shared, thread-safe handle used by the provider wrapper and the controller.
#[derive(Debug, Clone)]
pub struct TraceHandle {
    inner: Arc<Mutex<RunTrace>>,
}

impl TraceHandle {
    pub fn new(problem_id: impl Into<String>, method: impl Into<String>) -> Self {
        TraceHandle {
            inner: Arc::new(Mutex::new(RunTrace::new(problem_id, method))),
        }
    }

    fn push(&self, entry: TraceEntry) {
        self.inner.lock().expect("trace lock poisoned").entries.push(entry);
    }

    pub fn record_call(&self, role: RoleTag, prompt: &str, response: &str, latency_ms: u64) {
        let mut trace = self.inner.lock().expect("trace lock poisoned");
        let seq = trace.call_count() as u32 + 1;
        trace.entries.push(TraceEntry::Call {
            seq,
            role,
            prompt: prompt.to_string(),
            response: response.to_string(),
            latency_ms,
        });
    }

    pub fn warn(&self, message: impl Into<String>) {
        self.push(TraceEntry::Warning {
            message: message.into(),
        });
    }

    pub fn note(&self, message: impl Into<String>) {
        self.push(TraceEntry::Note {
            message: message.into(),
        });
    }

    pub fn record_score(&self, node: &crate::model::NodeId, local: f64, cross: f64, combined: f64) {
        self.push(TraceEntry::NodeScored {
            node: node.to_string(),
            local,
            cross,
            combined,
        });
    }

    pub fn record_prune(&self, depth: u32, retained: &[crate::model::NodeId], pruned: &[crate::model::NodeId]) {
        self.push(TraceEntry::LevelPruned {
            depth,
            retained: retained.iter().map(|n| n.to_string()).collect(),
            pruned: pruned.iter().map(|n| n.to_string()).collect(),
        });
    }

    pub fn record_convergence(&self, reason: ConvergedReason, iteration: u32) {
        self.push(TraceEntry::Converged { reason, iteration });
    }

    pub fn call_count(&self) -> usize {
        self.inner.lock().expect("trace lock poisoned").call_count()
    }

    pub fn snapshot(&self) -> RunTrace {
        self.inner.lock().expect("trace lock poisoned").clone()
    }

    pub fn export(&self) -> String {
        self.inner.lock().expect("trace lock poisoned").export()
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.export())?;
        Ok(())
    }
}
